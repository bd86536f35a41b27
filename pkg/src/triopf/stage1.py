"""Base-case economic dispatch over the full horizon.

Minimizes total generation cost (DG output plus substation purchases)
subject to nodal active/reactive balance, linearized voltage drops, and
hard boxes on flows, voltages, and generator outputs. The resulting
dispatch is frozen and handed to the attack and mitigation stages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lpcore import LinearProgram, SolverParams, solve_lp
from .modelbuild import (
    StageInfeasibleError,
    add_state_variables,
    add_voltage_drop_rows,
    extract_state,
    flow_terms,
)
from .netmodel import NetworkCase, SystemState, constraint_margins

# Reactive output is cost-free, so the dispatch has many optima differing
# only in q_g. This nudge selects the minimal-reactive one deterministically;
# it is orders of magnitude below any real cost and excluded from the
# reported total.
REACTIVE_TIEBREAK = 1e-6


@dataclass(frozen=True)
class DispatchSolution:
    """Fixed dispatch: per-generator setpoints, network state, and cost."""

    p_g: np.ndarray  # (n_generators, T) pu, ordered like case.generators
    q_g: np.ndarray
    state: SystemState
    total_cost: float  # $
    cost_by_generator: np.ndarray  # (n_generators, T) $ for each hour

    def __post_init__(self):
        for name in ("p_g", "q_g", "cost_by_generator"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def build_dispatch_lp(case: NetworkCase, params: SolverParams = None):
    """Assemble the dispatch LP; returns (lp, generator index map, state index)."""
    T = case.horizon_hours
    lp = LinearProgram(sense="min", name="dispatch")

    gen_p = np.empty((len(case.generators), T), dtype=int)
    gen_q = np.empty_like(gen_p)
    for gi, g in enumerate(case.generators):
        for t in range(T):
            gen_p[gi, t] = lp.add_variable("p_g[%s#%d,%d]" % (g.node, gi, t), g.p_min, g.p_max_at(t))
            gen_q[gi, t] = lp.add_variable("q_g[%s#%d,%d]" % (g.node, gi, t), g.q_min, g.q_max)
            lp.add_objective_term(gen_p[gi, t], g.cost)
            if g.kind == "substation":
                continue
            if g.q_min >= 0.0:
                lp.add_objective_term(gen_q[gi, t], REACTIVE_TIEBREAK)
            else:
                mag = lp.add_variable("q_mag[%s#%d,%d]" % (g.node, gi, t), 0.0)
                lp.add_constraint({mag: 1.0, gen_q[gi, t]: -1.0}, ">=", 0.0)
                lp.add_constraint({mag: 1.0, gen_q[gi, t]: 1.0}, ">=", 0.0)
                lp.add_objective_term(mag, REACTIVE_TIEBREAK)

    idx = add_state_variables(lp, case, boxed=True)
    add_voltage_drop_rows(lp, case, idx)

    gens_at = {}
    pos = case.node_index()
    for gi, g in enumerate(case.generators):
        gens_at.setdefault(pos[g.node], []).append(gi)

    terms = flow_terms(case)
    for ni, node in enumerate(case.nodes):
        for t in range(T):
            prow = {idx.pf[li, t]: sign for li, sign in terms[ni]}
            qrow = {idx.qf[li, t]: sign for li, sign in terms[ni]}
            for gi in gens_at.get(ni, ()):
                prow[gen_p[gi, t]] = 1.0
                qrow[gen_q[gi, t]] = 1.0
            lp.add_constraint(prow, "=", case.demand.p_d[ni, t], "pbal[%s,%d]" % (node.id, t))
            lp.add_constraint(qrow, "=", case.demand.q_d[ni, t], "qbal[%s,%d]" % (node.id, t))
    return lp, gen_p, gen_q, idx


def solve_base_opf(case: NetworkCase, params: SolverParams = None) -> DispatchSolution:
    """Solve the base-case dispatch; raises StageInfeasibleError otherwise."""
    lp, gen_p, gen_q, idx = build_dispatch_lp(case)
    sol = solve_lp(lp, params)
    if not sol.is_optimal:
        raise StageInfeasibleError(
            "stage1",
            sol.status,
            "base dispatch has no optimum (demand may exceed deliverable capacity)",
        )
    p_g = sol.values[gen_p]
    q_g = sol.values[gen_q]
    costs = np.array([g.cost for g in case.generators])[:, None] * p_g
    state = extract_state(case, sol.values, idx)
    return DispatchSolution(
        p_g=p_g,
        q_g=q_g,
        state=state,
        # Actual generation cost; excludes the reactive tie-break nudge.
        total_cost=float(costs.sum()),
        cost_by_generator=costs,
    )


def dispatch_residuals(case: NetworkCase, dispatch: DispatchSolution):
    """Largest nodal-balance and voltage-drop residuals of a dispatch.

    Diagnostic used by tests and the run summary; a valid solution keeps
    both at or below the solver feasibility tolerance.
    """
    pos = case.node_index()
    T = case.horizon_hours
    inj_p = -case.demand.p_d.copy()
    inj_q = -case.demand.q_d.copy()
    for gi, g in enumerate(case.generators):
        inj_p[pos[g.node]] += dispatch.p_g[gi]
        inj_q[pos[g.node]] += dispatch.q_g[gi]
    bal_p = inj_p.copy()
    bal_q = inj_q.copy()
    for li, line in enumerate(case.lines):
        fi, ti = pos[line.from_node], pos[line.to_node]
        bal_p[fi] -= dispatch.state.pf[li]
        bal_p[ti] += dispatch.state.pf[li]
        bal_q[fi] -= dispatch.state.qf[li]
        bal_q[ti] += dispatch.state.qf[li]
    worst_balance = max(np.abs(bal_p).max(), np.abs(bal_q).max())
    worst_drop = 0.0
    for li, line in enumerate(case.lines):
        fi, ti = pos[line.from_node], pos[line.to_node]
        resid = (
            dispatch.state.v[fi]
            - dispatch.state.v[ti]
            - 2.0 * (line.r * dispatch.state.pf[li] + line.x * dispatch.state.qf[li])
        )
        worst_drop = max(worst_drop, float(np.abs(resid).max()))
    return float(worst_balance), float(worst_drop)
