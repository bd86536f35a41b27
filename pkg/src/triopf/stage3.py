"""Storage-based mitigation against a fixed attack.

Dispatches every storage unit's charge/discharge (with binary exclusivity
and efficiency-weighted SOC dynamics) plus the substation purchase, with
the attacked DG injections frozen. The objective minimizes storage energy
cost and substation cost plus the two family-maximum margin values, so the
most violated constraints are pulled back toward the safe region. Soft
margin handling is the default; hard_limits=True additionally forbids any
violation and may legitimately be infeasible under severe attacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lpcore import LinearProgram, SolverParams, solve_milp
from .modelbuild import (
    INF,
    StageInfeasibleError,
    add_margin_epigraph_rows,
    add_state_variables,
    add_voltage_drop_rows,
    extract_state,
    flow_terms,
)
from .netmodel import NetworkCase, ViolationReport, constraint_margins
from .stage1 import DispatchSolution
from .stage2 import AttackAssessment

# Tiny cost on gross storage power. For any fixed net injection it makes
# one-sided operation strictly optimal, so the relaxation stops parking
# units at simultaneous charge+discharge ties (which only branching could
# otherwise resolve). Orders of magnitude below every stated tolerance.
GROSS_POWER_TIEBREAK = 1e-6


@dataclass(frozen=True)
class MitigationPlan:
    p_ch: np.ndarray  # (n_storage, T) pu
    p_dis: np.ndarray
    p_ess: np.ndarray  # net injection, p_dis - p_ch
    beta_ch: np.ndarray  # (n_storage, T) 0/1
    beta_dis: np.ndarray
    soc: np.ndarray  # (n_storage, T) fraction of capacity
    p_sub: np.ndarray  # (T,)
    q_sub: np.ndarray
    state: object  # SystemState after mitigation
    violations: ViolationReport
    objective_value: float
    sup_line_term: float
    sup_node_term: float
    hard_limits: bool

    def __post_init__(self):
        for name in ("p_ch", "p_dis", "p_ess", "soc", "p_sub", "q_sub"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("beta_ch", "beta_dis"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def build_mitigation_milp(case, dispatch, attack, hard_limits=False,
                          line_weight=1.0, node_weight=1.0):
    T = case.horizon_hours
    pos = case.node_index()
    sub = case.substation()
    sub_gi = case.generators.index(sub)
    units = case.storage

    dg_nodes = {g.node for g in case.generators if g.kind != "substation"}
    orphans = [s.node for s in units if s.node not in dg_nodes]
    if orphans:
        raise ValueError(
            "storage at nodes %s would never enter the nodal balance "
            "(only DG nodes carry a storage term); co-locate units with "
            "non-substation generators" % sorted(set(orphans))
        )

    lp = LinearProgram(sense="min", name="mitigation")
    n_u = len(units)
    p_ch = np.empty((n_u, T), dtype=int)
    p_dis = np.empty_like(p_ch)
    b_ch = np.empty_like(p_ch)
    b_dis = np.empty_like(p_ch)
    soc = np.empty_like(p_ch)
    for ui, u in enumerate(units):
        for t in range(T):
            p_ch[ui, t] = lp.add_variable("p_ch[%s,%d]" % (u.node, t), 0.0, u.p_ch_max)
            p_dis[ui, t] = lp.add_variable("p_dis[%s,%d]" % (u.node, t), 0.0, u.p_dis_max)
            b_ch[ui, t] = lp.add_variable("beta_ch[%s,%d]" % (u.node, t), binary=True)
            b_dis[ui, t] = lp.add_variable("beta_dis[%s,%d]" % (u.node, t), binary=True)
            soc[ui, t] = lp.add_variable("soc[%s,%d]" % (u.node, t), u.soc_min, u.soc_max)

    p_sub = np.array([lp.add_variable("p_sub[%d]" % t, sub.p_min, sub.p_max) for t in range(T)])
    q_sub = np.array([lp.add_variable("q_sub[%d]" % t, sub.q_min, sub.q_max) for t in range(T)])
    idx = add_state_variables(lp, case, boxed=hard_limits)
    add_voltage_drop_rows(lp, case, idx)

    s_line = lp.add_variable("s_line", -INF, INF)
    s_node = lp.add_variable("s_node", -INF, INF)
    add_margin_epigraph_rows(lp, case, idx, s_line, s_node, bound_kind="upper")

    # Attacked injection constants: p* (1 - y*) per generator and hour.
    y_full = np.zeros((len(case.generators), T))
    for ai, gi in enumerate(attack.attackable_indices):
        y_full[gi] = attack.attack.y[ai]
    inj_p = dispatch.p_g * (1.0 - y_full)
    inj_q = dispatch.q_g * (1.0 - y_full)

    gens_at = {}
    for gi, g in enumerate(case.generators):
        gens_at.setdefault(pos[g.node], []).append(gi)
    units_at = {}
    for ui, u in enumerate(units):
        units_at.setdefault(pos[u.node], []).append(ui)

    terms = flow_terms(case)
    for ni, node in enumerate(case.nodes):
        for t in range(T):
            prow = {idx.pf[li, t]: sign for li, sign in terms[ni]}
            qrow = {idx.qf[li, t]: sign for li, sign in terms[ni]}
            rhs_p = case.demand.p_d[ni, t]
            rhs_q = case.demand.q_d[ni, t]
            has_generator = False
            for gi in gens_at.get(ni, ()):
                if gi == sub_gi:
                    prow[p_sub[t]] = 1.0
                    qrow[q_sub[t]] = 1.0
                else:
                    has_generator = True
                    rhs_p -= inj_p[gi, t]
                    rhs_q -= inj_q[gi, t]
            if has_generator:
                # Storage rides on generator nodes only (the balance form
                # has no storage term elsewhere).
                for ui in units_at.get(ni, ()):
                    prow[p_dis[ui, t]] = 1.0
                    prow[p_ch[ui, t]] = -1.0
                    qrow[p_dis[ui, t]] = 1.0
                    qrow[p_ch[ui, t]] = -1.0
            lp.add_constraint(prow, "=", rhs_p, "pbal[%s,%d]" % (node.id, t))
            lp.add_constraint(qrow, "=", rhs_q, "qbal[%s,%d]" % (node.id, t))

    for ui, u in enumerate(units):
        for t in range(T):
            # SOC recursion with efficiency losses.
            row = {
                soc[ui, t]: 1.0,
                p_ch[ui, t]: -u.eta_ch / u.e_max,
                p_dis[ui, t]: 1.0 / (u.eta_dis * u.e_max),
            }
            rhs = u.soc_init if t == 0 else 0.0
            if t > 0:
                row[soc[ui, t - 1]] = -1.0
            lp.add_constraint(row, "=", rhs, "soc[%s,%d]" % (u.node, t))
            # Binary-gated power windows and mutual exclusion.
            lp.add_constraint({p_ch[ui, t]: 1.0, b_ch[ui, t]: -u.p_ch_max}, "<=", 0.0,
                              "chmax[%s,%d]" % (u.node, t))
            lp.add_constraint({p_ch[ui, t]: -1.0, b_ch[ui, t]: u.p_ch_min}, "<=", 0.0,
                              "chmin[%s,%d]" % (u.node, t))
            lp.add_constraint({p_dis[ui, t]: 1.0, b_dis[ui, t]: -u.p_dis_max}, "<=", 0.0,
                              "dismax[%s,%d]" % (u.node, t))
            lp.add_constraint({p_dis[ui, t]: -1.0, b_dis[ui, t]: u.p_dis_min}, "<=", 0.0,
                              "dismin[%s,%d]" % (u.node, t))
            lp.add_constraint({b_ch[ui, t]: 1.0, b_dis[ui, t]: 1.0}, "<=", 1.0,
                              "excl[%s,%d]" % (u.node, t))

    for ui, u in enumerate(units):
        for t in range(T):
            lp.add_objective_term(p_dis[ui, t], u.cost + GROSS_POWER_TIEBREAK)
            lp.add_objective_term(p_ch[ui, t], -u.cost + GROSS_POWER_TIEBREAK)
    for t in range(T):
        lp.add_objective_term(p_sub[t], sub.cost)
    lp.add_objective_term(s_line, line_weight)
    lp.add_objective_term(s_node, node_weight)
    return lp, (p_ch, p_dis, b_ch, b_dis, soc, p_sub, q_sub, idx, s_line, s_node)


def mitigate_attack(
    case: NetworkCase,
    dispatch: DispatchSolution,
    attack: AttackAssessment,
    hard_limits: bool = False,
    line_weight: float = 1.0,
    node_weight: float = 1.0,
    params: SolverParams = None,
) -> MitigationPlan:
    """Solve the mitigation MILP against the fixed attack."""
    lp, handles = build_mitigation_milp(case, dispatch, attack, hard_limits,
                                        line_weight, node_weight)
    p_ch, p_dis, b_ch, b_dis, soc, p_sub, q_sub, idx, s_line, s_node = handles
    sol = solve_milp(lp, params)
    if not sol.is_optimal:
        hint = (
            "hard limits cannot be met under this attack; re-run in soft "
            "mode (hard_limits=False)" if hard_limits else "mitigation model has no optimum"
        )
        raise StageInfeasibleError("stage3", sol.status, hint)

    take = lambda a: sol.values[a]
    p_ch_v = np.maximum(take(p_ch), 0.0)
    p_dis_v = np.maximum(take(p_dis), 0.0)
    state = extract_state(case, sol.values, idx)
    return MitigationPlan(
        p_ch=p_ch_v,
        p_dis=p_dis_v,
        p_ess=p_dis_v - p_ch_v,
        beta_ch=np.rint(take(b_ch)).astype(int),
        beta_dis=np.rint(take(b_dis)).astype(int),
        soc=take(soc),
        p_sub=sol.values[p_sub],
        q_sub=sol.values[q_sub],
        state=state,
        violations=constraint_margins(case, state),
        objective_value=float(sol.objective_value),
        sup_line_term=float(sol.values[s_line]),
        sup_node_term=float(sol.values[s_node]),
        hard_limits=hard_limits,
    )
