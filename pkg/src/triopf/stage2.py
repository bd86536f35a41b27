"""Worst-case attack assessment against a fixed dispatch.

The attacker chooses, for every hour, how much of each attackable DG's
fixed output to remove (a fraction in [0,1], or 0/1 in binary mode),
subject to a per-hour budget. The objective maximizes remaining DG cost
plus substation repurchase plus the two family-minimum margin values, so
the solver both raises operating cost and drags the safest constraints
toward violation. Flow and voltage boxes are deliberately NOT enforced
here: pushing the state outside them is exactly what the margins measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lpcore import LinearProgram, SolverParams, solve_lp, solve_milp
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


@dataclass(frozen=True)
class AttackVector:
    """Attack fraction per attackable generator per hour, within budget."""

    y: np.ndarray  # (n_attackable, T) in [0, 1]
    budget_k: float

    def __post_init__(self):
        arr = np.asarray(self.y, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "y", arr)
        if self.budget_k < 0:
            raise ValueError("attack budget must be non-negative")
        if arr.size and (arr.min() < -1e-9 or arr.max() > 1 + 1e-9):
            raise ValueError("attack fractions escape [0, 1]")
        if arr.size and arr.sum(axis=0).max() > self.budget_k + 1e-7:
            raise ValueError("attack exceeds the per-hour budget")


@dataclass(frozen=True)
class AttackAssessment:
    attack: AttackVector
    attackable_indices: tuple  # positions into case.generators, y row order
    p_sub: np.ndarray  # substation purchase per hour (pu)
    q_sub: np.ndarray
    state: object  # SystemState under attack
    violations: ViolationReport
    objective_value: float
    inf_line_term: float  # family-minimum line margin at the optimum
    inf_node_term: float


class Stage2UnboundedError(RuntimeError):
    pass


def build_attack_lp(case, dispatch, k, binary_attack=False, line_weight=1.0, node_weight=1.0):
    """Assemble the attack model; returns (lp, var-index bundle)."""
    T = case.horizon_hours
    pos = case.node_index()
    sub = case.substation()
    sub_gi = case.generators.index(sub)
    attackable = [gi for gi, g in enumerate(case.generators) if g.attackable]

    lp = LinearProgram(sense="max", name="attack")
    y = np.empty((len(attackable), T), dtype=int)
    for ai, gi in enumerate(attackable):
        g = case.generators[gi]
        for t in range(T):
            y[ai, t] = lp.add_variable("y[%s,%d]" % (g.node, t), 0.0, 1.0, binary=binary_attack)

    p_sub = np.array([lp.add_variable("p_sub[%d]" % t, sub.p_min, sub.p_max) for t in range(T)])
    q_sub = np.array([lp.add_variable("q_sub[%d]" % t, sub.q_min, sub.q_max) for t in range(T)])
    idx = add_state_variables(lp, case, boxed=False)
    add_voltage_drop_rows(lp, case, idx)

    t_line = lp.add_variable("t_line", -INF, INF)
    t_node = lp.add_variable("t_node", -INF, INF)
    add_margin_epigraph_rows(lp, case, idx, t_line, t_node, bound_kind="lower")

    gens_at = {}
    for gi, g in enumerate(case.generators):
        gens_at.setdefault(pos[g.node], []).append(gi)
    row_of = {gi: ai for ai, gi in enumerate(attackable)}

    terms = flow_terms(case)
    for ni, node in enumerate(case.nodes):
        for t in range(T):
            prow = {idx.pf[li, t]: sign for li, sign in terms[ni]}
            qrow = {idx.qf[li, t]: sign for li, sign in terms[ni]}
            rhs_p = case.demand.p_d[ni, t]
            rhs_q = case.demand.q_d[ni, t]
            for gi in gens_at.get(ni, ()):
                if gi == sub_gi:
                    prow[p_sub[t]] = 1.0
                    qrow[q_sub[t]] = 1.0
                    continue
                rhs_p -= dispatch.p_g[gi, t]
                rhs_q -= dispatch.q_g[gi, t]
                if gi in row_of:
                    yv = y[row_of[gi], t]
                    prow[yv] = prow.get(yv, 0.0) - dispatch.p_g[gi, t]
                    qrow[yv] = qrow.get(yv, 0.0) - dispatch.q_g[gi, t]
            lp.add_constraint(prow, "=", rhs_p, "pbal[%s,%d]" % (node.id, t))
            lp.add_constraint(qrow, "=", rhs_q, "qbal[%s,%d]" % (node.id, t))

    for t in range(T):
        if len(attackable):
            lp.add_constraint({y[ai, t]: 1.0 for ai in range(len(attackable))}, "<=", float(k),
                              "budget[%d]" % t)

    # Remaining attacked-DG cost + substation purchase + both family minima.
    for ai, gi in enumerate(attackable):
        g = case.generators[gi]
        for t in range(T):
            lp.objective_constant += g.cost * dispatch.p_g[gi, t]
            lp.add_objective_term(y[ai, t], -g.cost * dispatch.p_g[gi, t])
    for t in range(T):
        lp.add_objective_term(p_sub[t], sub.cost)
    lp.add_objective_term(t_line, line_weight)
    lp.add_objective_term(t_node, node_weight)
    return lp, (y, p_sub, q_sub, idx, t_line, t_node, attackable)


def assess_worst_attack(
    case: NetworkCase,
    dispatch: DispatchSolution,
    k: float,
    binary_attack: bool = False,
    line_weight: float = 1.0,
    node_weight: float = 1.0,
    params: SolverParams = None,
) -> AttackAssessment:
    """Compute the worst-case attack of budget k against a fixed dispatch."""
    if k < 0:
        raise ValueError("attack budget must be non-negative")
    lp, handles = build_attack_lp(case, dispatch, k, binary_attack, line_weight, node_weight)
    y, p_sub, q_sub, idx, t_line, t_node, attackable = handles
    sol = solve_milp(lp, params) if binary_attack else solve_lp(lp, params)
    if sol.status == "unbounded":
        raise Stage2UnboundedError(
            "attack model unbounded; the case file is missing a box that "
            "should bound it (substation limits, attack budget)"
        )
    if not sol.is_optimal:
        raise StageInfeasibleError("stage2", sol.status, "attack model has no optimum")

    y_val = np.clip(sol.values[y], 0.0, 1.0) if len(attackable) else np.zeros((0, case.horizon_hours))
    state = extract_state(case, sol.values, idx)
    return AttackAssessment(
        attack=AttackVector(y=y_val, budget_k=float(k)),
        attackable_indices=tuple(attackable),
        p_sub=sol.values[p_sub],
        q_sub=sol.values[q_sub],
        state=state,
        violations=constraint_margins(case, state),
        objective_value=float(sol.objective_value),
        inf_line_term=float(sol.values[t_line]),
        inf_node_term=float(sol.values[t_node]),
    )
