"""Public solve entry points: plain LP and branch-and-bound MILP."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import LinearProgram, LpSolution
from .params import SolverParams
from .presolve import StandardForm, solve_standard, standard_form
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LpError

DEFAULT_PARAMS = SolverParams()


class NodeLimitError(LpError):
    """Branch-and-bound ran out of nodes; carries the best incumbent found."""

    def __init__(self, node_limit, incumbent: Optional[LpSolution]):
        self.incumbent = incumbent
        super().__init__(
            "branch-and-bound node limit (%d) exceeded%s"
            % (node_limit, "" if incumbent is None else "; incumbent attached")
        )


def _finish(lp: LinearProgram, sf: StandardForm, outcome, params, nodes=0) -> LpSolution:
    if outcome.status != OPTIMAL:
        return LpSolution(outcome.status, None, None, iterations=outcome.iterations, nodes=nodes)
    x = outcome.x
    violation = lp.constraint_violation(x)
    if violation > params.feastol:
        raise LpError(
            "internal: optimal solution violates constraints by %.3g (> %.3g)"
            % (violation, params.feastol)
        )
    return LpSolution(
        status=OPTIMAL,
        values=x,
        objective_value=lp.objective_value(x),
        max_violation=violation,
        iterations=outcome.iterations,
        nodes=nodes,
    )


def solve_lp(lp: LinearProgram, params: SolverParams = None) -> LpSolution:
    """Solve a continuous LP; binary-flagged variables are rejected."""
    if lp.binary_indices():
        raise ValueError("lp has binary variables; use solve_milp")
    params = params or DEFAULT_PARAMS
    sf = standard_form(lp)
    outcome = solve_standard(sf, params)
    return _finish(lp, sf, outcome, params)


def _min_objective(sf: StandardForm, x) -> float:
    return float(sf.c @ x)


def _standard_feasible(sf: StandardForm, x, lb, ub, feastol) -> bool:
    if np.any(x < lb - feastol) or np.any(x > ub + feastol):
        return False
    for row, rel, rhs in zip(sf.rows, sf.rels, sf.rhs):
        lhs = sum(a * x[j] for j, a in row.items())
        if rel == "<=" and lhs > rhs + feastol:
            return False
        if rel == ">=" and lhs < rhs - feastol:
            return False
        if rel == "=" and abs(lhs - rhs) > feastol:
            return False
    return True


def _forced_rounding(sf: StandardForm, x, binaries, lb, ub, params):
    """Integral repair: binaries start at 0 and flip to 1 only when forced.

    Keeps the continuous part of the relaxation untouched, so when the
    binaries carry no objective weight the repaired point has the node's
    own objective and the node closes immediately. Flips are monotone
    (0 -> 1), chosen deterministically as the largest violation reduction
    in the first violated row; returns None when no flip can help.
    """
    cand = x.copy()
    flippable = set()
    for j in binaries:
        if lb[j] > 0.5:
            cand[j] = 1.0
        elif ub[j] < 0.5:
            cand[j] = 0.0
        else:
            cand[j] = 0.0
            flippable.add(j)

    rows_of = {}
    activity = np.empty(len(sf.rows))
    for i, row in enumerate(sf.rows):
        activity[i] = sum(a * cand[j] for j, a in row.items())
        for j in row:
            if j in flippable:
                rows_of.setdefault(j, []).append(i)

    def violation(i):
        rel, rhs = sf.rels[i], sf.rhs[i]
        if rel == "<=":
            return activity[i] - rhs
        if rel == ">=":
            return rhs - activity[i]
        return abs(activity[i] - rhs)

    worklist = sorted(i for i in range(len(sf.rows)) if violation(i) > params.feastol)
    flips = 0
    while worklist:
        i = worklist.pop(0)
        gap = violation(i)
        if gap <= params.feastol:
            continue
        rel = sf.rels[i]
        best = None
        for j, a in sf.rows[i].items():
            if j not in flippable or cand[j] == 1.0:
                continue
            reduce = -a if rel == "<=" else a if rel == ">=" else -abs(a)
            if reduce > 0 and (best is None or (reduce, -j) > best[:2]):
                best = (reduce, -j, j)
        if best is None:
            return None
        j = best[2]
        cand[j] = 1.0
        flips += 1
        if flips > len(binaries):
            return None
        for r in rows_of.get(j, ()):
            activity[r] += sf.rows[r][j]
            if violation(r) > params.feastol and r not in worklist:
                worklist.append(r)
        if violation(i) > params.feastol:
            worklist.insert(0, i)
    return cand


def solve_milp(lp: LinearProgram, params: SolverParams = None) -> LpSolution:
    """Depth-first branch-and-bound over the binary variables.

    Prunes on the incumbent within an absolute gap, branches on the most
    fractional binary, and tries cheap integral roundings at every node so
    models whose relaxations are nearly integral close at the root.
    """
    params = params or DEFAULT_PARAMS
    binaries = lp.binary_indices()
    sf = standard_form(lp)
    if not binaries:
        outcome = solve_standard(sf, params)
        return _finish(lp, sf, outcome, params)

    root_lb = sf.lb.copy()
    root_ub = sf.ub.copy()
    incumbent = None
    incumbent_z = math.inf
    nodes = 0
    iterations = 0
    stack = [()]  # tuples of (var, value) fixings

    while stack:
        fixes = stack.pop()
        nodes += 1
        if nodes > params.node_limit:
            raise NodeLimitError(params.node_limit, _incumbent_solution(lp, incumbent, params, nodes, iterations))
        lb = root_lb.copy()
        ub = root_ub.copy()
        for j, val in fixes:
            lb[j] = ub[j] = val
        outcome = solve_standard(sf, params, lb=lb, ub=ub)
        iterations += outcome.iterations
        if outcome.status == INFEASIBLE:
            continue
        if outcome.status == UNBOUNDED:
            return LpSolution(UNBOUNDED, None, None, iterations=iterations, nodes=nodes)
        x = outcome.x
        z = _min_objective(sf, x)
        if z >= incumbent_z - params.abs_gap:
            continue

        fractional = [
            j for j in binaries if min(abs(x[j]), abs(1.0 - x[j])) > params.int_tol
        ]
        if not fractional:
            incumbent, incumbent_z = x, z
            continue

        cand = _forced_rounding(sf, x, binaries, lb, ub, params)
        if cand is not None and _standard_feasible(sf, cand, lb, ub, params.feastol):
            zc = _min_objective(sf, cand)
            if zc < incumbent_z:
                incumbent, incumbent_z = cand, zc
        if z >= incumbent_z - params.abs_gap:
            continue  # the repair closed this node's gap

        j_star = max(fractional, key=lambda j: (min(x[j], 1.0 - x[j]), -j))
        promising = 1.0 if x[j_star] >= 0.5 else 0.0
        stack.append(fixes + ((j_star, 1.0 - promising),))
        stack.append(fixes + ((j_star, promising),))

    sol = _incumbent_solution(lp, incumbent, params, nodes, iterations)
    if sol is None:
        return LpSolution(INFEASIBLE, None, None, iterations=iterations, nodes=nodes)
    return sol


def _incumbent_solution(lp, incumbent, params, nodes, iterations) -> Optional[LpSolution]:
    if incumbent is None:
        return None
    violation = lp.constraint_violation(incumbent)
    if violation > params.feastol:
        raise LpError(
            "internal: incumbent violates constraints by %.3g (> %.3g)"
            % (violation, params.feastol)
        )
    return LpSolution(
        status=OPTIMAL,
        values=incumbent,
        objective_value=lp.objective_value(incumbent),
        max_violation=violation,
        iterations=iterations,
        nodes=nodes,
    )
