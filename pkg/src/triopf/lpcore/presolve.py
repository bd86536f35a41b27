"""Reductions applied before the simplex core sees a problem.

The stage models arrive with thousands of equality rows (nodal balances,
voltage drops, SOC recursions) whose variables are otherwise free, plus a
large block of two-term inequality rows. Three standard reductions make
them cheap to solve while preserving the exact solution set:

  1. fixed variables (lb == ub) are substituted out;
  2. free variables are eliminated through equality rows by Gaussian
     substitution, pivots chosen greedily by Markowitz fill count;
  3. the remainder splits into independent connected components.

Components left with far more rows than columns are solved through their
explicit dual (the dual's basis is then small), and the primal point is
recovered from the dual row multipliers. The recovered point is verified
against the original component; any anomaly falls back to solving the
component directly, so the fast path is an accelerator, never a source of
wrong answers.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import LinearProgram, MINIMIZE
from .params import SolverParams
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, CoreResult, LpError, solve_core

_INF = math.inf


@dataclass
class StandardForm:
    """Minimization-oriented copy of a LinearProgram as plain arrays."""

    c: np.ndarray
    rows: list  # list[dict var -> coef]
    rels: list
    rhs: list
    lb: np.ndarray
    ub: np.ndarray
    var_names: list
    row_names: list
    obj_constant: float
    flipped: bool  # original sense was maximize

    @property
    def n(self):
        return self.c.size


def standard_form(lp: LinearProgram) -> StandardForm:
    c = lp.objective_vector()
    flipped = lp.sense != MINIMIZE
    if flipped:
        c = -c
    return StandardForm(
        c=c,
        rows=[dict(con.coeffs) for con in lp.constraints],
        rels=[con.relation for con in lp.constraints],
        rhs=[con.rhs for con in lp.constraints],
        lb=np.array([v.lb for v in lp.variables], dtype=float),
        ub=np.array([v.ub for v in lp.variables], dtype=float),
        var_names=[v.name for v in lp.variables],
        row_names=[con.name for con in lp.constraints],
        obj_constant=lp.objective_constant,
        flipped=flipped,
    )


@dataclass
class SolveOutcome:
    status: str
    x: Optional[np.ndarray]
    iterations: int
    failed_row: str = ""  # first offending row for infeasible empty rows


def solve_standard(sf: StandardForm, params: SolverParams, lb=None, ub=None) -> SolveOutcome:
    """Run the reduction pipeline and the core on a standard form.

    lb/ub override the form's bounds without mutating it (used by
    branch-and-bound node fixing).
    """
    n = sf.n
    lb = sf.lb.copy() if lb is None else np.asarray(lb, dtype=float).copy()
    ub = sf.ub.copy() if ub is None else np.asarray(ub, dtype=float).copy()
    if np.any(lb > ub + 1e-12):
        return SolveOutcome(INFEASIBLE, None, 0)

    rows = [dict(r) for r in sf.rows]
    rhs = list(sf.rhs)
    rels = list(sf.rels)
    row_names = list(sf.row_names)
    c = sf.c.copy()
    alive_row = [True] * len(rows)
    x = np.zeros(n)
    solved = np.zeros(n, dtype=bool)
    iterations = 0

    # --- fixed variables -------------------------------------------------
    fixed = np.flatnonzero(ub - lb <= 1e-12)
    if fixed.size:
        fixed_set = set(fixed.tolist())
        for j in fixed:
            x[j] = lb[j]
            solved[j] = True
        for i, row in enumerate(rows):
            hit = fixed_set.intersection(row)
            for j in hit:
                rhs[i] -= row.pop(j) * x[j]

    bad = _drop_empty_rows(rows, rels, rhs, row_names, alive_row, params)
    if bad is not None:
        return SolveOutcome(INFEASIBLE, None, 0, failed_row=bad)

    # --- free-variable elimination through equality rows -----------------
    free = ~solved & ~np.isfinite(lb) & ~np.isfinite(ub)
    substitutions = _eliminate_free(rows, rels, rhs, row_names, alive_row, c, free, params)
    bad = _drop_empty_rows(rows, rels, rhs, row_names, alive_row, params)
    if bad is not None:
        return SolveOutcome(INFEASIBLE, None, 0, failed_row=bad)

    # --- variables that no longer touch any row --------------------------
    in_rows = np.zeros(n, dtype=bool)
    for i, row in enumerate(rows):
        if alive_row[i]:
            for j in row:
                in_rows[j] = True
    eliminated = {j for j, _, _ in substitutions}
    for j in range(n):
        if solved[j] or in_rows[j] or j in eliminated:
            continue
        if c[j] > params.dual_tol:
            if not np.isfinite(lb[j]):
                return SolveOutcome(UNBOUNDED, None, iterations)
            x[j] = lb[j]
        elif c[j] < -params.dual_tol:
            if not np.isfinite(ub[j]):
                return SolveOutcome(UNBOUNDED, None, iterations)
            x[j] = ub[j]
        else:
            x[j] = min(max(0.0, lb[j]), ub[j])
        solved[j] = True

    # --- connected components --------------------------------------------
    for comp_vars, comp_rows in _components(n, rows, alive_row, solved, eliminated):
        outcome = _solve_component(
            comp_vars, comp_rows, rows, rels, rhs, row_names, c, lb, ub, sf.var_names, params
        )
        iterations += outcome.iterations
        if outcome.status != OPTIMAL:
            return SolveOutcome(outcome.status, None, iterations)
        for local, j in enumerate(comp_vars):
            x[j] = outcome.x[local]
            solved[j] = True

    # --- postsolve: reverse the substitution stack ------------------------
    for j, const, expr in reversed(substitutions):
        x[j] = const + sum(a * x[k] for k, a in expr.items())
        solved[j] = True

    return SolveOutcome(OPTIMAL, x, iterations)


def _drop_empty_rows(rows, rels, rhs, row_names, alive_row, params):
    """Deactivate rows with no coefficients; detect constant contradictions."""
    for i, row in enumerate(rows):
        if alive_row[i] and not row:
            r = rhs[i]
            rel = rels[i]
            violated = (
                (rel == "=" and abs(r) > params.feastol)
                or (rel == "<=" and r < -params.feastol)
                or (rel == ">=" and r > params.feastol)
            )
            if violated:
                return row_names[i]
            alive_row[i] = False
    return None


def _eliminate_free(rows, rels, rhs, row_names, alive_row, c, free, params):
    """Gaussian elimination of free variables via equality rows.

    Returns the substitution stack [(var, const, expr)], already applied to
    every surviving row and to the objective.
    """
    eligible = free.copy()
    col_rows = {}
    for i, row in enumerate(rows):
        if not alive_row[i]:
            continue
        for j in row:
            col_rows.setdefault(j, set()).add(i)

    def best_pivot(i):
        row = rows[i]
        if not row:
            return None
        scale = max(abs(a) for a in row.values())
        tol = max(params.elim_abs_tol, params.elim_rel_tol * scale)
        best = None
        for j, a in row.items():
            if not eligible[j] or abs(a) < tol:
                continue
            score = (len(row) - 1) * (len(col_rows.get(j, ())) - 1)
            key = (score, j)
            if best is None or key < best[0]:
                best = (key, j)
        if best is None:
            return None
        return best[0][0], best[1]

    heap = []
    for i, rel in enumerate(rels):
        if rel == "=" and alive_row[i]:
            found = best_pivot(i)
            if found:
                heapq.heappush(heap, (found[0], i))

    substitutions = []
    while heap:
        score, i = heapq.heappop(heap)
        if not alive_row[i]:
            continue
        found = best_pivot(i)
        if found is None:
            continue
        if found[0] > score:
            heapq.heappush(heap, (found[0], i))
            continue
        j = found[1]

        piv = rows[i].pop(j)
        const = rhs[i] / piv
        expr = {k: -a / piv for k, a in rows[i].items()}
        substitutions.append((j, const, expr))
        eligible[j] = False
        alive_row[i] = False
        for k in rows[i]:
            col_rows[k].discard(i)
        rows[i] = {}

        for r in list(col_rows.get(j, ())):
            if r == i or not alive_row[r]:
                continue
            row = rows[r]
            a = row.pop(j, 0.0)
            if a == 0.0:
                continue
            rhs[r] -= a * const
            for k, ek in expr.items():
                newval = row.get(k, 0.0) + a * ek
                if abs(newval) <= params.drop_tol:
                    if k in row:
                        del row[k]
                        col_rows[k].discard(r)
                else:
                    if k not in row:
                        col_rows.setdefault(k, set()).add(r)
                    row[k] = newval
            if rels[r] == "=" and row:
                found = best_pivot(r)
                if found:
                    heapq.heappush(heap, (found[0], r))
        col_rows.pop(j, None)

        if c[j] != 0.0:
            cj = c[j]
            c[j] = 0.0
            for k, ek in expr.items():
                c[k] += cj * ek
            # constant folds into the reported objective via postsolved x

    return substitutions


def _components(n, rows, alive_row, solved, eliminated):
    """Yield (vars, rows) of each connected block, deterministically ordered."""
    var_rows = {}
    for i, row in enumerate(rows):
        if alive_row[i]:
            for j in row:
                var_rows.setdefault(j, []).append(i)

    seen_var = set()
    seen_row = set()
    for start in range(n):
        if solved[start] or start in eliminated or start in seen_var or start not in var_rows:
            continue
        comp_vars = []
        comp_rows = []
        stack = [("v", start)]
        seen_var.add(start)
        while stack:
            kind, idx = stack.pop()
            if kind == "v":
                comp_vars.append(idx)
                for r in var_rows.get(idx, ()):
                    if r not in seen_row:
                        seen_row.add(r)
                        stack.append(("r", r))
            else:
                comp_rows.append(idx)
                for j in rows[idx]:
                    if j not in seen_var:
                        seen_var.add(j)
                        stack.append(("v", j))
        yield sorted(comp_vars), sorted(comp_rows)


def _solve_component(comp_vars, comp_rows, rows, rels, rhs, row_names, c, lb, ub, var_names, params):
    local = {j: k for k, j in enumerate(comp_vars)}
    nn = len(comp_vars)
    mm = len(comp_rows)
    A = np.zeros((mm, nn))
    bb = np.empty(mm)
    rr = []
    nmz = []
    for ii, i in enumerate(comp_rows):
        for j, a in rows[i].items():
            A[ii, local[j]] = a
        bb[ii] = rhs[i]
        rr.append(rels[i])
        nmz.append(row_names[i])
    cc = c[comp_vars]
    llb = lb[comp_vars]
    uub = ub[comp_vars]

    if (
        params.sift is not False
        and mm >= params.sift_min_rows
        and mm >= params.sift_row_ratio * nn
    ):
        outcome = _solve_sifted(cc, A, rr, bb, llb, uub, nmz, params)
        if outcome is not None:
            return outcome
    return _solve_dense_or_dual(cc, A, rr, bb, llb, uub, nmz, params)


def _solve_dense_or_dual(cc, A, rr, bb, llb, uub, nmz, params) -> SolveOutcome:
    mm, nn = A.shape
    use_dual = params.dualize
    if use_dual is None:
        use_dual = mm >= params.dualize_min_rows and mm >= params.dualize_row_ratio * nn
    if use_dual:
        outcome = _solve_dualized(cc, A, rr, bb, llb, uub, params)
        if outcome is not None:
            return outcome
    res = solve_core(cc, A, rr, bb, llb, uub, row_names=nmz, params=params)
    return SolveOutcome(res.status, res.x, res.iterations)


def _solve_sifted(c, A, rels, b, lb, ub, names, params) -> Optional[SolveOutcome]:
    """Row sifting: activate inequality rows only as they become violated.

    Equality rows and rows touching an objective-bounding direction stay
    active from the start; each round solves the restricted problem and
    activates the most violated inactive rows. A point feasible for every
    row and optimal for the active relaxation is optimal outright. A
    restricted infeasibility is final (fewer rows can only relax). None
    means sifting gave up (round budget or everything active), and the
    caller solves the component whole.
    """
    m, n = A.shape
    rels = np.asarray(rels)
    active = np.zeros(m, dtype=bool)
    active[rels == "="] = True

    # Bound free objective directions: a minimized variable unbounded below
    # needs some row capping it from below, and vice versa.
    le_sign = np.where(rels == "<=", 1.0, -1.0)  # orientation as <= rows
    for j in range(n):
        need_low = c[j] > params.dual_tol and not np.isfinite(lb[j])
        need_high = c[j] < -params.dual_tol and not np.isfinite(ub[j])
        if not (need_low or need_high):
            continue
        col = A[:, j] * le_sign
        rows = np.flatnonzero((col < 0) if need_low else (col > 0))
        rows = rows[~active[rows]] if rows.size else rows
        if rows.size:
            active[rows[0]] = True

    scale = 1.0 + float(np.abs(b).max(initial=0.0))
    tol = params.feastol * scale
    batch = max(1024, 4 * n)
    buffer_margin = 0.05 * scale
    iterations = 0

    for _ in range(params.sift_max_rounds):
        idx = np.flatnonzero(active)
        sub = _solve_dense_or_dual(
            c, A[idx], [rels[i] for i in idx], b[idx], lb, ub,
            [names[i] for i in idx], params,
        )
        iterations += sub.iterations
        if sub.status == INFEASIBLE:
            return SolveOutcome(INFEASIBLE, None, iterations)
        if sub.status == UNBOUNDED:
            inactive = np.flatnonzero(~active)
            if inactive.size == 0:
                return SolveOutcome(UNBOUNDED, None, iterations)
            active[inactive[:batch]] = True
            continue
        x = sub.x
        resid = A @ x - b
        viol = np.where(rels == "<=", resid, np.where(rels == ">=", -resid, np.abs(resid)))
        viol[active] = -np.inf
        worst = np.flatnonzero(viol > tol)
        if worst.size == 0:
            return SolveOutcome(OPTIMAL, x, iterations)
        order = np.lexsort((worst, -viol[worst]))
        chosen = worst[order[:batch]]
        active[chosen] = True
        # Rows close to their limit tend to be violated next round once the
        # working set shifts; admitting them now saves whole resolves.
        room = batch - chosen.size
        if room > 0:
            near = np.flatnonzero((viol > -buffer_margin) & (viol <= tol))
            if near.size:
                order = np.lexsort((near, -viol[near]))
                active[near[order[:room]]] = True
    return None


def _solve_dualized(c, A, rels, b, lb, ub, params):
    """Solve a component through its explicit dual; None means fall back.

    The primal is rewritten as min c'x s.t. G x <= h, E x = f with x free
    (finite bounds become rows). Its dual is
        min h'lam + f'mu  s.t.  G'lam + E'mu = -c,  lam >= 0,
    and the multipliers of those equality rows at the dual optimum are an
    optimal primal point.
    """
    m, n = A.shape
    g_cols = []  # (column vector over primal vars, rhs)
    e_cols = []
    for i in range(m):
        if rels[i] == "<=":
            g_cols.append((A[i], b[i]))
        elif rels[i] == ">=":
            g_cols.append((-A[i], -b[i]))
        else:
            e_cols.append((A[i], b[i]))
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        if np.isfinite(ub[j]):
            g_cols.append((unit, ub[j]))
        if np.isfinite(lb[j]):
            g_cols.append((-unit, -lb[j]))

    n_g = len(g_cols)
    n_e = len(e_cols)
    Ad = np.empty((n, n_g + n_e))
    cd = np.empty(n_g + n_e)
    for k, (col, h) in enumerate(g_cols):
        Ad[:, k] = col
        cd[k] = h
    for k, (col, f) in enumerate(e_cols):
        Ad[:, n_g + k] = col
        cd[n_g + k] = f
    lbd = np.concatenate([np.zeros(n_g), np.full(n_e, -_INF)])
    ubd = np.full(n_g + n_e, _INF)
    rels_d = ["="] * n
    rhs_d = -c

    res = solve_core(cd, Ad, rels_d, rhs_d, lbd, ubd, params=params)
    if res.status == UNBOUNDED:
        return SolveOutcome(INFEASIBLE, None, res.iterations)
    if res.status != OPTIMAL:
        return None  # dual infeasible: primal unbounded or infeasible

    x = res.row_duals
    if x is None or x.size != n:
        return None
    # Verify the recovered point against the component before trusting it.
    scale = 1.0 + float(np.abs(b).max(initial=0.0)) + float(np.abs(x).max(initial=0.0))
    tol = params.feastol * scale
    act = A @ x
    for i in range(m):
        bad = (
            (rels[i] == "<=" and act[i] > b[i] + tol)
            or (rels[i] == ">=" and act[i] < b[i] - tol)
            or (rels[i] == "=" and abs(act[i] - b[i]) > tol)
        )
        if bad:
            return None
    if np.any(x < lb - tol) or np.any(x > ub + tol):
        return None
    dual_obj = float(cd @ res.x)
    primal_obj = float(c @ x)
    if abs(primal_obj - (-dual_obj)) > 1e-6 * (1.0 + abs(primal_obj)):
        return None
    # Clip bound roundoff so downstream consumers see admissible values.
    x = np.minimum(np.maximum(x, lb), ub)
    return SolveOutcome(OPTIMAL, x, res.iterations)
