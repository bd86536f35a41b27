"""Dense two-phase primal simplex with general variable bounds.

Operates on arrays (costs, dense constraint matrix, relations, bounds) and
returns primal values plus row duals. Nonbasic variables rest at a finite
bound (or at zero when free); each row carries a slack whose bounds encode
the relation, and infeasible starting rows get a phase-1 artificial.

Pivot selection is Dantzig (most violating reduced cost, lowest index on
ties); after a run of degenerate steps the solver switches to Bland's rule
until it makes real progress again, which guarantees termination. All
choices are deterministic, so identical inputs yield identical solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import SolverParams

NB_LB, NB_UB, NB_FREE, BASIC = 0, 1, 2, 3

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpError(Exception):
    """Generic solver failure (iteration cap, internal inconsistency)."""


class NumericalBreakdownError(LpError):
    """A required pivot element fell below the pivot tolerance."""

    def __init__(self, constraint_name):
        self.constraint_name = constraint_name
        super().__init__(
            "numerical breakdown: no usable pivot in constraint %r" % (constraint_name,)
        )


@dataclass
class CoreResult:
    status: str
    x: Optional[np.ndarray]  # structural variable values
    row_duals: Optional[np.ndarray]
    iterations: int


def solve_core(c, A, rels, b, lb, ub, row_names=None, params: SolverParams = None) -> CoreResult:
    """Minimize c @ x subject to A x (rels) b and lb <= x <= ub.

    A is dense (m, n); rels is a sequence of "<=", "=", ">=".
    """
    params = params or SolverParams()
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape if A.ndim == 2 else (0, c.size)
    if row_names is None:
        row_names = ["row%d" % i for i in range(m)]

    lb = np.asarray(lb, dtype=float).copy()
    ub = np.asarray(ub, dtype=float).copy()

    if m == 0:
        return _solve_unconstrained(c, lb, ub, params)

    # Slack bounds encode the relation: row + slack == rhs.
    slack_lb = np.zeros(m)
    slack_ub = np.zeros(m)
    for i, rel in enumerate(rels):
        if rel == "<=":
            slack_lb[i], slack_ub[i] = 0.0, np.inf
        elif rel == ">=":
            slack_lb[i], slack_ub[i] = -np.inf, 0.0
        elif rel == "=":
            slack_lb[i], slack_ub[i] = 0.0, 0.0
        else:
            raise ValueError("unknown relation %r" % rel)

    lb_all = np.concatenate([lb, slack_lb])
    ub_all = np.concatenate([ub, slack_ub])

    # Starting point: structural variables at their nearest finite bound.
    status = np.full(n + m, NB_LB, dtype=np.int8)
    xstart = np.zeros(n)
    for j in range(n):
        if np.isfinite(lb[j]):
            status[j] = NB_LB
            xstart[j] = lb[j]
        elif np.isfinite(ub[j]):
            status[j] = NB_UB
            xstart[j] = ub[j]
        else:
            status[j] = NB_FREE
            xstart[j] = 0.0

    slack_target = b - A @ xstart
    basis = np.empty(m, dtype=np.intp)
    beta = np.empty(m)
    art_rows = []
    art_signs = []
    row_scale = np.ones(m)
    for i in range(m):
        s = slack_target[i]
        if slack_lb[i] - params.feastol <= s <= slack_ub[i] + params.feastol:
            status[n + i] = BASIC
            basis[i] = n + i
            beta[i] = s
        else:
            clamped = min(max(s, slack_lb[i]), slack_ub[i])
            status[n + i] = NB_LB if clamped == slack_lb[i] else NB_UB
            resid = s - clamped
            art_rows.append(i)
            art_signs.append(1.0 if resid > 0 else -1.0)
            beta[i] = abs(resid)
            row_scale[i] = art_signs[-1]

    n_art = len(art_rows)
    ncols = n + m + n_art
    T = np.zeros((m, ncols))
    T[:, :n] = A
    T[:, n : n + m] = np.eye(m)
    for k, (i, sgn) in enumerate(zip(art_rows, art_signs)):
        T[i, n + m + k] = sgn
        basis[i] = n + m + k
    # Initial basis is diagonal +-1, so B^-1 A is a row rescale.
    T *= row_scale[:, None]

    lb_all = np.concatenate([lb_all, np.zeros(n_art)])
    ub_all = np.concatenate([ub_all, np.full(n_art, np.inf)])
    status = np.concatenate([status, np.full(n_art, BASIC, dtype=np.int8)])

    state = _State(
        T=T,
        beta=beta,
        basis=basis,
        status=status,
        lb=lb_all,
        ub=ub_all,
        n=n,
        m=m,
        A=A,
        b=b,
        row_names=row_names,
        params=params,
        iterations=0,
        scratch=np.empty((min(m, 64), ncols)),
    )

    if n_art:
        c_phase1 = np.zeros(ncols)
        c_phase1[n + m :] = 1.0
        _recompute_reduced_costs(state, c_phase1)
        outcome = _iterate(state, c_phase1, phase=1)
        if outcome == UNBOUNDED:
            raise LpError("phase-1 objective unbounded; solver invariant broken")
        art_total = sum(
            state.beta[i] for i in range(m) if state.basis[i] >= n + m
        )
        scale = 1.0 + float(np.abs(b).max(initial=0.0))
        if art_total > params.feastol * scale:
            return CoreResult(INFEASIBLE, None, None, state.iterations)
        # Freeze artificials at zero for phase 2.
        state.ub[n + m :] = 0.0
        state.lb[n + m :] = 0.0

    c_phase2 = np.zeros(ncols)
    c_phase2[:n] = c
    _recompute_reduced_costs(state, c_phase2)
    outcome = _iterate(state, c_phase2, phase=2)
    if outcome == UNBOUNDED:
        return CoreResult(UNBOUNDED, None, None, state.iterations)

    x_all = _assemble_values(state)
    duals = -state.d[n : n + m]
    return CoreResult(OPTIMAL, x_all[:n], duals.copy(), state.iterations)


@dataclass
class _State:
    T: np.ndarray
    beta: np.ndarray
    basis: np.ndarray
    status: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    n: int
    m: int
    A: np.ndarray
    b: np.ndarray
    row_names: list
    params: SolverParams
    iterations: int
    scratch: np.ndarray = None  # pivot-update workspace, same shape as T
    d: np.ndarray = None


def _solve_unconstrained(c, lb, ub, params):
    """No rows: each variable independently sits at its cheapest bound."""
    x = np.zeros(c.size)
    for j in range(c.size):
        if c[j] > params.dual_tol:
            if not np.isfinite(lb[j]):
                return CoreResult(UNBOUNDED, None, None, 0)
            x[j] = lb[j]
        elif c[j] < -params.dual_tol:
            if not np.isfinite(ub[j]):
                return CoreResult(UNBOUNDED, None, None, 0)
            x[j] = ub[j]
        else:
            x[j] = min(max(0.0, lb[j]), ub[j])
    return CoreResult(OPTIMAL, x, np.zeros(0), 0)


def _recompute_reduced_costs(state, cost):
    cb = cost[state.basis]
    if np.any(cb):
        state.d = cost - cb @ state.T
    else:
        state.d = cost.copy()
    state.d[state.basis] = 0.0


def _refresh_beta(state):
    """Recompute basic values from scratch to shed accumulated roundoff."""
    x_nb = np.zeros(state.lb.size)
    nb_lb = state.status == NB_LB
    nb_ub = state.status == NB_UB
    x_nb[nb_lb] = state.lb[nb_lb]
    x_nb[nb_ub] = state.ub[nb_ub]
    r = state.b - state.A @ x_nb[: state.n]
    # Subtract nonbasic slack contributions (slack coefficient is identity).
    r -= x_nb[state.n : state.n + state.m]
    binv = state.T[:, state.n : state.n + state.m]
    state.beta = binv @ r


def _iterate(state, cost, phase):
    p = state.params
    T, lb, ub = state.T, state.lb, state.ub
    m = state.m
    ncols = T.shape[1]
    bland = False
    degen_run = 0
    bland_trigger = p.bland_trigger_factor * (m + ncols)
    fixed = lb == ub

    while True:
        state.iterations += 1
        if state.iterations > p.max_iterations:
            raise LpError("iteration limit exceeded (%d)" % p.max_iterations)
        if state.iterations % 2000 == 0:
            _refresh_beta(state)
            _recompute_reduced_costs(state, cost)

        d = state.d
        can_inc = (state.status == NB_LB) & ~fixed & (d < -p.dual_tol)
        can_dec = (state.status == NB_UB) & ~fixed & (d > p.dual_tol)
        free_nb = state.status == NB_FREE
        can_inc |= free_nb & (d < -p.dual_tol)
        can_dec |= free_nb & (d > p.dual_tol)
        candidates = can_inc | can_dec
        if not candidates.any():
            return OPTIMAL

        if bland:
            q = int(np.flatnonzero(candidates)[0])
        else:
            score = np.where(candidates, np.abs(d), -1.0)
            q = int(np.argmax(score))
        direction = 1.0 if can_inc[q] else -1.0

        g = direction * T[:, q]
        room = np.full(m, np.inf)
        dec_mask = g > p.ratio_tol
        inc_mask = g < -p.ratio_tol
        lo = lb[state.basis]
        hi = ub[state.basis]
        with np.errstate(invalid="ignore"):
            room[dec_mask] = (state.beta[dec_mask] - lo[dec_mask]) / g[dec_mask]
            room[inc_mask] = (state.beta[inc_mask] - hi[inc_mask]) / g[inc_mask]
        room[room < 0.0] = 0.0  # roundoff guard

        span = ub[q] - lb[q] if np.isfinite(ub[q]) and np.isfinite(lb[q]) else np.inf
        best_row = -1
        if np.isfinite(room).any():
            row_step = room.min()
            if bland:
                ties = np.flatnonzero(room <= row_step + 1e-15)
                best_row = int(ties[np.argmin(state.basis[ties])])
            else:
                best_row = int(np.argmin(room))
            step = row_step
        else:
            step = np.inf

        if span < step:
            # Bound flip: entering variable crosses to its other bound.
            state.beta -= span * g
            state.status[q] = NB_UB if state.status[q] == NB_LB else NB_LB
            degen_run = 0
            continue

        if not np.isfinite(step):
            # A blocking row whose only pivot lies between the pivot and
            # ratio tolerances means the basis is numerically unusable.
            tiny = (
                ((g > p.pivot_tol) & (g <= p.ratio_tol) & np.isfinite(lo))
                | ((g < -p.pivot_tol) & (g >= -p.ratio_tol) & np.isfinite(hi))
            )
            if tiny.any():
                raise NumericalBreakdownError(state.row_names[int(np.flatnonzero(tiny)[0])])
            if phase == 1:
                raise LpError("phase-1 ray detected; solver invariant broken")
            return UNBOUNDED

        pivot = T[best_row, q]
        if abs(pivot) < p.pivot_tol:
            raise NumericalBreakdownError(state.row_names[best_row])

        leaving = state.basis[best_row]
        # A positive g means the leaving basic value decreased to its lower bound.
        state.status[leaving] = NB_LB if g[best_row] > 0 else NB_UB

        entering_value = (
            (lb[q] if state.status[q] == NB_LB else ub[q])
            if state.status[q] != NB_FREE
            else 0.0
        ) + direction * step
        state.beta -= step * g
        state.beta[best_row] = entering_value
        state.status[q] = BASIC
        state.basis[best_row] = q

        prow = T[best_row] / pivot
        col = T[:, q].copy()
        col[best_row] = 0.0
        # Rank-1 update in row blocks: the product block stays cache-resident,
        # so memory traffic is one read and one write of T instead of two.
        scratch = state.scratch
        for i0 in range(0, m, 64):
            i1 = min(i0 + 64, m)
            blk = scratch[: i1 - i0]
            np.multiply(col[i0:i1, None], prow[None, :], out=blk)
            np.subtract(T[i0:i1], blk, out=T[i0:i1])
        T[best_row] = prow
        T[:, q] = 0.0
        T[best_row, q] = 1.0
        d_q = state.d[q]
        if d_q != 0.0:
            state.d -= d_q * prow
        state.d[q] = 0.0

        if step <= p.degeneracy_tol:
            degen_run += 1
            if degen_run > bland_trigger:
                bland = True
        else:
            degen_run = 0
            bland = False


def _assemble_values(state):
    x = np.zeros(state.lb.size)
    at_lb = state.status == NB_LB
    at_ub = state.status == NB_UB
    x[at_lb] = state.lb[at_lb]
    x[at_ub] = state.ub[at_ub]
    x[state.basis] = state.beta
    return x
