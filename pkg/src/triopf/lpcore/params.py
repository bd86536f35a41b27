"""Solver tolerances and limits, stated once and inherited everywhere."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass
class SolverParams:
    feastol: float = 1e-7  # primal feasibility (rows and bounds)
    dual_tol: float = 1e-9  # reduced-cost optimality threshold
    pivot_tol: float = 1e-10  # below this a pivot is a hard error
    ratio_tol: float = 1e-9  # smaller column entries do not block the ratio test
    degeneracy_tol: float = 1e-12  # steps at or below this count as degenerate
    int_tol: float = 1e-6  # binary integrality tolerance
    abs_gap: float = 1e-6  # branch-and-bound absolute optimality gap
    node_limit: int = 50000
    max_iterations: int = 2_000_000
    bland_trigger_factor: int = 3  # engage Bland after factor*(rows+cols) degenerate pivots
    # Equality-elimination presolve: pivots need this much absolute and
    # row-relative magnitude to be eliminated on.
    elim_abs_tol: float = 1e-9
    elim_rel_tol: float = 1e-8
    drop_tol: float = 1e-13  # coefficients below this are treated as exact zeros
    # Components with many more rows than columns are solved through their
    # dual. None picks automatically; True/False forces the choice.
    dualize: Optional[bool] = None
    dualize_min_rows: int = 300
    dualize_row_ratio: float = 3.0
    # Row sifting for components with very many inequality rows: solve with
    # an active subset and admit rows as they become violated.
    sift: Optional[bool] = None
    sift_min_rows: int = 2000
    sift_row_ratio: float = 3.0
    sift_max_rounds: int = 60
