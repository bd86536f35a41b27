"""Solver tests: simplex core, presolve reductions, branch-and-bound.

Expected values come from the enumeration oracles in oracles.py, written
and trusted before the solver existed.
"""

from __future__ import annotations

import io
import math

import numpy as np
import pytest

from triopf.lpcore import (
    DEFAULT_PARAMS,
    LinearProgram,
    LpError,
    NodeLimitError,
    NumericalBreakdownError,
    SolverParams,
    dump_lp,
    solve_lp,
    solve_milp,
)

from oracles import lp_vertex_optimum, milp_enumerate_optimum
from randlp import random_box_lp, random_milp

INF = math.inf


# ---------------------------------------------------------------------------
# basic behaviour
# ---------------------------------------------------------------------------


def test_maximize_single_variable():
    lp = LinearProgram(sense="max")
    x = lp.add_variable("x", 0.0, INF)
    lp.add_objective_term(x, 1.0)
    lp.add_constraint({x: 1.0}, "<=", 1.0, "cap")
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.values[x] == pytest.approx(1.0, abs=1e-9)
    assert sol.objective_value == pytest.approx(1.0, abs=1e-9)


def test_contradictory_rows_infeasible():
    lp = LinearProgram(sense="min")
    x = lp.add_variable("x", -INF, INF)
    lp.add_objective_term(x, 1.0)
    lp.add_constraint({x: 1.0}, ">=", 2.0)
    lp.add_constraint({x: 1.0}, "<=", 1.0)
    sol = solve_lp(lp)
    assert sol.status == "infeasible"
    assert sol.values is None


def test_unbounded_detected():
    lp = LinearProgram(sense="max")
    x = lp.add_variable("x", 0.0, INF)
    lp.add_objective_term(x, 1.0)
    lp.add_constraint({x: 1.0}, ">=", 0.0)
    sol = solve_lp(lp)
    assert sol.status == "unbounded"


def test_equality_and_degenerate_rows():
    lp = LinearProgram(sense="min")
    x = lp.add_variable("x", 0.0, 10.0)
    y = lp.add_variable("y", 0.0, 10.0)
    lp.add_objective_term(x, 1.0)
    lp.add_objective_term(y, 2.0)
    lp.add_constraint({x: 1.0, y: 1.0}, "=", 4.0)
    lp.add_constraint({x: 1.0}, "<=", 3.0)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.values[x] == pytest.approx(3.0, abs=1e-8)
    assert sol.values[y] == pytest.approx(1.0, abs=1e-8)


def test_binary_flag_rejected_by_solve_lp():
    lp = LinearProgram()
    lp.add_variable("b", binary=True)
    with pytest.raises(ValueError):
        solve_lp(lp)


def test_beale_cycling_instance_terminates():
    # Classic degenerate instance that cycles under naive Dantzig pivoting.
    lp = LinearProgram(sense="min")
    xs = [lp.add_variable("x%d" % j, 0.0, INF) for j in range(4)]
    for j, c in zip(xs, (-0.75, 150.0, -0.02, 6.0)):
        lp.add_objective_term(j, c)
    lp.add_constraint({xs[0]: 0.25, xs[1]: -60.0, xs[2]: -1.0 / 25.0, xs[3]: 9.0}, "<=", 0.0)
    lp.add_constraint({xs[0]: 0.5, xs[1]: -90.0, xs[2]: -1.0 / 50.0, xs[3]: 3.0}, "<=", 0.0)
    lp.add_constraint({xs[2]: 1.0}, "<=", 1.0)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(-0.05, abs=1e-9)


def test_tiny_pivot_is_hard_error_naming_constraint():
    lp = LinearProgram(sense="min")
    x = lp.add_variable("x", 0.0, INF)
    lp.add_objective_term(x, -1.0)
    lp.add_constraint({x: 5e-10}, "<=", 1.0, "thin")
    with pytest.raises(NumericalBreakdownError) as err:
        solve_lp(lp)
    assert "thin" in str(err.value)


def test_determinism_bit_for_bit():
    rng = np.random.default_rng(7)
    lp = random_box_lp(rng, n_vars=4, n_rows=6)
    while solve_lp(lp).status != "optimal":
        lp = random_box_lp(rng, n_vars=4, n_rows=6)
    a = solve_lp(lp)
    b = solve_lp(lp)
    assert a.status == b.status == "optimal"
    assert a.objective_value == b.objective_value
    assert np.array_equal(a.values, b.values)


# ---------------------------------------------------------------------------
# oracle equivalence on random instances
# ---------------------------------------------------------------------------


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(42)
    optimal = 0
    for k in range(100):
        lp = random_box_lp(rng, n_vars=int(rng.integers(2, 5)), n_rows=int(rng.integers(3, 7)))
        want_status, want_obj = lp_vertex_optimum(lp)
        sol = solve_lp(lp)
        assert sol.status == want_status, "case %d" % k
        if want_status == "optimal":
            optimal += 1
            assert sol.objective_value == pytest.approx(want_obj, abs=1e-6), "case %d" % k
            assert sol.max_violation <= 1e-7
    assert optimal >= 30  # the corpus must actually exercise the solver


def test_free_variable_elimination_matches_hand_reduction():
    # y is free and defined by an equality; eliminating it leaves a box LP.
    lp = LinearProgram(sense="min")
    x = lp.add_variable("x", 0.0, 4.0)
    y = lp.add_variable("y", -INF, INF)
    lp.add_objective_term(y, 1.0)
    lp.add_constraint({y: 1.0, x: -2.0}, "=", 1.0)  # y = 1 + 2x
    lp.add_constraint({y: 1.0}, "<=", 7.0)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.values[x] == pytest.approx(0.0, abs=1e-9)
    assert sol.values[y] == pytest.approx(1.0, abs=1e-9)


def test_chained_eliminations_recover_all_values():
    # A ladder of free variables, each defined from the previous one.
    lp = LinearProgram(sense="min")
    x = lp.add_variable("x", 1.0, 3.0)
    frees = [lp.add_variable("f%d" % k, -INF, INF) for k in range(5)]
    prev = x
    for k, f in enumerate(frees):
        lp.add_constraint({f: 1.0, prev: -1.0}, "=", float(k))
        prev = f
    lp.add_objective_term(frees[-1], 1.0)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    # f4 = x + 0+1+2+3+4 and x sits at its lower bound.
    assert sol.values[frees[-1]] == pytest.approx(11.0, abs=1e-9)
    for k, f in enumerate(frees):
        assert sol.values[f] == pytest.approx(1.0 + sum(range(k + 1)), abs=1e-9)


def test_disconnected_components_solved_independently():
    rng = np.random.default_rng(3)
    a = random_box_lp(rng, n_vars=3, n_rows=4, sense="min")
    b = random_box_lp(rng, n_vars=2, n_rows=3, sense="min")
    merged = LinearProgram(sense="min")
    offset = {}
    for src in (a, b):
        base = merged.n_variables
        for j, v in enumerate(src.variables):
            offset[(id(src), j)] = merged.add_variable(v.name + "m", v.lb, v.ub)
        for j, coef in src.objective.items():
            merged.add_objective_term(base + j, coef)
        for con in src.constraints:
            merged.add_constraint({base + j: c for j, c in con.coeffs.items()}, con.relation, con.rhs)
    sa, sb, sm = solve_lp(a), solve_lp(b), solve_lp(merged)
    if sa.status == "optimal" and sb.status == "optimal":
        assert sm.status == "optimal"
        assert sm.objective_value == pytest.approx(sa.objective_value + sb.objective_value, abs=1e-8)
    else:
        assert sm.status == "infeasible"


def test_dualized_path_agrees_with_direct_path():
    rng = np.random.default_rng(11)
    force_dual = SolverParams(dualize=True)
    force_direct = SolverParams(dualize=False)
    for k in range(40):
        lp = random_box_lp(rng, n_vars=int(rng.integers(2, 5)), n_rows=int(rng.integers(3, 8)))
        da = solve_lp(lp, force_dual)
        db = solve_lp(lp, force_direct)
        assert da.status == db.status, "case %d" % k
        if da.status == "optimal":
            assert da.objective_value == pytest.approx(db.objective_value, abs=1e-7), "case %d" % k
            assert da.max_violation <= 1e-7


# ---------------------------------------------------------------------------
# branch-and-bound
# ---------------------------------------------------------------------------


def test_milp_forces_binary_up():
    lp = LinearProgram(sense="min")
    b = lp.add_variable("b", binary=True)
    lp.add_objective_term(b, 1.0)
    lp.add_constraint({b: 1.0}, ">=", 0.3)
    sol = solve_milp(lp)
    assert sol.status == "optimal"
    assert sol.values[b] == pytest.approx(1.0, abs=1e-9)
    assert sol.objective_value == pytest.approx(1.0, abs=1e-9)


def test_milp_binary_free_input_degenerates_to_lp():
    lp = LinearProgram(sense="max")
    x = lp.add_variable("x", 0.0, 2.5)
    lp.add_objective_term(x, 2.0)
    assert solve_milp(lp).objective_value == pytest.approx(solve_lp(lp).objective_value)


def test_six_binary_selection_matches_enumeration():
    # Budgeted selection with pairwise conflicts.
    lp = LinearProgram(sense="max")
    values = [3.0, 5.0, 4.0, 1.0, 4.5, 2.0]
    weights = [2.0, 4.0, 3.0, 1.0, 3.0, 1.0]
    bs = [lp.add_variable("b%d" % j, binary=True) for j in range(6)]
    for j, val in enumerate(values):
        lp.add_objective_term(bs[j], val)
    lp.add_constraint({bs[j]: weights[j] for j in range(6)}, "<=", 7.0, "budget")
    lp.add_constraint({bs[0]: 1.0, bs[1]: 1.0}, "<=", 1.0, "conflict01")
    want_status, want_obj = milp_enumerate_optimum(lp)
    sol = solve_milp(lp)
    assert sol.status == want_status == "optimal"
    assert sol.objective_value == pytest.approx(want_obj, abs=1e-9)


def test_random_milps_match_enumeration():
    rng = np.random.default_rng(2024)
    for k in range(50):
        lp = random_milp(
            rng,
            n_bin=int(rng.integers(2, 9)),
            n_cont=int(rng.integers(0, 3)),
            n_rows=int(rng.integers(2, 7)),
        )
        want_status, want_obj = milp_enumerate_optimum(lp)
        sol = solve_milp(lp)
        assert sol.status == want_status, "case %d" % k
        if want_status == "optimal":
            assert sol.objective_value == pytest.approx(want_obj, abs=1e-6), "case %d" % k
            for j in lp.binary_indices():
                assert min(abs(sol.values[j]), abs(1 - sol.values[j])) <= 1e-6


def test_relaxation_bounds_milp():
    rng = np.random.default_rng(5)
    for _ in range(20):
        lp = random_milp(rng, n_bin=5, n_cont=1, n_rows=4)
        milp = solve_milp(lp)
        relax = LinearProgram(sense=lp.sense, name="relax")
        for v in lp.variables:
            relax.add_variable(v.name, v.lb, v.ub)
        relax.objective = dict(lp.objective)
        for con in lp.constraints:
            relax.add_constraint(dict(con.coeffs), con.relation, con.rhs)
        rel = solve_lp(relax)
        if milp.status == "optimal":
            assert rel.status == "optimal"
            if lp.sense == "min":
                assert rel.objective_value <= milp.objective_value + 1e-7
            else:
                assert rel.objective_value >= milp.objective_value - 1e-7


def test_node_limit_raises_with_incumbent_attached():
    # Exact-fit selection: rounding cannot satisfy the equality, so the
    # tree has to branch, and one node is not enough.
    lp = LinearProgram(sense="min")
    weights = [3.0, 5.0, 6.0, 7.0]
    bs = [lp.add_variable("b%d" % j, binary=True) for j in range(4)]
    for j, w in zip(bs, weights):
        lp.add_objective_term(j, 1.0 + w / 10.0)
    lp.add_constraint({bs[j]: weights[j] for j in range(4)}, "=", 11.0, "fit")
    params = SolverParams(node_limit=1)
    with pytest.raises(NodeLimitError):
        solve_milp(lp, params)
    # With enough nodes it solves to the 5+6 selection.
    sol = solve_milp(lp)
    assert sol.status == "optimal"
    assert sol.values[bs[1]] == pytest.approx(1.0, abs=1e-9)
    assert sol.values[bs[2]] == pytest.approx(1.0, abs=1e-9)
    assert sol.objective_value == pytest.approx(3.1, abs=1e-9)


def test_milp_determinism():
    rng = np.random.default_rng(99)
    lp = random_milp(rng, n_bin=6, n_cont=2, n_rows=5)
    a = solve_milp(lp)
    b = solve_milp(lp)
    assert a.status == b.status
    if a.status == "optimal":
        assert np.array_equal(a.values, b.values)
        assert a.nodes == b.nodes


# ---------------------------------------------------------------------------
# dump format
# ---------------------------------------------------------------------------


def test_dump_one_constraint_per_line():
    lp = LinearProgram(sense="min", name="demo")
    x = lp.add_variable("x", 0.0, 2.0)
    y = lp.add_variable("y", -INF, INF)
    lp.add_objective_term(x, 1.5)
    lp.add_constraint({x: 1.0, y: -2.0}, "<=", 3.0, "roof")
    lp.add_constraint({y: 1.0}, "=", 1.0, "pin")
    buf = io.StringIO()
    dump_lp(lp, buf)
    text = buf.getvalue()
    lines = text.splitlines()
    assert any(line.strip().startswith("roof:") and "<=" in line for line in lines)
    assert any(line.strip().startswith("pin:") and "=" in line for line in lines)
    assert "y free" in text
