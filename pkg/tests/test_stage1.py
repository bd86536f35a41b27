"""Base dispatch: closed-form feeders, merit order, residual invariants."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from triopf.modelbuild import StageInfeasibleError
from triopf.netmodel import constraint_margins
from triopf.stage1 import dispatch_residuals, solve_base_opf

from feeders import five_node_attack_case, two_node_case, zero_demand_case


def test_zero_demand_idles_the_system():
    case = zero_demand_case(horizon=3)
    dispatch = solve_base_opf(case)
    assert dispatch.total_cost == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(dispatch.p_g, 0.0, atol=1e-9)
    np.testing.assert_allclose(dispatch.q_g, 0.0, atol=1e-9)
    np.testing.assert_allclose(dispatch.state.pf, 0.0, atol=1e-9)
    np.testing.assert_allclose(dispatch.state.qf, 0.0, atol=1e-9)
    np.testing.assert_allclose(dispatch.state.v, 1.0, atol=1e-9)


def test_two_node_closed_form():
    # Single line, single source: pf and qf equal the load, and the squared
    # voltage drops by 2 (r pf + x qf).
    case = two_node_case(p_d=0.1, q_d=0.05, r=0.01, x=0.01, sub_cost=25.0)
    dispatch = solve_base_opf(case)
    assert dispatch.state.pf[0, 0] == pytest.approx(0.1, abs=1e-9)
    assert dispatch.state.qf[0, 0] == pytest.approx(0.05, abs=1e-9)
    assert dispatch.state.v[1, 0] == pytest.approx(0.997, abs=1e-9)
    assert dispatch.state.v[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert dispatch.total_cost == pytest.approx(2.5, abs=1e-9)


def _merit_order_cost(case):
    """Greedy fill in ascending cost order, ignoring the network."""
    total = 0.0
    for t in range(case.horizon_hours):
        need = float(case.demand.p_d[:, t].sum())
        for g in sorted(case.generators, key=lambda g: g.cost):
            take = min(need, g.p_max_at(t))
            total += take * g.cost
            need -= take
            if need <= 1e-12:
                break
    return total


def _relax_network(case):
    lines = tuple(
        dataclasses.replace(l, pf_min=-99, pf_max=99, qf_min=-99, qf_max=99)
        for l in case.lines
    )
    nodes = tuple(dataclasses.replace(n, v_min=0.01, v_max=3.0) for n in case.nodes)
    return dataclasses.replace(case, lines=lines, nodes=nodes)


def test_merit_order_when_network_unconstrained():
    case = _relax_network(five_node_attack_case(horizon=2))
    dispatch = solve_base_opf(case)
    assert dispatch.total_cost == pytest.approx(_merit_order_cost(case), abs=1e-7)


def test_residual_invariants_hold():
    for case in (two_node_case(horizon=2), five_node_attack_case(horizon=2)):
        dispatch = solve_base_opf(case)
        balance, drop = dispatch_residuals(case, dispatch)
        assert balance <= 1e-7
        assert drop <= 1e-7
        report = constraint_margins(case, dispatch.state)
        assert report.worst_line_margin <= 1e-7
        assert report.worst_node_margin <= 1e-7


def test_generator_bounds_respected():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    for gi, g in enumerate(case.generators):
        for t in range(case.horizon_hours):
            assert g.p_min - 1e-9 <= dispatch.p_g[gi, t] <= g.p_max_at(t) + 1e-9
            assert g.q_min - 1e-9 <= dispatch.q_g[gi, t] <= g.q_max + 1e-9


def test_cost_breakdown_sums_to_total():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    assert dispatch.cost_by_generator.sum() == pytest.approx(dispatch.total_cost, abs=1e-8)


def test_raising_a_cost_never_lowers_the_objective():
    base = five_node_attack_case(horizon=1)
    ref = solve_base_opf(base).total_cost
    for gi in range(len(base.generators)):
        gens = list(base.generators)
        gens[gi] = dataclasses.replace(gens[gi], cost=gens[gi].cost * 1.5)
        bumped = dataclasses.replace(base, generators=tuple(gens))
        assert solve_base_opf(bumped).total_cost >= ref - 1e-9


def test_undeliverable_demand_is_explicit_infeasibility():
    # Load far beyond the line rating with no local generation.
    case = two_node_case(p_d=50.0, q_d=0.0)
    with pytest.raises(StageInfeasibleError) as err:
        solve_base_opf(case)
    assert err.value.stage == "stage1"
    assert err.value.status == "infeasible"
