"""Pipeline behavior: stage handoff fixity, modes, rolling SOC carry."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from triopf.orchestrator import ScenarioConfig, run_scenario, single_hour_case

from feeders import five_node_attack_case, roundtrip_case, two_node_dg_case, zero_demand_case


def test_zero_budget_scenario_is_benign():
    case = five_node_attack_case(horizon=2)
    result = run_scenario(case, ScenarioConfig(k=0.0))
    assert result.completed
    np.testing.assert_allclose(result.attack.state.pf, result.dispatch.state.pf, atol=1e-7)
    np.testing.assert_allclose(result.attack.state.v, result.dispatch.state.v, atol=1e-7)
    assert result.mitigation.violations.worst_line_margin <= 1e-7
    assert result.mitigation.violations.worst_node_margin <= 1e-7


def test_zero_demand_case_costs_nothing():
    result = run_scenario(zero_demand_case(horizon=2), ScenarioConfig(k=1.0))
    assert result.completed
    assert result.dispatch.total_cost == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(result.dispatch.state.v, 1.0, atol=1e-9)


def test_pipeline_fixity():
    case = five_node_attack_case(horizon=2)
    result = run_scenario(case, ScenarioConfig(k=2.0))
    # Stage 3 consumed exactly the stage-1 dispatch and stage-2 attack
    # objects; nothing re-optimized them along the way.
    assert result.attack.attack.y.flags.writeable is False
    assert result.dispatch.p_g.flags.writeable is False
    assert result.attack.attack.budget_k == 2.0


def test_monotone_damage_over_budget_sweep():
    case = five_node_attack_case(horizon=2)
    values = []
    for k in (0.0, 1.0, 2.0, 3.0):
        result = run_scenario(case, ScenarioConfig(k=k))
        assert result.completed
        values.append(result.attack.objective_value)
    for lo, hi in zip(values, values[1:]):
        assert hi >= lo - 1e-8


def test_rolling_soc_continuity():
    case = roundtrip_case()
    result = run_scenario(case, ScenarioConfig(k=1.0, mode="rolling"))
    assert result.completed
    unit = case.storage[0]
    soc = result.mitigation.soc[0]
    prev = unit.soc_init
    for t in range(case.horizon_hours):
        expected = prev + unit.eta_ch * result.mitigation.p_ch[0, t] / unit.e_max \
            - result.mitigation.p_dis[0, t] / (unit.eta_dis * unit.e_max)
        assert soc[t] == pytest.approx(expected, abs=1e-7)
        prev = soc[t]


def test_single_hour_modes_coincide():
    case = two_node_dg_case(p_d=2.0, storage=True, horizon=1)
    full = run_scenario(case, ScenarioConfig(k=1.0, mode="full_horizon"))
    roll = run_scenario(case, ScenarioConfig(k=1.0, mode="rolling"))
    assert full.completed and roll.completed
    assert np.array_equal(full.dispatch.p_g, roll.dispatch.p_g)
    assert np.array_equal(full.attack.attack.y, roll.attack.attack.y)
    assert np.array_equal(full.mitigation.p_dis, roll.mitigation.p_dis)
    assert np.array_equal(full.mitigation.soc, roll.mitigation.soc)
    assert full.attack.objective_value == roll.attack.objective_value
    assert full.mitigation.objective_value == roll.mitigation.objective_value


def test_stage_timings_recorded():
    result = run_scenario(five_node_attack_case(horizon=1), ScenarioConfig(k=1.0))
    assert set(result.timings) == {"stage1", "stage2", "stage3"}
    assert all(t >= 0 for t in result.timings.values())


def test_infeasible_stage_aborts_with_partial_result():
    case = two_node_dg_case(p_d=2.0, line_cap=1.5, storage=False)
    result = run_scenario(case, ScenarioConfig(k=1.0, hard_limits=True))
    assert not result.completed
    assert result.failed_stage == "stage3"
    assert result.dispatch is not None
    assert result.attack is not None
    assert result.mitigation is None
    assert "soft mode" in result.error


def test_hourly_margin_summaries_cover_all_stages():
    case = five_node_attack_case(horizon=2)
    result = run_scenario(case, ScenarioConfig(k=2.0))
    summary = result.hourly_worst_margins()
    assert set(summary) == {"stage1", "stage2", "stage3"}
    for arr in summary.values():
        assert arr.shape == (2,)
    assert (summary["stage1"] <= 1e-7).all()


def test_single_hour_case_slices_profiles():
    base = five_node_attack_case(horizon=2)
    gens = list(base.generators)
    gens[1] = dataclasses.replace(gens[1], p_max_profile=(0.5, 0.1))
    case = dataclasses.replace(base, generators=tuple(gens))
    sub = single_hour_case(case, 1)
    assert sub.horizon_hours == 1
    assert sub.generators[1].p_max_profile == (0.1,)
    np.testing.assert_array_equal(sub.demand.p_d, case.demand.p_d[:, 1:2])
