"""Attack assessment: identity at zero budget, sweep and enumeration oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from triopf.netmodel import SystemState, constraint_margins
from triopf.stage1 import solve_base_opf
from triopf.stage2 import assess_worst_attack

from feeders import five_node_attack_case, two_node_dg_case
from oracles import radial_state


def _attacked_objective(case, dispatch, y_full, line_w=1.0, node_w=1.0):
    """Objective of a FIXED attack via the tree-state oracle.

    y_full is (n_generators, T). The substation re-balances, the state
    follows from the tree, and the margins come straight from their
    definitions.
    """
    pos = case.node_index()
    sub = case.substation()
    sub_gi = case.generators.index(sub)
    T = case.horizon_hours
    inj_p = -case.demand.p_d.copy()
    inj_q = -case.demand.q_d.copy()
    for gi, g in enumerate(case.generators):
        if gi == sub_gi:
            continue
        inj_p[pos[g.node]] += dispatch.p_g[gi] * (1.0 - y_full[gi])
        inj_q[pos[g.node]] += dispatch.q_g[gi] * (1.0 - y_full[gi])
    p_sub = -inj_p.sum(axis=0)
    q_sub = -inj_q.sum(axis=0)
    inj_p[pos[sub.node]] += p_sub
    inj_q[pos[sub.node]] += q_sub
    pf, qf, v = radial_state(case, inj_p, inj_q)
    state = SystemState(pf=pf, qf=qf, v=v)
    report = constraint_margins(case, state)
    cost = 0.0
    for gi, g in enumerate(case.generators):
        if g.attackable:
            cost += float(np.sum(g.cost * dispatch.p_g[gi] * (1.0 - y_full[gi])))
    cost += float(np.sum(sub.cost * p_sub))
    return cost + line_w * report.min_line_margin() + node_w * report.min_node_margin(), state, p_sub


def test_zero_budget_reproduces_base_state():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    assessment = assess_worst_attack(case, dispatch, k=0.0)
    np.testing.assert_allclose(assessment.attack.y, 0.0, atol=1e-9)
    np.testing.assert_allclose(assessment.state.pf, dispatch.state.pf, atol=1e-7)
    np.testing.assert_allclose(assessment.state.qf, dispatch.state.qf, atol=1e-7)
    np.testing.assert_allclose(assessment.state.v, dispatch.state.v, atol=1e-7)
    assert assessment.violations.worst_line_margin <= 1e-7
    assert assessment.violations.worst_node_margin <= 1e-7
    base = constraint_margins(case, dispatch.state)
    assert assessment.inf_line_term == pytest.approx(base.min_line_margin(), abs=1e-6)
    assert assessment.inf_node_term == pytest.approx(base.min_node_margin(), abs=1e-6)


def test_two_node_full_attack_overloads_the_line():
    case = two_node_dg_case(p_d=2.0, line_cap=1.5)
    dispatch = solve_base_opf(case)
    assert dispatch.p_g[1, 0] == pytest.approx(2.0, abs=1e-9)  # DG carries the load
    assessment = assess_worst_attack(case, dispatch, k=1.0)
    assert assessment.attack.y[0, 0] == pytest.approx(1.0, abs=1e-7)
    assert assessment.p_sub[0] == pytest.approx(2.0, abs=1e-7)
    assert assessment.violations.phi[1][0, 0] == pytest.approx(0.5, abs=1e-7)
    assert assessment.violations.worst_line_margin == pytest.approx(0.5, abs=1e-7)


def test_two_node_matches_scalar_sweep_oracle():
    case = two_node_dg_case(p_d=2.0, line_cap=1.5)
    dispatch = solve_base_opf(case)
    best = -np.inf
    for y in np.linspace(0.0, 1.0, 2001):
        y_full = np.array([[0.0], [y]])
        obj, _, _ = _attacked_objective(case, dispatch, y_full)
        best = max(best, obj)
    assessment = assess_worst_attack(case, dispatch, k=1.0)
    assert assessment.objective_value == pytest.approx(best, abs=2e-2)
    assert assessment.objective_value >= best - 1e-7


def test_objective_nondecreasing_in_budget():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    objectives = [assess_worst_attack(case, dispatch, k=float(k)).objective_value
                  for k in (0, 1, 2, 3)]
    for lo, hi in zip(objectives, objectives[1:]):
        assert hi >= lo - 1e-8


def test_budget_respected_every_hour():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    for k in (1.0, 2.0):
        assessment = assess_worst_attack(case, dispatch, k=k)
        sums = assessment.attack.y.sum(axis=0)
        assert (sums <= k + 1e-7).all()


def test_epigraph_terms_equal_recomputed_family_extremes():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    assessment = assess_worst_attack(case, dispatch, k=2.0)
    report = constraint_margins(case, assessment.state)
    assert assessment.inf_line_term == pytest.approx(report.min_line_margin(), abs=1e-6)
    assert assessment.inf_node_term == pytest.approx(report.min_node_margin(), abs=1e-6)


def test_binary_attack_matches_exhaustive_enumeration():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    attackable = [gi for gi, g in enumerate(case.generators) if g.attackable]
    T = case.horizon_hours
    for k in (0, 1, 2, 3):
        patterns = [
            p for p in itertools.product((0.0, 1.0), repeat=len(attackable))
            if sum(p) <= k
        ]
        best = -np.inf
        for combo in itertools.product(patterns, repeat=T):
            y_full = np.zeros((len(case.generators), T))
            for t, pattern in enumerate(combo):
                for ai, gi in enumerate(attackable):
                    y_full[gi, t] = pattern[ai]
            obj, _, _ = _attacked_objective(case, dispatch, y_full)
            best = max(best, obj)
        assessment = assess_worst_attack(case, dispatch, k=float(k), binary_attack=True)
        assert assessment.objective_value == pytest.approx(best, abs=1e-6), "k=%d" % k


def test_continuous_relaxation_dominates_binary():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    for k in (1.0, 2.0):
        cont = assess_worst_attack(case, dispatch, k=k).objective_value
        binry = assess_worst_attack(case, dispatch, k=k, binary_attack=True).objective_value
        assert cont >= binry - 1e-7


def test_unattackable_generators_keep_their_injection():
    case = five_node_attack_case(horizon=2)
    dispatch = solve_base_opf(case)
    assessment = assess_worst_attack(case, dispatch, k=2.0)
    # Rebuild nodal balance at every non-substation generator node: the
    # injection must equal p* (1 - y*) with y* = 0 for unattackable units.
    pos = case.node_index()
    y_full = np.zeros((len(case.generators), case.horizon_hours))
    for ai, gi in enumerate(assessment.attackable_indices):
        y_full[gi] = assessment.attack.y[ai]
    for ni, node in enumerate(case.nodes):
        inflow = np.zeros(case.horizon_hours)
        for li, line in enumerate(case.lines):
            if line.to_node == node.id:
                inflow += assessment.state.pf[li]
            if line.from_node == node.id:
                inflow -= assessment.state.pf[li]
        expected_injection = case.demand.p_d[ni].copy()
        for gi, g in enumerate(case.generators):
            if pos[g.node] != ni:
                continue
            if g.kind == "substation":
                expected_injection -= assessment.p_sub
            else:
                expected_injection -= dispatch.p_g[gi] * (1.0 - y_full[gi])
        np.testing.assert_allclose(inflow, expected_injection, atol=1e-7)
