"""Pipeline driver: dispatch, worst-case attack, mitigation.

Runs the three stages in sequence over the whole horizon, or hour by hour
in rolling mode where each hour re-dispatches against the current demand
and storage carries its mitigated state of charge into the next hour.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lpcore import SolverParams
from .modelbuild import StageInfeasibleError
from .netmodel import DemandProfile, NetworkCase, SystemState, constraint_margins, validate_case
from .stage1 import DispatchSolution, solve_base_opf
from .stage2 import AttackAssessment, AttackVector, assess_worst_attack
from .stage3 import MitigationPlan, mitigate_attack

MODES = ("full_horizon", "rolling")


@dataclass(frozen=True)
class ScenarioConfig:
    k: float = 3.0  # per-hour attack budget
    mode: str = "full_horizon"
    binary_attack: bool = False
    hard_limits: bool = False
    line_weight: float = 1.0  # weight on the line-margin epigraph term
    node_weight: float = 1.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("attack budget k must be non-negative")
        if self.mode not in MODES:
            raise ValueError("mode must be one of %s" % (MODES,))
        if self.line_weight < 0 or self.node_weight < 0:
            raise ValueError("term weights must be non-negative")


@dataclass
class ScenarioResult:
    case: NetworkCase
    config: ScenarioConfig
    dispatch: Optional[DispatchSolution] = None
    attack: Optional[AttackAssessment] = None
    mitigation: Optional[MitigationPlan] = None
    timings: dict = field(default_factory=dict)  # stage -> seconds
    failed_stage: Optional[str] = None
    error: Optional[str] = None

    @property
    def completed(self) -> bool:
        return self.failed_stage is None

    def hourly_worst_margins(self) -> dict:
        """Per-stage, per-hour worst margin across all six families."""
        out = {}
        for name, stage in (("stage1", self.dispatch), ("stage2", self.attack),
                            ("stage3", self.mitigation)):
            if stage is None:
                continue
            report = (
                constraint_margins(self.case, stage.state)
                if name == "stage1"
                else stage.violations
            )
            worst = np.full(stage.state.horizon, -np.inf)
            for arr in report.phi.values():
                worst = np.maximum(worst, arr.max(axis=0))
            out[name] = worst
        return out


def run_scenario(case: NetworkCase, config: ScenarioConfig,
                 params: SolverParams = None) -> ScenarioResult:
    """Run the full tri-level pipeline; never raises on stage infeasibility.

    An infeasible stage stops the scenario; the result keeps every stage
    that completed and names the one that failed.
    """
    validate_case(case)
    if config.mode == "rolling":
        return _run_rolling(case, config, params)
    return _run_full(case, config, params)


def _run_full(case, config, params) -> ScenarioResult:
    result = ScenarioResult(case=case, config=config)
    stage = "stage1"
    try:
        t0 = time.perf_counter()
        result.dispatch = solve_base_opf(case, params)
        result.timings["stage1"] = time.perf_counter() - t0

        stage = "stage2"
        t0 = time.perf_counter()
        result.attack = assess_worst_attack(
            case, result.dispatch, config.k,
            binary_attack=config.binary_attack,
            line_weight=config.line_weight, node_weight=config.node_weight,
            params=params,
        )
        result.timings["stage2"] = time.perf_counter() - t0

        stage = "stage3"
        t0 = time.perf_counter()
        result.mitigation = mitigate_attack(
            case, result.dispatch, result.attack,
            hard_limits=config.hard_limits,
            line_weight=config.line_weight, node_weight=config.node_weight,
            params=params,
        )
        result.timings["stage3"] = time.perf_counter() - t0
    except StageInfeasibleError as err:
        result.failed_stage = err.stage
        result.error = str(err)
    except Exception as err:  # surfaced with the stage label for the CLI
        result.failed_stage = stage
        result.error = "%s: %s" % (type(err).__name__, err)
    return result


def single_hour_case(case: NetworkCase, hour: int, soc_carry=None) -> NetworkCase:
    """One-hour sub-case at the given hour, with storage SOC overridden."""
    demand = DemandProfile(
        p_d=case.demand.p_d[:, hour : hour + 1],
        q_d=case.demand.q_d[:, hour : hour + 1],
    )
    generators = tuple(
        g if g.p_max_profile is None
        else dataclasses.replace(g, p_max_profile=(g.p_max_profile[hour],))
        for g in case.generators
    )
    storage = case.storage
    if soc_carry is not None:
        storage = tuple(
            dataclasses.replace(
                u, soc_init=float(min(max(soc_carry[ui], u.soc_min), u.soc_max))
            )
            for ui, u in enumerate(case.storage)
        )
    return dataclasses.replace(
        case, horizon_hours=1, demand=demand, generators=generators, storage=storage
    )


def _run_rolling(case, config, params) -> ScenarioResult:
    result = ScenarioResult(case=case, config=config)
    result.timings = {"stage1": 0.0, "stage2": 0.0, "stage3": 0.0}
    dispatches, attacks, plans = [], [], []
    soc = np.array([u.soc_init for u in case.storage])

    for hour in range(case.horizon_hours):
        sub_case = single_hour_case(case, hour, soc if case.storage else None)
        stage = "stage1"
        try:
            t0 = time.perf_counter()
            dispatch = solve_base_opf(sub_case, params)
            result.timings["stage1"] += time.perf_counter() - t0

            stage = "stage2"
            t0 = time.perf_counter()
            attack = assess_worst_attack(
                sub_case, dispatch, config.k,
                binary_attack=config.binary_attack,
                line_weight=config.line_weight, node_weight=config.node_weight,
                params=params,
            )
            result.timings["stage2"] += time.perf_counter() - t0

            stage = "stage3"
            t0 = time.perf_counter()
            plan = mitigate_attack(
                sub_case, dispatch, attack,
                hard_limits=config.hard_limits,
                line_weight=config.line_weight, node_weight=config.node_weight,
                params=params,
            )
            result.timings["stage3"] += time.perf_counter() - t0
        except StageInfeasibleError as err:
            result.failed_stage = err.stage
            result.error = "hour %d: %s" % (hour, err)
            break
        except Exception as err:
            result.failed_stage = stage
            result.error = "hour %d: %s: %s" % (hour, type(err).__name__, err)
            break
        dispatches.append(dispatch)
        attacks.append(attack)
        plans.append(plan)
        if case.storage:
            soc = plan.soc[:, -1]

    hours = len(dispatches)
    if hours:
        window = case if hours == case.horizon_hours else _truncated_case(case, hours)
        result.dispatch = _stitch_dispatch(window, dispatches)
        result.attack = _stitch_attacks(window, attacks, config.k)
        result.mitigation = _stitch_plans(window, plans)
    return result


def _truncated_case(case, hours):
    demand = DemandProfile(p_d=case.demand.p_d[:, :hours], q_d=case.demand.q_d[:, :hours])
    generators = tuple(
        g if g.p_max_profile is None
        else dataclasses.replace(g, p_max_profile=tuple(g.p_max_profile[:hours]))
        for g in case.generators
    )
    return dataclasses.replace(case, horizon_hours=hours, demand=demand, generators=generators)


def _hstack_states(parts):
    return SystemState(
        pf=np.hstack([p.state.pf for p in parts]),
        qf=np.hstack([p.state.qf for p in parts]),
        v=np.hstack([p.state.v for p in parts]),
    )


def _stitch_dispatch(case, parts) -> DispatchSolution:
    return DispatchSolution(
        p_g=np.hstack([p.p_g for p in parts]),
        q_g=np.hstack([p.q_g for p in parts]),
        state=_hstack_states(parts),
        total_cost=float(sum(p.total_cost for p in parts)),
        cost_by_generator=np.hstack([p.cost_by_generator for p in parts]),
    )


def _stitch_attacks(case, parts, k) -> AttackAssessment:
    state = _hstack_states(parts)
    return AttackAssessment(
        attack=AttackVector(y=np.hstack([p.attack.y for p in parts]), budget_k=float(k)),
        attackable_indices=parts[0].attackable_indices,
        p_sub=np.concatenate([p.p_sub for p in parts]),
        q_sub=np.concatenate([p.q_sub for p in parts]),
        state=state,
        violations=constraint_margins(case, state),
        objective_value=float(sum(p.objective_value for p in parts)),
        inf_line_term=float(min(p.inf_line_term for p in parts)),
        inf_node_term=float(min(p.inf_node_term for p in parts)),
    )


def _stitch_plans(case, parts) -> MitigationPlan:
    state = _hstack_states(parts)
    return MitigationPlan(
        p_ch=np.hstack([p.p_ch for p in parts]),
        p_dis=np.hstack([p.p_dis for p in parts]),
        p_ess=np.hstack([p.p_ess for p in parts]),
        beta_ch=np.hstack([p.beta_ch for p in parts]),
        beta_dis=np.hstack([p.beta_dis for p in parts]),
        soc=np.hstack([p.soc for p in parts]),
        p_sub=np.concatenate([p.p_sub for p in parts]),
        q_sub=np.concatenate([p.q_sub for p in parts]),
        state=state,
        violations=constraint_margins(case, state),
        objective_value=float(sum(p.objective_value for p in parts)),
        sup_line_term=float(max(p.sup_line_term for p in parts)),
        sup_node_term=float(max(p.sup_node_term for p in parts)),
        hard_limits=parts[0].hard_limits,
    )
