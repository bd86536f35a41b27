"""Small feeder cases shared across the stage tests."""

from __future__ import annotations

import numpy as np

from triopf.netmodel import (
    DemandProfile,
    Generator,
    Line,
    NetworkCase,
    Node,
    StorageUnit,
    validate_case,
)


def two_node_case(p_d=0.1, q_d=0.05, r=0.01, x=0.01, horizon=1, sub_cost=25.0):
    """Substation at node 1 feeding a single load at node 2."""
    demand = DemandProfile(
        p_d=np.array([[0.0] * horizon, [p_d] * horizon]),
        q_d=np.array([[0.0] * horizon, [q_d] * horizon]),
    )
    case = NetworkCase(
        nodes=(Node(1), Node(2)),
        lines=(Line(1, 1, 2, r=r, x=x, pf_min=-5, pf_max=5, qf_min=-5, qf_max=5),),
        generators=(
            Generator(node=1, kind="substation", cost=sub_cost, p_min=0.0, p_max=10.0,
                      q_min=-10.0, q_max=10.0),
        ),
        storage=(),
        horizon_hours=horizon,
        demand=demand,
        name="two_node",
    )
    return validate_case(case)


def two_node_dg_case(horizon=1, p_d=2.0, dg_cost=5.0, line_cap=1.5, storage=False,
                     p_dis_max=0.6, soc_init=0.9):
    """Attackable DG at node 2 fully serving the local load.

    Losing the DG forces the substation to ship the whole load over a line
    rated below it, so a full attack leaves an active-flow violation of
    p_d - line_cap.
    """
    units = ()
    if storage:
        units = (
            StorageUnit(node=2, e_max=4.0, eta_ch=0.95, eta_dis=0.95,
                        p_ch_min=0.0, p_ch_max=p_dis_max, p_dis_min=0.0,
                        p_dis_max=p_dis_max, soc_min=0.05, soc_max=0.95,
                        soc_init=soc_init, cost=18.0),
        )
    demand = DemandProfile(
        p_d=np.array([[0.0] * horizon, [p_d] * horizon]),
        q_d=np.zeros((2, horizon)),
    )
    case = NetworkCase(
        nodes=(Node(1), Node(2)),
        lines=(Line(1, 1, 2, r=0.01, x=0.01, pf_min=-line_cap, pf_max=line_cap,
                    qf_min=-line_cap, qf_max=line_cap),),
        generators=(
            Generator(node=1, kind="substation", cost=25.0, p_min=0.0, p_max=10.0,
                      q_min=-10.0, q_max=10.0),
            Generator(node=2, kind="dispatchable", cost=dg_cost, p_min=0.0, p_max=p_d,
                      q_min=0.0, q_max=1.0, attackable=True),
        ),
        storage=units,
        horizon_hours=horizon,
        demand=demand,
        name="two_node_dg",
    )
    return validate_case(case)


def five_node_attack_case(horizon=2):
    """Chain feeder with three attackable DGs for brute-force enumeration."""
    loads_p = np.array([0.0, 0.4, 0.5, 0.4, 0.3])
    loads_q = loads_p * 0.4
    shape = np.linspace(1.0, 0.8, horizon)
    demand = DemandProfile(p_d=np.outer(loads_p, shape), q_d=np.outer(loads_q, shape))
    nodes = tuple(Node(i) for i in range(1, 6))
    lines = tuple(
        Line(i, i, i + 1, r=0.02, x=0.015, pf_min=-1.0, pf_max=1.0, qf_min=-1.0, qf_max=1.0)
        for i in range(1, 5)
    )
    generators = (
        Generator(node=1, kind="substation", cost=25.0, p_min=0.0, p_max=10.0,
                  q_min=-10.0, q_max=10.0),
        Generator(node=3, kind="dispatchable", cost=6.0, p_min=0.0, p_max=0.5,
                  q_min=0.0, q_max=0.3, attackable=True),
        Generator(node=4, kind="dispatchable", cost=9.0, p_min=0.0, p_max=0.5,
                  q_min=0.0, q_max=0.3, attackable=True),
        Generator(node=5, kind="dispatchable", cost=12.0, p_min=0.0, p_max=0.4,
                  q_min=0.0, q_max=0.3, attackable=True),
    )
    case = NetworkCase(
        nodes=nodes, lines=lines, generators=generators, storage=(),
        horizon_hours=horizon, demand=demand, name="five_node",
    )
    return validate_case(case)


def zero_demand_case(horizon=3):
    case = two_node_case(p_d=0.0, q_d=0.0, horizon=horizon)
    return case


def roundtrip_case():
    """Two hours, storage starting at its SOC floor.

    Demand is light in hour 1 and heavy in hour 2; under a full attack the
    only way to clear the hour-2 line overload is to charge in hour 1 and
    discharge in hour 2, exposing the round-trip efficiency product.
    """
    demand = DemandProfile(
        p_d=np.array([[0.0, 0.0], [0.5, 2.0]]),
        q_d=np.zeros((2, 2)),
    )
    case = NetworkCase(
        nodes=(Node(1), Node(2)),
        lines=(Line(1, 1, 2, r=0.01, x=0.01, pf_min=-1.5, pf_max=1.5,
                    qf_min=-1.5, qf_max=1.5),),
        generators=(
            Generator(node=1, kind="substation", cost=25.0, p_min=0.0, p_max=10.0,
                      q_min=-10.0, q_max=10.0),
            Generator(node=2, kind="dispatchable", cost=5.0, p_min=0.0, p_max=2.0,
                      q_min=0.0, q_max=1.0, attackable=True),
        ),
        storage=(
            StorageUnit(node=2, e_max=1.0, eta_ch=0.95, eta_dis=0.95,
                        p_ch_min=0.0, p_ch_max=0.6, p_dis_min=0.0, p_dis_max=0.6,
                        soc_min=0.1, soc_max=0.95, soc_init=0.1, cost=18.0),
        ),
        horizon_hours=2,
        demand=demand,
        name="roundtrip",
    )
    return validate_case(case)
