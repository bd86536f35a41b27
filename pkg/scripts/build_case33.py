#!/usr/bin/env python3
"""Generate cases/case33.toml, the shipped 33-node feeder case.

Topology, impedances, and nominal loads are the standard 33-bus radial
test feeder (12.66 kV); everything is converted to per unit on a 1 MVA
base. Demand shape, PV availability, DG sizes, and storage parameters are
repository choices tuned so the default scenario exhibits the intended
behavior: a clean base dispatch, damaging attacks at budget >= 2, and a
storage fleet able to absorb them.

DG siting and costs follow the source system diagram: units at nodes 4,
10, 13 (PV), 18, 20, 25, 27, 30, 33, with the five attackable ones at
4, 10, 18, 27, 33. Storage sits at nodes 4, 10, 18, 25, 27, 33.
"""

import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from triopf.caseio import write_case
from triopf.netmodel import (
    DemandProfile,
    Generator,
    Line,
    NetworkCase,
    Node,
    StorageUnit,
    validate_case,
)

BASE_MVA = 1.0
BASE_KV = 12.66
Z_BASE = BASE_KV**2 / BASE_MVA  # ohm

# from, to, R (ohm), X (ohm)
BRANCHES = [
    (1, 2, 0.0922, 0.0470),
    (2, 3, 0.4930, 0.2511),
    (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941),
    (5, 6, 0.8190, 0.7070),
    (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351),
    (8, 9, 1.0300, 0.7400),
    (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650),
    (11, 12, 0.3744, 0.1238),
    (12, 13, 1.4680, 1.1550),
    (13, 14, 0.5416, 0.7129),
    (14, 15, 0.5910, 0.5260),
    (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210),
    (17, 18, 0.7320, 0.5740),
    (2, 19, 0.1640, 0.1565),
    (19, 20, 1.5042, 1.3554),
    (20, 21, 0.4095, 0.4784),
    (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083),
    (23, 24, 0.8980, 0.7091),
    (24, 25, 0.8960, 0.7011),
    (6, 26, 0.2030, 0.1034),
    (26, 27, 0.2842, 0.1447),
    (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006),
    (29, 30, 0.5075, 0.2585),
    (30, 31, 0.9744, 0.9630),
    (31, 32, 0.3105, 0.3619),
    (32, 33, 0.3410, 0.5302),
]

# node -> (P kW, Q kvar) nominal load
LOADS = {
    2: (100, 60), 3: (90, 40), 4: (120, 80), 5: (60, 30), 6: (60, 20),
    7: (200, 100), 8: (200, 100), 9: (60, 20), 10: (60, 20), 11: (45, 30),
    12: (60, 35), 13: (60, 35), 14: (120, 80), 15: (60, 10), 16: (60, 20),
    17: (60, 20), 18: (90, 40), 19: (90, 40), 20: (90, 40), 21: (90, 40),
    22: (90, 40), 23: (90, 50), 24: (420, 200), 25: (420, 200), 26: (60, 25),
    27: (60, 25), 28: (60, 20), 29: (120, 70), 30: (200, 600), 31: (150, 70),
    32: (210, 100), 33: (60, 40),
}

# node -> (cost $/pu, p_max pu, attackable, kind)
DG_FLEET = {
    4: (5.0, 0.80, True, "dispatchable"),
    10: (15.0, 0.60, True, "dispatchable"),
    13: (3.0, 0.90, False, "pv"),
    18: (10.0, 0.70, True, "dispatchable"),
    20: (11.0, 0.50, False, "dispatchable"),
    25: (11.0, 0.60, False, "dispatchable"),
    27: (15.0, 0.60, True, "dispatchable"),
    30: (6.0, 0.90, False, "dispatchable"),
    33: (13.0, 0.60, True, "dispatchable"),
}

STORAGE_NODES = (4, 10, 18, 25, 27, 33)

HORIZON = 24
LOAD_SCALE = 1.25  # global multiplier on nominal loads
FLOW_LIMIT = 1.5  # pu, both directions, all lines
V_MIN, V_MAX = 0.9, 1.1


def demand_shape(t):
    """Double-peak daily multiplier: ~0.62 overnight, ~1.0 evening peak."""
    morning = 0.20 * math.exp(-(((t - 8.5) / 2.2) ** 2))
    evening = 0.38 * math.exp(-(((t - 18.5) / 2.8) ** 2))
    return 0.62 + morning + evening


def pv_shape(t):
    """Irradiance bell: zero overnight, peaking at midday."""
    if 6 <= t <= 19:
        return math.exp(-(((t - 12.5) / 3.2) ** 2))
    return 0.0


def build_case() -> NetworkCase:
    nodes = tuple(Node(i, v_min=V_MIN, v_max=V_MAX) for i in range(1, 34))
    lines = tuple(
        Line(li + 1, f, t, r=R / Z_BASE, x=X / Z_BASE,
             pf_min=-FLOW_LIMIT, pf_max=FLOW_LIMIT,
             qf_min=-FLOW_LIMIT, qf_max=FLOW_LIMIT)
        for li, (f, t, R, X) in enumerate(BRANCHES)
    )

    generators = [
        Generator(node=1, kind="substation", cost=25.0, p_min=0.0, p_max=10.0,
                  q_min=-10.0, q_max=10.0, attackable=False)
    ]
    for node in sorted(DG_FLEET):
        cost, p_max, attackable, kind = DG_FLEET[node]
        profile = None
        if kind == "pv":
            profile = tuple(round(p_max * pv_shape(t), 6) for t in range(HORIZON))
        generators.append(Generator(
            node=node, kind=kind, cost=cost, p_min=0.0, p_max=p_max,
            q_min=0.0, q_max=round(0.5 * p_max, 6), attackable=attackable,
            p_max_profile=profile,
        ))

    storage = tuple(
        StorageUnit(node=node, e_max=4.0, eta_ch=0.95, eta_dis=0.95,
                    p_ch_min=0.0, p_ch_max=0.8, p_dis_min=0.0, p_dis_max=0.8,
                    soc_min=0.1, soc_max=0.95, soc_init=0.75, cost=24.5)
        for node in STORAGE_NODES
    )

    shape = np.array([demand_shape(t) for t in range(HORIZON)])
    p_d = np.zeros((33, HORIZON))
    q_d = np.zeros((33, HORIZON))
    for node, (p_kw, q_kvar) in LOADS.items():
        p_d[node - 1] = np.round(p_kw / 1000.0 * LOAD_SCALE * shape, 6)
        q_d[node - 1] = np.round(q_kvar / 1000.0 * LOAD_SCALE * shape, 6)

    case = NetworkCase(
        nodes=nodes, lines=lines, generators=tuple(generators), storage=storage,
        horizon_hours=HORIZON,
        demand=DemandProfile(p_d=p_d, q_d=q_d),
        name="ieee33", base_mva=BASE_MVA, base_kv=BASE_KV,
    )
    return validate_case(case)


def main():
    out = Path(__file__).resolve().parents[1] / "cases" / "case33.toml"
    out.parent.mkdir(exist_ok=True)
    case = build_case()
    write_case(case, out)
    total = case.demand.p_d.sum(axis=0)
    print("wrote %s" % out)
    print("total demand: %.3f .. %.3f pu" % (total.min(), total.max()))


if __name__ == "__main__":
    main()
