"""Domain model for radial distribution feeders.

Holds the static case description (nodes, lines, generators, storage,
demand), the per-hour electrical state (line flows and squared node
voltages), and the six signed constraint margins used by the attack and
mitigation stages. All values are per-unit on the case's own base; node
voltages are carried *squared* (pu^2) because the linearized branch-flow
voltage-drop relation is linear in squared magnitudes.

Everything here is immutable after construction; validated cases can be
shared freely across threads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

GeneratorKind = ("substation", "dispatchable", "pv")


class CaseValidationError(ValueError):
    """Raised when a NetworkCase violates structural invariants.

    Carries the complete list of failed invariants in ``violations``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "invalid network case (%d problem%s):\n  - %s"
            % (
                len(self.violations),
                "" if len(self.violations) == 1 else "s",
                "\n  - ".join(self.violations),
            )
        )


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Node:
    id: int
    v_min: float = 0.9  # voltage magnitude lower bound (pu)
    v_max: float = 1.1  # voltage magnitude upper bound (pu)


@dataclass(frozen=True)
class Line:
    id: int
    from_node: int
    to_node: int
    r: float  # resistance (pu)
    x: float  # reactance (pu)
    pf_min: float = -1.5  # active flow bounds (pu)
    pf_max: float = 1.5
    qf_min: float = -1.5  # reactive flow bounds (pu)
    qf_max: float = 1.5


@dataclass(frozen=True)
class Generator:
    node: int
    kind: str  # substation | dispatchable | pv
    cost: float  # active-power cost ($/pu)
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    attackable: bool = False
    # Optional per-hour cap on active output (pu); used for PV units whose
    # availability follows an irradiance shape. None means the scalar p_max
    # applies at every hour.
    p_max_profile: Optional[tuple] = None

    def p_max_at(self, t: int) -> float:
        if self.p_max_profile is None:
            return self.p_max
        return min(self.p_max, self.p_max_profile[t])


@dataclass(frozen=True)
class StorageUnit:
    node: int
    e_max: float  # energy capacity (pu*h)
    eta_ch: float  # charge efficiency in (0, 1]
    eta_dis: float  # discharge efficiency in (0, 1]
    p_ch_min: float
    p_ch_max: float
    p_dis_min: float
    p_dis_max: float
    soc_min: float  # state-of-charge bounds (fraction of capacity)
    soc_max: float
    soc_init: float
    cost: float  # discharged-energy cost ($/pu)


@dataclass(frozen=True)
class DemandProfile:
    """Active/reactive demand per node per hour, ordered like case.nodes."""

    p_d: np.ndarray  # (n_nodes, horizon) pu
    q_d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_d", _frozen_array(self.p_d))
        object.__setattr__(self, "q_d", _frozen_array(self.q_d))


@dataclass(frozen=True)
class NetworkCase:
    nodes: tuple
    lines: tuple
    generators: tuple
    storage: tuple
    horizon_hours: int
    demand: DemandProfile
    name: str = "case"
    base_mva: float = 1.0  # pu basis, informational
    base_kv: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "storage", tuple(self.storage))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    def node_index(self) -> dict:
        """Map node id -> position in self.nodes."""
        return {n.id: i for i, n in enumerate(self.nodes)}

    def substation(self) -> Generator:
        subs = [g for g in self.generators if g.kind == "substation"]
        if len(subs) != 1:
            raise CaseValidationError(
                ["expected exactly one substation generator, found %d" % len(subs)]
            )
        return subs[0]

    def attackable_generators(self) -> list:
        return [g for g in self.generators if g.attackable]


@dataclass(frozen=True)
class SystemState:
    """Per-hour network state: line flows (pu) and squared voltages (pu^2)."""

    pf: np.ndarray  # (n_lines, horizon)
    qf: np.ndarray
    v: np.ndarray  # (n_nodes, horizon), squared magnitude

    def __post_init__(self):
        object.__setattr__(self, "pf", _frozen_array(self.pf))
        object.__setattr__(self, "qf", _frozen_array(self.qf))
        object.__setattr__(self, "v", _frozen_array(self.v))
        if self.pf.shape != self.qf.shape:
            raise ValueError("pf and qf shapes differ: %s vs %s" % (self.pf.shape, self.qf.shape))
        if self.pf.ndim != 2 or self.v.ndim != 2:
            raise ValueError("state arrays must be 2-D (element, hour)")
        if self.v.shape[1] != self.pf.shape[1]:
            raise ValueError("v and pf horizon lengths differ")
        for name, arr in (("pf", self.pf), ("qf", self.qf), ("v", self.v)):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite values in state array %r" % name)
        if np.any(self.v <= 0):
            bad = np.argwhere(self.v <= 0)[0]
            raise ValueError(
                "squared voltage must be positive; v[%d, %d] = %g"
                % (bad[0], bad[1], self.v[bad[0], bad[1]])
            )

    @property
    def horizon(self) -> int:
        return self.pf.shape[1]

    def voltage_magnitude(self) -> np.ndarray:
        """Voltage magnitudes (pu), i.e. sqrt of the stored squared values."""
        return np.sqrt(self.v)


@dataclass(frozen=True)
class ViolationReport:
    """Signed constraint margins; positive means the constraint is violated.

    Families 1..4 are line-flow margins (pu), families 5..6 squared-voltage
    margins (pu^2). Units are intentionally left mixed, matching how the
    margins are defined.
    """

    phi: dict  # family k in 1..6 -> array (n_lines|n_nodes, horizon)
    worst_line_margin: float
    worst_node_margin: float

    def min_line_margin(self) -> float:
        return min(float(self.phi[k].min()) for k in (1, 2, 3, 4))

    def min_node_margin(self) -> float:
        return min(float(self.phi[k].min()) for k in (5, 6))

    def is_safe(self, tol: float = 0.0) -> bool:
        return self.worst_line_margin <= tol and self.worst_node_margin <= tol

    def worst_entries(self, limit: int = 5) -> list:
        """Largest margins as (family, element_pos, hour, value), sorted desc."""
        entries = []
        for k, arr in self.phi.items():
            for (e, t) in zip(*np.unravel_index(np.argsort(arr, axis=None)[::-1][:limit], arr.shape)):
                entries.append((k, int(e), int(t), float(arr[e, t])))
        entries.sort(key=lambda item: -item[3])
        return entries[:limit]


def case_violations(case: NetworkCase) -> list:
    """Check every structural invariant; return a complete list of failures."""
    problems = []

    ids = [n.id for n in case.nodes]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        problems.append("duplicate node ids: %s" % dupes)
    known = set(ids)

    if case.horizon_hours < 1:
        problems.append("horizon_hours must be >= 1, got %d" % case.horizon_hours)

    for n in case.nodes:
        if not (0 < n.v_min < n.v_max):
            problems.append(
                "node %s: need 0 < v_min < v_max, got [%g, %g]" % (n.id, n.v_min, n.v_max)
            )

    line_ids = [l.id for l in case.lines]
    if len(set(line_ids)) != len(line_ids):
        problems.append("duplicate line ids")
    for l in case.lines:
        if l.from_node == l.to_node:
            problems.append("line %s: from_node equals to_node (%s)" % (l.id, l.from_node))
        for end in (l.from_node, l.to_node):
            if end not in known:
                problems.append("line %s references unknown node %s" % (l.id, end))
        if l.r < 0 or l.x < 0:
            problems.append("line %s: negative impedance (r=%g, x=%g)" % (l.id, l.r, l.x))
        if l.pf_min > l.pf_max:
            problems.append("line %s: pf_min > pf_max" % l.id)
        if l.qf_min > l.qf_max:
            problems.append("line %s: qf_min > qf_max" % l.id)

    n_sub = sum(1 for g in case.generators if g.kind == "substation")
    if n_sub == 0:
        problems.append("no substation generator")
    elif n_sub > 1:
        problems.append("multiple substations (%d)" % n_sub)
    for gi, g in enumerate(case.generators):
        label = "generator[%d] at node %s" % (gi, g.node)
        if g.kind not in GeneratorKind:
            problems.append("%s: unknown kind %r" % (label, g.kind))
        if g.node not in known:
            problems.append("%s: unknown node" % label)
        if g.kind == "substation" and g.attackable:
            problems.append("%s: substation must not be attackable" % label)
        if g.p_min > g.p_max:
            problems.append("%s: p_min > p_max" % label)
        if g.q_min > g.q_max:
            problems.append("%s: q_min > q_max" % label)
        if g.p_max_profile is not None:
            if len(g.p_max_profile) != case.horizon_hours:
                problems.append(
                    "%s: p_max_profile has %d entries, horizon is %d"
                    % (label, len(g.p_max_profile), case.horizon_hours)
                )
            elif any(not np.isfinite(p) or p < g.p_min for p in g.p_max_profile):
                problems.append("%s: p_max_profile entries must be finite and >= p_min" % label)

    for si, s in enumerate(case.storage):
        label = "storage[%d] at node %s" % (si, s.node)
        if s.node not in known:
            problems.append("%s: unknown node" % label)
        if s.e_max <= 0:
            problems.append("%s: e_max must be positive" % label)
        if not (0 < s.eta_ch <= 1) or not (0 < s.eta_dis <= 1):
            problems.append("%s: efficiencies must lie in (0, 1]" % label)
        if not (0 <= s.p_ch_min <= s.p_ch_max):
            problems.append("%s: need 0 <= p_ch_min <= p_ch_max" % label)
        if not (0 <= s.p_dis_min <= s.p_dis_max):
            problems.append("%s: need 0 <= p_dis_min <= p_dis_max" % label)
        if not (0 <= s.soc_min <= s.soc_init <= s.soc_max <= 1):
            problems.append(
                "%s: need 0 <= soc_min <= soc_init <= soc_max <= 1, got [%g, %g, %g]"
                % (label, s.soc_min, s.soc_init, s.soc_max)
            )

    dem = case.demand
    want = (case.n_nodes, case.horizon_hours)
    for name, arr in (("p_d", dem.p_d), ("q_d", dem.q_d)):
        if arr.shape != want:
            problems.append("demand %s has shape %s, expected %s" % (name, arr.shape, want))
        elif not np.all(np.isfinite(arr)):
            problems.append("demand %s contains non-finite values" % name)

    # Radial topology: a tree needs exactly n-1 lines and full connectivity.
    if case.n_lines != case.n_nodes - 1:
        problems.append(
            "non-radial topology: %d lines for %d nodes (need n-1)"
            % (case.n_lines, case.n_nodes)
        )
    elif not problems:
        unreached = _unreachable_nodes(case)
        if unreached:
            problems.append(
                "disconnected/non-radial topology: nodes %s unreachable from the substation"
                % sorted(unreached)
            )

    return problems


def _unreachable_nodes(case: NetworkCase) -> set:
    """Node ids not reachable from the substation via breadth-first search."""
    adjacency = {n.id: [] for n in case.nodes}
    for l in case.lines:
        adjacency[l.from_node].append(l.to_node)
        adjacency[l.to_node].append(l.from_node)
    start = case.substation().node
    seen = {start}
    queue = deque([start])
    while queue:
        here = queue.popleft()
        for other in adjacency[here]:
            if other not in seen:
                seen.add(other)
                queue.append(other)
    return {n.id for n in case.nodes} - seen


def validate_case(case: NetworkCase) -> NetworkCase:
    """Return the case unchanged if every invariant holds.

    Raises CaseValidationError carrying the full list of failures otherwise.
    """
    problems = case_violations(case)
    if problems:
        raise CaseValidationError(problems)
    return case


def incidence(case: NetworkCase):
    """Line-by-node 0/1 incidence matrices (LF, TF).

    LF[l, i] = 1 iff line l originates at node i; TF[l, i] = 1 iff it
    terminates there. Every row of each matrix sums to exactly 1.
    """
    index = case.node_index()
    lf = np.zeros((case.n_lines, case.n_nodes), dtype=int)
    tf = np.zeros_like(lf)
    for li, line in enumerate(case.lines):
        lf[li, index[line.from_node]] = 1
        tf[li, index[line.to_node]] = 1
    lf.setflags(write=False)
    tf.setflags(write=False)
    return lf, tf


def constraint_margins(case: NetworkCase, state: SystemState) -> ViolationReport:
    """Evaluate the six margin families for every element and hour.

    phi1 = pf - pf_max      phi2 = pf_min - pf
    phi3 = qf - qf_max      phi4 = qf_min - qf
    phi5 = v - v_max^2      phi6 = v_min^2 - v
    """
    if state.pf.shape != (case.n_lines, case.horizon_hours):
        raise ValueError(
            "state flow shape %s does not match case (%d lines, %d hours)"
            % (state.pf.shape, case.n_lines, case.horizon_hours)
        )
    if state.v.shape != (case.n_nodes, case.horizon_hours):
        raise ValueError(
            "state voltage shape %s does not match case (%d nodes, %d hours)"
            % (state.v.shape, case.n_nodes, case.horizon_hours)
        )

    pf_max = np.array([l.pf_max for l in case.lines])[:, None]
    pf_min = np.array([l.pf_min for l in case.lines])[:, None]
    qf_max = np.array([l.qf_max for l in case.lines])[:, None]
    qf_min = np.array([l.qf_min for l in case.lines])[:, None]
    v_max2 = np.array([n.v_max**2 for n in case.nodes])[:, None]
    v_min2 = np.array([n.v_min**2 for n in case.nodes])[:, None]

    phi = {
        1: state.pf - pf_max,
        2: pf_min - state.pf,
        3: state.qf - qf_max,
        4: qf_min - state.qf,
        5: state.v - v_max2,
        6: v_min2 - state.v,
    }
    for arr in phi.values():
        arr.setflags(write=False)
    worst_line = max(float(phi[k].max()) for k in (1, 2, 3, 4))
    worst_node = max(float(phi[k].max()) for k in (5, 6))
    return ViolationReport(phi=phi, worst_line_margin=worst_line, worst_node_margin=worst_node)
