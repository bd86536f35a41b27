"""Shared LP assembly pieces for the three stage models.

All three stages carry the same network-state variables (per-line active
and reactive flow, per-node squared voltage) coupled by the same
voltage-drop equalities, and the attack/mitigation stages share the margin
epigraph rows. Stages differ only in nodal injections and objectives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lpcore import LinearProgram
from .netmodel import NetworkCase, SystemState

INF = math.inf


class StageInfeasibleError(RuntimeError):
    """A stage model came back without an optimal solution."""

    def __init__(self, stage, status, message):
        self.stage = stage
        self.status = status
        super().__init__("%s %s: %s" % (stage, status, message))


@dataclass
class StateIndex:
    """Variable ids of the network-state block inside one stage LP."""

    pf: np.ndarray  # (n_lines, T)
    qf: np.ndarray
    v: np.ndarray  # (n_nodes, T)


def add_state_variables(lp: LinearProgram, case: NetworkCase, boxed: bool) -> StateIndex:
    """Add pf/qf/v variables for every hour.

    boxed=True applies the line-flow and voltage boxes as hard bounds (the
    base dispatch); boxed=False leaves them free so margin variables can
    measure excursions. The substation's squared voltage is pinned to 1.0
    either way, making the voltage profile well-defined.
    """
    T = case.horizon_hours
    sub_node = case.substation().node
    pf = np.empty((case.n_lines, T), dtype=int)
    qf = np.empty_like(pf)
    v = np.empty((case.n_nodes, T), dtype=int)
    for li, line in enumerate(case.lines):
        for t in range(T):
            if boxed:
                pf[li, t] = lp.add_variable("pf[%s,%d]" % (line.id, t), line.pf_min, line.pf_max)
                qf[li, t] = lp.add_variable("qf[%s,%d]" % (line.id, t), line.qf_min, line.qf_max)
            else:
                pf[li, t] = lp.add_variable("pf[%s,%d]" % (line.id, t), -INF, INF)
                qf[li, t] = lp.add_variable("qf[%s,%d]" % (line.id, t), -INF, INF)
    for ni, node in enumerate(case.nodes):
        for t in range(T):
            if node.id == sub_node:
                lo = hi = 1.0
            elif boxed:
                lo, hi = node.v_min**2, node.v_max**2
            else:
                lo, hi = -INF, INF
            v[ni, t] = lp.add_variable("v[%s,%d]" % (node.id, t), lo, hi)
    return StateIndex(pf=pf, qf=qf, v=v)


def add_voltage_drop_rows(lp: LinearProgram, case: NetworkCase, idx: StateIndex):
    """v_from - v_to = 2 (r pf + x qf) on every line and hour."""
    pos = case.node_index()
    for li, line in enumerate(case.lines):
        fi, ti = pos[line.from_node], pos[line.to_node]
        for t in range(case.horizon_hours):
            lp.add_constraint(
                {
                    idx.v[fi, t]: 1.0,
                    idx.v[ti, t]: -1.0,
                    idx.pf[li, t]: -2.0 * line.r,
                    idx.qf[li, t]: -2.0 * line.x,
                },
                "=",
                0.0,
                "vdrop[%s,%d]" % (line.id, t),
            )


def flow_terms(case: NetworkCase):
    """Per node position, the signed flow coefficients of its balance row:
    +1 for lines terminating at the node (inflow), -1 for lines leaving it."""
    pos = case.node_index()
    terms = [[] for _ in range(case.n_nodes)]
    for li, line in enumerate(case.lines):
        terms[pos[line.from_node]].append((li, -1.0))
        terms[pos[line.to_node]].append((li, 1.0))
    return terms


def add_margin_epigraph_rows(lp, case, idx, var_line, var_node, bound_kind):
    """Couple an epigraph variable to every margin.

    bound_kind="lower": var <= every margin (its optimum is the family
    minimum, used when maximizing). bound_kind="upper": var >= every margin
    (the family maximum, used when minimizing).
    """
    sgn = 1.0 if bound_kind == "lower" else -1.0
    T = case.horizon_hours
    for li, line in enumerate(case.lines):
        for t in range(T):
            lp.add_constraint({var_line: sgn, idx.pf[li, t]: -sgn}, "<=", -sgn * line.pf_max,
                              "phi1[%s,%d]" % (line.id, t))
            lp.add_constraint({var_line: sgn, idx.pf[li, t]: sgn}, "<=", sgn * line.pf_min,
                              "phi2[%s,%d]" % (line.id, t))
            lp.add_constraint({var_line: sgn, idx.qf[li, t]: -sgn}, "<=", -sgn * line.qf_max,
                              "phi3[%s,%d]" % (line.id, t))
            lp.add_constraint({var_line: sgn, idx.qf[li, t]: sgn}, "<=", sgn * line.qf_min,
                              "phi4[%s,%d]" % (line.id, t))
    for ni, node in enumerate(case.nodes):
        for t in range(T):
            lp.add_constraint({var_node: sgn, idx.v[ni, t]: -sgn}, "<=", -sgn * node.v_max**2,
                              "phi5[%s,%d]" % (node.id, t))
            lp.add_constraint({var_node: sgn, idx.v[ni, t]: sgn}, "<=", sgn * node.v_min**2,
                              "phi6[%s,%d]" % (node.id, t))


def extract_state(case: NetworkCase, values, idx: StateIndex) -> SystemState:
    values = np.asarray(values)
    return SystemState(pf=values[idx.pf], qf=values[idx.qf], v=values[idx.v])
