"""Result serialization: CSV tables, run summary, and figure emission.

Five comma-separated tables with fixed headers carry the full scenario
(dispatch, attack, storage, state, violations), a plain-text summary
echoes the configuration and headline numbers, and four SVG figures
mirror the standard views: attack status, storage output with SOC,
per-stage voltage traces, and per-stage line flows. All files are written
deterministically; figures carry no timestamps.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .netmodel import constraint_margins
from .orchestrator import ScenarioResult

DISPATCH_HEADER = ["gen_node", "hour", "p_pu", "q_pu"]
ATTACK_HEADER = ["gen_node", "hour", "y"]
STORAGE_HEADER = ["ess_node", "hour", "p_ch_pu", "p_dis_pu", "soc"]
STATE_HEADER = ["stage", "element_kind", "element_id", "hour", "value_kind", "value"]
VIOLATIONS_HEADER = ["stage", "phi_family", "element_id", "hour", "phi_pu"]


def _fmt(x) -> str:
    return "%.10g" % float(x)


def _write_table(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _stage_states(result):
    out = []
    if result.dispatch is not None:
        out.append((1, result.dispatch.state))
    if result.attack is not None:
        out.append((2, result.attack.state))
    if result.mitigation is not None:
        out.append((3, result.mitigation.state))
    return out


def write_results(result: ScenarioResult, out_dir) -> list:
    """Emit all tables, the summary, and the figures; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    case = result.case
    written = []

    rows = []
    if result.dispatch is not None:
        for gi, g in enumerate(case.generators):
            for t in range(result.dispatch.p_g.shape[1]):
                rows.append([g.node, t + 1, _fmt(result.dispatch.p_g[gi, t]),
                             _fmt(result.dispatch.q_g[gi, t])])
    path = out_dir / "dispatch.csv"
    _write_table(path, DISPATCH_HEADER, rows)
    written.append(path)

    rows = []
    if result.attack is not None:
        for ai, gi in enumerate(result.attack.attackable_indices):
            node = case.generators[gi].node
            for t in range(result.attack.attack.y.shape[1]):
                rows.append([node, t + 1, _fmt(result.attack.attack.y[ai, t])])
    path = out_dir / "attack.csv"
    _write_table(path, ATTACK_HEADER, rows)
    written.append(path)

    rows = []
    if result.mitigation is not None:
        for ui, u in enumerate(case.storage):
            for t in range(result.mitigation.soc.shape[1]):
                rows.append([u.node, t + 1, _fmt(result.mitigation.p_ch[ui, t]),
                             _fmt(result.mitigation.p_dis[ui, t]),
                             _fmt(result.mitigation.soc[ui, t])])
    path = out_dir / "storage.csv"
    _write_table(path, STORAGE_HEADER, rows)
    written.append(path)

    rows = []
    for stage, state in _stage_states(result):
        for li, line in enumerate(case.lines):
            for t in range(state.horizon):
                rows.append([stage, "line", line.id, t + 1, "pf", _fmt(state.pf[li, t])])
                rows.append([stage, "line", line.id, t + 1, "qf", _fmt(state.qf[li, t])])
        for ni, node in enumerate(case.nodes):
            for t in range(state.horizon):
                rows.append([stage, "node", node.id, t + 1, "v", _fmt(state.v[ni, t])])
    path = out_dir / "state.csv"
    _write_table(path, STATE_HEADER, rows)
    written.append(path)

    rows = []
    for stage, state in _stage_states(result):
        report = constraint_margins(case, state) if state.horizon == case.horizon_hours else None
        if report is None:
            continue
        for fam in (1, 2, 3, 4):
            for li, line in enumerate(case.lines):
                for t in range(case.horizon_hours):
                    rows.append([stage, fam, line.id, t + 1, _fmt(report.phi[fam][li, t])])
        for fam in (5, 6):
            for ni, node in enumerate(case.nodes):
                for t in range(case.horizon_hours):
                    rows.append([stage, fam, node.id, t + 1, _fmt(report.phi[fam][ni, t])])
    path = out_dir / "violations.csv"
    _write_table(path, VIOLATIONS_HEADER, rows)
    written.append(path)

    path = out_dir / "summary.txt"
    path.write_text(_summary_text(result), encoding="utf-8")
    written.append(path)

    from .plots import write_figures

    written.extend(write_figures(result, out_dir))
    return written


def _summary_text(result: ScenarioResult) -> str:
    cfg = result.config
    case = result.case
    lines = []
    lines.append("scenario summary")
    lines.append("================")
    lines.append("case: %s (%d nodes, %d lines, %d generators, %d storage units, %d hours)"
                 % (case.name, case.n_nodes, case.n_lines, len(case.generators),
                    len(case.storage), case.horizon_hours))
    lines.append("config: k=%g mode=%s binary_attack=%s hard_limits=%s weights=(%g, %g)"
                 % (cfg.k, cfg.mode, cfg.binary_attack, cfg.hard_limits,
                    cfg.line_weight, cfg.node_weight))
    lines.append("status: %s" % ("completed" if result.completed
                                 else "FAILED at %s: %s" % (result.failed_stage, result.error)))
    if result.dispatch is not None:
        lines.append("")
        lines.append("stage 1 dispatch")
        lines.append("  total generation cost: %.4f $" % result.dispatch.total_cost)
        vmag = result.dispatch.state.voltage_magnitude()
        lines.append("  voltage magnitude range: %.4f .. %.4f pu" % (vmag.min(), vmag.max()))
    if result.attack is not None:
        a = result.attack
        lines.append("")
        lines.append("stage 2 worst-case attack")
        lines.append("  objective: %.4f" % a.objective_value)
        lines.append("  family-minimum margins (line, node): %.4f, %.4f"
                     % (a.inf_line_term, a.inf_node_term))
        lines.append("  worst margins (line, node): %.4f, %.4f pu"
                     % (a.violations.worst_line_margin, a.violations.worst_node_margin))
        lines.append("  lowest voltage: %.4f pu" % a.state.voltage_magnitude().min())
    if result.mitigation is not None:
        m = result.mitigation
        lines.append("")
        lines.append("stage 3 mitigation")
        lines.append("  objective: %.4f" % m.objective_value)
        lines.append("  worst margins after mitigation (line, node): %.6g, %.6g pu"
                     % (m.violations.worst_line_margin, m.violations.worst_node_margin))
        lines.append("  total discharge: %.4f pu, total charge: %.4f pu"
                     % (m.p_dis.sum(), m.p_ch.sum()))
        lines.append("  lowest voltage: %.4f pu" % m.state.voltage_magnitude().min())
    if result.timings:
        lines.append("")
        lines.append("wall-clock seconds per stage")
        for stage in sorted(result.timings):
            lines.append("  %s: %.3f" % (stage, result.timings[stage]))
    return "\n".join(lines) + "\n"
