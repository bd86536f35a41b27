"""Static SVG figures for a completed scenario.

Four families: attack status per attackable DG, storage output with SOC,
per-stage voltage magnitudes against their 0.9/1.1 pu style bounds, and
per-stage line flows against their rating. Figure functions return the
matplotlib Figure so tests can inspect the artists; writers strip date
metadata for byte-stable output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "triopf"


def _hours(n):
    return np.arange(1, n + 1)


def attack_status_figure(result):
    case = result.case
    a = result.attack
    fig, ax = plt.subplots(figsize=(7, 3.2))
    for ai, gi in enumerate(a.attackable_indices):
        node = case.generators[gi].node
        ax.step(_hours(a.attack.y.shape[1]), a.attack.y[ai], where="mid",
                label="node %s" % node)
    ax.set_xlabel("hour")
    ax.set_ylabel("attack fraction y")
    ax.set_ylim(-0.05, 1.1)
    ax.set_title("attack status over time (k = %g)" % a.attack.budget_k)
    ax.legend(loc="upper right", fontsize=8, ncol=2)
    fig.tight_layout()
    return fig


def storage_figure(result):
    case = result.case
    m = result.mitigation
    T = m.soc.shape[1]
    fig, ax = plt.subplots(figsize=(7, 3.4))
    width = 0.8 / max(len(case.storage), 1)
    for ui, u in enumerate(case.storage):
        ax.bar(_hours(T) + (ui - len(case.storage) / 2) * width, m.p_ess[ui],
               width=width, label="node %s" % u.node)
    ax.set_xlabel("hour")
    ax.set_ylabel("storage output (pu, discharge > 0)")
    ax2 = ax.twinx()
    for ui, u in enumerate(case.storage):
        ax2.plot(_hours(T), m.soc[ui], linewidth=1.2, linestyle="--")
    ax2.set_ylabel("state of charge")
    ax2.set_ylim(0, 1)
    ax.set_title("storage output and state of charge")
    ax.legend(loc="upper right", fontsize=7, ncol=3)
    fig.tight_layout()
    return fig


def voltage_figure(result):
    case = result.case
    stages = [("stage 1", result.dispatch), ("stage 2", result.attack),
              ("stage 3", result.mitigation)]
    stages = [(name, s) for name, s in stages if s is not None]
    fig, axes = plt.subplots(1, len(stages), figsize=(3.2 * len(stages), 3.2),
                             sharey=True, squeeze=False)
    v_min = min(n.v_min for n in case.nodes)
    v_max = max(n.v_max for n in case.nodes)
    for ax, (name, stage) in zip(axes[0], stages):
        vmag = stage.state.voltage_magnitude()
        for ni in range(case.n_nodes):
            ax.plot(_hours(vmag.shape[1]), vmag[ni], linewidth=0.6, color="tab:blue",
                    alpha=0.45)
        ax.axhline(v_min, color="gray", linestyle=":", linewidth=1.4)
        ax.axhline(v_max, color="gray", linestyle=":", linewidth=1.4)
        ax.set_title(name, fontsize=10)
        ax.set_xlabel("hour")
    axes[0][0].set_ylabel("voltage magnitude (pu)")
    fig.suptitle("node voltages by stage (bounds %.1f / %.1f pu)" % (v_min, v_max))
    fig.tight_layout()
    return fig


def flow_figure(result):
    case = result.case
    stages = [("stage 1", result.dispatch), ("stage 2", result.attack),
              ("stage 3", result.mitigation)]
    stages = [(name, s) for name, s in stages if s is not None]
    fig, axes = plt.subplots(1, len(stages), figsize=(3.2 * len(stages), 3.2),
                             sharey=True, squeeze=False)
    cap_lo = min(l.pf_min for l in case.lines)
    cap_hi = max(l.pf_max for l in case.lines)
    for ax, (name, stage) in zip(axes[0], stages):
        for li in range(case.n_lines):
            ax.plot(_hours(stage.state.pf.shape[1]), stage.state.pf[li],
                    linewidth=0.6, color="tab:green", alpha=0.45)
        ax.axhline(cap_lo, color="gray", linestyle=":", linewidth=1.4)
        ax.axhline(cap_hi, color="gray", linestyle=":", linewidth=1.4)
        ax.set_title(name, fontsize=10)
        ax.set_xlabel("hour")
    axes[0][0].set_ylabel("active line flow (pu)")
    fig.suptitle("line flows by stage (bounds %g / %g pu)" % (cap_lo, cap_hi))
    fig.tight_layout()
    return fig


def write_figures(result, out_dir) -> list:
    """Emit every figure whose stage data exists; returns written paths."""
    out_dir = Path(out_dir)
    written = []
    specs = []
    if result.attack is not None:
        specs.append(("attack_status.svg", attack_status_figure))
    if result.mitigation is not None and result.case.storage:
        specs.append(("storage.svg", storage_figure))
    if result.dispatch is not None:
        specs.append(("voltages.svg", voltage_figure))
        specs.append(("flows.svg", flow_figure))
    for name, build in specs:
        fig = build(result)
        path = out_dir / name
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
