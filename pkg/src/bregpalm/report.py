"""Figure rendering for suite outputs.

One PNG per metric: every run drawn as a thin line, colored by algorithm
label, with the stopping quantity and step size on a log axis. Uses the Agg
backend so suites can run headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_figures"]

# (record attribute, axis label, log-scale flag)
_PANELS = (
    ("objective", "objective L", False),
    ("benefit", "benefit H", False),
    ("ek", "stopping value E_k", True),
    ("delta", "step size delta_k", True),
)


def render_figures(runs, fig_dir, prefix: str) -> list[Path]:
    fig_dir = Path(fig_dir)
    fig_dir.mkdir(parents=True, exist_ok=True)
    labels = []
    for r in runs:
        if r.label not in labels:
            labels.append(r.label)
    cmap = plt.get_cmap("tab10")
    colors = {label: cmap(i % 10) for i, label in enumerate(labels)}

    paths = []
    for attr, axis_label, log_scale in _PANELS:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        seen = set()
        for r in runs:
            ks = [rec.k for rec in r.trace.records[1:]]
            values = [getattr(rec, attr) for rec in r.trace.records[1:]]
            if not ks:
                continue
            ax.plot(
                ks,
                values,
                color=colors[r.label],
                linewidth=0.9,
                alpha=0.8,
                label=r.label if r.label not in seen else None,
            )
            seen.add(r.label)
        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("iteration k")
        ax.set_ylabel(axis_label)
        if seen:
            ax.legend(fontsize=8)
        fig.tight_layout()
        path = fig_dir / f"{prefix}_{attr}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
