"""Waterfall chart of per-step record counts."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .dsl import Script  # noqa: E402
from .engine import WaterfallStats, step_label  # noqa: E402


def plot_waterfall(stats: WaterfallStats, script: Script, path: Path) -> Path:
    """Render remaining-record bars with the matched share per step, as PNG."""
    labels = [f"{i + 1}. {step_label(script, i)}" for i in range(len(stats.steps))]
    labels.append("default")
    evaluated = [s.evaluated for s in stats.steps] + [stats.default_count]
    matched = [s.matched for s in stats.steps] + [stats.default_count]
    colors = [("tab:green" if st.action else "tab:red") for st in script.statements]
    colors.append("tab:green" if script.final_action else "tab:red")

    height = max(2.5, 0.38 * len(labels) + 1.2)
    fig, ax = plt.subplots(figsize=(9, height))
    y = range(len(labels))
    ax.barh(y, evaluated, color="lightgray", label="evaluated")
    ax.barh(y, matched, color=colors, label="matched")
    ax.set_yticks(list(y))
    ax.set_yticklabels([lab if len(lab) <= 48 else lab[:45] + "..." for lab in labels], fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("records")
    ax.set_title(f"{stats.total} records: {stats.accepted_total} accepted, {stats.rejected_total} rejected")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path
