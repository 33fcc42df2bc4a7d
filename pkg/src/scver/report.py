"""Figures for CLI reports (written as PNG files next to the JSON output)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_META = {"Software": None}


def _numeric(values):
    """Plot positions for a column of rendered values; labels for the axis."""
    if all(isinstance(v, bool) for v in values):
        return [int(v) for v in values], {0: "false", 1: "true"}
    if all(isinstance(v, int) for v in values):
        return list(values), None
    labels = sorted({str(v) for v in values})
    pos = {v: k for k, v in enumerate(labels)}
    return [pos[str(v)] for v in values], dict(enumerate(labels))


def waveform(steps, path, title="", loop_start=None):
    """Step plot of every observed name along a run (one row per name)."""
    names = sorted(steps[0]["observations"]) if steps else []
    rows = max(len(names), 1)
    fig, axes = plt.subplots(rows, 1, figsize=(8, 0.7 * rows + 1.2), sharex=True, squeeze=False)
    xs = list(range(len(steps)))
    for ax, name in zip(axes[:, 0], names):
        ys, labels = _numeric([s["observations"][name] for s in steps])
        ax.step(xs, ys, where="post", color="tab:blue", lw=1.4)
        ax.set_ylabel(name, rotation=0, ha="right", va="center", fontsize=8)
        if labels:
            ticks = sorted(labels)
            ax.set_yticks(ticks)
            ax.set_yticklabels([labels[t] for t in ticks], fontsize=7)
        lo, hi = min(ys), max(ys)
        ax.set_ylim(lo - 0.3, hi + 0.3)
        if loop_start is not None:
            ax.axvspan(loop_start, len(steps) - 1, color="tab:orange", alpha=0.15)
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
    bottom = axes[-1, 0]
    times = [s["time"] for s in steps]
    if steps:
        marks = [k for k in xs if k == 0 or times[k] != times[k - 1]]
        bottom.set_xticks(marks)
        bottom.set_xticklabels([f"t={times[k]}" for k in marks], fontsize=7)
    bottom.set_xlabel("step (labelled at time advances)")
    if title:
        axes[0, 0].set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def stats_bars(stats, path, title=""):
    keys = sorted(stats)
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(keys, [stats[k] for k in keys], color="tab:gray")
    ax.set_ylabel("count")
    ax.tick_params(axis="x", labelsize=7, rotation=20)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def coverage_bars(suite, path, title=""):
    """Covered vs uncovered goals per goal kind of a test suite (JSON)."""
    kinds = ["stmt", "toggle"]
    covered = {k: 0 for k in kinds}
    missed = {k: 0 for k in kinds}
    for t in suite["tests"]:
        covered[t["goal"].split(":")[0]] += 1
    for u in suite["uncovered"]:
        missed[u["goal"].split(":")[0]] += 1
    fig, ax = plt.subplots(figsize=(4.5, 3))
    xs = range(len(kinds))
    ax.bar(xs, [covered[k] for k in kinds], color="tab:green", label="covered")
    ax.bar(xs, [missed[k] for k in kinds], bottom=[covered[k] for k in kinds],
           color="tab:red", label="uncovered")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(["statements", "toggles"])
    ax.set_ylabel("goals")
    ax.legend(frameon=False, fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path
