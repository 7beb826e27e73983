"""Figure rendering for CLI report outputs.

Every CSV-producing command renders a companion PNG next to the CSV
(same stem).  Matplotlib runs headless (Agg); rendering is deterministic
for fixed inputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def figure_path(csv_path: str) -> str:
    return (csv_path[:-4] if csv_path.endswith(".csv") else csv_path) + ".png"


def sample_figure(rows, path: str, title: str = "sampling estimate") -> str:
    """Cumulative mean with a +/-3 SE band over run index."""
    xs = [r[0] + 1 for r in rows]
    means = [r[2] for r in rows]
    ses = [r[3] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(xs, means, color="tab:blue", label="cumulative mean")
    ax.fill_between(
        xs,
        [m - 3 * s for m, s in zip(means, ses)],
        [m + 3 * s for m, s in zip(means, ses)],
        color="tab:blue",
        alpha=0.2,
        label="±3 SE",
    )
    ax.set_xlabel("runs")
    ax.set_ylabel("estimate")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def learning_curve_figure(rows, path: str, title: str = "learning curve") -> str:
    """Episode reward (with a moving average) and epsilon on a twin axis."""
    xs = [r[0] for r in rows]
    rewards = [r[1] for r in rows]
    eps = [r[2] for r in rows]
    window = max(1, len(rows) // 50)
    smooth = [
        sum(rewards[max(0, i - window + 1) : i + 1])
        / len(rewards[max(0, i - window + 1) : i + 1])
        for i in range(len(rewards))
    ]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(xs, rewards, color="tab:blue", alpha=0.25, label="episode reward")
    ax.plot(xs, smooth, color="tab:blue", label=f"moving avg (w={window})")
    ax.set_xlabel("episode")
    ax.set_ylabel("cumulative reward")
    ax2 = ax.twinx()
    ax2.plot(xs, eps, color="tab:orange", linestyle="--", label="epsilon")
    ax2.set_ylabel("epsilon")
    ax.set_title(title)
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def bench_figure(labels, values, path: str, ylabel: str, title: str) -> str:
    """One bar per benchmark row."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(labels)), values, color="tab:green")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
