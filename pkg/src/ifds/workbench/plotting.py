import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_cfg():
    plt.rcParams.update({
        "legend.fontsize": 8,
        "xtick.labelsize": 8,
        "ytick.labelsize": 8,
        "axes.labelsize": 9,
        "axes.titlesize": 9,
    })


def tidy_ax(ax):
    ax.grid(axis="y", linewidth=0.4, alpha=0.6)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)


def plot_bench(records, path, width=9.0):
    """Three panels: preprocessing time, mean pair time, mean source time, log scale."""
    plot_cfg()
    golden = (math.sqrt(5) - 1.0) / 2.0
    fig, axes = plt.subplots(1, 3, figsize=(width, width * golden / 1.8))
    names = [f"{r.algorithm}/{r.threads}" for r in records]
    panels = [
        ("preprocessing [ms]", [r.preprocess_ms for r in records]),
        ("pair query, mean [us]", [r.pair_mean_us for r in records]),
        ("source query, mean [us]", [r.source_mean_us for r in records]),
    ]
    colors = ["tab:red" if r.status != "ok" else "tab:blue" for r in records]
    for ax, (label, values) in zip(axes, panels):
        shown = [max(v, 1e-3) if v == v else 0 for v in values]
        ax.bar(names, shown, color=colors)
        ax.set_yscale("log")
        ax.set_title(label)
        ax.tick_params(axis="x", rotation=30)
        tidy_ax(ax)
    fig.suptitle(records[0].instance if records else "")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
