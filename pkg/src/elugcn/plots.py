"""Matplotlib renderings written next to the delimited report files."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_partition_bars(report, path):
    """Set-proportion and per-set-accuracy bars from a partition report."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    counts = [report["n_elu"], report["n_nelu"], report["n_nosig"]]
    ax1.bar(["ELU", "NELU", "NOSIG"], counts, color=["#4878d0", "#ee854a", "#999999"])
    ax1.set_ylabel("nodes")
    ax1.set_title("partition sizes")
    accs = [report["acc_elu"], report["acc_nelu"]]
    shown = [(name, a) for name, a in zip(["ELU", "NELU"], accs) if a is not None]
    if shown:
        ax2.bar([s[0] for s in shown], [s[1] for s in shown], color=["#4878d0", "#ee854a"][: len(shown)])
    ax2.set_ylim(0, 1)
    ax2.set_ylabel("test accuracy")
    ax2.set_title("accuracy by set")
    _finish(fig, path)


def save_loss_curves(epochs, path, title="training"):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    xs = np.arange(1, len(epochs) + 1)
    ax1.plot(xs, [e["train_loss"] for e in epochs], label="train")
    ax1.plot(xs, [e["val_loss"] for e in epochs], label="val")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("cross entropy")
    ax1.set_title(f"{title}: loss")
    ax1.legend()
    ax2.plot(xs, [e["train_acc"] for e in epochs], label="train")
    ax2.plot(xs, [e["val_acc"] for e in epochs], label="val")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("accuracy")
    ax2.set_title(f"{title}: accuracy")
    ax2.legend()
    _finish(fig, path)


def save_gap_curves(series_by_label, path):
    """Per-epoch |val - train| loss for one or more runs."""
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    for label, series in series_by_label.items():
        ax.plot(np.arange(1, len(series) + 1), series, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel("|val loss - train loss|")
    ax.set_title("loss gap")
    ax.legend()
    _finish(fig, path)


def save_heatmap(matrix, path, boundaries=None):
    """Absolute-weight heatmap of a (reordered) graph matrix."""
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    im = ax.imshow(np.abs(matrix), cmap="viridis", interpolation="nearest")
    if boundaries is not None:
        for b in boundaries[:-1]:
            ax.axhline(b - 0.5, color="white", linewidth=0.4)
            ax.axvline(b - 0.5, color="white", linewidth=0.4)
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title("graph weights by class blocks")
    _finish(fig, path)


def save_bench_curves(rows, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ns = [r["n"] for r in rows]
    ax.loglog(ns, [r["t_step_s"] for r in rows], "o-", label="update step")
    ax.loglog(ns, [r["t_assembly_s"] for r in rows], "s-", label="assembly")
    ax.set_xlabel("nodes")
    ax.set_ylabel("seconds")
    ax.set_title("runtime scaling")
    ax.legend()
    _finish(fig, path)
