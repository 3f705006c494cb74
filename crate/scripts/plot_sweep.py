"""Plot a `coopflow experiment` CSV: mean heuristic, LB and UB against T, one panel per eta."""

import sys

import matplotlib.pyplot as plt
import pandas as pd


def main(path, out):
    rows = pd.read_csv(path)
    rows = rows[rows["status"] == "ok"]
    etas = sorted(rows["eta"].unique())
    fig, axes = plt.subplots(1, len(etas), figsize=(5 * len(etas), 4), squeeze=False)
    for ax, eta in zip(axes[0], etas):
        mean = rows[rows["eta"] == eta].groupby("T")[["lb", "ub", "heuristic"]].mean()
        for col, style in [("ub", "--"), ("heuristic", "-o"), ("lb", ":")]:
            ax.plot(mean.index, mean[col], style, label=col)
        ax.set_title(f"eta = {eta:g}")
        ax.set_xlabel("T")
        ax.set_ylabel("energy / theta")
        ax.set_yscale("log")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: plot_sweep.py sweep.csv out.png")
    main(sys.argv[1], sys.argv[2])
