"""
Plot the curves written by ``mmhybrid run``
===========================================

Usage::

    mmhybrid run scenarios/example4.cfg
    python demos/plot_curves.py scenarios/results/example4

Every ``<curve>.csv`` in the directory becomes one line with a shaded
band of two standard errors. Energy-efficiency and timing curves go to
their own figures.
"""
import argparse
from pathlib import Path

import matplotlib.pyplot as plt

from mmhybrid.experiments import read_curve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("directory")
    ap.add_argument("--out", help="save figures here instead of showing them")
    args = ap.parse_args()
    d = Path(args.directory)
    groups = {"mi": [], "ee": [], "timing": []}
    for f in sorted(d.glob("*.csv")):
        if f.stem.startswith("timing"):
            groups["timing"].append(f)
        elif f.stem.endswith("_ee"):
            groups["ee"].append(f)
        elif f.stem != "cdf" and not f.stem.startswith("oracle"):
            groups["mi"].append(f)
    for kind, files in groups.items():
        if not files:
            continue
        fig, ax = plt.subplots()
        for f in files:
            rows = read_curve(f)
            ax.plot(rows[:, 0], rows[:, 1], marker="o", ms=3, label=f.stem)
            ax.fill_between(rows[:, 0], rows[:, 1] - 2 * rows[:, 2], rows[:, 1] + 2 * rows[:, 2],
                            alpha=0.2)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel({"mi": "bps/Hz", "ee": "bps/Hz/W", "timing": "seconds"}[kind])
        if kind == "timing":
            ax.set_yscale("log")
        ax.grid(alpha=0.3)
        ax.legend()
        ax.set_title(f"{d.name}: {kind}")
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            fig.savefig(Path(args.out) / f"{d.name}_{kind}.png", dpi=120)
    if not args.out:
        plt.show()


if __name__ == "__main__":
    main()
