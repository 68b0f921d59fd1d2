#!/usr/bin/env python3
"""Plot occupation traces from an evolve CSV (columns t,n_at,n_m).

Usage: plot_trace.py trace.csv out.png [--rate-gamma G --rate-nbar N]

With both rate flags the single-rate relaxation
n(t) = nbar + (n0 - nbar) exp(-gamma t) is overlaid on the membrane
trace, where n0 is the first trace sample; the maximum relative gap is
annotated on the plot and printed to stdout.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

COLUMNS = ("t", "n_at", "n_m")


def load_trace(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        missing = [c for c in COLUMNS if c not in names]
        if missing:
            sys.exit(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        sys.exit(f"{path}: no data rows")
    data = {c: np.array([float(r[c]) for r in rows]) for c in COLUMNS}
    return data["t"], data["n_at"], data["n_m"]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_in")
    parser.add_argument("image_out")
    parser.add_argument("--rate-gamma", type=float, default=None,
                        help="relaxation rate for the overlay (rad/s)")
    parser.add_argument("--rate-nbar", type=float, default=None,
                        help="asymptotic occupation for the overlay")
    args = parser.parse_args(argv)

    t, n_at, n_m = load_trace(args.csv_in)

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.semilogy(t, n_m, label="membrane", color="tab:blue")
    ax.semilogy(t, n_at, label="atoms", color="tab:orange")

    overlay = (args.rate_gamma is not None) and (args.rate_nbar is not None)
    if overlay:
        model = args.rate_nbar + (n_m[0] - args.rate_nbar) * np.exp(
            -args.rate_gamma * t)
        ax.semilogy(t, model, "--", color="black", label="rate equation")
        gap = float(np.max(np.abs(model - n_m) / n_m))
        ax.annotate(f"max gap {gap:.1%}", xy=(0.55, 0.9),
                    xycoords="axes fraction")
        print(f"max gap {gap:.6f}")

    ax.set_xlabel("t (s)")
    ax.set_ylabel("occupation")
    ax.legend()
    fig.savefig(args.image_out, dpi=150)
    plt.close(fig)
    return 0


if __name__ == "__main__":
    sys.exit(main())
