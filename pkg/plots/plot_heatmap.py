#!/usr/bin/env python3
"""Render a cooling-factor heatmap from a sweep CSV.

Usage: plot_heatmap.py sweep.csv out.png

Expects the columns g,gamma_cool,nbar_ss,f,status and a complete
rectangular (g, gamma_cool) grid.  Cells with status other than "ok" are
drawn masked.  Color is log10(f) clipped to [0, 5]; axes are log-log.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REFERENCE_POINT = (4e4, 2e4)
COLUMNS = ("g", "gamma_cool", "nbar_ss", "f", "status")


def load_grid(path):
    """CSV -> (g values, gamma_cool values, factor array, mask array)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        missing = [c for c in COLUMNS if c not in names]
        if missing:
            sys.exit(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        sys.exit(f"{path}: no data rows")

    # exact duplicates collapse (degenerate single-point sweeps)
    unique = {}
    for row in rows:
        key = (row["g"], row["gamma_cool"])
        if key in unique and unique[key] != row:
            sys.exit(f"{path}: conflicting rows for g={key[0]}, "
                     f"gamma_cool={key[1]}")
        unique[key] = row
    rows = list(unique.values())

    g_values = sorted({float(r["g"]) for r in rows})
    cool_values = sorted({float(r["gamma_cool"]) for r in rows})
    if len(rows) != len(g_values) * len(cool_values):
        sys.exit(f"{path}: grid is not rectangular "
                 f"({len(rows)} rows for {len(g_values)}x{len(cool_values)})")

    g_index = {v: i for i, v in enumerate(g_values)}
    cool_index = {v: i for i, v in enumerate(cool_values)}
    factor = np.full((len(g_values), len(cool_values)), np.nan)
    mask = np.zeros(factor.shape, dtype=bool)
    for r in rows:
        i = g_index[float(r["g"])]
        j = cool_index[float(r["gamma_cool"])]
        if r["status"] == "ok":
            factor[i, j] = float(r["f"])
        else:
            mask[i, j] = True
    return (np.asarray(g_values), np.asarray(cool_values), factor, mask)


def _edges(values):
    """Cell edges around grid values: geometric when all positive, else
    linear (axis scale follows suit)."""
    if (values > 0).all():
        log_v = np.log10(values)
        pad = 0.05 if len(values) == 1 else 0.5 * np.diff(log_v).mean()
        inner = 0.5 * (log_v[1:] + log_v[:-1])
        edges = np.concatenate(([log_v[0] - pad], inner, [log_v[-1] + pad]))
        return 10.0 ** edges, "log"
    pad = (0.05 * (abs(values[0]) + 1.0) if len(values) == 1
           else 0.5 * np.diff(values).mean())
    inner = 0.5 * (values[1:] + values[:-1])
    return np.concatenate(([values[0] - pad], inner,
                           [values[-1] + pad])), "linear"


def render(g_values, cool_values, factor, mask, out_path):
    color = np.log10(np.where(factor > 0, factor, np.nan))
    color = np.clip(color, 0.0, 5.0)
    color = np.ma.masked_invalid(np.ma.masked_array(color, mask=mask))

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("lightgrey")
    g_edges, g_scale = _edges(g_values)
    cool_edges, cool_scale = _edges(cool_values)
    mesh = ax.pcolormesh(g_edges, cool_edges, color.T, cmap=cmap,
                         vmin=0.0, vmax=5.0, shading="flat")
    ax.set_xscale(g_scale)
    ax.set_yscale(cool_scale)
    ax.set_xlabel("g (rad/s)")
    ax.set_ylabel("gamma_cool (rad/s)")
    fig.colorbar(mesh, ax=ax, label="log10 f")

    gx, gy = REFERENCE_POINT
    ax.plot([gx], [gy], marker="o", color="white", markeredgecolor="black",
            clip_on=True)
    ax.annotate("f≈1e4", xy=(gx, gy), xytext=(1.15 * gx, 1.15 * gy),
                color="white", annotation_clip=True)

    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_in")
    parser.add_argument("image_out")
    args = parser.parse_args(argv)
    render(*load_grid(args.csv_in), args.image_out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
