"""Render run figures from the delimited artifacts a run directory holds."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_run"]


def _read_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    return header, rows


def _metrics_figure(path, out_png):
    _, rows = _read_csv(path)
    t = np.array([int(r[0]) for r in rows])
    err = np.array([float(r[1]) for r in rows])
    sim = np.array([float(r[2]) for r in rows])
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    axes[0].semilogy(t, np.maximum(err, 1e-16), lw=1.2)
    axes[0].set_xlabel("frame")
    axes[0].set_ylabel("NMSE")
    axes[0].grid(True, alpha=0.3)
    axes[1].plot(t, sim, lw=1.2, color="tab:orange")
    axes[1].set_xlabel("frame")
    axes[1].set_ylabel("SSIM")
    axes[1].set_ylim(-0.05, 1.05)
    axes[1].grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def _mask_figure(path, out_png):
    _, rows = _read_csv(path)
    pts = [(int(r[0]), int(r[1])) for r in rows if int(r[1]) >= 0]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    if pts:
        t, i = zip(*pts)
        ax.scatter(t, i, s=1.5, marker="s", color="k", alpha=0.6)
    ax.set_xlabel("frame")
    ax.set_ylabel("sampled line")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def _trace_figure(path, out_png):
    _, rows = _read_csv(path)
    t = np.array([int(r[0]) for r in rows])
    cost = np.array([float(r[1]) for r in rows])
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.semilogy(t, np.maximum(cost, 1e-16), lw=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("instantaneous cost")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def _budget_figure(path, out_png):
    _, rows = _read_csv(path)
    t = np.array([int(r[0]) for r in rows])
    size = np.array([float(r[2]) for r in rows])
    expected = np.array([float(r[3]) for r in rows])
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(t, size, lw=1.0, label="acquired")
    ax.plot(t, expected, lw=1.0, ls="--", label="expected")
    ax.set_xlabel("frame")
    ax.set_ylabel("samples")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)


def render_run(run_dir) -> list[str]:
    """Render PNG figures next to the CSVs of a finished run directory."""
    jobs = [
        ("metrics.csv", "metrics.png", _metrics_figure),
        ("mask.csv", "mask.png", _mask_figure),
        ("trace.csv", "trace.png", _trace_figure),
        ("budget.csv", "budget.png", _budget_figure),
    ]
    written = []
    for src, dst, fn in jobs:
        src_path = os.path.join(run_dir, src)
        if os.path.exists(src_path):
            dst_path = os.path.join(run_dir, dst)
            fn(src_path, dst_path)
            written.append(dst_path)
    return written
