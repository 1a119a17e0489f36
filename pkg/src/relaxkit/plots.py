"""Figure rendering for report runs.

Every function writes one PNG next to the delimited output and returns the
path.  The backend is forced to Agg so rendering works headless; figures are
diagnostic companions, the CSV files remain the data of record.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finite_mask(vals) -> np.ndarray:
    return np.isfinite(np.asarray(vals, dtype=float))


def plot_envelope_curves(path, axis, curves: dict, xlabel: str, title: str) -> str:
    """Overlay value curves over one grid axis; +inf samples are dropped."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    axis = np.asarray(axis, dtype=float)
    for label, vals in curves.items():
        vals = np.asarray(vals, dtype=float)
        keep = _finite_mask(vals)
        ax.plot(axis[keep], vals[keep], label=label, lw=1.4)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_depth_history(path, depths, values, profile, title: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    keep = _finite_mask(values)
    d = np.asarray(depths)
    ax.plot(d[keep], np.asarray(values)[keep], "o-", label="family sum")
    keep = _finite_mask(profile)
    ax.plot(d[keep], np.asarray(profile)[keep], "s--", label="running max")
    ax.set_xlabel("partition depth")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_t_profile(path, t_seq, values, title: str, ylabel: str = "value") -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    t = np.asarray(t_seq, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = _finite_mask(v)
    ax.plot(1.0 - t[keep], v[keep], "o-")
    ax.set_xscale("log")
    ax.set_xlabel("1 - t")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_density_ratios(path, records, title: str) -> str:
    """Ratio-versus-scale curves for a batch of density records."""
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for rec in records:
        eps = np.asarray(rec.eps, dtype=float)
        ratios = np.asarray(rec.ratios, dtype=float)
        keep = _finite_mask(ratios)
        lbl = "(" + ", ".join(f"{c:.3g}" for c in rec.x) + ")"
        ax.plot(eps[keep], ratios[keep], "o-", ms=3, lw=1, label=lbl)
    ax.set_xscale("log")
    ax.set_xlabel("cube side")
    ax.set_ylabel("m(Q) / |Q|")
    ax.set_title(title)
    if len(records) <= 10:
        ax.legend(fontsize=7)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_modulus(path, t_seq, deltas, title: str, fitted_K: float = None) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    one_minus = 1.0 - np.asarray(t_seq, dtype=float)
    v = np.asarray(deltas, dtype=float)
    keep = _finite_mask(v)
    ax.plot(one_minus[keep], v[keep], "o", label="sampled modulus")
    if fitted_K is not None and math.isfinite(fitted_K):
        xs = np.linspace(0.0, one_minus.max() * 1.05, 50)
        ax.plot(xs, fitted_K * xs, "--", label=f"K (1 - t), K = {fitted_K:.3g}")
    ax.set_xlabel("1 - t")
    ax.set_ylabel("modulus")
    ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)
