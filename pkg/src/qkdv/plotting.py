"""Figures for the CLI reports.

Rendering uses the Agg backend with PNG metadata stripped, so a rerun with
the same inputs writes byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_METADATA = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=100, metadata=_METADATA)
    plt.close(fig)
    return path


def plot_diagnostics(traj, path) -> Path:
    t = np.asarray(traj.times)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    m, h = traj.series("mass"), traj.series("hamiltonian")
    axes[0].plot(t, m - m[0])
    axes[0].set_title("mass - mass(0)")
    axes[1].plot(t, h - h[0])
    axes[1].set_title("H - H(0)")
    for k in range(5):
        axes[2].semilogy(t, np.maximum(traj.series(f"h{k}"), 1e-300), label=f"H^{k}")
    axes[2].set_title("Sobolev norms")
    axes[2].legend(fontsize=7)
    for ax in axes:
        ax.set_xlabel("t")
    fig.tight_layout()
    return _save(fig, path)


def plot_snapshots(traj, path, count: int = 6) -> Path:
    idx = np.unique(np.linspace(0, len(traj.states) - 1, min(count, len(traj.states))).astype(int))
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in idx:
        st = traj.states[i]
        ax.plot(st.x, st.values, lw=1, label=f"t={traj.times[i]:.3g}")
    ax.set_xlabel("x")
    ax.set_ylabel("v")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep(result, path) -> Path:
    etas = [pr.eps ** result.beta for pr in result.pairs]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for p in range(result.q + 1):
        diffs = [pr.diffs[p] for pr in result.pairs]
        axes[0].loglog(etas, diffs, "o-", label=f"p={p}")
        axes[1].loglog(etas, result.ratios[p], "o-", label=f"p={p}")
    axes[0].set_title("sup_t ||d^p (v_eps - v_delta)||")
    axes[1].set_title("diff / eta^(q-p)")
    for ax in axes:
        ax.set_xlabel("eta(eps)")
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_continuity(result, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(result.deltas_in, result.deltas_out, "o-", label="out")
    ax.loglog(result.deltas_in, result.deltas_in, "k--", lw=0.8, label="out = in")
    ax.set_xlabel(f"||v0^n - v0||_H^{result.s}")
    ax.set_ylabel(f"sup_t ||v^n - v||_H^{result.s}")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_soliton(report, path) -> Path:
    tr = report.trajectory
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(tr.final.x, tr.final.values, label="computed")
    axes[0].plot(report.exact_final.x, report.exact_final.values, "--", label="exact")
    axes[0].set_title(f"t = {tr.times[-1]:g}")
    axes[0].legend(fontsize=7)
    axes[1].semilogy(tr.final.x, np.maximum(np.abs(tr.final.values - report.exact_final.values), 1e-300))
    axes[1].set_title("pointwise error")
    fig.tight_layout()
    return _save(fig, path)


def plot_gauge_weights(rows, path) -> Path:
    """Bar chart of monomial counts per weight; rows are (k, name, weight, count)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [f"{name}{k}:w{w}" for k, name, w, _ in rows]
    ax.bar(range(len(rows)), [c for *_, c in rows])
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel("monomials")
    fig.tight_layout()
    return _save(fig, path)
