"""Diagnostic figures for losses, solutions, and experiment traces.

Everything renders through the Agg backend with a fixed hash salt and no
embedded timestamps, so identical inputs produce byte-identical SVG.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "advrisk"

from matplotlib import pyplot as plt  # noqa: E402  (backend must be set first)

from .grid import Grid
from .losses import Loss, alpha_tilde_values, alpha_values, c_star_values

__all__ = ["save_figure", "plot_loss_curve", "plot_solution", "plot_consistency_traces"]

_ETA_POINTS = 401
_ALPHA_VIEW = 3.0  # minimizer curves are clipped to this window for display


def save_figure(fig, path, description: str | None = None) -> str:
    path = str(path)
    if path.endswith(".svg"):
        metadata = {"Date": None}
        if description:
            metadata["Description"] = description
        fig.savefig(path, metadata=metadata)
    else:
        fig.savefig(path)
    plt.close(fig)
    return path


def plot_loss_curve(loss: Loss, path, description: str | None = None) -> str:
    """Loss geometry: the margin profile next to the conditional optimum."""
    fig, (ax_phi, ax_eta) = plt.subplots(1, 2, figsize=(9.0, 3.6))

    m = np.linspace(-2.5, 2.5, 501)
    ax_phi.plot(m, loss(m), color="tab:blue", label=loss.name)
    ax_phi.step(m, (m <= 0).astype(float), color="0.4", lw=1.0, label="0-1 indicator")
    ax_phi.set_xlabel("margin")
    ax_phi.set_ylabel("loss")
    ax_phi.set_ylim(-0.1, max(2.6, float(np.nanmax(np.clip(loss(m), None, 6.0))) + 0.1))
    ax_phi.legend(loc="upper right", fontsize=8)

    eta = np.linspace(0.0, 1.0, _ETA_POINTS)
    ax_eta.plot(eta, c_star_values(loss, eta), color="tab:red", label="C*")
    a = np.clip(alpha_values(loss, eta), -_ALPHA_VIEW, _ALPHA_VIEW)
    at = np.clip(alpha_tilde_values(loss, eta), -_ALPHA_VIEW, _ALPHA_VIEW)
    ax_a = ax_eta.twinx()
    ax_a.plot(eta, a, color="tab:green", lw=1.0, label="alpha")
    ax_a.plot(eta, at, color="tab:olive", lw=1.0, ls="--", label="alpha (pinned)")
    ax_a.set_ylabel("minimizer (clipped)")
    ax_eta.set_xlabel("eta")
    ax_eta.set_ylabel("conditional optimum")
    lines = ax_eta.get_lines() + ax_a.get_lines()
    ax_eta.legend(lines, [ln.get_label() for ln in lines], loc="lower center", fontsize=8)
    fig.suptitle(loss.name)
    fig.tight_layout()
    return save_figure(fig, path, description)


def plot_solution(grid: Grid, dual, cset, path, description: str | None = None) -> str:
    """Masses and posteriors with the minimizing set shaded."""
    x = grid.centers
    fig, (ax_m, ax_eta) = plt.subplots(2, 1, figsize=(7.2, 5.4), sharex=True)

    ax_m.plot(x, grid.m0, color="tab:blue", lw=1.0, label="m0")
    ax_m.plot(x, grid.m1, color="tab:red", lw=1.0, label="m1")
    ax_m.plot(x, dual.m0_star, color="tab:blue", lw=1.0, ls="--", label="m0 moved")
    ax_m.plot(x, dual.m1_star, color="tab:red", lw=1.0, ls="--", label="m1 moved")
    ax_m.set_ylabel("cell mass")
    ax_m.legend(loc="upper right", fontsize=8, ncol=2)

    from .grid import posterior  # local import keeps module load light

    ax_eta.plot(x, posterior(grid).values, color="0.4", lw=1.0, label="eta")
    ax_eta.plot(x, dual.eta_star.values, color="tab:purple", lw=1.2, label="eta moved")
    ax_eta.axhline(0.5, color="0.8", lw=0.8)
    lo, hi = x[0] - 0.5 * grid.h, x[-1] + 0.5 * grid.h
    for a, b in cset.intervals:
        ax_eta.axvspan(max(a, lo), min(b, hi), color="tab:green", alpha=0.15, lw=0)
    ax_eta.set_xlabel("x")
    ax_eta.set_ylabel("posterior")
    ax_eta.set_ylim(-0.05, 1.05)
    ax_eta.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    return save_figure(fig, path, description)


def plot_consistency_traces(report, path, description: str | None = None) -> str:
    """Surrogate and risk traces against their target values."""
    fig, (ax_s, ax_r) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ns = list(report.n_values)

    if report.surrogate_trace:
        ax_s.plot(ns, report.surrogate_trace, "o-", color="tab:blue", ms=3)
    ax_s.axhline(report.dual_value, color="0.4", ls="--", lw=1.0, label="dual bound")
    ax_s.set_xscale("log", base=2)
    ax_s.set_xlabel("n")
    ax_s.set_ylabel("adversarial surrogate risk")
    ax_s.legend(loc="best", fontsize=8)

    if report.adv_risk_trace:
        ax_r.plot(ns, report.adv_risk_trace, "o-", color="tab:red", ms=3)
    ax_r.axhline(report.bayes_adv_risk, color="0.4", ls="--", lw=1.0, label="primal minimum")
    ax_r.set_xscale("log", base=2)
    ax_r.set_xlabel("n")
    ax_r.set_ylabel("adversarial risk of decided set")
    ax_r.legend(loc="best", fontsize=8)

    fig.suptitle(report.verdict)
    fig.tight_layout()
    return save_figure(fig, path, description)
