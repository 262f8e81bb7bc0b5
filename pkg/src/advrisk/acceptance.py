"""Built-in acceptance suite: nine end-to-end checks at desk scale.

Each criterion exercises the full pipeline on small Gaussian fixtures
(h = 0.01, span 6 sigma) or random micro-grids and returns a
:class:`CriterionResult` instead of raising, so the whole suite always
reports.  `advrisk reproduce` and the test suite both drive
:func:`run_all`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .conlab import ExperimentConfig, run_consistency_experiment
from .duality import check_uniqueness, dual_classification_max
from .grid import Grid, from_gaussian_mixture, snap_radius
from .losses import (
    built_in_losses,
    conditional_risk_values,
    alpha_values,
    get_loss,
    optimal_conditional_risk,
    uniform_gap,
)
from .risks import exhaustive_minimal_risk, minimize_adversarial_risk

__all__ = ["CriterionResult", "run_all", "criterion_numbers", "DEFAULT_SEED"]

DEFAULT_SEED = 20260823
H = 0.01
_SPAN = 6.0
_INF = float("inf")


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    details: str


@lru_cache(maxsize=None)
def _grid(fixture: str) -> Grid:
    if fixture == "equal":
        return from_gaussian_mixture(0.0, 1.0, 0.5, 2.0, 1.0, 0.5, span_sigmas=_SPAN, h=H)
    if fixture == "unequal":
        return from_gaussian_mixture(0.0, 1.0, 0.5, 0.0, 2.0, 0.5, span_sigmas=_SPAN, h=H)
    raise ValueError(fixture)


@lru_cache(maxsize=None)
def _experiment(fixture: str, eps: float, loss_name: str):
    g = _grid(fixture)
    return run_consistency_experiment(g, snap_radius(g, eps), get_loss(loss_name), ExperimentConfig())


def _c1_duality_gap() -> tuple[bool, str]:
    parts = []
    ok = True
    for fixture, eps in (("equal", 0.5), ("equal", 1.5), ("unequal", 1.0)):
        g = _grid(fixture)
        r = snap_radius(g, eps)
        started = time.perf_counter()
        _, primal = minimize_adversarial_risk(g, r)
        dual = dual_classification_max(g, r)
        elapsed = time.perf_counter() - started
        gap = abs(primal.value - dual.value)
        good = gap <= 4.0 * H + 1e-6 and elapsed < 10.0
        ok &= good
        parts.append(f"{fixture} eps={eps:g}: gap={gap:.2e} in {elapsed:.1f}s")
    return ok, "; ".join(parts)


def _c2_phase_boundary() -> tuple[bool, str]:
    g = _grid("equal")
    parts = []
    ok = True
    for eps in (0.6, 0.8, 0.9, 1.1, 1.2, 1.4):
        dual = dual_classification_max(g, snap_radius(g, eps))
        verdict = check_uniqueness(dual).verdict
        want = "unique" if eps < 1.0 else "not_unique"
        ok &= verdict == want
        parts.append(f"eps={eps:g}: {verdict}")
    return ok, "; ".join(parts)


def _c3_unequal_unique() -> tuple[bool, str]:
    g = _grid("unequal")
    parts = []
    ok = True
    for eps in (0.25, 0.5, 1.0, 2.0):
        dual = dual_classification_max(g, snap_radius(g, eps))
        verdict = check_uniqueness(dual).verdict
        ok &= verdict == "unique"
        parts.append(f"eps={eps:g}: {verdict}")
    return ok, "; ".join(parts)


def _c4_witness() -> tuple[bool, str]:
    rep = _experiment("equal", 1.5, "hinge")
    mass = _grid("equal").total_mass
    sur_gap = rep.surrogate_trace[-1] - rep.dual_value
    adv = np.array(rep.adv_risk_trace)
    spread = float(adv.max() - adv.min())
    risk_gap = float(adv.min() - 0.5)
    ok = (
        rep.verdict == "inconsistency_witnessed"
        and sur_gap <= 1e-3 * mass
        and spread <= 1e-9
        and risk_gap >= 0.01
    )
    return ok, (
        f"verdict={rep.verdict}, surrogate gap={sur_gap:.2e}, "
        f"risk excess={risk_gap:.4f}, trace spread={spread:.1e}"
    )


def _c5_unique_consistent() -> tuple[bool, str]:
    rep = _experiment("equal", 0.5, "hinge")
    final = abs(rep.adv_risk_trace[-1] - rep.bayes_adv_risk)
    ok = rep.verdict == "consistent_behavior" and final <= 4.0 * H
    return ok, f"verdict={rep.verdict}, final risk offset={final:.2e}"


def _c6_rho_universal() -> tuple[bool, str]:
    rho = get_loss("rho_margin")
    c_half = optimal_conditional_risk(rho, 0.5).c_star
    phi0 = rho.value_at_zero
    verdicts = [_experiment("equal", eps, "rho_margin").verdict for eps in (0.5, 1.5)]
    ok = (
        all(v == "consistent_behavior" for v in verdicts)
        and abs(c_half - 0.5) <= 1e-9
        and abs(phi0 - 1.0) <= 1e-9
    )
    return ok, f"verdicts={verdicts}, C*(1/2)={c_half!r}, phi(0)={phi0!r}"


def _c7_oracle(seed: int) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_dual = -_INF
    for trial in range(50):
        n = int(rng.integers(4, 19))
        k = int(rng.integers(0, 4))
        m0 = rng.random(n)
        m1 = rng.random(n)
        m0[rng.random(n) < 0.25] = 0.0
        m1[rng.random(n) < 0.25] = 0.0
        if m0.sum() <= 0.0:
            m0[int(rng.integers(n))] = 0.5 + rng.random()
        if m1.sum() <= 0.0:
            m1[int(rng.integers(n))] = 0.5 + rng.random()
        g = Grid(x0=0.0, h=1.0, n=n, m0=m0, m1=m1)
        r = snap_radius(g, float(k))
        _, primal = minimize_adversarial_risk(g, r)
        _, brute = exhaustive_minimal_risk(g, r)
        if primal.value != brute.value:
            return False, (
                f"trial {trial} (n={n}, k={k}): DP {primal.value!r} != "
                f"enumeration {brute.value!r}"
            )
        dual = dual_classification_max(g, r)
        # equality-attaining cases can land an ulp above the primal
        slack = dual.value - primal.value
        worst_dual = max(worst_dual, slack)
        if slack > 1e-12 * (1.0 + g.total_mass):
            return False, f"trial {trial} (n={n}, k={k}): dual exceeds primal by {slack:.2e}"
    return True, f"50 grids: DP == enumeration exactly; worst dual-primal slack {worst_dual:.1e}"


def _c8_loss_calculus() -> tuple[bool, str]:
    mesh = np.linspace(0.0, 1.0, 201)
    # the complement identity is exact whenever 1 - eta is itself exact,
    # so it is checked on a dyadic mesh
    dyadic = np.arange(257) / 256.0
    alphas = [-_INF, -8.0, -1.0, -0.5, 0.0, 0.5, 1.0, 8.0, _INF]
    problems = []
    for loss in built_in_losses():
        a = alpha_values(loss, mesh)
        if not np.all(a[:-1] <= a[1:]):
            problems.append(f"{loss.name}: minimizer map not non-decreasing")
        for alpha in alphas:
            lhs = conditional_risk_values(loss, dyadic, np.full_like(dyadic, alpha))
            rhs = conditional_risk_values(loss, 1.0 - dyadic, np.full_like(dyadic, -alpha))
            if not np.array_equal(lhs, rhs):
                problems.append(f"{loss.name}: complement identity broken at alpha={alpha:g}")
                break
    gaps = []
    for name in ("hinge", "exponential"):
        for rr in (0.1, 0.25):
            _, k_r = uniform_gap(get_loss(name), rr)
            gaps.append(f"{name} r={rr:g}: k_r={k_r:.3e}")
            if not k_r > 0.0:
                problems.append(f"{name} r={rr:g}: k_r={k_r!r} not positive")
    if problems:
        return False, "; ".join(problems)
    return True, "monotone + symmetric on all built-ins; " + "; ".join(gaps)


def _c9_threshold_trace() -> tuple[bool, str]:
    rep = _experiment("equal", 0.5, "exponential")
    trace = np.array(rep.extras["threshold_trace"])
    limit = float(rep.extras["threshold_limit"])
    monotone = bool(np.all(trace[1:] <= trace[:-1] + 1e-12))
    above = bool(np.all(trace >= limit - 1e-9))
    final = abs(float(trace[-1]) - limit)
    ok = monotone and above and final <= 1e-6
    return ok, (
        f"monotone={monotone}, stays above limit={above}, final deviation={final:.1e}, "
        f"verdict={rep.verdict}"
    )


_CRITERIA = (
    (1, "duality_gap", lambda seed: _c1_duality_gap()),
    (2, "uniqueness_phase_boundary", lambda seed: _c2_phase_boundary()),
    (3, "unequal_variance_uniqueness", lambda seed: _c3_unequal_unique()),
    (4, "inconsistency_witness", lambda seed: _c4_witness()),
    (5, "unique_regime_consistency", lambda seed: _c5_unique_consistent()),
    (6, "rho_margin_universal", lambda seed: _c6_rho_universal()),
    (7, "oracle_equivalence", _c7_oracle),
    (8, "loss_calculus", lambda seed: _c8_loss_calculus()),
    (9, "threshold_convergence", lambda seed: _c9_threshold_trace()),
)


def criterion_numbers() -> tuple[int, ...]:
    return tuple(number for number, _, _ in _CRITERIA)


def run_all(only=None, seed: int = DEFAULT_SEED) -> list[CriterionResult]:
    results = []
    for number, name, fn in _CRITERIA:
        if only is not None and number not in only:
            continue
        started = time.perf_counter()
        try:
            passed, details = fn(seed)
        except Exception as exc:  # a crashed criterion is a failed criterion
            passed, details = False, f"{type(exc).__name__}: {exc}"
        results.append(
            CriterionResult(
                number=number,
                name=name,
                passed=passed,
                seconds=time.perf_counter() - started,
                details=details,
            )
        )
    return results
