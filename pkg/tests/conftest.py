"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately avoid the library's own algorithms: conditional
optima come from a dense scan over scores, windowed bounds from literal
per-index max/min, adversarial risks from the definition, and optimal
sets from full enumeration.  Library results are compared against these.
"""

from __future__ import annotations

import numpy as np
import pytest

from advrisk import Grid, from_gaussian_mixture

SEED = 20260823

# dense score scan for conditional optima: [-10, 10] in 1e-4 steps plus
# the two infinite endpoints, since smallest minimizers may be infinite
_ALPHA_SCAN = np.concatenate(
    [[-np.inf], np.arange(-10.0, 10.0 + 1e-4 / 2, 1e-4), [np.inf]]
)


def oracle_conditional_optimum(loss, eta: float) -> tuple[float, float]:
    """(C*(eta), smallest minimizing alpha) by dense scan.

    Trusts only the raw loss curve phi; applies the 0 * inf = 0
    convention directly.
    """
    phi_pos = np.asarray(loss(_ALPHA_SCAN), dtype=float)
    phi_neg = np.asarray(loss(-_ALPHA_SCAN), dtype=float)
    with np.errstate(invalid="ignore"):
        term1 = eta * phi_pos
        term2 = (1.0 - eta) * phi_neg
    term1 = np.where(np.isnan(term1), 0.0, term1)
    term2 = np.where(np.isnan(term2), 0.0, term2)
    values = term1 + term2
    best = float(np.min(values))
    # smallest alpha whose value ties the optimum within scan resolution
    ties = np.nonzero(values <= best + 1e-9)[0]
    return best, float(_ALPHA_SCAN[ties[0]])


def oracle_window_max(values: np.ndarray, k: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    n = len(v)
    return np.array([np.max(v[max(0, i - k) : min(n, i + k + 1)]) for i in range(n)])


def oracle_window_min(values: np.ndarray, k: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    n = len(v)
    return np.array([np.min(v[max(0, i - k) : min(n, i + k + 1)]) for i in range(n)])


def oracle_adversarial_risk(grid: Grid, mask: np.ndarray, k: int) -> float:
    """Risk under k-cell attacks, straight from the definition."""
    mask = np.asarray(mask, dtype=bool)
    n = grid.n
    total = 0.0
    for i in range(n):
        window = slice(max(0, i - k), min(n, i + k + 1))
        if np.any(~mask[window]):  # some reachable cell decides -1
            total += grid.m1[i]
        if np.any(mask[window]):  # some reachable cell decides +1
            total += grid.m0[i]
    return total


def oracle_minimal_adversarial_risk(grid: Grid, k: int) -> float:
    """Exact optimum by enumerating all 2^n sets (tiny n only)."""
    best = np.inf
    for bits in range(1 << grid.n):
        mask = np.array([(bits >> i) & 1 for i in range(grid.n)], dtype=bool)
        best = min(best, oracle_adversarial_risk(grid, mask, k))
    return best


def random_small_grid(rng: np.random.Generator, n_max: int = 12) -> Grid:
    """A small grid with unit spacing, some zeroed cells, both classes massed."""
    n = int(rng.integers(3, n_max + 1))
    m0 = rng.random(n)
    m1 = rng.random(n)
    m0[rng.random(n) < 0.3] = 0.0
    m1[rng.random(n) < 0.3] = 0.0
    if m0.sum() <= 0.0:
        m0[int(rng.integers(n))] = 0.5 + rng.random()
    if m1.sum() <= 0.0:
        m1[int(rng.integers(n))] = 0.5 + rng.random()
    return Grid(x0=0.0, h=1.0, n=n, m0=m0, m1=m1)


@pytest.fixture(scope="session")
def coarse_equal() -> Grid:
    """Two unit Gaussians two apart, h = 0.05: fast stand-in for the
    production fixture."""
    return from_gaussian_mixture(0.0, 1.0, 0.5, 2.0, 1.0, 0.5, span_sigmas=6.0, h=0.05)


@pytest.fixture(scope="session")
def coarse_unequal() -> Grid:
    """Same center, sigma 1 vs 2, h = 0.05."""
    return from_gaussian_mixture(0.0, 1.0, 0.5, 0.0, 2.0, 0.5, span_sigmas=6.0, h=0.05)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)
