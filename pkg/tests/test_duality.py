import warnings

import numpy as np
import pytest
from scipy.optimize import linprog

from advrisk import (
    AdvRiskWarning,
    ClassifierSet,
    Grid,
    adversarial_risk,
    certify_complementary_slackness,
    check_uniqueness,
    dual_classification_max,
    dual_surrogate_ascent,
    dual_surrogate_value,
    exhaustive_minimal_risk,
    extremal_classifiers,
    get_loss,
    minimize_adversarial_risk,
    snap_radius,
)
from advrisk.duality import _pool_snap
from advrisk.losses import c_star_values

from conftest import random_small_grid


def solve_quiet(grid, r, **kw):
    """Degenerate tiny LPs rattle the cone solver; the projected answer
    is still exact, so the inaccuracy warning is noise here."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return dual_classification_max(grid, r, **kw)


def lp_band_maximum(grid: Grid, k: int) -> float:
    """Independent oracle: max sum min(a, b) over the band polytope as a
    plain LP (variables a, b, t with t <= a, t <= b)."""
    n = grid.n
    F0, F1 = np.cumsum(grid.m0), np.cumsum(grid.m1)
    idx = np.arange(n)
    lo0 = np.where(idx - k >= 0, F0[np.clip(idx - k, 0, n - 1)], 0.0)
    hi0 = F0[np.clip(idx + k, 0, n - 1)]
    lo1 = np.where(idx - k >= 0, F1[np.clip(idx - k, 0, n - 1)], 0.0)
    hi1 = F1[np.clip(idx + k, 0, n - 1)]
    L = np.tril(np.ones((n, n)))
    Z = np.zeros((n, n))
    eye = np.eye(n)
    c = np.concatenate([np.zeros(2 * n), -np.ones(n)])
    A_ub = np.block(
        [[L, Z, Z], [-L, Z, Z], [Z, L, Z], [Z, -L, Z], [-eye, Z, eye], [Z, -eye, eye]]
    )
    b_ub = np.concatenate([hi0, -lo0, hi1, -lo1, np.zeros(2 * n)])
    A_eq = np.block(
        [[np.ones(n), np.zeros(n), np.zeros(n)], [np.zeros(n), np.ones(n), np.zeros(n)]]
    )
    b_eq = np.array([F0[-1], F1[-1]])
    bounds = [(0, None)] * (2 * n) + [(None, None)] * n
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return -res.fun


def two_atoms(d: int, n: int = 9) -> Grid:
    m0 = np.zeros(n)
    m1 = np.zeros(n)
    m0[2] = 1.0
    m1[2 + d] = 1.0
    return Grid(x0=0.0, h=1.0, n=n, m0=m0, m1=m1)


# ---------------------------------------------------------------------------
# the distinguished maximizer

@pytest.mark.parametrize("d,k,want", [(2, 1, 1.0), (3, 1, 0.0), (4, 2, 1.0), (5, 2, 0.0)])
def test_two_atom_collision(d, k, want):
    # unit atoms can be matched iff their distance is at most 2 eps
    g = two_atoms(d)
    dual = solve_quiet(g, snap_radius(g, float(k)))
    assert dual.value == pytest.approx(want, abs=1e-9)
    _, prim = minimize_adversarial_risk(g, snap_radius(g, float(k)))
    assert prim.value == pytest.approx(want, abs=1e-12)


def test_matches_lp_oracle_on_random_grids(rng):
    # the affinity maximizer must also maximize sum min(a, b): its value
    # has to agree with the straight LP optimum
    for _ in range(10):
        g = random_small_grid(rng)
        k = int(rng.integers(0, 4))
        dual = solve_quiet(g, snap_radius(g, float(k)))
        assert dual.value == pytest.approx(lp_band_maximum(g, k), abs=1e-6)


def test_weak_duality_on_random_grids(rng):
    for _ in range(10):
        g = random_small_grid(rng)
        k = int(rng.integers(0, 4))
        r = snap_radius(g, float(k))
        dual = solve_quiet(g, r)
        _, prim = exhaustive_minimal_risk(g, r)
        assert dual.value <= prim.value + 1e-9
        # and the bound holds against arbitrary sets, not just the optimum
        for _ in range(10):
            mask = rng.random(g.n) < 0.5
            assert dual.value <= adversarial_risk(ClassifierSet.from_mask(g, mask), r).value + 1e-9


def test_couplings_conserve_mass(coarse_equal):
    g = coarse_equal
    r = snap_radius(g, 0.5)
    dual = dual_classification_max(g, r)
    for coupling, src, dst in ((dual.gamma0, g.m0, dual.m0_star), (dual.gamma1, g.m1, dual.m1_star)):
        assert coupling.k == r.k
        np.testing.assert_allclose(coupling.row_sums, src, atol=1e-9)
        np.testing.assert_allclose(coupling.col_sums, dst, atol=1e-9)
        assert coupling.max_displacement() <= r.k


def test_full_pool_branch(coarse_equal):
    g = coarse_equal
    dual = dual_classification_max(g, snap_radius(g, 1.5))
    assert dual.diagnostics["full_pool"] is True
    s0, s1 = float(np.sum(g.m0)), float(np.sum(g.m1))
    assert dual.value == pytest.approx(min(s0, s1), abs=1e-9)
    assert dual.diagnostics["affinity"] == pytest.approx(2.0 * np.sqrt(s0 * s1), abs=1e-9)
    carried = ~dual.degenerate
    assert np.allclose(dual.eta_star.values[carried], s1 / (s0 + s1), atol=1e-9)


def test_solver_branch_agrees_with_shortcut(coarse_equal):
    # at eps just past the pooling threshold both routes must coincide
    g = coarse_equal
    r = snap_radius(g, 1.1)
    dual = dual_classification_max(g, r)
    assert dual.diagnostics["full_pool"] is True
    assert dual.value == pytest.approx(lp_band_maximum(g, r.k), abs=1e-6)


def test_pool_snap_levels_solver_noise():
    # two massed cells whose ratios differ by solver-sized jitter inside
    # a wide band get reassigned one exact common ratio
    a = np.array([0.30002, 0.29998])
    b = np.array([0.19998, 0.20002])
    wide_lo = np.zeros(2)
    wide_hi = np.full(2, 2.0)
    a2, b2, snapped = _pool_snap(
        a.copy(), b.copy(), wide_lo, wide_hi, wide_lo, wide_hi, floor=1e-9
    )
    assert snapped == 1
    ratios = b2 / (a2 + b2)
    assert ratios[0] == ratios[1]
    assert a2.sum() + b2.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(a2 + b2, a + b, atol=1e-12)


def test_pool_snap_respects_bands():
    # same jitter, but bands too tight to allow the reassignment
    a = np.array([0.30002, 0.29998])
    b = np.array([0.19998, 0.20002])
    cum_a = np.cumsum(a)
    cum_b = np.cumsum(b)
    a2, b2, snapped = _pool_snap(a.copy(), b.copy(), cum_a, cum_a, cum_b, cum_b, floor=1e-9)
    assert snapped == 0
    np.testing.assert_array_equal(a2, a)


# ---------------------------------------------------------------------------
# uniqueness and extremal classifiers

def test_uniqueness_verdicts(coarse_equal):
    g = coarse_equal
    assert check_uniqueness(dual_classification_max(g, snap_radius(g, 0.5))).verdict == "unique"
    pooled = dual_classification_max(g, snap_radius(g, 1.5))
    assert check_uniqueness(pooled).verdict == "not_unique"
    # with an artificially inflated mass tolerance the band mass falls
    # between the two thresholds and the test must refuse to decide
    forced = check_uniqueness(pooled, mass_tol=g.total_mass / 5.0)
    assert forced.verdict == "ambiguous"
    assert forced.agrees is None


def test_uniqueness_cross_check_agrees(coarse_equal, coarse_unequal):
    for g, eps in ((coarse_equal, 0.5), (coarse_equal, 1.5), (coarse_unequal, 1.0)):
        verdict = check_uniqueness(solve_quiet(g, snap_radius(g, eps)))
        assert verdict.agrees is True, (eps, verdict.verdict)


def test_extremal_classifiers_unique_regime(coarse_equal):
    g = coarse_equal
    r = snap_radius(g, 0.5)
    ext = extremal_classifiers(dual_classification_max(g, r), r)
    assert np.array_equal(ext.a_min.mask, ext.a_max.mask)
    (lo, hi), = ext.a_min.intervals
    assert hi == np.inf and lo == pytest.approx(1.0, abs=g.h)
    assert ext.cert_min.passed and ext.cert_max.passed


def test_extremal_classifiers_pooled_regime(coarse_equal):
    g = coarse_equal
    r = snap_radius(g, 1.5)
    ext = extremal_classifiers(dual_classification_max(g, r), r)
    assert ext.a_min.n_intervals == 0  # essentially nothing
    assert ext.a_max.intervals == ((-np.inf, np.inf),)  # essentially everything
    assert ext.cert_min.passed and ext.cert_max.passed


def test_degenerate_cells_get_posterior_half():
    # two blobs far apart with a dead zone wider than the transport range
    n = 31
    m0 = np.zeros(n)
    m1 = np.zeros(n)
    m0[3:7] = 1.0
    m1[24:28] = 1.0
    g = Grid(x0=0.0, h=1.0, n=n, m0=m0, m1=m1)
    dual = solve_quiet(g, snap_radius(g, 2.0))
    assert dual.value == pytest.approx(0.0, abs=1e-9)
    dead = dual.degenerate
    assert dead[12:18].all()  # the middle carries nothing
    assert not dead[4] and not dead[25]
    assert np.all(dual.eta_star.values[dead] == 0.5)
    assert np.all(dual.eta_star.values[4:6] == pytest.approx(0.0, abs=1e-9))
    assert np.all(dual.eta_star.values[25:27] == pytest.approx(1.0, abs=1e-9))


# ---------------------------------------------------------------------------
# certification

def test_certification_accepts_optimum_and_rejects_junk(coarse_equal):
    g = coarse_equal
    r = snap_radius(g, 0.5)
    cset, _ = minimize_adversarial_risk(g, r)
    dual = dual_classification_max(g, r)
    good = certify_complementary_slackness(cset, dual, r)
    assert good.passed

    # decision boundary on the wrong side: large sign-mismatch mass
    wrong = ClassifierSet.from_intervals(g, [(-1.0, np.inf)])
    bad = certify_complementary_slackness(wrong, dual, r)
    assert not bad.passed
    # a misplaced boundary shows up as a large pointwise deficit away
    # from the collar; the aggregate gate is O(h) and stays loose here
    assert not bad.conditions["sign_mismatch_worst"]["ok"]


def test_certification_report_shape(coarse_equal):
    g = coarse_equal
    r = snap_radius(g, 0.5)
    cset, _ = minimize_adversarial_risk(g, r)
    rep = certify_complementary_slackness(cset, dual_classification_max(g, r), r)
    for key in (
        "push_gap_p1",
        "push_gap_p0",
        "sign_mismatch_mass",
        "sign_mismatch_worst",
        "sign_mismatch_collar_worst",
    ):
        assert key in rep.conditions
        assert "value" in rep.conditions[key]


# ---------------------------------------------------------------------------
# surrogate values on the moved pair

def test_dual_surrogate_value_hand_computed():
    # one pooled cell: a = b = 1/2 at the same site
    g = two_atoms(2)
    dual = solve_quiet(g, snap_radius(g, 1.0))
    hinge = get_loss("hinge")
    got = dual_surrogate_value(dual, hinge)
    a, b = dual.m0_star, dual.m1_star
    tot = a + b
    live = tot > 0
    want = float(np.sum(tot[live] * c_star_values(hinge, b[live] / tot[live])))
    assert got == pytest.approx(want, abs=1e-12)
    # fully pooled at ratio 1/2: value is total * C*(1/2) = 2 * 1
    assert got == pytest.approx(2.0, abs=1e-6)


def test_ascent_reaches_the_distinguished_value(coarse_equal):
    g = coarse_equal
    r = snap_radius(g, 0.5)
    dual = dual_classification_max(g, r)
    for name, quality in (("hinge", 1e-6), ("exponential", 2e-2)):
        loss = get_loss(name)
        ref = dual_surrogate_value(dual, loss)
        asc = dual_surrogate_ascent(g, r, loss, iters=400, step=0.5)
        assert asc.objective_kind == f"surrogate:{name}"
        # the distinguished solution maximizes every pushed surrogate,
        # so ascent can approach ref but never clear it
        assert asc.value <= ref + 1e-9
        assert asc.value >= ref - quality * g.total_mass
        np.testing.assert_allclose(asc.gamma0.row_sums, g.m0, atol=1e-9)
        np.testing.assert_allclose(asc.gamma1.row_sums, g.m1, atol=1e-9)


def test_solution_serializes(coarse_equal):
    import json

    g = coarse_equal
    dual = dual_classification_max(g, snap_radius(g, 0.5))
    payload = dual.to_dict()
    text = json.dumps(payload, sort_keys=True)
    assert "value" in payload and "eta_star" in text
