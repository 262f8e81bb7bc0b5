import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advrisk import (
    DomainError,
    Grid,
    GridFunction,
    from_gaussian_mixture,
    inf_window,
    posterior,
    read_grid_csv,
    read_grid_json,
    same_lattice,
    sliding_max,
    sliding_min,
    snap_radius,
    sup_window,
    write_grid_csv,
    write_grid_json,
)

from conftest import oracle_window_max, oracle_window_min


def small_grid():
    return Grid(
        x0=0.0,
        h=1.0,
        n=5,
        m0=np.array([0.2, 0.0, 0.1, 0.0, 0.0]),
        m1=np.array([0.0, 0.0, 0.1, 0.0, 0.6]),
    )


# ---------------------------------------------------------------------------
# construction and validation

def test_grid_centers_and_mass():
    g = small_grid()
    assert np.allclose(g.centers, [0.5, 1.5, 2.5, 3.5, 4.5])
    assert g.total_mass == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kw",
    [
        dict(h=0.0),
        dict(h=-1.0),
        dict(n=0),
        dict(m0=np.array([0.1, -0.2, 0.0, 0.0, 0.0])),
        dict(m1=np.array([0.1, np.nan, 0.0, 0.0, 0.0])),
        dict(m0=np.array([0.1, 0.2])),
    ],
)
def test_grid_rejects_bad_input(kw):
    base = dict(
        x0=0.0, h=1.0, n=5, m0=np.zeros(5) + 0.1, m1=np.zeros(5) + 0.1
    )
    base.update(kw)
    with pytest.raises(DomainError):
        Grid(**base)


def test_grid_arrays_are_read_only():
    g = small_grid()
    with pytest.raises(ValueError):
        g.m0[0] = 9.0


def test_same_lattice():
    g = small_grid()
    assert same_lattice(g, small_grid())
    shifted = Grid(x0=0.5, h=1.0, n=5, m0=g.m0.copy(), m1=g.m1.copy())
    assert not same_lattice(g, shifted)


def test_snap_radius():
    g = Grid(x0=0.0, h=0.05, n=4, m0=np.ones(4), m1=np.ones(4))
    assert snap_radius(g, 0.104).k == 2
    assert snap_radius(g, 0.0).k == 0
    assert snap_radius(g, 0.5).snapped_eps == pytest.approx(0.5)
    with pytest.raises(DomainError):
        snap_radius(g, -0.1)
    with pytest.raises(DomainError):
        snap_radius(g, float("inf"))


# ---------------------------------------------------------------------------
# sliding windows

def test_sliding_window_example():
    v = np.array([0.0, 1.0, 0.0, 0.0, 2.0])
    assert sliding_max(v, 1).tolist() == [1.0, 1.0, 1.0, 2.0, 2.0]
    assert sliding_min(v, 1).tolist() == [0.0, 0.0, 0.0, 0.0, 0.0]
    assert sliding_max(v, 0).tolist() == v.tolist()
    assert sliding_max(v, 10).tolist() == [2.0] * 5


@given(
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40),
    st.integers(0, 12),
)
@settings(max_examples=120)
def test_sliding_windows_match_bruteforce(values, k):
    v = np.asarray(values, dtype=float)
    assert np.array_equal(sliding_max(v, k), oracle_window_max(v, k))
    assert np.array_equal(sliding_min(v, k), oracle_window_min(v, k))


@given(st.lists(st.floats(-100.0, 100.0), min_size=1, max_size=30), st.integers(0, 4), st.integers(0, 4))
@settings(max_examples=80)
def test_window_semigroup(values, k1, k2):
    # two sweeps of half-widths k1 then k2 equal one sweep of k1 + k2
    v = np.asarray(values, dtype=float)
    assert np.array_equal(sliding_max(sliding_max(v, k1), k2), sliding_max(v, k1 + k2))


def test_window_wrappers_respect_radius():
    g = small_grid()
    f = GridFunction(grid=g, values=np.array([0.0, 1.0, 0.0, 0.0, 2.0]))
    r = snap_radius(g, 1.0)
    assert sup_window(f, r).values.tolist() == [1.0, 1.0, 1.0, 2.0, 2.0]
    assert inf_window(f, r).values.tolist() == [0.0, 0.0, 0.0, 0.0, 0.0]


# ---------------------------------------------------------------------------
# posterior and the Gaussian builder

def test_posterior_values_and_flags():
    g = small_grid()
    eta = posterior(g)
    assert eta.values[0] == 0.0
    assert eta.values[2] == pytest.approx(0.5)
    assert eta.values[4] == 1.0
    assert eta.values[1] == 0.5 and eta.zero_mass[1]
    assert not eta.zero_mass[0]


def test_gaussian_mixture_fixture_shape():
    g = from_gaussian_mixture(0.0, 1.0, 0.5, 2.0, 1.0, 0.5, span_sigmas=6.0, h=0.01)
    assert g.n == 1400
    assert g.x0 == pytest.approx(-6.0)
    # no cell center may land on the midpoint between the means
    assert not np.any(np.isclose(g.centers, 1.0, atol=1e-12))
    assert g.total_mass == pytest.approx(1.0, abs=1e-6)
    assert np.sum(g.m0) == pytest.approx(0.5, abs=1e-6)
    assert np.sum(g.m1) == pytest.approx(0.5, abs=1e-6)


def test_gaussian_mixture_rejects_bad_params():
    with pytest.raises(DomainError):
        from_gaussian_mixture(0.0, -1.0, 0.5, 2.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        from_gaussian_mixture(0.0, 1.0, -0.5, 2.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        from_gaussian_mixture(0.0, 1.0, 0.5, 2.0, 1.0, 0.5, h=0.0)


# ---------------------------------------------------------------------------
# serialization

def test_csv_roundtrip_is_byte_identical(tmp_path):
    g = small_grid()
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_grid_csv(g, p1, meta={"note": "unit"})
    back, meta = read_grid_csv(p1)
    assert same_lattice(g, back)
    assert np.array_equal(g.m0, back.m0)
    assert np.array_equal(g.m1, back.m1)
    assert meta["note"] == "unit"
    write_grid_csv(back, p2, meta={"note": "unit"})
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_header_is_authoritative(tmp_path):
    g = small_grid()
    path = tmp_path / "g.csv"
    write_grid_csv(g, path)
    text = path.read_text()
    assert "# x0=" in text and "# h=" in text and "# n=" in text
    # corrupt the declared length and make sure the reader objects
    bad = tmp_path / "bad.csv"
    bad.write_text(text.replace("# n=5", "# n=4"))
    with pytest.raises(DomainError):
        read_grid_csv(bad)


def test_json_roundtrip(tmp_path):
    g = small_grid()
    path = tmp_path / "g.json"
    write_grid_json(g, path)
    back, _ = read_grid_json(path)
    assert same_lattice(g, back)
    assert np.array_equal(g.m0, back.m0)
    payload = json.loads(path.read_text())
    assert payload["n"] == 5


def test_grid_function_rejects_nan_and_shape():
    g = small_grid()
    with pytest.raises(DomainError):
        GridFunction(grid=g, values=np.array([0.0, np.nan, 0.0, 0.0, 0.0]))
    with pytest.raises(DomainError):
        GridFunction(grid=g, values=np.zeros(4))
    f = GridFunction(grid=g, values=np.array([-np.inf, 0.0, 1.0, 2.0, np.inf]))
    assert f.values[0] == -np.inf
