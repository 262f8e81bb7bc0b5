"""Uniform 1-d grids carrying two class-mass vectors, and window operators.

A :class:`Grid` discretizes a pair of measures (P0, P1) into per-cell
masses ``m0``, ``m1`` on ``n`` cells of width ``h`` starting at ``x0``;
cell ``i`` is centered at ``x0 + (i + 1/2) h``.  Masses, not densities,
are canonical: every risk in this package is a dot product against a
mass vector.

The ball operators act on sampled functions::

    sup_window(f)[i] = max f[j] over |i - j| <= k
    inf_window(f)[i] = min f[j] over |i - j| <= k

with the radius snapped to a whole number of cells, k = round(eps / h).
Windows truncate at the grid edges, which is the same as extending the
function by -inf (resp. +inf) outside the domain.  Both run in O(n) via
a monotone deque.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Grid",
    "GridFunction",
    "EpsilonRadius",
    "snap_radius",
    "from_gaussian_mixture",
    "sliding_max",
    "sliding_min",
    "sup_window",
    "inf_window",
    "posterior",
    "same_lattice",
    "write_grid_csv",
    "read_grid_csv",
    "grid_to_dict",
    "grid_from_dict",
    "write_grid_json",
    "read_grid_json",
]

#: relative mass allowed to fall outside the discretized span
TAIL_BOUND = 1e-6


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform 1-d lattice with nonnegative cell masses for both classes."""

    x0: float
    h: float
    n: int
    m0: np.ndarray
    m1: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0.0):
            raise DomainError(f"spacing h must be positive, got {self.h!r}")
        if self.n <= 0:
            raise DomainError(f"cell count n must be positive, got {self.n!r}")
        for attr in ("m0", "m1"):
            v = np.ascontiguousarray(np.asarray(getattr(self, attr), dtype=float))
            if v.shape != (self.n,):
                raise DomainError(f"{attr} must have shape ({self.n},), got {v.shape}")
            if not np.all(np.isfinite(v)):
                raise DomainError(f"{attr} must be finite")
            if np.any(v < 0.0):
                raise DomainError(f"{attr} must be nonnegative")
            v.setflags(write=False)
            object.__setattr__(self, attr, v)
        if float(np.sum(self.m0) + np.sum(self.m1)) <= 0.0:
            raise DomainError("total mass must be positive")

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.n) + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        return self.x0 + np.arange(self.n + 1) * self.h

    @property
    def mass0(self) -> float:
        return float(np.sum(self.m0))

    @property
    def mass1(self) -> float:
        return float(np.sum(self.m1))

    @property
    def total_mass(self) -> float:
        return self.mass0 + self.mass1


def same_lattice(a: Grid, b: Grid) -> bool:
    """Whether two grids share x0, h and n (mass vectors may differ)."""
    return a.n == b.n and a.h == b.h and a.x0 == b.x0


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Extended-real-valued function sampled on a grid.

    ``zero_mass`` optionally flags cells whose value is a convention
    rather than data (e.g. the posterior where both masses vanish).
    """

    grid: Grid
    values: np.ndarray
    zero_mass: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.shape != (self.grid.n,):
            raise DomainError(f"values must have shape ({self.grid.n},), got {v.shape}")
        if np.any(np.isnan(v)):
            raise DomainError("values must not contain NaN")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.zero_mass is not None:
            z = np.ascontiguousarray(np.asarray(self.zero_mass, dtype=bool))
            if z.shape != (self.grid.n,):
                raise DomainError("zero_mass flag must match the grid length")
            z.setflags(write=False)
            object.__setattr__(self, "zero_mass", z)


@dataclass(frozen=True, eq=False)
class EpsilonRadius:
    """A perturbation radius snapped to k = round(eps / h) whole cells."""

    grid: Grid
    eps: float
    k: int

    def __post_init__(self):
        if self.eps < 0.0 or not np.isfinite(self.eps):
            raise DomainError(f"eps must be a finite nonnegative real, got {self.eps!r}")
        if self.k < 0:
            raise DomainError("k must be nonnegative")
        if abs(self.k * self.grid.h - self.eps) > 0.5 * self.grid.h + 1e-12:
            raise DomainError(
                f"k = {self.k} is not the snapped window for eps = {self.eps} at h = {self.grid.h}"
            )

    @property
    def snapped_eps(self) -> float:
        """The radius actually realized on the lattice, k * h."""
        return self.k * self.grid.h


def snap_radius(grid: Grid, eps: float) -> EpsilonRadius:
    """Snap eps to the nearest whole number of cells on this grid."""
    if not (np.isfinite(eps) and eps >= 0.0):
        raise DomainError(f"eps must be a finite nonnegative real, got {eps!r}")
    return EpsilonRadius(grid=grid, eps=float(eps), k=int(round(eps / grid.h)))


def sliding_max(values: np.ndarray, k: int) -> np.ndarray:
    """Windowed maximum out[i] = max(values[i-k : i+k+1]) in O(n).

    Classic monotone-deque sweep: indices whose values are dominated by a
    newer entry can never be a window maximum again, so the deque stays
    sorted and each index is pushed and popped at most once.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    if k < 0:
        raise DomainError("window half-width must be nonnegative")
    if k == 0 or n == 0:
        return v.copy()
    out = np.empty(n, dtype=float)
    dq: deque[int] = deque()
    for j in range(n + k):
        if j < n:
            while dq and v[dq[-1]] <= v[j]:
                dq.pop()
            dq.append(j)
        i = j - k
        if i >= 0:
            while dq[0] < i - k:
                dq.popleft()
            out[i] = v[dq[0]]
    return out


def sliding_min(values: np.ndarray, k: int) -> np.ndarray:
    """Windowed minimum; the mirror of :func:`sliding_max`."""
    return -sliding_max(-np.asarray(values, dtype=float), k)


def _check_bound(f: GridFunction, r: EpsilonRadius) -> None:
    if not same_lattice(f.grid, r.grid):
        raise DomainError("radius was snapped on a different lattice than the function")


def sup_window(f: GridFunction, r: EpsilonRadius) -> GridFunction:
    """The ball supremum of ``f`` at radius ``r``."""
    _check_bound(f, r)
    return GridFunction(f.grid, sliding_max(f.values, r.k))


def inf_window(f: GridFunction, r: EpsilonRadius) -> GridFunction:
    """The ball infimum of ``f`` at radius ``r``."""
    _check_bound(f, r)
    return GridFunction(f.grid, sliding_min(f.values, r.k))


def posterior(grid: Grid) -> GridFunction:
    """Cellwise conditional probability of class +1, m1 / (m0 + m1).

    Cells with zero combined mass carry the conventional value 1/2 and
    are marked in the returned function's ``zero_mass`` flags.
    """
    total = grid.m0 + grid.m1
    zero = total <= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(zero, 0.5, grid.m1 / np.where(zero, 1.0, total))
    return GridFunction(grid, eta, zero_mass=zero)


def _normal_pdf(x: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    z = (x - mu) / sigma
    return np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))


def from_gaussian_mixture(
    mu0: float,
    sigma0: float,
    w0: float,
    mu1: float,
    sigma1: float,
    w1: float,
    span_sigmas: float = 6.0,
    h: float = 0.01,
) -> Grid:
    """Discretize a pair of weighted Gaussians onto a shared grid.

    The grid spans [min(mu) - span * max(sigma), max(mu) + span * max(sigma)]
    and each cell gets the midpoint-rule mass w * pdf(center) * h.  The
    mass lost to truncation must stay below TAIL_BOUND of the total.
    """
    if sigma0 <= 0.0 or sigma1 <= 0.0:
        raise DomainError("sigmas must be positive")
    if w0 <= 0.0 or w1 <= 0.0:
        raise DomainError("class weights must be positive")
    if h <= 0.0:
        raise DomainError("h must be positive")
    if span_sigmas < 4.0:
        raise DomainError(f"span_sigmas must be at least 4, got {span_sigmas!r}")
    smax = max(sigma0, sigma1)
    x_lo = min(mu0, mu1) - span_sigmas * smax
    x_hi = max(mu0, mu1) + span_sigmas * smax
    n = max(1, int(round((x_hi - x_lo) / h)))
    centers = x_lo + (np.arange(n) + 0.5) * h
    m0 = w0 * _normal_pdf(centers, mu0, sigma0) * h
    m1 = w1 * _normal_pdf(centers, mu1, sigma1) * h
    weight = w0 + w1
    missing = weight - float(np.sum(m0) + np.sum(m1))
    if missing > TAIL_BOUND * weight:
        raise DomainError(
            f"span_sigmas = {span_sigmas} leaves {missing:.3g} mass outside the grid "
            f"(> {TAIL_BOUND:g} of total); widen the span"
        )
    return Grid(x0=float(x_lo), h=float(h), n=n, m0=m0, m1=m1)


# ---------------------------------------------------------------------------
# serialization

def write_grid_csv(grid: Grid, path, meta: dict | None = None) -> None:
    """Write columns x, m0, m1 preceded by '# key=value' provenance lines.

    x0, h and n always go into the header and are authoritative on read;
    the x column is informational.  Floats print as %.17g so a
    write/read/write cycle is byte-identical.
    """
    lines = []
    header = {"x0": repr(grid.x0), "h": repr(grid.h), "n": repr(grid.n)}
    if meta:
        for key in sorted(meta):
            header[str(key)] = str(meta[key])
    for key, val in header.items():
        lines.append(f"# {key}={val}")
    lines.append("x,m0,m1")
    centers = grid.centers
    for i in range(grid.n):
        lines.append(f"{centers[i]:.17g},{grid.m0[i]:.17g},{grid.m1[i]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_grid_csv(path) -> tuple[Grid, dict]:
    """Read a grid CSV written by :func:`write_grid_csv`."""
    meta: dict[str, str] = {}
    m0, m1 = [], []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val
                continue
            if line.startswith("x,"):
                continue
            parts = line.split(",")
            m0.append(float(parts[1]))
            m1.append(float(parts[2]))
    try:
        x0 = float(meta["x0"])
        h = float(meta["h"])
        n = int(meta["n"])
    except KeyError as exc:
        raise DomainError(f"grid CSV {path} is missing header key {exc}")
    if n != len(m0):
        raise DomainError(f"grid CSV {path} declares n={n} but has {len(m0)} rows")
    grid = Grid(x0=x0, h=h, n=n, m0=np.array(m0), m1=np.array(m1))
    return grid, meta


def grid_to_dict(grid: Grid, meta: dict | None = None) -> dict:
    out = {
        "x0": grid.x0,
        "h": grid.h,
        "n": grid.n,
        "m0": grid.m0.tolist(),
        "m1": grid.m1.tolist(),
    }
    if meta:
        out["meta"] = dict(meta)
    return out


def grid_from_dict(data: dict) -> Grid:
    return Grid(
        x0=float(data["x0"]),
        h=float(data["h"]),
        n=int(data["n"]),
        m0=np.array(data["m0"], dtype=float),
        m1=np.array(data["m1"], dtype=float),
    )


def write_grid_json(grid: Grid, path, meta: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(grid_to_dict(grid, meta), fh, indent=1)
        fh.write("\n")


def read_grid_json(path) -> tuple[Grid, dict]:
    with open(path) as fh:
        data = json.load(fh)
    return grid_from_dict(data), data.get("meta", {})
