"""Loss-function calculus for margin losses.

A loss here is a scalar function ``phi`` of the margin ``alpha`` that is
non-increasing, continuous on the reals and tends to 0 at ``+inf``.  The
module provides the conditional-risk machinery built on top of phi:

    C(eta, alpha)  = eta * phi(alpha) + (1 - eta) * phi(-alpha)
    C*(eta)        = inf over extended-real alpha of C(eta, alpha)
    alpha(eta)     = the smallest minimizer of C(eta, .)

together with consistency predicates and the uniform-gap constant used by
the calibration argument.  Extended reals are plain IEEE floats: ``-inf``
and ``inf`` order correctly against every finite value and compose with
phi through limits (``phi(inf) = 0``, ``phi(-inf) = sup phi``).

Built-in losses carry closed forms for all of the above; tabulated custom
losses fall back to a bracketed scan with left-edge bisection.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import final

import numpy as np

from .errors import (
    DomainError,
    NumericError,
    UndecidableError,
    UnknownLossError,
)

__all__ = [
    "Loss",
    "HingeLoss",
    "SquaredHingeLoss",
    "ExponentialLoss",
    "SigmoidLoss",
    "RhoMarginLoss",
    "ZeroOneLoss",
    "CustomTabulatedLoss",
    "ConditionalRiskProfile",
    "conditional_risk",
    "optimal_conditional_risk",
    "smallest_minimizer_map",
    "modified_minimizer_map",
    "is_consistent",
    "is_adversarially_consistent_universal",
    "uniform_gap",
    "get_loss",
    "load_custom_loss",
    "built_in_losses",
    "c_star_values",
    "alpha_values",
    "alpha_tilde_values",
    "c_star_supergradient",
    "conditional_risk_values",
]

#: half-width of the finite scan interval [-A, A] for tabulated losses
SCAN_HALF_WIDTH = 50.0
#: default tolerance for closed-form results
TOL_CLOSED = 1e-9
#: default tolerance for scanned minimizers
TOL_SCAN = 1e-6
#: |eta - 1/2| below this counts as "at one half" for the modified map
HALF_TOL = 1e-6

_INF = float("inf")


@dataclass(frozen=True)
class ConditionalRiskProfile:
    """Pointwise summary of C(eta, .) at a fixed eta.

    ``alpha_min`` is the smallest minimizer over the extended reals; the
    ``minimizer_set_lo/hi`` pair brackets the full argmin set (the bracket
    is exact for closed forms and mesh-resolution for scanned losses).
    """

    eta: float
    c_star: float
    alpha_min: float
    minimizer_set_lo: float
    minimizer_set_hi: float


class Loss:
    """Base class for margin losses.

    Subclasses must set ``name`` and ``is_convex`` and implement
    ``__call__`` so that it accepts scalars or arrays and respects the
    extended-real conventions ``phi(inf) = 0`` and ``phi(-inf) = sup``.
    """

    name: str = "abstract"
    is_convex: bool = False
    #: ground-truth consistency for non-convex built-ins; None = unknown
    consistent_table: bool | None = None

    def __call__(self, alpha):  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def value_at_zero(self) -> float:
        return float(self(0.0))

    @property
    def sup_value(self) -> float:
        """sup of phi over the extended reals, i.e. the limit at -inf."""
        return float(self(-_INF))

    # Closed-form hook: return a profile or None to use the generic scan.
    def _profile(self, eta: float) -> ConditionalRiskProfile | None:
        return None


@final
@dataclass(frozen=True)
class HingeLoss(Loss):
    """phi(alpha) = max(0, 1 - alpha)."""

    name: str = field(default="hinge", init=False)
    is_convex: bool = field(default=True, init=False)

    def __call__(self, alpha):
        return np.maximum(0.0, 1.0 - np.asarray(alpha, dtype=float))

    def _profile(self, eta):
        # C(eta, alpha) = 1 + alpha (1 - 2 eta) on [-1, 1], linear ramps
        # outside; the minimum is 1 - |2 eta - 1| at the matching corner.
        if eta == 0.0:
            return ConditionalRiskProfile(eta, 0.0, -_INF, -_INF, -1.0)
        if eta == 1.0:
            return ConditionalRiskProfile(eta, 0.0, 1.0, 1.0, _INF)
        if eta == 0.5:
            return ConditionalRiskProfile(eta, 1.0, -1.0, -1.0, 1.0)
        c = 1.0 - abs(2.0 * eta - 1.0)
        a = -1.0 if eta < 0.5 else 1.0
        return ConditionalRiskProfile(eta, c, a, a, a)


@final
@dataclass(frozen=True)
class SquaredHingeLoss(Loss):
    """phi(alpha) = max(0, 1 - alpha)**2."""

    name: str = field(default="squared_hinge", init=False)
    is_convex: bool = field(default=True, init=False)

    def __call__(self, alpha):
        return np.maximum(0.0, 1.0 - np.asarray(alpha, dtype=float)) ** 2

    def _profile(self, eta):
        if eta == 0.0:
            return ConditionalRiskProfile(eta, 0.0, -_INF, -_INF, -1.0)
        if eta == 1.0:
            return ConditionalRiskProfile(eta, 0.0, 1.0, 1.0, _INF)
        # stationary point of eta (1-a)^2 + (1-eta)(1+a)^2 on [-1, 1]
        a = 2.0 * eta - 1.0
        c = 4.0 * eta * (1.0 - eta)
        return ConditionalRiskProfile(eta, c, a, a, a)


@final
@dataclass(frozen=True)
class ExponentialLoss(Loss):
    """phi(alpha) = exp(-alpha)."""

    name: str = field(default="exponential", init=False)
    is_convex: bool = field(default=True, init=False)

    def __call__(self, alpha):
        with np.errstate(over="ignore"):
            return np.exp(-np.asarray(alpha, dtype=float))

    def _profile(self, eta):
        # stationary point at alpha = (1/2) log(eta / (1 - eta)); the
        # infimum at eta in {0, 1} is 0 and attained only in the limit.
        if eta == 0.0:
            return ConditionalRiskProfile(eta, 0.0, -_INF, -_INF, -_INF)
        if eta == 1.0:
            return ConditionalRiskProfile(eta, 0.0, _INF, _INF, _INF)
        a = 0.5 * math.log(eta / (1.0 - eta))
        c = 2.0 * math.sqrt(eta * (1.0 - eta))
        return ConditionalRiskProfile(eta, c, a, a, a)


@final
@dataclass(frozen=True)
class SigmoidLoss(Loss):
    """phi(alpha) = 1 / (1 + exp(alpha)).

    Bounded, non-convex, and flat at eta = 1/2: C(1/2, .) is identically
    1/2, so the smallest minimizer there is -inf.
    """

    name: str = field(default="sigmoid", init=False)
    is_convex: bool = field(default=False, init=False)
    consistent_table: bool | None = field(default=True, init=False)

    def __call__(self, alpha):
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(np.asarray(alpha, dtype=float)))

    def _profile(self, eta):
        # C(eta, a) = (1 - eta) + (2 eta - 1) phi(a): monotone in phi(a),
        # so the infimum sits at a = +-inf depending on the sign.
        c = min(eta, 1.0 - eta)
        if eta <= 0.5:
            hi = _INF if eta == 0.5 else -_INF
            return ConditionalRiskProfile(eta, c, -_INF, -_INF, hi)
        return ConditionalRiskProfile(eta, c, _INF, _INF, _INF)


@final
@dataclass(frozen=True)
class RhoMarginLoss(Loss):
    """phi(alpha) = min(1, max(0, 1 - alpha / rho)) for a margin rho > 0."""

    rho: float = 1.0
    name: str = field(default="rho_margin", init=False)
    is_convex: bool = field(default=False, init=False)
    consistent_table: bool | None = field(default=True, init=False)

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho > 0.0):
            raise DomainError(f"rho must be a positive real, got {self.rho!r}")

    def __call__(self, alpha):
        a = np.asarray(alpha, dtype=float)
        with np.errstate(invalid="ignore"):
            ramp = 1.0 - a / self.rho
        # resolve 1 - (+-inf)/rho to the saturated ends explicitly
        ramp = np.where(np.isneginf(a), _INF, ramp)
        ramp = np.where(np.isposinf(a), -_INF, ramp)
        return np.clip(ramp, 0.0, 1.0)

    def _profile(self, eta):
        # For eta <= 1/2 every alpha <= -rho attains min(eta, 1-eta); for
        # eta > 1/2 the minimizer set is [rho, inf) with left edge rho.
        c = min(eta, 1.0 - eta)
        if eta <= 0.5:
            hi = _INF if eta == 0.5 else -self.rho
            return ConditionalRiskProfile(eta, c, -_INF, -_INF, hi)
        return ConditionalRiskProfile(eta, c, self.rho, self.rho, _INF)


@final
@dataclass(frozen=True)
class ZeroOneLoss(Loss):
    """phi(alpha) = 1 if alpha <= 0 else 0 (the 0-1 indicator).

    Included as the reference target; it violates the continuity
    assumption the rest of the calculus relies on, so it is flagged
    inconsistent and its minimizer at eta > 1/2 is the infimum 0 of the
    open argmin set (0, inf], not an attained minimum.
    """

    name: str = field(default="zero_one", init=False)
    is_convex: bool = field(default=False, init=False)
    consistent_table: bool | None = field(default=False, init=False)

    def __call__(self, alpha):
        return (np.asarray(alpha, dtype=float) <= 0.0).astype(float)

    def _profile(self, eta):
        c = min(eta, 1.0 - eta)
        if eta <= 0.5:
            hi = _INF if eta == 0.5 else 0.0
            return ConditionalRiskProfile(eta, c, -_INF, -_INF, hi)
        return ConditionalRiskProfile(eta, c, 0.0, 0.0, _INF)


@final
@dataclass(frozen=True, eq=False)
class CustomTabulatedLoss(Loss):
    """A loss given by a monotone sample table, linearly interpolated.

    The table must have strictly increasing alphas, non-increasing and
    nonnegative values, and an effectively vanished right tail (the
    constant extension past the last knot stands in for the limit 0 at
    +inf).  Convexity is detected from the knot slopes.
    """

    alphas: np.ndarray = field(default=None)
    values: np.ndarray = field(default=None)
    label: str = "custom"

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if alphas.ndim != 1 or alphas.shape != values.shape or len(alphas) < 2:
            raise DomainError("custom loss table needs two equal-length 1-d columns with >= 2 rows")
        if not np.all(np.isfinite(alphas)) or not np.all(np.isfinite(values)):
            raise DomainError("custom loss table must be finite")
        if np.any(np.diff(alphas) <= 0.0):
            raise DomainError("custom loss alphas must be strictly increasing")
        if np.any(values < 0.0):
            raise DomainError("custom loss values must be nonnegative")
        if np.any(np.diff(values) > 1e-12):
            raise DomainError("custom loss values must be non-increasing")
        scale = max(values[0], 1.0)
        if values[-1] > 1e-4 * scale:
            raise DomainError(
                "custom loss tail does not vanish: last value "
                f"{values[-1]:g} exceeds 1e-4 * max({values[0]:g}, 1)"
            )
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "name", self.label)
        slopes = np.diff(values) / np.diff(alphas)
        convex = bool(np.all(np.diff(slopes) >= -1e-9 * max(scale, 1.0)))
        object.__setattr__(self, "is_convex", convex)

    def __call__(self, alpha):
        a = np.asarray(alpha, dtype=float)
        return np.interp(a, self.alphas, self.values)


def conditional_risk(loss: Loss, eta: float, alpha: float) -> float:
    """Evaluate C(eta, alpha) = eta phi(alpha) + (1 - eta) phi(-alpha).

    ``alpha`` may be +-inf; the convention 0 * inf = 0 applies so that
    degenerate etas stay finite where the mass vanishes.
    """
    if not (0.0 <= eta <= 1.0):
        raise DomainError(f"eta must lie in [0, 1], got {eta!r}")
    term1 = eta * float(loss(alpha)) if eta > 0.0 else 0.0
    term0 = (1.0 - eta) * float(loss(-alpha)) if eta < 1.0 else 0.0
    return term1 + term0


def _scan_mesh(alpha_r: float | None = None) -> np.ndarray:
    a = SCAN_HALF_WIDTH
    core = np.linspace(-a, a, 4001)
    fine = np.linspace(-2.5, 2.5, 2001)
    geo = np.geomspace(1e-6, a, 200)
    parts = [core, fine, geo, -geo, np.array([0.0])]
    return np.unique(np.concatenate(parts))


def _cond_values(loss: Loss, eta: float, alphas: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        t1 = eta * loss(alphas) if eta > 0.0 else np.zeros_like(alphas)
        t0 = (1.0 - eta) * loss(-alphas) if eta < 1.0 else np.zeros_like(alphas)
    return t1 + t0


def _scan_profile(loss: Loss, eta: float, tol: float) -> ConditionalRiskProfile:
    """Bracketed scan + left-edge bisection for losses without closed forms."""
    mesh = _scan_mesh()
    cvals = _cond_values(loss, eta, mesh)
    if not np.all(np.isfinite(cvals)):
        raise NumericError(
            "conditional risk not finite on the scan mesh",
            bracket=(float(mesh[0]), float(mesh[-1])),
        )
    idx = int(np.argmin(cvals))
    cmin = float(cvals[idx])
    plateau = max(1e-12, 0.001 * tol)
    # walk to the leftmost mesh point still on the minimum plateau, then
    # bisect the plateau's left edge down to tol
    lo_idx = int(np.argmax(cvals <= cmin + plateau))
    alpha_left = float(mesh[lo_idx])
    if lo_idx > 0:
        lo, hi = float(mesh[lo_idx - 1]), float(mesh[lo_idx])
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _cond_values(loss, eta, np.array([mid]))[0] <= cmin + plateau:
                hi = mid
            else:
                lo = mid
        alpha_left = hi
    hi_idx = len(cvals) - 1 - int(np.argmax(cvals[::-1] <= cmin + plateau))
    alpha_right = float(mesh[hi_idx])

    # tail limits: C -> eta * sup phi (alpha -> -inf), (1-eta) * sup phi
    # (alpha -> +inf); an infimum attained only in the limit wins the
    # "smallest minimizer" comparison because -inf < any finite alpha.
    sup = loss.sup_value
    lim_neg = eta * sup if eta > 0.0 else 0.0
    lim_pos = (1.0 - eta) * sup if eta < 1.0 else 0.0
    c_star = min(cmin, lim_neg, lim_pos)
    if lim_neg <= c_star + plateau:
        alpha_min, lo_b = -_INF, -_INF
    elif cmin <= c_star + plateau:
        alpha_min, lo_b = alpha_left, alpha_left
    else:
        alpha_min, lo_b = _INF, _INF
    hi_b = _INF if lim_pos <= c_star + plateau else (
        alpha_right if cmin <= c_star + plateau else lo_b
    )
    return ConditionalRiskProfile(eta, c_star, alpha_min, lo_b, hi_b)


def optimal_conditional_risk(loss: Loss, eta: float, tol: float | None = None) -> ConditionalRiskProfile:
    """C*(eta) together with the smallest minimizer alpha(eta).

    Built-in losses use closed forms (tolerance TOL_CLOSED); tabulated
    losses use the composite-mesh scan with left-edge bisection to
    ``tol`` (default TOL_SCAN).  Ties always resolve to the least alpha,
    with -inf beating every finite candidate.
    """
    if not (0.0 <= eta <= 1.0):
        raise DomainError(f"eta must lie in [0, 1], got {eta!r}")
    closed = loss._profile(eta)
    if closed is not None:
        return closed
    return _scan_profile(loss, eta, TOL_SCAN if tol is None else tol)


def smallest_minimizer_map(loss: Loss, etas) -> list[float]:
    """alpha(eta) for an ascending list of etas; checked non-decreasing."""
    etas = [float(e) for e in etas]
    if any(b < a for a, b in zip(etas, etas[1:])):
        raise DomainError("etas must be sorted ascending")
    out = [optimal_conditional_risk(loss, e).alpha_min for e in etas]
    slack = 0.0 if loss._profile(0.5) is not None else 2.0 * TOL_SCAN
    for a, b in zip(out, out[1:]):
        if b < a - slack:
            raise NumericError(
                f"smallest-minimizer map decreased: {a!r} -> {b!r}", bracket=(a, b)
            )
    return out


def modified_minimizer_map(loss: Loss, eta: float, half_tol: float = HALF_TOL) -> float:
    """The minimizer map pinned to 0 on the band |eta - 1/2| <= half_tol.

    For a loss with C*(1/2) = phi(0) the pin is free; otherwise it trades
    at most phi(0) - C*(1/2) of conditional value for a score that does
    not flip sign on knife-edge noise.
    """
    if not (0.0 <= eta <= 1.0):
        raise DomainError(f"eta must lie in [0, 1], got {eta!r}")
    if abs(eta - 0.5) <= half_tol:
        return 0.0
    return optimal_conditional_risk(loss, eta).alpha_min


def is_consistent(loss: Loss, tol: float = 1e-3) -> bool:
    """Whether minimizing the surrogate risk recovers the 0-1 optimum.

    Convex losses: differentiable at 0 with negative slope (two-sided
    difference quotients within ``tol`` of each other).  Non-convex
    built-ins carry tabulated ground truth.  Non-convex custom tables are
    undecidable and raise.
    """
    if loss.is_convex:
        d = 1e-5
        p0 = loss.value_at_zero
        left = (p0 - float(loss(-d))) / d
        right = (float(loss(d)) - p0) / d
        return abs(left - right) <= tol and right < -tol
    if loss.consistent_table is not None:
        return loss.consistent_table
    raise UndecidableError(
        f"consistency of non-convex loss {loss.name!r} is undecidable from a table"
    )


def is_adversarially_consistent_universal(loss: Loss, tol: float = TOL_CLOSED) -> bool:
    """True iff C*(1/2) < phi(0) - tol (the distribution-free criterion)."""
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    c_half = optimal_conditional_risk(loss, 0.5).c_star
    return c_half < loss.value_at_zero - tol


def uniform_gap(loss: Loss, r: float, tol: float = TOL_CLOSED) -> tuple[float, float]:
    """The margin point alpha_r and gap constant k_r for eta >= 1/2 + r.

    Picks alpha_r in (0, alpha(1/2 + r)) with phi(alpha(1/2+r)) <
    phi(alpha_r) < phi(0) by bisecting phi to the midpoint level, then
    minimizes C(eta, alpha) - C*(eta) over a dense (eta, alpha) mesh with
    eta in [1/2 + r, 1] and alpha <= alpha_r (including the alpha -> -inf
    limit).  Returns (alpha_r, k_r); k_r must come out positive.
    """
    if not (0.0 < r <= 0.5):
        raise DomainError(f"r must lie in (0, 1/2], got {r!r}")
    prof = optimal_conditional_risk(loss, 0.5 + r)
    a_star = prof.alpha_min
    if not a_star > 0.0:
        raise NumericError(
            f"{loss.name}: smallest minimizer at eta = {0.5 + r:g} is {a_star!r}; "
            "cannot place alpha_r > 0 (loss violates the consistency premise)"
        )
    p0 = loss.value_at_zero
    hi = min(a_star, SCAN_HALF_WIDTH)
    p_star = float(loss(hi))
    if not p_star < p0:
        raise NumericError(f"{loss.name}: phi does not drop below phi(0) on (0, {hi:g}]")
    target = 0.5 * (p_star + p0)
    lo_a, hi_a = 0.0, hi
    while hi_a - lo_a > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo_a + hi_a)
        if float(loss(mid)) > target:
            lo_a = mid
        else:
            hi_a = mid
    alpha_r = hi_a

    etas = np.linspace(0.5 + r, 1.0, 201)
    alphas = np.linspace(-SCAN_HALF_WIDTH, alpha_r, 401)
    phi_a = loss(alphas)
    phi_na = loss(-alphas)
    sup = loss.sup_value
    k_r = _INF
    for eta in etas:
        c_star = optimal_conditional_risk(loss, float(eta)).c_star
        with np.errstate(invalid="ignore"):
            c_row = eta * phi_a + (1.0 - eta) * phi_na
        row_min = float(np.min(c_row))
        # alpha -> -inf limit: C -> eta * sup phi
        lim = eta * sup if np.isfinite(sup) else _INF
        k_r = min(k_r, min(row_min, lim) - c_star)
    if not k_r > 0.0:
        raise NumericError(f"{loss.name}: uniform gap k_r = {k_r:g} is not positive")
    return float(alpha_r), float(k_r)


# ---------------------------------------------------------------------------
# registry

def load_custom_loss(path, label: str | None = None) -> CustomTabulatedLoss:
    """Read a two-column CSV (alpha, value) into a tabulated loss.

    Lines starting with '#' and a single optional header row are skipped.
    """
    alphas, values = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                a, v = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if not alphas:  # tolerate one header row
                    continue
                raise DomainError(f"bad row in custom loss table {path}: {row!r}")
            alphas.append(a)
            values.append(v)
    if label is None:
        label = f"custom:{path}"
    return CustomTabulatedLoss(alphas=np.array(alphas), values=np.array(values), label=label)


def get_loss(spec: str) -> Loss:
    """Resolve a loss from its registry string.

    Plain names: ``hinge``, ``squared_hinge``, ``exponential``,
    ``sigmoid``, ``zero_one``, ``rho_margin`` (rho = 1).  Parametrized:
    ``rho_margin:0.5``.  Tabulated: ``custom:/path/to/table.csv``.
    """
    name, _, arg = spec.partition(":")
    name = name.strip()
    if name == "hinge":
        loss = HingeLoss()
    elif name == "squared_hinge":
        loss = SquaredHingeLoss()
    elif name == "exponential":
        loss = ExponentialLoss()
    elif name == "sigmoid":
        loss = SigmoidLoss()
    elif name in ("zero_one", "zero_one_indicator"):
        loss = ZeroOneLoss()
    elif name == "rho_margin":
        try:
            rho = float(arg) if arg else 1.0
        except ValueError:
            raise DomainError(f"rho_margin parameter must be a real, got {arg!r}")
        return RhoMarginLoss(rho=rho)
    elif name == "custom":
        if not arg:
            raise DomainError("custom loss needs a table path, e.g. custom:table.csv")
        return load_custom_loss(arg)
    else:
        raise UnknownLossError(spec)
    if arg:
        raise DomainError(f"loss {name!r} takes no parameter, got {arg!r}")
    return loss


def built_in_losses() -> tuple[Loss, ...]:
    """The built-in losses, one instance each (rho-margin at rho = 1)."""
    return (
        HingeLoss(),
        SquaredHingeLoss(),
        ExponentialLoss(),
        SigmoidLoss(),
        RhoMarginLoss(1.0),
        ZeroOneLoss(),
    )


# ---------------------------------------------------------------------------
# vectorized maps over eta arrays (closed forms where available)

def c_star_values(loss: Loss, etas: np.ndarray) -> np.ndarray:
    """C*(eta) for an array of etas in [0, 1]."""
    e = np.asarray(etas, dtype=float)
    if np.any((e < 0.0) | (e > 1.0)):
        raise DomainError("etas must lie in [0, 1]")
    if isinstance(loss, HingeLoss):
        return 1.0 - np.abs(2.0 * e - 1.0)
    if isinstance(loss, SquaredHingeLoss):
        return 4.0 * e * (1.0 - e)
    if isinstance(loss, ExponentialLoss):
        return 2.0 * np.sqrt(e * (1.0 - e))
    if isinstance(loss, (SigmoidLoss, RhoMarginLoss, ZeroOneLoss)):
        return np.minimum(e, 1.0 - e)
    return np.array([optimal_conditional_risk(loss, float(x)).c_star for x in e.ravel()]).reshape(e.shape)


def alpha_values(loss: Loss, etas: np.ndarray) -> np.ndarray:
    """Smallest minimizers alpha(eta), elementwise; may contain +-inf."""
    e = np.asarray(etas, dtype=float)
    if np.any((e < 0.0) | (e > 1.0)):
        raise DomainError("etas must lie in [0, 1]")
    if isinstance(loss, HingeLoss):
        out = np.where(e <= 0.5, -1.0, 1.0)
        return np.where(e == 0.0, -_INF, out)
    if isinstance(loss, SquaredHingeLoss):
        out = np.where(e == 1.0, 1.0, 2.0 * e - 1.0)
        return np.where(e == 0.0, -_INF, out)
    if isinstance(loss, ExponentialLoss):
        inner = np.clip(e, 1e-300, 1.0) / np.clip(1.0 - e, 1e-300, 1.0)
        out = 0.5 * np.log(inner)
        out = np.where(e == 0.0, -_INF, out)
        return np.where(e == 1.0, _INF, out)
    if isinstance(loss, SigmoidLoss):
        return np.where(e <= 0.5, -_INF, _INF)
    if isinstance(loss, RhoMarginLoss):
        return np.where(e <= 0.5, -_INF, loss.rho)
    if isinstance(loss, ZeroOneLoss):
        return np.where(e <= 0.5, -_INF, 0.0)
    return np.array([optimal_conditional_risk(loss, float(x)).alpha_min for x in e.ravel()]).reshape(e.shape)


def alpha_tilde_values(loss: Loss, etas: np.ndarray, half_tol: float = HALF_TOL) -> np.ndarray:
    """The minimizer map with the band |eta - 1/2| <= half_tol pinned to 0."""
    e = np.asarray(etas, dtype=float)
    out = alpha_values(loss, e)
    return np.where(np.abs(e - 0.5) <= half_tol, 0.0, out)


def c_star_supergradient(loss: Loss, etas: np.ndarray) -> np.ndarray:
    """A supergradient of the concave map eta -> C*(eta), elementwise.

    Closed forms for built-ins (0 at kinks); central differences for
    tabulated losses.
    """
    e = np.asarray(etas, dtype=float)
    if isinstance(loss, HingeLoss):
        return np.where(e < 0.5, 2.0, np.where(e > 0.5, -2.0, 0.0))
    if isinstance(loss, SquaredHingeLoss):
        return 4.0 - 8.0 * e
    if isinstance(loss, ExponentialLoss):
        ec = np.clip(e, 1e-12, 1.0 - 1e-12)
        return (1.0 - 2.0 * ec) / np.sqrt(ec * (1.0 - ec))
    if isinstance(loss, (SigmoidLoss, RhoMarginLoss, ZeroOneLoss)):
        return np.where(e < 0.5, 1.0, np.where(e > 0.5, -1.0, 0.0))
    d = 1e-6
    lo = np.clip(e - d, 0.0, 1.0)
    hi = np.clip(e + d, 0.0, 1.0)
    return (c_star_values(loss, hi) - c_star_values(loss, lo)) / np.maximum(hi - lo, 1e-300)


def conditional_risk_values(loss: Loss, etas: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """C(eta, alpha) elementwise with the 0 * inf = 0 convention."""
    e = np.asarray(etas, dtype=float)
    a = np.asarray(alphas, dtype=float)
    if np.any((e < 0.0) | (e > 1.0)):
        raise DomainError("etas must lie in [0, 1]")
    with np.errstate(invalid="ignore"):
        t1 = e * loss(a)
        t0 = (1.0 - e) * loss(-a)
    t1 = np.where(e > 0.0, t1, 0.0)
    t0 = np.where(e < 1.0, t0, 0.0)
    return t1 + t0
