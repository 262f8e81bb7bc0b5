"""Consistency experiments: does driving a surrogate down drive the risk down?

Given a moved-pair posterior from the dual, the conditionally optimal
score alpha(eta) minimizes the pushed surrogate bound cell by cell.  For
well-behaved losses, thresholding that score (or any sequence whose
surrogate risk approaches the bound) also approaches the minimal
adversarial risk.  For losses whose optimal conditional value at 1/2
equals their value at 0, mass pooled at ratio 1/2 admits score sequences
whose surrogate risk converges while their decision sets stay strictly
suboptimal; this module builds both kinds of sequences and reports which
behavior a given grid, radius and loss actually exhibit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .duality import (
    DualSolution,
    _json_safe,
    check_uniqueness,
    dual_classification_max,
    dual_surrogate_value,
    extremal_classifiers,
)
from .errors import DomainError, NoWitnessError, NumericError, PreconditionError, UndecidableError
from .grid import EpsilonRadius, Grid, GridFunction, same_lattice, sliding_max
from .losses import (
    HALF_TOL,
    Loss,
    alpha_tilde_values,
    alpha_values,
    c_star_values,
    conditional_risk_values,
    is_adversarially_consistent_universal,
    is_consistent,
)
from .risks import (
    ClassifierSet,
    adversarial_risk,
    adversarial_surrogate_risk,
    minimize_adversarial_risk,
)

__all__ = [
    "SequenceSpec",
    "ExperimentConfig",
    "ConsistencyReport",
    "optimal_surrogate_function",
    "modified_optimal_function",
    "inconsistency_sequence",
    "threshold_function",
    "slackness_diagnostics",
    "run_consistency_experiment",
]

_POW2 = tuple(2**j for j in range(11))


def optimal_surrogate_function(eta_hat: GridFunction, loss: Loss) -> GridFunction:
    """Cellwise smallest minimizer alpha(eta_hat) of the conditional risk."""
    vals = np.asarray(eta_hat.values, dtype=float)
    if np.any(vals < 0.0) or np.any(vals > 1.0):
        raise DomainError("eta_hat must take values in [0, 1]")
    return GridFunction(
        grid=eta_hat.grid, values=alpha_values(loss, vals), zero_mass=eta_hat.zero_mass
    )


def modified_optimal_function(eta_hat: GridFunction, loss: Loss) -> GridFunction:
    """Optimal score with the ratio-1/2 band pinned to zero.

    Away from the band this is the cellwise smallest minimizer; on it,
    scoring 0 costs at most phi(0) - C*(1/2) per unit of band mass but
    keeps the decision set determinate where the ratio is a coin flip.
    For a loss whose optimum at 1/2 is attained at 0 the pin is free.
    Only calibrated losses qualify: pinning an uncalibrated score has no
    optimality to preserve.
    """
    try:
        if not is_consistent(loss):
            raise PreconditionError(f"{loss.name} is not calibrated; refusing to pin")
    except UndecidableError as exc:
        raise PreconditionError(f"cannot confirm calibration of {loss.name}: {exc}") from exc
    vals = np.asarray(eta_hat.values, dtype=float)
    if np.any(vals < 0.0) or np.any(vals > 1.0):
        raise DomainError("eta_hat must take values in [0, 1]")
    return GridFunction(
        grid=eta_hat.grid, values=alpha_tilde_values(loss, vals), zero_mass=eta_hat.zero_mass
    )


@dataclass(frozen=True, eq=False)
class SequenceSpec:
    """Recipe for a score sequence targeting a chosen decision set.

    ``tilde_set`` must sit between the two extremal sets read off
    ``base_eta_hat``: it contains every cell with ratio above the band
    and no cell with ratio below it.
    """

    base_eta_hat: GridFunction
    tilde_set: ClassifierSet
    n_values: tuple[int, ...] = _POW2
    threshold_N: tuple[int, ...] = tuple(range(1, 65))
    half_tol: float = HALF_TOL

    def __post_init__(self):
        if not same_lattice(self.base_eta_hat.grid, self.tilde_set.grid):
            raise DomainError("tilde_set lives on a different lattice than the posterior")
        for name in ("n_values", "threshold_N"):
            seq = tuple(int(v) for v in getattr(self, name))
            if not seq or any(v <= 0 for v in seq) or any(
                a >= b for a, b in zip(seq, seq[1:])
            ):
                raise DomainError(f"{name} must be strictly increasing positive integers")
            object.__setattr__(self, name, seq)
        eta = self.base_eta_hat.values
        lo_mask = eta > 0.5 + self.half_tol
        hi_mask = eta >= 0.5 - self.half_tol
        t = self.tilde_set.mask
        if np.any(lo_mask & ~t) or np.any(t & ~hi_mask):
            raise DomainError(
                "tilde_set must contain all cells above the band and none below it"
            )


def inconsistency_sequence(spec: SequenceSpec, loss: Loss) -> list[GridFunction]:
    """Scores that stay conditionally optimal but decide spec.tilde_set.

    Off the ratio-1/2 band each score equals the optimal alpha (nudged to
    +-1/n when that alpha is 0, which is still a minimizer there); on the
    band it is +1/n inside tilde_set and -1/n outside, so the decision
    set {f_n > 0} equals tilde_set for every n while the conditional risk
    excess on the band vanishes like the loss's modulus at 0.
    """
    eta = spec.base_eta_hat.values
    band = np.abs(eta - 0.5) <= spec.half_tol
    if not np.any(band):
        raise NoWitnessError(
            "no cells carry ratio 1/2; every score sequence with vanishing "
            "surrogate excess also decides the optimal set"
        )
    alpha = alpha_values(loss, eta)
    t = spec.tilde_set.mask
    out = []
    for nv in spec.n_values:
        d = 1.0 / nv
        vals = alpha.copy()
        fix_pos = ~band & (eta > 0.5) & (vals <= 0.0)
        fix_neg = ~band & (eta < 0.5) & (vals >= 0.0)
        vals[fix_pos] = d
        vals[fix_neg] = -d
        vals[band & t] = d
        vals[band & ~t] = -d
        if not np.array_equal(vals > 0.0, t):
            raise NumericError("score sequence failed to decide tilde_set")
        out.append(GridFunction(grid=spec.base_eta_hat.grid, values=vals))
    return out


def threshold_function(f: GridFunction, N: float) -> GridFunction:
    """Clip the score to [-N, N]; infinite scores become +-N."""
    if not np.isfinite(N) or N <= 0.0:
        raise DomainError(f"threshold must be a finite positive number, got {N}")
    vals = np.clip(f.values, -N, N)
    if not np.array_equal(vals > 0.0, f.values > 0.0):
        raise NumericError("thresholding changed the decision set")
    return GridFunction(grid=f.grid, values=vals, zero_mass=f.zero_mass)


def slackness_diagnostics(
    f: GridFunction, dual: DualSolution, loss: Loss, r: EpsilonRadius | None = None
) -> dict:
    """Three one-sided gaps that vanish together exactly at a joint optimum.

    - ``conditional_deficit``: moved mass times the cellwise excess of
      C(eta*, f) over C*(eta*), degenerate cells excluded
    - ``window_deficit_p1``: sum m1 S(phi o f) - sum b phi(f)
    - ``window_deficit_p0``: sum m0 S(phi o -f) - sum a phi(-f)

    Gaps where both sides are infinite are reported as 0 with a note.
    Any genuinely negative gap means the bound bookkeeping is broken and
    raises.
    """
    g = f.grid
    if r is None:
        r = dual.radius
    if not same_lattice(g, dual.grid) or not same_lattice(g, r.grid) or r.k != dual.radius.k:
        raise DomainError("score, dual solution and radius must share one lattice")
    a = dual.m0_star
    b = dual.m1_star
    tot = a + b
    live = ~dual.degenerate
    eta = dual.eta_star.values
    tol = 1e-9 * (1.0 + g.total_mass)
    notes: list[str] = []

    with np.errstate(over="ignore", invalid="ignore"):
        pf = np.asarray(loss(f.values), dtype=float)
        pnf = np.asarray(loss(-f.values), dtype=float)
        cond = conditional_risk_values(loss, eta, f.values)
        cstar = c_star_values(loss, eta)
        excess = np.where(live & (tot > 0.0), cond - cstar, 0.0)
        excess = np.where(np.isnan(excess), 0.0, excess)  # inf - inf: optimal anyway
    conditional = float(np.sum(np.where(tot > 0.0, tot * excess, 0.0)))

    def window_gap(mass: np.ndarray, moved: np.ndarray, comp: np.ndarray, label: str) -> float:
        upper_terms = mass * sliding_max(comp, r.k)
        upper = float(np.sum(np.where(mass > 0.0, upper_terms, 0.0)))
        lower_terms = moved * comp
        lower = float(np.sum(np.where(moved > 0.0, lower_terms, 0.0)))
        if np.isinf(upper) and np.isinf(lower):
            notes.append(f"{label}: both sides infinite")
            return 0.0
        gap = upper - lower
        if gap < -tol:
            raise NumericError(f"{label}: window bound violated by {-gap:g}", bracket=(lower, upper))
        return max(gap, 0.0)

    d1 = window_gap(g.m1, b, pf, "window_deficit_p1")
    d0 = window_gap(g.m0, a, pnf, "window_deficit_p0")
    if conditional < -tol:
        raise NumericError(f"conditional optimality violated by {-conditional:g}")
    return {
        "conditional_deficit": max(conditional, 0.0),
        "window_deficit_p1": d1,
        "window_deficit_p0": d0,
        "notes": notes,
    }


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for :func:`run_consistency_experiment`."""

    n_values: tuple[int, ...] = _POW2
    threshold_N: tuple[int, ...] = tuple(range(1, 65))
    half_tol: float = HALF_TOL
    mass_tol: float | None = None
    solver_tol: float = 1e-9
    gap_tol: float | None = None
    gap_margin: float | None = None

    def __post_init__(self):
        for name in ("n_values", "threshold_N"):
            seq = tuple(int(v) for v in getattr(self, name))
            if not seq or any(v <= 0 for v in seq) or any(
                a >= b for a, b in zip(seq, seq[1:])
            ):
                raise DomainError(f"{name} must be strictly increasing positive integers")
            object.__setattr__(self, name, seq)
        if self.half_tol <= 0.0:
            raise DomainError("half_tol must be positive")
        for name in ("mass_tol", "gap_tol", "gap_margin"):
            v = getattr(self, name)
            if v is not None and v <= 0.0:
                raise DomainError(f"{name} must be positive when given")


@dataclass(frozen=True, eq=False)
class ConsistencyReport:
    """Outcome of one (grid, radius, loss) consistency experiment.

    ``surrogate_trace`` follows the adversarial surrogate risk of the
    score sequence and should approach ``dual_value`` (the pushed
    surrogate bound); ``adv_risk_trace`` follows the adversarial risk of
    the decided sets against ``bayes_adv_risk`` (the exact primal
    minimum).  The verdict says which way the pair of traces resolved.
    """

    verdict: str
    n_values: tuple[int, ...]
    surrogate_trace: tuple[float, ...]
    adv_risk_trace: tuple[float, ...]
    dual_value: float
    bayes_adv_risk: float
    uniqueness: object
    gap_min: float | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "n_values": list(self.n_values),
            "surrogate_trace": list(self.surrogate_trace),
            "adv_risk_trace": list(self.adv_risk_trace),
            "dual_value": self.dual_value,
            "bayes_adv_risk": self.bayes_adv_risk,
            "uniqueness": self.uniqueness.to_dict() if self.uniqueness is not None else None,
            "gap_min": self.gap_min,
            "extras": _json_safe(self.extras),
        }


def _default_tilde(ext, eta_hat: GridFunction, half_tol: float) -> ClassifierSet:
    """a_min plus the single band cell nearest the band's midpoint."""
    band = np.nonzero(np.abs(eta_hat.values - 0.5) <= half_tol)[0]
    if len(band) == 0:
        raise NoWitnessError("posterior has no ratio-1/2 band to disagree on")
    mid = 0.5 * (band[0] + band[-1])
    pick = band[np.argmin(np.abs(band - mid))]  # argmin ties resolve low
    mask = ext.a_min.mask.copy()
    mask[pick] = True
    return ClassifierSet(grid=eta_hat.grid, mask=mask)


def _trace(fs, loss, r) -> tuple[tuple[float, ...], tuple[float, ...]]:
    sur = tuple(adversarial_surrogate_risk(f, loss, r).value for f in fs)
    adv = tuple(adversarial_risk(ClassifierSet.from_threshold(f), r).value for f in fs)
    return sur, adv


def run_consistency_experiment(
    grid: Grid, r: EpsilonRadius, loss: Loss, config: ExperimentConfig | None = None
) -> ConsistencyReport:
    """Decide between consistent behavior and a witnessed inconsistency.

    Solves the dual, reads off the extremal sets and the uniqueness
    verdict, computes the exact primal minimum, then follows the branch
    the theory dictates:

    - unique optimum: the (pinned, when valid) optimal score already
      decides an optimal set; its trace is checked against the primal
    - pooled optimum, loss with a strict gap at ratio 1/2: the optimal
      score still decides well; same check
    - pooled optimum, no gap: build the sequence that converges in
      surrogate risk while deciding a strictly suboptimal set, and
      report the witnessed risk gap

    An ambiguous uniqueness verdict is passed through as an ambiguous
    experiment rather than guessed away.
    """
    cfg = config if config is not None else ExperimentConfig()
    mass = grid.total_mass
    gap_tol = cfg.gap_tol if cfg.gap_tol is not None else (4.0 * grid.h + 1e-6) * mass
    gap_margin = cfg.gap_margin if cfg.gap_margin is not None else 0.01 * mass

    dual = dual_classification_max(grid, r, solver_tol=cfg.solver_tol)
    ext = extremal_classifiers(dual, half_tol=cfg.half_tol)
    uniq = check_uniqueness(dual, half_tol=cfg.half_tol, mass_tol=cfg.mass_tol)
    _, primal = minimize_adversarial_risk(grid, r)
    dual_sur = dual_surrogate_value(dual, loss)
    extras: dict = {
        "classification_dual": dual.value,
        "certified_min": ext.cert_min.passed,
        "certified_max": ext.cert_max.passed,
    }

    if uniq.verdict == "ambiguous":
        return ConsistencyReport(
            verdict="ambiguous",
            n_values=cfg.n_values,
            surrogate_trace=(),
            adv_risk_trace=(),
            dual_value=dual_sur,
            bayes_adv_risk=primal.value,
            uniqueness=uniq,
            extras={**extras, "note": "uniqueness could not be decided at these tolerances"},
        )

    witness_branch = uniq.verdict == "not_unique" and not is_adversarially_consistent_universal(
        loss
    )
    if witness_branch:
        spec = SequenceSpec(
            base_eta_hat=ext.eta_hat,
            tilde_set=_default_tilde(ext, ext.eta_hat, cfg.half_tol),
            n_values=cfg.n_values,
            threshold_N=cfg.threshold_N,
            half_tol=cfg.half_tol,
        )
        fs = inconsistency_sequence(spec, loss)
        sur, adv = _trace(fs, loss, r)
        gap_min = min(adv) - primal.value
        verdict = "inconsistency_witnessed" if gap_min >= gap_margin else "ambiguous"
        if verdict == "ambiguous":
            extras["note"] = (
                f"decision-set risk gap {gap_min:g} did not clear the margin {gap_margin:g}"
            )
        extras["tilde_intervals"] = [list(iv) for iv in spec.tilde_set.intervals]
        return ConsistencyReport(
            verdict=verdict,
            n_values=cfg.n_values,
            surrogate_trace=sur,
            adv_risk_trace=adv,
            dual_value=dual_sur,
            bayes_adv_risk=primal.value,
            uniqueness=uniq,
            gap_min=gap_min,
            extras=extras,
        )

    # consistent-behavior branches: the optimal score, pinned when pinning
    # is valid for this loss
    try:
        f_star = modified_optimal_function(ext.eta_hat, loss)
        extras["score"] = "pinned_optimal"
    except PreconditionError:
        f_star = optimal_surrogate_function(ext.eta_hat, loss)
        extras["score"] = "optimal"

    zero_orig = (grid.m0 + grid.m1) <= 0.0
    signs = np.where(np.arange(grid.n) % 2 == 0, 1.0, -1.0)
    fs = []
    for nv in cfg.n_values:
        vals = f_star.values.copy()
        if np.any(zero_orig):
            vals = np.where(zero_orig, vals + signs / nv, vals)
        fs.append(GridFunction(grid=grid, values=vals, zero_mass=f_star.zero_mass))
    sur, adv = _trace(fs, loss, r)
    final_gap = abs(adv[-1] - primal.value)
    verdict = "consistent_behavior" if final_gap <= gap_tol else "ambiguous"
    if verdict == "ambiguous":
        extras["note"] = (
            f"final decision-set risk missed the primal minimum by {final_gap:g} "
            f"(tolerance {gap_tol:g})"
        )
    extras["slackness"] = slackness_diagnostics(f_star, dual, loss, r)
    limit = adversarial_surrogate_risk(f_star, loss, r).value
    extras["threshold_ns"] = list(cfg.threshold_N)
    extras["threshold_trace"] = [
        adversarial_surrogate_risk(threshold_function(f_star, float(nv)), loss, r).value
        for nv in cfg.threshold_N
    ]
    extras["threshold_limit"] = limit
    return ConsistencyReport(
        verdict=verdict,
        n_values=cfg.n_values,
        surrogate_trace=sur,
        adv_risk_trace=adv,
        dual_value=dual_sur,
        bayes_adv_risk=primal.value,
        uniqueness=uniq,
        gap_min=None,
        extras=extras,
    )
