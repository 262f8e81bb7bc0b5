"""Command-line entry points.

Four subcommands, each driven by a JSON or TOML config file given as a
positional argument:

- ``analyze-loss``: tabulate C*, the minimizer map, and its pinned
  variant for one loss, with a geometry figure
- ``solve``: primal minimization + dual bound for one (grid, eps), with
  a solution figure and a certification check
- ``consistency``: sweep (eps, loss) cells of consistency experiments,
  writing per-cell reports, figures, a verdict matrix, and a manifest
- ``reproduce``: run the built-in acceptance suite

Outputs land in --out, else $ADVRISK_OUT, else the config's output_dir,
else ./advrisk_out.  Every output file embeds the config's SHA-256
prefix; reruns with the same config are byte-identical (except the
acceptance report, which records wall-clock timings).

Exit codes: 0 success, 2 config error, 3 budget exceeded,
4 certification failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from types import SimpleNamespace

from . import __version__
from .errors import (
    AdvRiskError,
    BudgetError,
    CertificationError,
    ConfigError,
    DomainError,
    UnknownLossError,
)

_TOOL = f"advrisk {__version__}"
_FLOAT = "%.17g"


# ---------------------------------------------------------------------------
# config plumbing

def _load_config(path: str) -> tuple[dict, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = p.read_bytes()
    sha = hashlib.sha256(raw).hexdigest()[:12]
    suffix = p.suffix.lower()
    try:
        if suffix == ".json":
            cfg = json.loads(raw.decode("utf-8"))
        elif suffix == ".toml":
            try:
                import tomllib  # py >= 3.11
            except ModuleNotFoundError:
                try:
                    import tomli as tomllib
                except ModuleNotFoundError as exc:
                    raise ConfigError(
                        "TOML configs need Python 3.11+ or the tomli package"
                    ) from exc
            cfg = tomllib.loads(raw.decode("utf-8"))
        else:
            raise ConfigError(f"config must be .json or .toml, got {suffix or 'no suffix'}")
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a table/object")
    return cfg, sha


def _resolve_out(args, cfg: dict) -> Path:
    out = args.out or os.environ.get("ADVRISK_OUT") or cfg.get("output_dir") or "advrisk_out"
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _need(cfg: dict, key: str, kind=float):
    if key not in cfg:
        raise ConfigError(f"config key {key!r} is required")
    try:
        return kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from exc


def _build_grid(cfg: dict):
    from . import grid as gridmod

    dist = cfg.get("distribution")
    if not isinstance(dist, dict):
        raise ConfigError("config needs a 'distribution' table")
    kind = dist.get("kind", "gaussian_mixture")
    try:
        if kind == "gaussian_mixture":
            return gridmod.from_gaussian_mixture(
                mu0=_need(dist, "mu0"),
                sigma0=_need(dist, "sigma0"),
                w0=_need(dist, "w0"),
                mu1=_need(dist, "mu1"),
                sigma1=_need(dist, "sigma1"),
                w1=_need(dist, "w1"),
                span_sigmas=float(cfg.get("span_sigmas", 6.0)),
                h=_need(cfg, "h"),
            )
        if kind == "grid_csv":
            return gridmod.read_grid_csv(_need(dist, "path", str))[0]
        if kind == "grid_json":
            return gridmod.read_grid_json(_need(dist, "path", str))[0]
    except DomainError as exc:
        raise ConfigError(f"bad distribution parameters: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"could not read grid file: {exc}") from exc
    raise ConfigError(f"unknown distribution kind {kind!r}")


def _grid_meta(grid) -> dict:
    return {"x0": grid.x0, "h": grid.h, "n": grid.n, "total_mass": grid.total_mass}


def _json_ready(obj):
    if isinstance(obj, float):
        if obj != obj:
            return "nan"
        if obj == float("inf"):
            return "inf"
        if obj == float("-inf"):
            return "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(_json_ready(payload), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _csv_header(command: str, sha: str, extra: dict | None = None) -> list[str]:
    lines = [f"# command={command}", f"# config_sha={sha}", f"# tool={_TOOL}"]
    for k in sorted(extra or {}):
        lines.append(f"# {k}={extra[k]}")
    return lines


def _sanitize(name: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "-" for c in name)


# ---------------------------------------------------------------------------
# analyze-loss

def _cmd_analyze_loss(args) -> int:
    import numpy as np

    from .figures import plot_loss_curve
    from .losses import (
        alpha_tilde_values,
        alpha_values,
        c_star_values,
        get_loss,
        is_adversarially_consistent_universal,
        is_consistent,
    )
    from .errors import UndecidableError

    cfg, sha = _load_config(args.config)
    out = _resolve_out(args, cfg)
    name = _need(cfg, "loss", str)
    try:
        loss = get_loss(name)
    except UnknownLossError as exc:
        raise ConfigError(str(exc)) from exc
    step = float(cfg.get("eta_step", 0.005))
    if not 0.0 < step <= 0.5:
        raise ConfigError(f"eta_step must be in (0, 0.5], got {step}")
    points = int(round(1.0 / step)) + 1
    eta = np.linspace(0.0, 1.0, points)

    try:
        consistent = str(is_consistent(loss))
    except UndecidableError:
        consistent = "undecidable"
    universal = is_adversarially_consistent_universal(loss)

    stem = _sanitize(loss.name)
    csv_path = out / f"analyze_loss_{stem}.csv"
    rows = zip(eta, c_star_values(loss, eta), alpha_values(loss, eta), alpha_tilde_values(loss, eta))
    lines = _csv_header(
        "analyze-loss",
        sha,
        {"loss": loss.name, "consistent": consistent, "universal": universal},
    )
    lines.append("eta,c_star,alpha,alpha_tilde")
    for vals in rows:
        lines.append(",".join(_FLOAT % v for v in vals))
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    svg_path = plot_loss_curve(loss, out / f"analyze_loss_{stem}.svg", f"config_sha={sha}")
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return 0


# ---------------------------------------------------------------------------
# solve

def _intervals_payload(cset) -> list[list[float]]:
    return [[a, b] for a, b in cset.intervals]


def _cmd_solve(args) -> int:
    from .duality import certify_complementary_slackness, check_uniqueness, dual_classification_max, extremal_classifiers
    from .figures import plot_solution
    from .grid import snap_radius
    from .risks import minimize_adversarial_risk

    cfg, sha = _load_config(args.config)
    out = _resolve_out(args, cfg)
    grid = _build_grid(cfg)
    eps = _need(cfg, "eps")
    try:
        r = snap_radius(grid, eps)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    solver_tol = float(cfg.get("solver_tol", 1e-9))

    cset, primal = minimize_adversarial_risk(grid, r)
    dual = dual_classification_max(grid, r, solver_tol=solver_tol)
    uniq = check_uniqueness(dual)
    ext = extremal_classifiers(dual)
    cert = certify_complementary_slackness(cset, dual)

    payload = {
        "command": "solve",
        "config_sha": sha,
        "tool": _TOOL,
        "grid": _grid_meta(grid),
        "eps_requested": eps,
        "eps_snapped": r.snapped_eps,
        "k": r.k,
        "primal": primal.to_dict(),
        "dual_value": dual.value,
        "gap": primal.value - dual.value,
        "intervals": _intervals_payload(cset),
        "separated": cset.is_separated(r),
        "verdict": uniq.verdict,
        "uniqueness": uniq.to_dict(),
        "extremal": {
            "a_min_intervals": _intervals_payload(ext.a_min),
            "a_max_intervals": _intervals_payload(ext.a_max),
        },
        "certification": cert.to_dict(),
        "degenerate_cells": int(dual.degenerate.sum()),
        # wall-clock timing stays on the console so reruns stay byte-identical
        "diagnostics": {k: v for k, v in dual.diagnostics.items() if k != "solve_seconds"},
    }
    json_path = out / "solve.json"
    _write_json(json_path, payload)
    svg_path = plot_solution(grid, dual, cset, out / "solve.svg", f"config_sha={sha}")
    print(f"wrote {json_path}")
    print(f"wrote {svg_path}")
    seconds = dual.diagnostics.get("solve_seconds")
    timing = f"  ({seconds:.2f}s)" if isinstance(seconds, float) else ""
    print(
        f"primal {primal.value:.6f}  dual {dual.value:.6f}  gap {primal.value - dual.value:.2e}  "
        f"verdict {uniq.verdict}{timing}"
    )
    if not cert.passed:
        raise CertificationError(
            "the minimizing set failed certification against the dual solution; see solve.json"
        )
    return 0


# ---------------------------------------------------------------------------
# consistency sweep

def _experiment_config(cfg: dict):
    from .conlab import ExperimentConfig

    tol = cfg.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("'tolerances' must be a table")
    kwargs = {}
    if "n_values" in cfg:
        kwargs["n_values"] = tuple(int(v) for v in cfg["n_values"])
    if "threshold_N" in cfg:
        kwargs["threshold_N"] = tuple(int(v) for v in cfg["threshold_N"])
    for key in ("half_tol", "mass_tol", "solver_tol", "gap_tol", "gap_margin"):
        if key in tol:
            kwargs[key] = float(tol[key])
    try:
        return ExperimentConfig(**kwargs)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _consistency_cell(payload: dict) -> dict:
    """One (eps, loss) cell; module-level so worker processes can pick it up."""
    from .conlab import ExperimentConfig, run_consistency_experiment
    from .grid import grid_from_dict, snap_radius
    from .losses import get_loss

    grid = grid_from_dict(payload["grid"])
    r = snap_radius(grid, payload["eps"])
    loss = get_loss(payload["loss"])
    cfg = ExperimentConfig(**payload["experiment"])
    report = run_consistency_experiment(grid, r, loss, cfg)
    return {
        "eps": payload["eps"],
        "eps_snapped": r.snapped_eps,
        "k": r.k,
        "loss": payload["loss"],
        "report": report.to_dict(),
    }


def _cmd_consistency(args) -> int:
    from dataclasses import asdict

    from .figures import plot_consistency_traces
    from .grid import grid_to_dict, snap_radius
    from .losses import get_loss

    cfg, sha = _load_config(args.config)
    out = _resolve_out(args, cfg)
    grid = _build_grid(cfg)
    eps_values = cfg.get("eps")
    if isinstance(eps_values, (int, float)):
        eps_values = [eps_values]
    if not isinstance(eps_values, list) or not eps_values:
        raise ConfigError("config needs a non-empty 'eps' list")
    eps_values = [float(e) for e in eps_values]
    losses = cfg.get("losses")
    if not isinstance(losses, list) or not losses:
        raise ConfigError("config needs a non-empty 'losses' list")
    losses = [str(name) for name in losses]
    for name in losses:  # validate early, in the parent
        try:
            get_loss(name)
        except UnknownLossError as exc:
            raise ConfigError(str(exc)) from exc
    for e in eps_values:
        try:
            snap_radius(grid, e)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
    exp_cfg = _experiment_config(cfg)
    seed = cfg.get("seed")

    grid_dict = grid_to_dict(grid)
    jobs = max(1, int(args.jobs))
    payloads = [
        {"grid": grid_dict, "eps": e, "loss": name, "experiment": asdict(exp_cfg)}
        for e in eps_values
        for name in losses
    ]
    if jobs == 1 or len(payloads) == 1:
        results = [_consistency_cell(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_consistency_cell, payloads))

    order = {(p["eps"], p["loss"]): i for i, p in enumerate(payloads)}
    results.sort(key=lambda c: order[(c["eps"], c["loss"])])

    verdicts: dict[tuple[float, str], str] = {}
    for cell in results:
        stem = f"consistency_eps{_sanitize('%g' % cell['eps'])}_{_sanitize(cell['loss'])}"
        cell_payload = {
            "command": "consistency",
            "config_sha": sha,
            "tool": _TOOL,
            "grid": _grid_meta(grid),
            **cell,
        }
        _write_json(out / f"{stem}.json", cell_payload)
        rep = cell["report"]
        ns = SimpleNamespace(
            n_values=rep["n_values"],
            surrogate_trace=rep["surrogate_trace"],
            adv_risk_trace=rep["adv_risk_trace"],
            dual_value=rep["dual_value"],
            bayes_adv_risk=rep["bayes_adv_risk"],
            verdict=rep["verdict"],
        )
        plot_consistency_traces(ns, out / f"{stem}.svg", f"config_sha={sha}")
        verdicts[(cell["eps"], cell["loss"])] = rep["verdict"]
        print(f"eps={cell['eps']:g} loss={cell['loss']}: {rep['verdict']}")

    lines = _csv_header("consistency", sha, {"grid_n": grid.n, "h": grid.h})
    lines.append("eps," + ",".join(losses))
    for e in eps_values:
        lines.append("%g," % e + ",".join(verdicts[(e, name)] for name in losses))
    matrix_path = out / "consistency_matrix.csv"
    matrix_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    manifest = {
        "command": "consistency",
        "config_sha": sha,
        "tool": _TOOL,
        "grid": _grid_meta(grid),
        "distribution": cfg.get("distribution"),
        "eps": [
            {"requested": e, "snapped": snap_radius(grid, e).snapped_eps, "k": snap_radius(grid, e).k}
            for e in eps_values
        ],
        "losses": losses,
        "experiment": asdict(exp_cfg),
        "seed": seed,
        "jobs": jobs,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {matrix_path}")
    return 0


# ---------------------------------------------------------------------------
# reproduce

def _cmd_reproduce(args) -> int:
    from . import acceptance

    if args.config:
        cfg, sha = _load_config(args.config)
    else:
        cfg, sha = {}, "no-config"
    out = _resolve_out(args, cfg)
    only = None
    if args.only:
        try:
            only = sorted({int(tok) for tok in args.only.split(",")})
        except ValueError as exc:
            raise ConfigError(f"--only wants comma-separated criterion numbers: {exc}") from exc
        known = set(acceptance.criterion_numbers())
        unknown = sorted(set(only) - known)
        if unknown:
            raise ConfigError(f"no such criterion: {unknown}; choose from {sorted(known)}")
    seed = int(cfg.get("seed", acceptance.DEFAULT_SEED))

    results = acceptance.run_all(only=only, seed=seed)
    for res in results:
        mark = "PASS" if res.passed else "FAIL"
        print(f"{mark} criterion {res.number} ({res.name}, {res.seconds:.1f}s): {res.details}")
    payload = {
        "command": "reproduce",
        "config_sha": sha,
        "tool": _TOOL,
        "seed": seed,
        "criteria": [
            {
                "number": res.number,
                "name": res.name,
                "passed": res.passed,
                "seconds": round(res.seconds, 3),
                "details": res.details,
            }
            for res in results
        ],
        "all_passed": all(res.passed for res in results),
    }
    _write_json(out / "acceptance_report.json", payload)
    print(f"wrote {out / 'acceptance_report.json'}")
    return 0 if payload["all_passed"] else 1


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advrisk",
        description="adversarial risk bounds and surrogate consistency experiments on 1-d grids",
    )
    parser.add_argument("--version", action="version", version=_TOOL)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-loss", help="tabulate and plot one loss's conditional calculus")
    p.add_argument("config", help="JSON or TOML config with at least a 'loss' key")
    p.add_argument("--out", help="output directory (beats ADVRISK_OUT and the config)")
    p.set_defaults(func=_cmd_analyze_loss)

    p = sub.add_parser("solve", help="primal minimization and dual bound for one radius")
    p.add_argument("config", help="JSON or TOML config with 'distribution', 'h', 'eps'")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("consistency", help="sweep (eps, loss) consistency experiments")
    p.add_argument("config", help="JSON or TOML config with 'distribution', 'h', 'eps', 'losses'")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes (default 1)")
    p.set_defaults(func=_cmd_consistency)

    p = sub.add_parser("reproduce", help="run the built-in acceptance suite")
    p.add_argument("config", nargs="?", help="optional JSON or TOML config (output_dir, seed)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--only", help="comma-separated criterion numbers, e.g. 1,4,9")
    p.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return 4
    except AdvRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
