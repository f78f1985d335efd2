"""``turfsim`` command-line interface.

Exit codes: 0 success, 2 invalid input (config, grid, day-event file), 3 I/O failure.

Value precedence for overridable settings: command-line flag, then config
file, then (seed only) the ``TURFSIM_SEED`` environment variable, then the
built-in default.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .belief import StationaryProfile, solve_stationary
from .config import CityConfig, ConfigError, config_from_mapping, validate_config
from .engine import simulate
from .metrics import DayEventFormatError, compute_metrics, empirical_streaks, read_day_events
from .regime import (
    InsufficientSeedsError,
    MissingPointError,
    check_corollaries,
    check_propositions,
    classify,
    thresholds,
)
from .sweep import DEFAULT_GRID, FINE_GRID, SweepPlan, default_parallelism, parse_grid, run_sweep

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
SEED_ENV = "TURFSIM_SEED"

ANALYZE_HEADER = ("area_id", "ocg_count", "events", "streak_count", "streak_mean", "streak_max")

log = logging.getLogger("turfsim")


class UserError(Exception):
    """Bad input from the user; exits with status 2."""


def _read_config(path: str, args: argparse.Namespace) -> CityConfig:
    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise UserError(f"{path}: not valid TOML: {exc}") from None
    if "seed" not in data and os.environ.get(SEED_ENV):
        raw = os.environ[SEED_ENV]
        try:
            data["seed"] = int(raw)
        except ValueError:
            raise UserError(f"seed: {SEED_ENV}={raw!r} is not an integer") from None
    cfg = config_from_mapping(data)
    cfg = cfg.with_overrides(
        departure_rate=getattr(args, "eta", None),
        seed=getattr(args, "seed", None),
        horizon=getattr(args, "horizon", None),
    )
    return validate_config(cfg)


def _solve(cfg: CityConfig, args: argparse.Namespace) -> StationaryProfile:
    return solve_stationary(cfg, max_iter=args.max_iter, calibration_horizon=args.calibration_horizon)


# --------------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _read_config(args.config, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.stationary:
        profile = StationaryProfile.load(args.stationary)
        if len(profile.p) != cfg.n_areas:
            raise UserError(f"stationary: profile has {len(profile.p)} areas, config has {cfg.n_areas}")
    else:
        profile = _solve(cfg, args)
        if not profile.converged:
            log.warning("stationary solve did not converge (residual %.3g)", profile.residual)
    result = simulate(cfg, profile)
    try:
        result.events.write_csv(out / "events.csv")
        report = compute_metrics(result.events, cfg)
        n_events = len(result.events)
    finally:
        result.events.close()
    report.write_csv(out / "metrics.csv")
    report.write_json(out / "metrics.json")
    profile.save(out / "stationary.json")
    log.info("wrote %d events to %s", n_events, out)
    return EXIT_OK


def _verdicts(result, cfg: CityConfig, eps: float, alpha: float) -> dict:
    th = thresholds(cfg)
    props = []
    for eta, reps in result.reports.items():
        try:
            props.append(check_propositions(reps, eta, th, alpha=alpha).to_dict())
        except InsufficientSeedsError as exc:
            props.append({"kind": "propositions", "eta": eta, "skipped": str(exc)})
    points = {eta: reps for eta, reps in result.reports.items()}
    try:
        cor = check_corollaries(points, th, eps, alpha=alpha).to_dict()
    except MissingPointError as exc:
        cor = {"kind": "corollaries", "skipped": str(exc.args[0])}
    return {
        "thresholds": th.to_dict(),
        "alpha": alpha,
        "eps": eps,
        "failed_points": {str(k): v for k, v in result.failed.items()},
        "propositions": props,
        "corollaries": cor,
    }


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _read_config(args.config, args)
    try:
        grid = parse_grid(FINE_GRID if args.fine_grid else args.grid)
    except ValueError as exc:
        raise UserError(f"grid: {exc}") from None
    if args.seeds < 1:
        raise UserError("seeds: must be at least 1")
    if args.jobs is not None and args.jobs < 1:
        raise UserError("jobs: must be at least 1")
    if not args.eps > 0:
        raise UserError("eps: must be positive")
    plan = SweepPlan(
        base=cfg,
        eta_grid=grid,
        seeds_per_point=args.seeds,
        parallelism=args.jobs or default_parallelism(),
        calibration_horizon=args.calibration_horizon,
        max_iter=args.max_iter,
        alpha=args.alpha,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_sweep(plan)
    result.write_csv(out / "sweep.csv")
    result.write_sidecar(out / "sweep_points.json")
    if args.check:
        doc = _verdicts(result, cfg, args.eps, args.alpha)
        (out / "verdicts.json").write_text(json.dumps(doc, indent=2))
    if result.failed:
        log.error("%d sweep point(s) failed; see sweep_points.json", len(result.failed))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        events = read_day_events(args.events)
    except DayEventFormatError as exc:
        raise UserError(f"{args.events}: {exc}") from None
    rows = []
    for area in sorted({e.area_id for e in events}):
        mine = [e for e in events if e.area_id == area]
        streaks = empirical_streaks(mine, area, include_censored=args.include_censored)
        rows.append(
            (
                area,
                len({e.ocg_id for e in mine}),
                len(mine),
                len(streaks),
                repr(float(np.mean(streaks))) if streaks else "",
                max(streaks) if streaks else "",
            )
        )
    if args.out == "-":
        _write_rows(sys.stdout, rows)
    else:
        with open(args.out, "w", newline="") as fh:
            _write_rows(fh, rows)
    return EXIT_OK


def _write_rows(fh, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(ANALYZE_HEADER)
    w.writerows(rows)


def cmd_thresholds(args: argparse.Namespace) -> int:
    cfg = _read_config(args.config, args)
    th = thresholds(cfg)
    eta = cfg.departure_rate
    doc = th.to_dict()
    doc["eta"] = eta
    doc["regime"] = classify(eta, th).value if eta > 0 else None
    print(json.dumps(doc, indent=2))
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, help="departure rate (overrides the config file)")
    p.add_argument("--seed", type=int, help=f"master seed (overrides the config file and ${SEED_ENV})")
    p.add_argument("--horizon", type=float, help="simulated time span")


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--calibration-horizon", type=float, help="horizon of stationary-solve runs (default: horizon)")
    p.add_argument("--max-iter", type=int, default=50, help="stationary solve iteration cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="turfsim", description="Territorial competition simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation and write its log and metrics")
    p.add_argument("config", help="TOML config file")
    p.add_argument("--out", "-o", default=".", help="output directory")
    p.add_argument("--stationary", help="reuse a saved stationary profile instead of solving")
    _add_overrides(p)
    _add_solver(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep the departure rate over a grid")
    p.add_argument("config", help="TOML config file")
    p.add_argument("--out", "-o", default=".", help="output directory")
    p.add_argument("--grid", default=DEFAULT_GRID, help="start:stop:step (inclusive) or a comma list")
    p.add_argument("--fine-grid", action="store_true", help="use the fine 0.01-step grid up to 35")
    p.add_argument("--seeds", type=int, default=20, help="runs per grid point")
    p.add_argument("--jobs", "-j", type=int, help="worker processes (default: available cores)")
    p.add_argument("--check", action="store_true", help="also write regime-prediction verdicts")
    p.add_argument("--eps", type=float, default=0.5, help="offset around thresholds for the jump checks")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level of the checks")
    p.add_argument("--seed", type=int, help=f"master seed (overrides the config file and ${SEED_ENV})")
    p.add_argument("--horizon", type=float, help="simulated time span")
    _add_solver(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="streak statistics of a day,area_id,ocg_id CSV")
    p.add_argument("events", help="day-event CSV")
    p.add_argument("--out", "-o", default="-", help="output CSV path ('-' for stdout)")
    p.add_argument("--include-censored", action="store_true", help="count the streak still running at the end")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("thresholds", help="print the regime thresholds of a config")
    p.add_argument("config", help="TOML config file")
    p.add_argument("--eta", type=float, help="classify this departure rate instead of the config's")
    p.set_defaults(func=cmd_thresholds)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"turfsim: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UserError as exc:
        print(f"turfsim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"turfsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"turfsim: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
