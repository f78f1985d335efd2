"""Parameter sweeps over the departure rate eta.

Every grid point gets one stationary solve (calibrated with the base seed),
then ``seeds_per_point`` measurement runs.  Run ``k`` uses seed
``base.seed + k`` at every grid point, so neighbouring points share random
numbers and a one-seed sweep reproduces a plain ``simulate`` run exactly.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .belief import StationaryProfile, solve_stationary
from .config import CityConfig, validate_config
from .engine import run
from .metrics import MetricsReport, compute_metrics
from .regime import BoundaryWarning, bootstrap_ci, classify, thresholds

__all__ = [
    "SweepPlan",
    "SweepRow",
    "SweepResult",
    "SWEEP_CSV_HEADER",
    "DEFAULT_GRID",
    "FINE_GRID",
    "parse_grid",
    "run_sweep",
    "run_seed",
    "default_parallelism",
]

log = logging.getLogger(__name__)

SWEEP_CSV_HEADER = (
    "eta", "regime", "area_id", "revenue",
    "O_mean", "O_ci_lo", "O_ci_hi",
    "V_mean", "V_ci_lo", "V_ci_hi",
    "R_mean", "R_ci_lo", "R_ci_hi",
    "seeds",
)
DEFAULT_GRID = "0.5:35:0.5"
FINE_GRID = "0.01:35:0.01"

_SEED_MOD = 2**64


def parse_grid(spec: str) -> tuple[float, ...]:
    """``"start:stop:step"`` (stop inclusive) or a comma-separated list."""
    spec = spec.strip()
    if not spec:
        raise ValueError("empty grid")
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid range must be start:stop:step, got {spec!r}")
        start, stop, step = (float(x) for x in parts)
        if not step > 0:
            raise ValueError("grid step must be positive")
        if stop < start:
            raise ValueError("grid stop is below start")
        n = int(math.floor((stop - start) / step + 1e-9))
        grid = tuple(round(start + k * step, 10) for k in range(n + 1))
    else:
        grid = tuple(float(x) for x in spec.split(","))
    _check_grid(grid)
    return grid


def _check_grid(grid: Sequence[float]) -> None:
    if not grid:
        raise ValueError("empty grid")
    if any(not (math.isfinite(g) and g > 0) for g in grid):
        raise ValueError("grid values must be positive and finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")


@dataclass(frozen=True)
class SweepPlan:
    base: CityConfig
    eta_grid: tuple[float, ...]
    seeds_per_point: int = 20
    parallelism: int = 1
    calibration_horizon: Optional[float] = None
    damping: float = 0.5
    tol: float = 1e-3
    max_iter: int = 50
    alpha: float = 0.05
    n_boot: int = 10_000

    def __post_init__(self):
        grid = tuple(float(x) for x in self.eta_grid)
        _check_grid(grid)
        object.__setattr__(self, "eta_grid", grid)
        if self.seeds_per_point < 1:
            raise ValueError("seeds_per_point must be at least 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")

    def point_config(self, eta: float) -> CityConfig:
        return self.base.with_overrides(departure_rate=eta)

    def run_seeds(self) -> tuple[int, ...]:
        return tuple((self.base.seed + k) % _SEED_MOD for k in range(self.seeds_per_point))


@dataclass(frozen=True)
class SweepRow:
    eta: float
    regime: str
    area_id: int
    revenue: float
    O_mean: float
    O_ci_lo: float
    O_ci_hi: float
    V_mean: float
    V_ci_lo: float
    V_ci_hi: float
    R_mean: float
    R_ci_lo: float
    R_ci_hi: float
    seeds: int

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, k) for k in SWEEP_CSV_HEADER)


@dataclass
class SweepResult:
    plan: SweepPlan
    rows: list[SweepRow]
    reports: dict[float, list[MetricsReport]] = field(default_factory=dict)
    profiles: dict[float, StationaryProfile] = field(default_factory=dict)
    failed: dict[float, str] = field(default_factory=dict)

    def write_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_CSV_HEADER)
            for r in self.rows:
                w.writerow(repr(v) if isinstance(v, float) else v for v in r.as_tuple())

    def sidecar(self) -> dict:
        """Per-point provenance: stationary profile, run seeds, failures."""
        return {
            "base_seed": self.plan.base.seed,
            "run_seeds": list(self.plan.run_seeds()),
            "points": [
                {
                    "eta": eta,
                    "stationary": _profile_dict(self.profiles.get(eta)),
                    "failed": self.failed.get(eta),
                }
                for eta in self.plan.eta_grid
            ],
        }

    def write_sidecar(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.sidecar(), indent=2))


def _profile_dict(p: Optional[StationaryProfile]) -> Optional[dict]:
    if p is None:
        return None
    return json.loads(p.to_json())


# --------------------------------------------------------------------------
# workers (top level so they pickle)


def _solve_point(plan: SweepPlan, eta: float) -> StationaryProfile:
    cfg = plan.point_config(eta)
    return solve_stationary(
        cfg,
        damping=plan.damping,
        tol=plan.tol,
        max_iter=plan.max_iter,
        calibration_horizon=plan.calibration_horizon,
    )


def run_seed(cfg: CityConfig, profile: StationaryProfile) -> MetricsReport:
    """One measurement run reduced to its metrics."""
    events = run(cfg, profile)
    try:
        return compute_metrics(events, cfg)
    finally:
        events.close()


def _seed_task(args: tuple[CityConfig, StationaryProfile]) -> MetricsReport:
    return run_seed(*args)


def _solve_task(args: tuple[SweepPlan, float]) -> StationaryProfile:
    return _solve_point(*args)


class _Guarded:
    """Wrap a task so failures come back as ``(False, message)``."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, arg):
        try:
            return True, self.fn(arg)
        except Exception as exc:  # reported per point, never aborts the sweep
            return False, f"{type(exc).__name__}: {exc}"


def _map(fn, items: Iterable, parallelism: int) -> list:
    items = list(items)
    guarded = _Guarded(fn)
    if parallelism <= 1 or len(items) <= 1:
        return [guarded(x) for x in items]
    workers = min(parallelism, len(items))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(guarded, items))


# --------------------------------------------------------------------------


def _aggregate(values: np.ndarray, plan: SweepPlan, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    if values.shape[0] == 1:
        return values[0], values[0]
    return bootstrap_ci(values, plan.alpha, plan.n_boot, rng)


def run_sweep(plan: SweepPlan) -> SweepResult:
    """Solve, simulate and aggregate every grid point.

    A point whose solve or runs raise is kept in the table with NaN
    statistics and listed in :attr:`SweepResult.failed`.
    """
    validate_config(plan.base)
    th = thresholds(plan.base)
    grid = plan.eta_grid
    m_areas = plan.base.n_areas

    solved = _map(_solve_task, [(plan, eta) for eta in grid], plan.parallelism)
    profiles: dict[float, StationaryProfile] = {}
    failed: dict[float, str] = {}
    for eta, (ok, val) in zip(grid, solved):
        if ok:
            profiles[eta] = val
            if not val.converged:
                log.warning("stationary solve at eta=%s did not converge (residual %.3g)", eta, val.residual)
        else:
            failed[eta] = val

    seeds = plan.run_seeds()
    tasks, owners = [], []
    for eta in grid:
        if eta in profiles:
            cfg = plan.point_config(eta)
            for s in seeds:
                tasks.append((cfg.with_overrides(seed=s), profiles[eta]))
                owners.append(eta)
    outcomes = _map(_seed_task, tasks, plan.parallelism)

    reports: dict[float, list[MetricsReport]] = {eta: [] for eta in profiles}
    for eta, (ok, val) in zip(owners, outcomes):
        if eta in failed:
            continue
        if ok:
            reports[eta].append(val)
        else:
            failed[eta] = val
            reports.pop(eta, None)

    rows: list[SweepRow] = []
    for i_eta, eta in enumerate(grid):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            regime = classify(eta, th).value
        revs = plan.base.revenues
        if eta in failed:
            nan = math.nan
            rows.extend(
                SweepRow(eta, regime, m, revs[m], nan, nan, nan, nan, nan, nan, nan, nan, nan, 0)
                for m in range(m_areas)
            )
            continue
        reps = reports[eta]
        rng = np.random.default_rng([plan.base.seed % _SEED_MOD, i_eta])
        stats = {}
        for obs in ("O", "V", "R"):
            vals = np.array([getattr(r, obs) for r in reps])
            lo, hi = _aggregate(vals, plan, rng)
            stats[obs] = (vals.mean(axis=0), lo, hi)
        for m in range(m_areas):
            rows.append(
                SweepRow(
                    eta, regime, m, revs[m],
                    *(float(x[m]) for x in stats["O"]),
                    *(float(x[m]) for x in stats["V"]),
                    *(float(x[m]) for x in stats["R"]),
                    len(reps),
                )
            )
    for eta, msg in failed.items():
        log.error("sweep point eta=%s failed: %s", eta, msg)
    return SweepResult(plan, rows, reports, profiles, failed)


def default_parallelism() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
