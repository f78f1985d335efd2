"""Beliefs about whether an area is free, and the stationary profile they decay to."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .config import BeliefRecord, CityConfig

__all__ = [
    "P_CLAMP",
    "StationaryProfile",
    "ClockRegressionError",
    "belief_unoccupied",
    "belief_value",
    "record_observation",
    "record_departure",
    "solve_stationary",
    "initial_profile",
]

P_CLAMP = 1e-6


class ClockRegressionError(ValueError):
    """An observation or query is dated before the last recorded sighting."""


@dataclass(frozen=True)
class StationaryProfile:
    """Common-knowledge probabilities ``p[m]`` that area ``m`` is unoccupied."""

    p: tuple[float, ...]
    iterations_used: int = 0
    converged: bool = True
    residual: float = 0.0

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if any(not 0.0 < x < 1.0 for x in p):
            raise ValueError(f"stationary probabilities must lie strictly in (0, 1), got {p}")
        object.__setattr__(self, "p", p)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "StationaryProfile":
        d = json.loads(text)
        return cls(
            p=tuple(d["p"]),
            iterations_used=int(d["iterations_used"]),
            converged=bool(d["converged"]),
            residual=float(d["residual"]),
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "StationaryProfile":
        return cls.from_json(Path(path).read_text())


def belief_value(last_seen_time: Optional[float], state: int, p_m: float, now: float) -> float:
    """Probability that an area is free given the last sighting.

    The sighting's influence decays exponentially with time constant
    ``1 - p_m`` towards the prior ``p_m``.  ``last_seen_time=None`` means the
    area was never seen, and the prior is returned as is.
    """
    if last_seen_time is None:
        return p_m
    dt = now - last_seen_time
    if dt < 0:
        raise ClockRegressionError(f"query at {now} precedes last sighting at {last_seen_time}")
    decay = math.exp(-dt / (1.0 - p_m))
    q = p_m * (1.0 - decay) + (1 - state) * decay
    return min(1.0, max(0.0, q))


def belief_unoccupied(record: BeliefRecord, p_m: float, now: float) -> float:
    if not 0.0 < p_m < 1.0:
        raise ValueError(f"p_m must lie in (0, 1), got {p_m}")
    return belief_value(record.last_seen_time, record.last_seen_state, p_m, now)


def record_observation(record: BeliefRecord, now: float, found_occupied: bool) -> BeliefRecord:
    """Overwrite the record with a fresh sighting at ``now``."""
    if record.last_seen_time is not None and now < record.last_seen_time:
        raise ClockRegressionError(f"observation at {now} precedes last sighting at {record.last_seen_time}")
    return BeliefRecord(float(now), 1 if found_occupied else 0)


def record_departure(record: BeliefRecord, now: float) -> BeliefRecord:
    """The OCG leaves the area it was exploiting: it knows the area is now empty."""
    return record_observation(record, now, found_occupied=False)


def initial_profile(cfg: CityConfig) -> StationaryProfile:
    """Information-free starting guess ``1 / (1 + eta)`` for every area."""
    p0 = _clamp(1.0 / (1.0 + cfg.departure_rate))
    return StationaryProfile(p=(p0,) * cfg.n_areas, iterations_used=0, converged=False, residual=math.inf)


def _clamp(x: float) -> float:
    return min(1.0 - P_CLAMP, max(P_CLAMP, float(x)))


RunCallback = Callable[[CityConfig, StationaryProfile], Sequence[float]]


def solve_stationary(
    cfg: CityConfig,
    simulate: Optional[RunCallback] = None,
    damping: float = 0.5,
    tol: float = 1e-3,
    max_iter: int = 50,
    calibration_horizon: Optional[float] = None,
) -> StationaryProfile:
    """Damped fixed-point iteration for the unoccupied probabilities.

    ``simulate(cfg, profile)`` must return the measured fraction of time each
    area is unoccupied when every OCG plans with ``profile``.  The default
    runs the event engine for ``calibration_horizon`` (defaults to
    ``cfg.horizon``) with the config's own seed, so the map being iterated is
    deterministic.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if simulate is None:
        from .engine import measure_unoccupied

        simulate = measure_unoccupied
    if calibration_horizon is not None:
        cfg = cfg.with_overrides(horizon=float(calibration_horizon))

    current = np.array(initial_profile(cfg).p)
    residual = math.inf
    for it in range(1, max_iter + 1):
        profile = StationaryProfile(p=tuple(current), iterations_used=it - 1, converged=False, residual=residual)
        measured = np.asarray(simulate(cfg, profile), dtype=float)
        if measured.shape != current.shape or not np.all(np.isfinite(measured)):
            raise ValueError(f"calibration run returned invalid occupancy {measured!r}")
        nxt = np.clip((1.0 - damping) * current + damping * measured, P_CLAMP, 1.0 - P_CLAMP)
        residual = float(np.max(np.abs(nxt - current)))
        current = nxt
        if residual < tol:
            return StationaryProfile(p=tuple(current), iterations_used=it, converged=True, residual=residual)
    return StationaryProfile(p=tuple(current), iterations_used=max_iter, converged=False, residual=residual)
