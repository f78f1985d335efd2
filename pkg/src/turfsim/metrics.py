"""Observables computed from event logs and from day-stamped activity logs.

Model side (from an :class:`~turfsim.events.EventLog`), per area ``m``:

* concentration ``O[m]``: fraction of the measurement window the area is occupied;
* violence ``V[m]``: collisions at ``m`` per unit time;
* streak ``R[m]``: mean length of maximal runs of consecutive occupation
  spells by the same OCG, counted in spells or in elapsed time.

Data side (from :class:`DayEvent` rows): the number of distinct OCGs active
in an area, and the day-length of streaks of exclusive activity.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .config import CityConfig, EventKind, StreakMode
from .events import NONE_ID, EventLog

__all__ = [
    "AreaMetrics",
    "MetricsReport",
    "EmptyWindowError",
    "compute_metrics",
    "occupancy_fractions",
    "DayEvent",
    "DayEventFormatError",
    "empirical_streaks",
    "ocg_count",
    "read_day_events",
    "METRICS_CSV_HEADER",
    "DAY_EVENT_HEADER",
]

_COLL = int(EventKind.COLLISION)
_OCC = int(EventKind.OCCUPY_START)
_RET = int(EventKind.RETURN_TO_TURF)

METRICS_CSV_HEADER = ("area_id", "revenue", "O", "V", "R", "streaks")
DAY_EVENT_HEADER = ("day", "area_id", "ocg_id")


class EmptyWindowError(ValueError):
    pass


@dataclass(frozen=True)
class AreaMetrics:
    area_id: int
    revenue: float
    occupancy_fraction: float
    violence_rate: float
    mean_streak: float
    streak_count: int
    collisions: int
    spells: int


@dataclass(frozen=True)
class MetricsReport:
    areas: tuple[AreaMetrics, ...]
    total_collisions: int
    cumulative_payoff: tuple[float, ...]
    measured_window: tuple[float, float]
    streak_mode: str = StreakMode.SPELL_COUNT.value
    collision_breaks_streak: bool = False

    @property
    def O(self) -> np.ndarray:
        return np.array([a.occupancy_fraction for a in self.areas])

    @property
    def V(self) -> np.ndarray:
        return np.array([a.violence_rate for a in self.areas])

    @property
    def R(self) -> np.ndarray:
        return np.array([a.mean_streak for a in self.areas])

    @property
    def collisions(self) -> np.ndarray:
        return np.array([a.collisions for a in self.areas], dtype=np.int64)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["areas"] = [asdict(a) for a in self.areas]
        d["cumulative_payoff"] = list(self.cumulative_payoff)
        d["measured_window"] = list(self.measured_window)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            areas=tuple(AreaMetrics(**a) for a in d["areas"]),
            total_collisions=int(d["total_collisions"]),
            cumulative_payoff=tuple(d["cumulative_payoff"]),
            measured_window=tuple(d["measured_window"]),
            streak_mode=d.get("streak_mode", StreakMode.SPELL_COUNT.value),
            collision_breaks_streak=bool(d.get("collision_breaks_streak", False)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_json(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json())

    def write_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRICS_CSV_HEADER)
            for a in self.areas:
                w.writerow((a.area_id, repr(a.revenue), repr(a.occupancy_fraction), repr(a.violence_rate),
                            repr(a.mean_streak), a.streak_count))


def _window(cfg: CityConfig) -> tuple[float, float]:
    start, end = cfg.warmup_time, cfg.horizon
    if not end > start:
        raise EmptyWindowError(f"measurement window [{start}, {end}) is empty")
    return start, end


class _StreakTracker:
    """Runs of consecutive spells by one OCG in a single area."""

    __slots__ = ("owner", "spells", "first_start", "last_end", "broken", "lengths", "durations")

    def __init__(self):
        self.owner = NONE_ID
        self.spells = 0
        self.first_start = 0.0
        self.last_end = 0.0
        self.broken = False
        self.lengths: list[int] = []
        self.durations: list[float] = []

    def start_spell(self, ocg: int, t: float) -> None:
        if self.spells and ocg == self.owner and not self.broken:
            self.spells += 1
        else:
            self._close()
            self.owner, self.spells, self.first_start, self.broken = ocg, 1, t, False

    def end_spell(self, t: float) -> None:
        self.last_end = t

    def collision(self, ocg: int) -> None:
        if self.spells and ocg != self.owner:
            self.broken = True

    def _close(self) -> None:
        if self.spells:
            self.lengths.append(self.spells)
            self.durations.append(self.last_end - self.first_start)
        self.spells = 0

    def finish(self) -> None:
        self._close()


def compute_metrics(log: EventLog, cfg: CityConfig) -> MetricsReport:
    """Per-area O, V, R over ``[warmup_fraction * horizon, horizon]``.

    Occupied time is clipped to the window.  Only spells that start inside
    the window enter the streak statistics; a spell still open at the horizon
    ends there.  Payoff counts ``u[m]`` per spell completed in the window and
    ``-c`` per collision in the window.
    """
    w0, w1 = _window(cfg)
    length = w1 - w0
    m_areas = cfg.n_areas
    revenues = cfg.revenues
    cost = cfg.collision_cost
    breaks = cfg.collision_breaks_streak

    occupied = [0.0] * m_areas
    collisions = [0] * m_areas
    spells = [0] * m_areas
    spell_start = [0.0] * m_areas
    spell_counted = [False] * m_areas
    open_spell = [False] * m_areas
    payoff = [0.0] * cfg.n_ocgs
    trackers = [_StreakTracker() for _ in range(m_areas)]

    for ch in log.chunks():
        for t, k, i, a in zip(ch["time"].tolist(), ch["kind"].tolist(), ch["ocg"].tolist(), ch["area"].tolist()):
            if k == _OCC:
                spell_start[a] = t
                open_spell[a] = True
                if t >= w0:
                    spell_counted[a] = True
                    spells[a] += 1
                    trackers[a].start_spell(i, t)
                else:
                    spell_counted[a] = False
            elif k == _RET:
                if a == NONE_ID:
                    continue
                open_spell[a] = False
                if t > w0:
                    occupied[a] += t - max(spell_start[a], w0)
                    payoff[i] += revenues[a]
                if spell_counted[a]:
                    trackers[a].end_spell(t)
            elif k == _COLL:
                if t >= w0:
                    collisions[a] += 1
                    payoff[i] -= cost
                    if breaks:
                        trackers[a].collision(i)

    for a in range(m_areas):
        if open_spell[a]:
            occupied[a] += w1 - max(spell_start[a], w0)
            if spell_counted[a]:
                trackers[a].end_spell(w1)
        trackers[a].finish()

    duration_mode = cfg.streak_mode is StreakMode.DURATION
    areas = []
    for a in range(m_areas):
        tr = trackers[a]
        runs = tr.durations if duration_mode else tr.lengths
        areas.append(
            AreaMetrics(
                area_id=a,
                revenue=revenues[a],
                occupancy_fraction=min(1.0, occupied[a] / length),
                violence_rate=collisions[a] / length,
                mean_streak=float(np.mean(runs)) if runs else 0.0,
                streak_count=len(runs),
                collisions=collisions[a],
                spells=spells[a],
            )
        )
    return MetricsReport(
        areas=tuple(areas),
        total_collisions=sum(collisions),
        cumulative_payoff=tuple(payoff),
        measured_window=(w0, w1),
        streak_mode=cfg.streak_mode.value,
        collision_breaks_streak=breaks,
    )


def occupancy_fractions(log: EventLog, cfg: CityConfig) -> np.ndarray:
    """Vectorized O[m] only; used by calibration runs."""
    w0, w1 = _window(cfg)
    cols = log.arrays()
    t, kind, area = cols["time"], cols["kind"], cols["area"]
    out = np.zeros(cfg.n_areas)
    for m in range(cfg.n_areas):
        in_area = area == m
        starts = t[in_area & (kind == _OCC)]
        ends = t[in_area & (kind == _RET)]
        if len(starts) > len(ends):
            ends = np.append(ends, w1)
        out[m] = np.sum(np.clip(ends, w0, w1) - np.clip(starts, w0, w1))
    return np.minimum(out / (w1 - w0), 1.0)


# --------------------------------------------------------------------------
# day-stamped activity logs


class DayEventFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True, order=True)
class DayEvent:
    day: int
    area_id: int
    ocg_id: int

    def __post_init__(self):
        if self.day < 0:
            raise ValueError("day ordinals must be non-negative")


def empirical_streaks(events: Iterable[DayEvent], area_id: int, include_censored: bool = False) -> list[int]:
    """Lengths in days of exclusive-activity streaks in one area.

    A streak runs from the first day one OCG is seen until the first day a
    different OCG is seen; days without events do not interrupt it.  When
    several OCGs are active on the same day, the running streak ends that day
    and the new one is attributed to the lowest ``ocg_id`` among that day's
    OCGs other than the previous owner.  The last streak is censored: it
    runs through the last observed day inclusive and is only reported when
    ``include_censored`` is true.
    """
    by_day: dict[int, set[int]] = {}
    for e in events:
        if e.area_id == area_id:
            by_day.setdefault(e.day, set()).add(e.ocg_id)
    if not by_day:
        return []

    days = sorted(by_day)
    streaks: list[int] = []
    owner, start = min(by_day[days[0]]), days[0]
    for d in days[1:]:
        present = by_day[d]
        if present == {owner}:
            continue
        streaks.append(d - start)
        owner, start = min(present - {owner}), d
    if include_censored:
        streaks.append(days[-1] - start + 1)
    return streaks


def ocg_count(events: Iterable[DayEvent], area_id: int) -> int:
    """Distinct OCGs with at least one event in the area."""
    return len({e.ocg_id for e in events if e.area_id == area_id})


def read_day_events(path: Union[str, Path]) -> list[DayEvent]:
    """Parse a ``day,area_id,ocg_id`` CSV; raises :class:`DayEventFormatError` with the line number."""
    events = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DayEventFormatError(1, "missing header")
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DayEventFormatError(1, f"duplicate header column in {header}")
        if tuple(header) != DAY_EVENT_HEADER:
            raise DayEventFormatError(1, f"expected header {','.join(DAY_EVENT_HEADER)}, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DayEventFormatError(lineno, f"expected 3 fields, got {len(row)}")
            try:
                day, area, ocg = (int(c) for c in row)
                events.append(DayEvent(day, area, ocg))
            except ValueError as exc:
                raise DayEventFormatError(lineno, str(exc)) from None
    return events
