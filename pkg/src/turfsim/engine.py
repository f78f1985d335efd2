"""Continuous-time event-driven simulation of OCGs competing for city areas.

Each OCG holds exactly one pending clock: an exponential(eta) departure clock
while in its turf, an exponential(gamma) return clock while occupying an
area.  Exploration after a departure is instantaneous: the OCG walks its
exploration order (fixed at departure time), paying the collision cost at
every occupied area, and settles in the first free one.  If the order runs
out it goes straight back to its turf and restarts its departure clock.

The incumbent of an area is not told about intruders unless
``incumbent_observes_intrusion`` is set, in which case it leaves believing
the area contested (``z = 1``) instead of empty.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .belief import StationaryProfile, belief_value
from .config import BeliefRecord, CityConfig, EventKind, InitialBeliefs, Location, OcgState
from .events import DEFAULT_MAX_EVENTS, NONE_ID, EventLog
from .rng import DEPARTURE, RETURN, ExpStream
from .strategy import rank_areas

__all__ = ["SimulationRun", "run", "simulate", "replay_check", "ReplayReport", "measure_unoccupied"]

_DEP = int(EventKind.DEPARTURE)
_COLL = int(EventKind.COLLISION)
_OCC = int(EventKind.OCCUPY_START)
_RET = int(EventKind.RETURN_TO_TURF)


@dataclass
class SimulationRun:
    """Outcome of one run: the log plus the final per-OCG state."""

    cfg: CityConfig
    stationary: StationaryProfile
    events: EventLog
    ocgs: list[OcgState]
    occupancy: list[Optional[int]]
    clock: float


def simulate(
    cfg: CityConfig,
    stationary: StationaryProfile,
    *,
    max_events: int = DEFAULT_MAX_EVENTS,
    spill_dir: Optional[Union[str, Path]] = None,
) -> SimulationRun:
    """Simulate from time 0 to ``cfg.horizon`` and keep the final state."""
    n, m_areas = cfg.n_ocgs, cfg.n_areas
    if len(stationary.p) != m_areas:
        raise ValueError(f"stationary profile has {len(stationary.p)} areas, config has {m_areas}")
    revenues = cfg.revenues
    cost = cfg.collision_cost
    eta = cfg.departure_rate
    gamma = cfg.return_rate
    horizon = cfg.horizon
    p = stationary.p
    mark_intrusion = cfg.incumbent_observes_intrusion

    log = EventLog(max_events=max_events, spill_dir=spill_dir)
    append = log.append

    dep_clock = [ExpStream(cfg.seed, i, DEPARTURE) for i in range(n)]
    ret_clock = [ExpStream(cfg.seed, i, RETURN) for i in range(n)]

    skip = cfg.skip_unprofitable
    t0: Optional[float] = 0.0 if cfg.initial_beliefs is InitialBeliefs.EMPTY_CITY else None
    seen_t: list[list[Optional[float]]] = [[t0] * m_areas for _ in range(n)]
    seen_z = [[0] * m_areas for _ in range(n)]
    location = [NONE_ID] * n
    payoff = [0.0] * n
    intruded = [False] * n
    occupant = [NONE_ID] * m_areas
    area_ids = range(m_areas)

    heap: list[tuple[float, int]] = []
    if eta > 0:
        heap = [(dep_clock[i].draw() / eta, i) for i in range(n)]
        heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    clock = 0.0

    while heap and heap[0][0] <= horizon:
        t, i = pop(heap)
        clock = t
        here = location[i]
        if here == NONE_ID:
            append(t, _DEP, i)
            st, sz = seen_t[i], seen_z[i]
            beliefs = [belief_value(st[m], sz[m], p[m], t) for m in area_ids]
            for m in rank_areas(revenues, cost, beliefs, skip):
                holder = occupant[m]
                if holder != NONE_ID:
                    append(t, _COLL, i, m, holder)
                    payoff[i] -= cost
                    st[m] = t
                    sz[m] = 1
                    if mark_intrusion:
                        intruded[holder] = True
                else:
                    append(t, _OCC, i, m)
                    occupant[m] = i
                    location[i] = m
                    push(heap, (t + ret_clock[i].draw() / gamma, i))
                    break
            else:
                append(t, _RET, i)
                push(heap, (t + dep_clock[i].draw() / eta, i))
        else:
            append(t, _RET, i, here)
            occupant[here] = NONE_ID
            location[i] = NONE_ID
            payoff[i] += revenues[here]
            seen_t[i][here] = t
            seen_z[i][here] = 1 if intruded[i] else 0
            intruded[i] = False
            push(heap, (t + dep_clock[i].draw() / eta, i))

    for holder_area, holder in enumerate(occupant):
        if holder != NONE_ID and location[holder] != holder_area:
            raise RuntimeError(f"occupancy table disagrees with OCG {holder} location")

    next_time = {i: t for t, i in heap}
    states = [
        OcgState(
            ocg_id=i,
            beliefs=[BeliefRecord(seen_t[i][m], seen_z[i][m]) for m in area_ids],
            location=Location(None if location[i] == NONE_ID else location[i]),
            cumulative_payoff=payoff[i],
            next_event_time=next_time.get(i, math.inf),
        )
        for i in range(n)
    ]
    occupancy = [None if o == NONE_ID else o for o in occupant]
    return SimulationRun(cfg, stationary, log, states, occupancy, clock)


def run(cfg: CityConfig, stationary: StationaryProfile, **kwargs) -> EventLog:
    """Simulate and return only the event log."""
    return simulate(cfg, stationary, **kwargs).events


def measure_unoccupied(cfg: CityConfig, stationary: StationaryProfile) -> np.ndarray:
    """Calibration callback: fraction of the measurement window each area was free."""
    from .metrics import occupancy_fractions

    log = run(cfg, stationary)
    try:
        return 1.0 - occupancy_fractions(log, cfg)
    finally:
        log.close()


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    index: Optional[int] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def replay_check(log: EventLog, cfg: CityConfig) -> ReplayReport:
    """Re-validate a log against the dynamics and report the first violation."""
    n, m_areas = cfg.n_ocgs, cfg.n_areas
    occupant = [NONE_ID] * m_areas
    # per OCG: NONE_ID in turf, -2 exploring, otherwise the occupied area
    exploring = -2
    status = [NONE_ID] * n
    excursion_time = [0.0] * n
    visited: list[set] = [set() for _ in range(n)]
    last_t = -math.inf
    idx = 0

    def fail(msg: str) -> ReplayReport:
        return ReplayReport(False, idx, f"event {idx}: {msg}")

    for ch in log.chunks():
        for t, k, i, a, inc in zip(
            ch["time"].tolist(), ch["kind"].tolist(), ch["ocg"].tolist(), ch["area"].tolist(), ch["incumbent"].tolist()
        ):
            if not t >= last_t:
                return fail(f"time {t} precedes previous event at {last_t}")
            if t < 0 or t > cfg.horizon:
                return fail(f"time {t} outside [0, {cfg.horizon}]")
            last_t = t
            if not 0 <= i < n:
                return fail(f"unknown ocg_id {i}")
            if a != NONE_ID and not 0 <= a < m_areas:
                return fail(f"unknown area_id {a}")
            if k in (_COLL, _OCC, _RET) and status[i] == exploring and t != excursion_time[i]:
                return fail(f"OCG {i} exploration is not instantaneous")

            if k == _DEP:
                if status[i] != NONE_ID:
                    return fail(f"OCG {i} departs while not in its turf")
                if a != NONE_ID or inc != NONE_ID:
                    return fail("departure carries an area or incumbent")
                status[i] = exploring
                excursion_time[i] = t
                visited[i].clear()
            elif k == _COLL:
                if status[i] != exploring:
                    return fail(f"OCG {i} collides while not exploring")
                if a == NONE_ID:
                    return fail("collision without area")
                if inc == NONE_ID or inc == i:
                    return fail("collision needs an incumbent distinct from the intruder")
                if occupant[a] != inc:
                    return fail(f"collision at area {a} names absent incumbent {inc}")
                if a in visited[i]:
                    return fail(f"OCG {i} explores area {a} twice in one excursion")
                visited[i].add(a)
            elif k == _OCC:
                if status[i] != exploring:
                    return fail(f"OCG {i} occupies while not exploring")
                if a == NONE_ID or inc != NONE_ID:
                    return fail("occupation needs an area and no incumbent")
                if occupant[a] != NONE_ID:
                    return fail(f"area {a} already occupied by OCG {occupant[a]}")
                if a in visited[i]:
                    return fail(f"OCG {i} explores area {a} twice in one excursion")
                occupant[a] = i
                status[i] = a
            elif k == _RET:
                if inc != NONE_ID:
                    return fail("return carries an incumbent")
                if a == NONE_ID:
                    if status[i] != exploring:
                        return fail(f"OCG {i} abandons an excursion it is not on")
                else:
                    if status[i] != a or occupant[a] != i:
                        return fail(f"OCG {i} returns from area {a} it does not occupy")
                    occupant[a] = NONE_ID
                status[i] = NONE_ID
            else:
                return fail(f"unknown event kind {k}")
            idx += 1

    for i, s in enumerate(status):
        if s == exploring:
            return ReplayReport(False, idx, f"OCG {i} left mid-excursion at end of log")
    return ReplayReport(True, None, "")
