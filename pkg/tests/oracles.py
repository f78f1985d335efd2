"""Independent reference implementations used to cross-check the package."""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import expm

from turfsim.config import EventKind


def ctmc_belief(p: float, z: int, dt: float) -> float:
    """P(area free after dt) for a two-state chain with stationary free probability p
    and relaxation time 1 - p, started occupied (z=1) or free (z=0)."""
    to_free = p / (1.0 - p)
    to_busy = 1.0
    # states: 0 free, 1 occupied
    q = np.array([[-to_busy, to_busy], [to_free, -to_free]])
    start = np.array([0.0, 1.0]) if z else np.array([1.0, 0.0])
    return float((start @ expm(q * dt))[0])


def greedy_order(revenues, c, beliefs, cutoff=-math.inf):
    """Selection sort: repeatedly take the best remaining area (lowest id on ties)."""
    left = [m for m in range(len(revenues)) if beliefs[m] > 0 and revenues[m] - c / beliefs[m] > cutoff]
    out = []
    while left:
        best = left[0]
        for m in left[1:]:
            if revenues[m] - c / beliefs[m] > revenues[best] - c / beliefs[best]:
                best = m
        out.append(best)
        left.remove(best)
    return out


def timeline_metrics(records, cfg):
    """Brute-force walk over the piecewise-constant occupancy timeline.

    Returns (O, V, spell-count runs, duration runs, payoff) with runs as
    per-area lists.
    """
    m_areas = cfg.n_areas
    w0, w1 = cfg.warmup_time, cfg.horizon
    occupant = [None] * m_areas
    occupied = [0.0] * m_areas
    coll = [0] * m_areas
    payoff = [0.0] * cfg.n_ocgs
    prev = 0.0
    spells = [[] for _ in range(m_areas)]  # (start, end, ocg) for spells starting in window
    open_start = [None] * m_areas
    marks = [[] for _ in range(m_areas)]  # (time, "spell"/"coll", ocg)

    def advance(t):
        lo, hi = max(prev, w0), min(t, w1)
        if hi > lo:
            for m in range(m_areas):
                if occupant[m] is not None:
                    occupied[m] += hi - lo

    for r in records:
        advance(r.time)
        prev = r.time
        if r.kind == EventKind.OCCUPY_START:
            occupant[r.area_id] = r.ocg_id
            open_start[r.area_id] = r.time
        elif r.kind == EventKind.RETURN_TO_TURF and r.area_id is not None:
            m = r.area_id
            if open_start[m] >= w0:
                spells[m].append((open_start[m], r.time, r.ocg_id))
            if r.time > w0:
                payoff[r.ocg_id] += cfg.revenues[m]
            occupant[m] = None
            open_start[m] = None
        elif r.kind == EventKind.COLLISION and r.time >= w0:
            coll[r.area_id] += 1
            payoff[r.ocg_id] -= cfg.collision_cost
            marks[r.area_id].append((r.time, 1, r.ocg_id))
    advance(w1)
    for m in range(m_areas):
        if occupant[m] is not None and open_start[m] >= w0:
            spells[m].append((open_start[m], w1, occupant[m]))

    length = w1 - w0
    count_runs, dur_runs = [], []
    for m in range(m_areas):
        seq = [(s, 0, o, e) for s, e, o in spells[m]]
        if cfg.collision_breaks_streak:
            seq += [(t, 1, o, None) for t, _, o in marks[m]]
        seq.sort(key=lambda x: (x[0], x[1]))
        # split the spell sequence into maximal same-owner runs
        runs, cur = [], []
        for item in seq:
            if item[1] == 1:
                if cur and item[2] != cur[-1][2]:
                    runs.append(cur)
                    cur = []
                continue
            if cur and item[2] != cur[-1][2]:
                runs.append(cur)
                cur = []
            cur.append(item)
        if cur:
            runs.append(cur)
        count_runs.append([len(r) for r in runs])
        dur_runs.append([r[-1][3] - r[0][0] for r in runs])
    O = [min(1.0, x / length) for x in occupied]
    V = [x / length for x in coll]
    return O, V, count_runs, dur_runs, payoff


def day_walk_streaks(events, area_id, include_censored=False):
    """Walk every calendar day between the first and last event of the area."""
    rows = sorted((e.day, e.ocg_id) for e in events if e.area_id == area_id)
    if not rows:
        return []
    present = {d: {o for _, o in grp} for d, grp in itertools.groupby(rows, key=lambda r: r[0])}
    first, last = rows[0][0], rows[-1][0]
    owner = min(present[first])
    length = 0
    out = []
    for day in range(first, last + 1):
        seen = present.get(day, set())
        others = seen - {owner}
        if day != first and others:
            out.append(length)
            owner = min(others)
            length = 0
        length += 1
    if include_censored:
        out.append(length)
    return out
