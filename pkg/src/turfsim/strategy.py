"""Exploration ordering: visit areas by decreasing expected return.

An OCG leaving its turf ranks every area by ``u_m - c / q_m``, where ``q_m``
is its current belief that the area is free, and explores them in that
order until it finds a free one.
"""
from __future__ import annotations

import math
from typing import Sequence

from .belief import StationaryProfile, belief_unoccupied
from .config import CityConfig, OcgState

__all__ = ["MINUS_INF", "expected_return", "rank_areas", "exploration_order"]

MINUS_INF = -math.inf


def expected_return(u_m: float, c: float, q: float) -> float:
    """Revenue net of the expected collision cost, ``u_m - c / q``.

    ``q == 0`` means a certain collision and maps to :data:`MINUS_INF`.
    """
    if q <= 0.0:
        return MINUS_INF
    return u_m - c / q


def rank_areas(
    revenues: Sequence[float], c: float, beliefs: Sequence[float], skip_unprofitable: bool = False
) -> list[int]:
    """Areas sorted by expected return, best first; ties go to the lower id.

    Areas believed certainly occupied (return ``MINUS_INF``) are dropped.
    With ``skip_unprofitable`` every area whose return is ``<= 0`` is dropped too.
    """
    cutoff = 0.0 if skip_unprofitable else MINUS_INF
    scored = []
    for m, (u, q) in enumerate(zip(revenues, beliefs)):
        r = expected_return(u, c, q)
        if r > cutoff:
            scored.append((-r, m))
    scored.sort()
    return [m for _, m in scored]


def exploration_order(ocg: OcgState, cfg: CityConfig, p: StationaryProfile, now: float) -> list[int]:
    beliefs = [belief_unoccupied(rec, p_m, now) for rec, p_m in zip(ocg.beliefs, p.p)]
    return rank_areas(cfg.revenues, cfg.collision_cost, beliefs, cfg.skip_unprofitable)
