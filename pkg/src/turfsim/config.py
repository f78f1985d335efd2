"""Domain types and configuration handling.

A city is a list of areas ranked by revenue; a fixed number of organized
criminal groups (OCGs) leave their turf at rate ``departure_rate``, look for
an unoccupied area, and go home at rate ``return_rate``.

The on-disk config format is TOML with one key per line::

    n_ocgs = 3
    revenues = [30.0, 20.0, 10.0]
    departure_rate = 15.0
    return_rate = 1.0
    collision_cost = 1.0
    horizon = 10000.0
    warmup_fraction = 0.1
    seed = 12345
    streak_mode = "spell_count"
    collision_breaks_streak = false
    incumbent_observes_intrusion = false
    skip_unprofitable = false
    initial_beliefs = "empty_city"

Only ``revenues``, ``n_ocgs``, ``departure_rate``, ``collision_cost`` and
``horizon`` are required.  An ``[[areas]]`` array of tables with a
``revenue`` key is accepted in place of ``revenues``.
"""
from __future__ import annotations

import enum
import math
import sys
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "AreaSpec",
    "CityConfig",
    "StreakMode",
    "InitialBeliefs",
    "BeliefRecord",
    "Location",
    "OcgState",
    "EventKind",
    "EventRecord",
    "ConfigError",
    "RevenueOrderError",
    "RevenueBelowCostError",
    "DuplicateGapError",
    "DuplicateGapWarning",
    "NonPositiveParameterError",
    "validate_config",
    "load_config",
    "dump_config",
    "dumps_config",
    "loads_config",
    "config_from_mapping",
    "config_to_mapping",
    "TEN_AREA_REVENUES",
]

#: Ten-area revenue ladder used for the many-group experiments.
TEN_AREA_REVENUES = (173.0, 125.0, 100.0, 76.0, 63.0, 51.0, 42.0, 35.0, 29.0, 26.0)

_MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """Raised when a :class:`CityConfig` violates one of its invariants.

    ``field`` names the offending configuration key.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class RevenueOrderError(ConfigError):
    pass


class RevenueBelowCostError(ConfigError):
    pass


class DuplicateGapError(ConfigError):
    pass


class NonPositiveParameterError(ConfigError):
    pass


class StreakMode(str, enum.Enum):
    SPELL_COUNT = "spell_count"
    DURATION = "duration"


class InitialBeliefs(str, enum.Enum):
    """How OCGs regard each area at time 0.

    ``empty_city``: every area was seen empty at t=0 (true: nobody has left
    their turf yet).  ``never_seen``: beliefs start at the stationary prior.
    """

    EMPTY_CITY = "empty_city"
    NEVER_SEEN = "never_seen"


@dataclass(frozen=True)
class AreaSpec:
    area_id: int
    revenue: float


@dataclass(frozen=True)
class CityConfig:
    """Full parameterization of one simulation experiment."""

    areas: tuple[AreaSpec, ...]
    n_ocgs: int
    departure_rate: float
    collision_cost: float
    horizon: float
    return_rate: float = 1.0
    warmup_fraction: float = 0.1
    seed: int = 0
    streak_mode: StreakMode = StreakMode.SPELL_COUNT
    collision_breaks_streak: bool = False
    incumbent_observes_intrusion: bool = False
    skip_unprofitable: bool = False
    initial_beliefs: InitialBeliefs = InitialBeliefs.EMPTY_CITY

    def __post_init__(self):
        areas = tuple(
            a if isinstance(a, AreaSpec) else AreaSpec(i, float(a))
            for i, a in enumerate(self.areas)
        )
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "streak_mode", StreakMode(self.streak_mode))
        object.__setattr__(self, "initial_beliefs", InitialBeliefs(self.initial_beliefs))

    @classmethod
    def from_revenues(cls, revenues: Iterable[float], **kwargs) -> "CityConfig":
        areas = tuple(AreaSpec(i, float(u)) for i, u in enumerate(revenues))
        return cls(areas=areas, **kwargs)

    @property
    def revenues(self) -> tuple[float, ...]:
        return tuple(a.revenue for a in self.areas)

    @property
    def n_areas(self) -> int:
        return len(self.areas)

    @property
    def warmup_time(self) -> float:
        return self.warmup_fraction * self.horizon

    def with_overrides(self, **changes) -> "CityConfig":
        """Return a copy with the given fields replaced (``None`` values ignored)."""
        changes = {k: v for k, v in changes.items() if v is not None}
        if "revenues" in changes:
            revs = changes.pop("revenues")
            changes["areas"] = tuple(AreaSpec(i, float(u)) for i, u in enumerate(revs))
        return replace(self, **changes)


class DuplicateGapWarning(UserWarning):
    pass


def validate_config(cfg: CityConfig, strict_gaps: bool = False) -> CityConfig:
    """Check every :class:`CityConfig` invariant and return ``cfg`` unchanged.

    A departure rate of exactly zero is allowed: nobody ever leaves their
    turf and the simulation produces an empty log.

    Equal adjacent revenue gaps make two regime thresholds coincide.  That is
    harmless for the three-area city, so it only warns unless
    ``strict_gaps`` is set.
    """
    if not cfg.areas:
        raise NonPositiveParameterError("areas", "at least one area is required")
    for i, a in enumerate(cfg.areas):
        if a.area_id != i:
            raise ConfigError("areas", f"area ids must be 0..M-1 in order, got {a.area_id} at {i}")
        if not (a.revenue > 0) or not math.isfinite(a.revenue):
            raise NonPositiveParameterError("revenues", f"revenue of area {i} must be positive")
    if isinstance(cfg.n_ocgs, bool) or not isinstance(cfg.n_ocgs, int) or cfg.n_ocgs < 1:
        raise NonPositiveParameterError("n_ocgs", "must be a positive integer")
    if not (cfg.departure_rate >= 0) or not math.isfinite(cfg.departure_rate):
        raise NonPositiveParameterError("departure_rate", "must be a non-negative finite number")
    for name in ("return_rate", "collision_cost", "horizon"):
        value = getattr(cfg, name)
        if not (value > 0) or not math.isfinite(value):
            raise NonPositiveParameterError(name, "must be positive and finite")
    if not (0.0 <= cfg.warmup_fraction < 1.0):
        raise ConfigError("warmup_fraction", "must lie in [0, 1)")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int) or not 0 <= cfg.seed <= _MAX_SEED:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")

    revs = cfg.revenues
    for j in range(len(revs) - 1):
        if not revs[j] > revs[j + 1]:
            raise RevenueOrderError(
                "revenues", f"revenues must be strictly decreasing (u[{j}]={revs[j]} <= u[{j + 1}]={revs[j + 1]})"
            )
    if not revs[-1] > cfg.collision_cost:
        raise RevenueBelowCostError(
            "revenues", f"lowest revenue {revs[-1]} must exceed collision_cost {cfg.collision_cost}"
        )
    gaps = area_gaps(revs)
    if len(set(gaps)) != len(gaps):
        msg = f"adjacent revenue gaps should be pairwise distinct, got {gaps}"
        if strict_gaps:
            raise DuplicateGapError("revenues", msg)
        warnings.warn(msg, DuplicateGapWarning, stacklevel=2)
    return cfg


_REQUIRED = ("n_ocgs", "departure_rate", "collision_cost", "horizon")
_OPTIONAL = (
    "return_rate",
    "warmup_fraction",
    "seed",
    "streak_mode",
    "collision_breaks_streak",
    "incumbent_observes_intrusion",
    "skip_unprofitable",
    "initial_beliefs",
)


def config_from_mapping(data: Mapping[str, Any]) -> CityConfig:
    """Build a config from a parsed key-value mapping (TOML/JSON shaped)."""
    data = dict(data)
    if "revenues" in data and "areas" in data:
        raise ConfigError("areas", "give either 'revenues' or 'areas', not both")
    if "revenues" in data:
        revenues = data.pop("revenues")
    elif "areas" in data:
        try:
            revenues = [a["revenue"] for a in data.pop("areas")]
        except (TypeError, KeyError):
            raise ConfigError("areas", "each [[areas]] entry needs a 'revenue' key") from None
    else:
        raise ConfigError("revenues", "missing required key")
    if not isinstance(revenues, (list, tuple)) or not all(
        isinstance(u, (int, float)) and not isinstance(u, bool) for u in revenues
    ):
        raise ConfigError("revenues", "must be a list of numbers")

    kwargs: dict[str, Any] = {}
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(key, "missing required key")
        kwargs[key] = data.pop(key)
    for key in _OPTIONAL:
        if key in data:
            kwargs[key] = data.pop(key)
    if data:
        unknown = sorted(data)[0]
        raise ConfigError(unknown, "unknown configuration key")

    for key in ("departure_rate", "collision_cost", "horizon", "return_rate", "warmup_fraction"):
        if key in kwargs:
            v = kwargs[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(key, "must be a number")
            kwargs[key] = float(v)
    if "streak_mode" in kwargs:
        try:
            kwargs["streak_mode"] = StreakMode(kwargs["streak_mode"])
        except ValueError:
            raise ConfigError("streak_mode", "must be 'spell_count' or 'duration'") from None
    if "initial_beliefs" in kwargs:
        try:
            kwargs["initial_beliefs"] = InitialBeliefs(kwargs["initial_beliefs"])
        except ValueError:
            raise ConfigError("initial_beliefs", "must be 'empty_city' or 'never_seen'") from None
    for key in ("collision_breaks_streak", "incumbent_observes_intrusion", "skip_unprofitable"):
        if key in kwargs and not isinstance(kwargs[key], bool):
            raise ConfigError(key, "must be a boolean")
    return CityConfig.from_revenues([float(u) for u in revenues], **kwargs)


def config_to_mapping(cfg: CityConfig) -> dict[str, Any]:
    return {
        "n_ocgs": cfg.n_ocgs,
        "revenues": list(cfg.revenues),
        "departure_rate": cfg.departure_rate,
        "return_rate": cfg.return_rate,
        "collision_cost": cfg.collision_cost,
        "horizon": cfg.horizon,
        "warmup_fraction": cfg.warmup_fraction,
        "seed": cfg.seed,
        "streak_mode": cfg.streak_mode.value,
        "collision_breaks_streak": cfg.collision_breaks_streak,
        "incumbent_observes_intrusion": cfg.incumbent_observes_intrusion,
        "skip_unprofitable": cfg.skip_unprofitable,
        "initial_beliefs": cfg.initial_beliefs.value,
    }


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps_config(cfg: CityConfig) -> str:
    return "".join(f"{k} = {_toml_value(v)}\n" for k, v in config_to_mapping(cfg).items())


def loads_config(text: str) -> CityConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"not valid TOML: {exc}") from None
    return config_from_mapping(data)


def dump_config(cfg: CityConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_config(cfg))


def load_config(path: Union[str, Path]) -> CityConfig:
    """Read a config file.  Raises :class:`ConfigError` on bad content, OSError on I/O."""
    return loads_config(Path(path).read_text())


# --------------------------------------------------------------------------
# per-run state and events


@dataclass(frozen=True)
class BeliefRecord:
    """What one OCG remembers about one area.

    ``last_seen_time`` is ``None`` when the area has never been visited.
    ``last_seen_state`` is 1 when the area was found occupied, 0 when the OCG
    itself left it empty.
    """

    last_seen_time: Optional[float] = None
    last_seen_state: int = 0

    def __post_init__(self):
        if self.last_seen_state not in (0, 1):
            raise ValueError("last_seen_state must be 0 or 1")

    @property
    def never_seen(self) -> bool:
        return self.last_seen_time is None


@dataclass(frozen=True)
class Location:
    """``area_id`` is ``None`` when the OCG is at home in its turf."""

    area_id: Optional[int] = None

    @property
    def in_turf(self) -> bool:
        return self.area_id is None


@dataclass
class OcgState:
    ocg_id: int
    beliefs: list[BeliefRecord]
    location: Location = field(default_factory=Location)
    cumulative_payoff: float = 0.0
    next_event_time: float = math.inf


class EventKind(enum.IntEnum):
    DEPARTURE = 0
    COLLISION = 1
    OCCUPY_START = 2
    RETURN_TO_TURF = 3

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "EventKind":
        try:
            return _LABEL_KINDS[label]
        except KeyError:
            raise ValueError(f"unknown event kind {label!r}") from None


_KIND_LABELS = {
    EventKind.DEPARTURE: "Departure",
    EventKind.COLLISION: "CollisionAt",
    EventKind.OCCUPY_START: "OccupyStart",
    EventKind.RETURN_TO_TURF: "ReturnToTurf",
}
_LABEL_KINDS = {v: k for k, v in _KIND_LABELS.items()}


@dataclass(frozen=True)
class EventRecord:
    time: float
    kind: EventKind
    ocg_id: int
    area_id: Optional[int] = None
    incumbent_id: Optional[int] = None


def area_gaps(revenues: Sequence[float]) -> list[float]:
    return [revenues[j] - revenues[j + 1] for j in range(len(revenues) - 1)]
