"""Activity-rate regimes and statistical checks of the regime predictions.

With revenues ``u_1 > ... > u_M`` and collision cost ``c``:

* ``eta_upper = (u_1 - u_M) / c``: above it every OCG keeps to its own area;
* ``eta_lower = max_j (u_j - u_{j+1}) / c``: below it nobody holds any area.

The checkers compare per-seed :class:`~turfsim.metrics.MetricsReport` values
with percentile-bootstrap confidence intervals.  "Equals zero" clauses are
tested exactly (collisions are counted, not estimated).
"""
from __future__ import annotations

import enum
import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .config import CityConfig, area_gaps
from .metrics import MetricsReport

__all__ = [
    "Regime",
    "RegimeThresholds",
    "BoundaryWarning",
    "DegenerateComparisonWarning",
    "InsufficientSeedsError",
    "MissingPointError",
    "ClauseVerdict",
    "CheckReport",
    "thresholds",
    "classify",
    "bootstrap_ci",
    "check_propositions",
    "check_corollaries",
]

DEFAULT_ALPHA = 0.05
DEFAULT_RESAMPLES = 10_000


class Regime(str, enum.Enum):
    FULL_PROPERTY_RIGHTS = "FullPropertyRights"
    INTERMEDIATE = "Intermediate"
    NO_PROPERTY_RIGHTS = "NoPropertyRights"


_ORDER = {Regime.NO_PROPERTY_RIGHTS: 0, Regime.INTERMEDIATE: 1, Regime.FULL_PROPERTY_RIGHTS: 2}


class BoundaryWarning(UserWarning):
    pass


class DegenerateComparisonWarning(UserWarning):
    pass


class InsufficientSeedsError(ValueError):
    pass


class MissingPointError(KeyError):
    pass


@dataclass(frozen=True)
class RegimeThresholds:
    eta_lower: float
    eta_upper: float
    gap_ratios: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"eta_lower": self.eta_lower, "eta_upper": self.eta_upper, "gap_ratios": list(self.gap_ratios)}


def thresholds(cfg: CityConfig) -> RegimeThresholds:
    revs = cfg.revenues
    c = cfg.collision_cost
    ratios = tuple(g / c for g in area_gaps(revs))
    upper = (revs[0] - revs[-1]) / c
    lower = max(ratios) if ratios else 0.0
    return RegimeThresholds(eta_lower=lower, eta_upper=upper, gap_ratios=ratios)


def classify(eta: float, th: RegimeThresholds) -> Regime:
    """Regime of ``eta``; a value exactly on a threshold goes to the higher regime, with a warning."""
    if eta == th.eta_upper or eta == th.eta_lower:
        warnings.warn(f"eta={eta} lies exactly on a regime threshold", BoundaryWarning, stacklevel=2)
    if eta >= th.eta_upper:
        return Regime.FULL_PROPERTY_RIGHTS
    if eta >= th.eta_lower:
        return Regime.INTERMEDIATE
    return Regime.NO_PROPERTY_RIGHTS


def regime_rank(regime: Regime) -> int:
    return _ORDER[regime]


# --------------------------------------------------------------------------
# statistics


def bootstrap_ci(
    values: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    n_boot: int = DEFAULT_RESAMPLES,
    rng: Optional[np.random.Generator] = None,
    two_sided: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Percentile bootstrap CI of the column means of ``values`` (seeds x quantities).

    Rows are resampled jointly so all columns see the same seeds.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    rng = rng if rng is not None else np.random.default_rng(0)
    n = values.shape[0]
    idx = rng.integers(0, n, size=(n_boot, n))
    means = values[idx].mean(axis=1)
    tail = alpha / 2 if two_sided else alpha
    lo = np.quantile(means, tail, axis=0)
    hi = np.quantile(means, 1 - tail, axis=0)
    return lo, hi


def _boot_diff_lower(a: np.ndarray, b: np.ndarray, alpha: float, n_boot: int, rng: np.random.Generator) -> float:
    """One-sided lower bound on mean(a) - mean(b), independent groups."""
    ia = rng.integers(0, len(a), size=(n_boot, len(a)))
    ib = rng.integers(0, len(b), size=(n_boot, len(b)))
    diff = a[ia].mean(axis=1) - b[ib].mean(axis=1)
    return float(np.quantile(diff, alpha))


@dataclass(frozen=True)
class ClauseVerdict:
    clause: str
    regime: str
    verdict: str  # "pass", "fail" or "skipped"
    statistic: dict = field(default_factory=dict)
    ci: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


@dataclass(frozen=True)
class CheckReport:
    kind: str
    eta: Optional[float]
    regime: Optional[str]
    clauses: tuple[ClauseVerdict, ...]

    @property
    def passed(self) -> bool:
        return all(c.verdict != "fail" for c in self.clauses)

    def failed(self) -> list[ClauseVerdict]:
        return [c for c in self.clauses if c.verdict == "fail"]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "eta": self.eta,
            "regime": self.regime,
            "passed": self.passed,
            "clauses": [asdict(c) for c in self.clauses],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _stack(reports: Sequence[MetricsReport], attr: str) -> np.ndarray:
    return np.array([getattr(r, attr) for r in reports], dtype=float)


class _Clauses:
    """Helper that accumulates verdicts for one regime."""

    def __init__(self, regime: Regime, data: dict, lo: dict, hi: dict):
        self.regime = regime.value
        self.data, self.lo, self.hi = data, lo, hi
        self.out: list[ClauseVerdict] = []

    def _stat(self, obs: str, m: int) -> tuple[float, float, float]:
        return float(self.data[obs][:, m].mean()), float(self.lo[obs][m]), float(self.hi[obs][m])

    def greater(self, obs: str, a: int, b: int, strict: bool = True) -> None:
        """``obs[a] > obs[b]`` (1-based labels in the clause name)."""
        ma, la, ha = self._stat(obs, a)
        mb, lb, hb = self._stat(obs, b)
        if strict:
            ok = la > hb
            name = f"{obs}{a + 1}>{obs}{b + 1}"
        else:
            ok = ha >= lb
            name = f"{obs}{a + 1}>={obs}{b + 1}"
        self.out.append(
            ClauseVerdict(
                name,
                self.regime,
                "pass" if ok else "fail",
                {f"{obs}{a + 1}": ma, f"{obs}{b + 1}": mb},
                {f"{obs}{a + 1}": [la, ha], f"{obs}{b + 1}": [lb, hb]},
            )
        )

    def positive(self, obs: str, a: int) -> None:
        ma, la, ha = self._stat(obs, a)
        self.out.append(
            ClauseVerdict(f"{obs}{a + 1}>0", self.regime, "pass" if la > 0 else "fail",
                          {f"{obs}{a + 1}": ma}, {f"{obs}{a + 1}": [la, ha]})
        )

    def zero(self, collisions: np.ndarray, a: int) -> None:
        total = int(collisions[:, a].sum())
        self.out.append(
            ClauseVerdict(f"V{a + 1}=0", self.regime, "pass" if total == 0 else "fail",
                          {"collisions": total}, {}, "exact-zero test on post-warm-up collision counts")
        )

    def equal(self, obs: str, areas: Sequence[int], target: Optional[float] = None) -> None:
        stats = {f"{obs}{m + 1}": self._stat(obs, m) for m in areas}
        ok = True
        for i, a in enumerate(areas):
            for b in areas[i + 1:]:
                _, la, ha = stats[f"{obs}{a + 1}"]
                _, lb, hb = stats[f"{obs}{b + 1}"]
                ok &= la <= hb and lb <= ha
        note = "pairwise CI overlap"
        if target is not None:
            ok &= all(lo <= target <= hi for _, lo, hi in stats.values())
            note += f"; each CI contains {target:.6g}"
        name = "=".join(f"{obs}{m + 1}" for m in areas)
        self.out.append(
            ClauseVerdict(name, self.regime, "pass" if ok else "fail",
                          {k: v[0] for k, v in stats.items()}, {k: [v[1], v[2]] for k, v in stats.items()}, note)
        )


def check_propositions(
    reports: Sequence[MetricsReport],
    eta: float,
    th: RegimeThresholds,
    alpha: float = DEFAULT_ALPHA,
    n_boot: int = DEFAULT_RESAMPLES,
    seed: int = 0,
) -> CheckReport:
    """Evaluate the concentration/violence/streak orderings predicted for ``eta``'s regime.

    The predictions are stated for a three-area city; for any other number of
    areas every clause is reported as skipped.
    """
    if len(reports) < 2:
        raise InsufficientSeedsError(f"need at least 2 independent-seed reports, got {len(reports)}")
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    regime = classify(eta, th)
    n_areas = len(reports[0].areas)
    if n_areas != 3:
        return CheckReport(
            "propositions", eta, regime.value,
            (ClauseVerdict("all", regime.value, "skipped", note=f"predictions cover 3 areas, got {n_areas}"),),
        )

    data = {"O": _stack(reports, "O"), "V": _stack(reports, "V"), "R": _stack(reports, "R")}
    collisions = np.array([r.collisions for r in reports])
    rng = np.random.default_rng(seed)
    lo, hi = {}, {}
    for k, v in data.items():
        lo[k], hi[k] = bootstrap_ci(v, alpha, n_boot, rng)

    c = _Clauses(regime, data, lo, hi)
    if regime is Regime.FULL_PROPERTY_RIGHTS:
        c.equal("O", [0, 1, 2], target=eta / (1 + eta))
        for m in range(3):
            c.zero(collisions, m)
        c.equal("R", [0, 1, 2])
    elif regime is Regime.INTERMEDIATE:
        c.greater("O", 1, 2)
        c.greater("O", 0, 1)
        c.positive("V", 0)
        c.zero(collisions, 1)
        c.zero(collisions, 2)
        c.greater("R", 1, 0)
        c.greater("R", 0, 2)
    else:
        c.greater("O", 1, 2)
        c.greater("O", 0, 1)
        c.greater("V", 0, 1)
        c.positive("V", 1)
        c.zero(collisions, 2)
        c.greater("R", 0, 1)
        c.greater("R", 1, 2, strict=False)
    return CheckReport("propositions", eta, regime.value, tuple(c.out))


def check_corollaries(
    sweep_points: Mapping[float, Sequence[MetricsReport]],
    th: RegimeThresholds,
    eps: float,
    alpha: float = DEFAULT_ALPHA,
    n_boot: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    atol: float = 1e-9,
) -> CheckReport:
    """One-sided tests of the jumps in O and V across both thresholds.

    ``sweep_points`` maps an eta value to the per-seed reports measured there;
    it must hold ``eta_upper +- eps`` and ``eta_lower +- eps``.  Each clause
    passes when the one-sided ``1 - alpha`` bootstrap lower bound on the
    difference of means is positive.  Violence clauses with no collisions on
    either side are skipped.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")

    def lookup(eta: float) -> Sequence[MetricsReport]:
        for k, v in sweep_points.items():
            if abs(k - eta) <= atol:
                return v
        raise MissingPointError(f"no sweep point at eta={eta}")

    rng = np.random.default_rng(seed)
    out: list[ClauseVerdict] = []
    for name, at in (("upper", th.eta_upper), ("lower", th.eta_lower)):
        below, above = lookup(at - eps), lookup(at + eps)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            step = regime_rank(classify(at + eps, th)) - regime_rank(classify(at - eps, th))
        # the pair should sit in adjacent regimes; spanning both thresholds confounds the two jumps
        degenerate = step != 1
        if degenerate:
            warnings.warn(
                f"eta {at - eps} and {at + eps} do not isolate the {name} threshold; the comparison is degenerate",
                DegenerateComparisonWarning,
                stacklevel=2,
            )
        # (observable, area index, +1 when the value below the threshold should be larger)
        tests = [("O", 0, +1), ("O", 2, -1), ("V", 0, +1)]
        if name == "lower":
            tests.append(("V", 1, +1))
        for obs, m, sign in tests:
            a = _stack(below, obs)[:, m]
            b = _stack(above, obs)[:, m]
            label = f"{obs}{m + 1}({name}-eps){'>' if sign > 0 else '<'}{obs}{m + 1}({name}+eps)"
            stat = {"below": float(a.mean()), "above": float(b.mean()), "eta_below": at - eps, "eta_above": at + eps}
            if obs == "V" and not a.any() and not b.any():
                out.append(ClauseVerdict(label, name, "skipped", stat, {}, "no collisions on either side"))
                continue
            x, y = (a, b) if sign > 0 else (b, a)
            bound = _boot_diff_lower(x, y, alpha, n_boot, rng)
            note = "degenerate: the pair does not isolate one threshold" if degenerate else ""
            out.append(
                ClauseVerdict(label, name, "pass" if bound > 0 else "fail", stat,
                              {"diff_lower_bound": bound}, note)
            )
    return CheckReport("corollaries", None, None, tuple(out))
