"""Correlation, regression and contrast statistics over panels."""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from redtide.aggregation import Panel, TimeBucket, bucket_index
from redtide.cleaning import DEFAULT_UTC_OFFSET_HOURS, local_date
from redtide.corpus import GeoRegistry, KBrevisSample, Tweet
from redtide.geospatial import BINS, CLOSE_MAX_MI, MEDIUM_MAX_MI, bin_distance, min_distance

METRIC_FIELDS = {
    "count": "per_capita_count",
    "sentiment": "per_capita_sentiment",
    "raw_count": "tweet_count",
    "raw_sentiment": "sentiment_total",
}


class UndefinedCorrelation(ValueError):
    """Correlation requested where it is not defined (n < 3 or zero variance)."""


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"series must be 1-d and equal length, got {x.shape} and {y.shape}")
    if len(x) < 3:
        raise UndefinedCorrelation(f"need at least 3 pairs, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("zero variance series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def paired_series(panel: Panel, metric: str = "count", condition: str = "dead_fish",
                  shift: int = 0) -> tuple[list[float], list[float], list[str]]:
    """Metric at bucket t paired with the condition at bucket t + ``shift``
    within each unit; pairs with an undefined side are dropped."""
    attr = METRIC_FIELDS[metric]
    xs, ys, units = [], [], []
    n = len(panel.buckets)
    for (unit, idx), cell in sorted(panel.cells.items()):
        j = idx + shift
        if not 0 <= j < n:
            continue
        partner = panel.cells.get((unit, j))
        if partner is None:
            continue
        x, y = getattr(cell, attr), getattr(partner, condition)
        if x is None or y is None:
            continue
        xs.append(x)
        ys.append(y)
        units.append(unit)
    return xs, ys, units


def panel_correlation(panel: Panel, metric: str = "count", condition: str = "dead_fish",
                      shift: int = 0, pooled: bool = True) -> tuple[float, int]:
    """Correlation of a tweet metric with a condition index across a panel.

    ``shift=+1`` pairs the metric with the next bucket's condition (lead),
    ``shift=-1`` with the previous bucket's (lag). ``pooled=False`` averages
    per-unit correlations instead of pooling all unit-buckets; units whose
    series have no variance are skipped.
    """
    xs, ys, units = paired_series(panel, metric, condition, shift)
    if len(xs) < 3:
        raise UndefinedCorrelation(f"only {len(xs)} pairs after shifting by {shift}")
    if pooled:
        return pearson(xs, ys), len(xs)
    per_unit = defaultdict(lambda: ([], []))
    for x, y, u in zip(xs, ys, units):
        per_unit[u][0].append(x)
        per_unit[u][1].append(y)
    rs = []
    for ux, uy in per_unit.values():
        try:
            rs.append(pearson(ux, uy))
        except UndefinedCorrelation:
            continue
    if not rs:
        raise UndefinedCorrelation("no unit has a defined correlation")
    return float(np.mean(rs)), len(xs)


@dataclass
class CorrelationGrid:
    metric: str
    match: str
    condition: str
    entries: dict = field(default_factory=dict)  # (level, freq) -> r
    n: dict = field(default_factory=dict)
    missing: dict = field(default_factory=dict)  # (level, freq) -> reason
    shift: int = 0

    def get(self, level: str, freq: str) -> Optional[float]:
        return self.entries.get((level, freq))


def correlation_grid(panels: dict, metric: str = "count", match: str = "explicit",
                     condition: str = "dead_fish", shift: int = 0, pooled: bool = True,
                     threads: int = 1) -> CorrelationGrid:
    """One correlation per ``(level, freq)`` panel; failures are kept as
    missing entries with a reason."""
    grid = CorrelationGrid(metric, match, condition, shift=shift)
    keys = sorted(panels)

    def one(key):
        try:
            return key, panel_correlation(panels[key], metric, condition, shift, pooled), None
        except (UndefinedCorrelation, ValueError, KeyError) as exc:
            return key, None, str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, keys))
    else:
        results = [one(k) for k in keys]
    for key, res, err in results:
        if res is None:
            grid.missing[key] = err
        else:
            grid.entries[key], grid.n[key] = res
    return grid


# ---------------------------------------------------------------------------
# Distance analysis

HIGH_IMPACT_CELLS = 1_000_000.0


def high_impact_sites(samples: Iterable[KBrevisSample], week: TimeBucket,
                      threshold: float = HIGH_IMPACT_CELLS) -> list[tuple[float, float]]:
    """Locations sampled during ``week`` with a count strictly above ``threshold``."""
    sites = {(s.lat, s.lon) for s in samples
             if week.start <= s.date <= week.end and s.cells_per_liter > threshold}
    return sorted(sites)


def sites_by_week(samples: Iterable[KBrevisSample], weeks: Sequence[TimeBucket],
                  threshold: float = HIGH_IMPACT_CELLS) -> dict[int, list[tuple[float, float]]]:
    """High-impact sites per bucket index; weeks without any are omitted."""
    samples = list(samples)
    out = {}
    for w in weeks:
        sites = high_impact_sites(samples, w, threshold)
        if sites:
            out[w.index] = sites
    return out


@dataclass(frozen=True)
class DistanceRecord:
    unit: str
    bucket: int
    distance: float
    value: float


def city_distance_records(panel: Panel, registry: GeoRegistry, sites: dict,
                          metric: str = "count") -> list[DistanceRecord]:
    """(distance from unit centroid to nearest high-impact site, metric) per
    unit-week, for weeks that have high-impact sites."""
    attr = METRIC_FIELDS[metric]
    out = []
    for (unit, idx), cell in sorted(panel.cells.items()):
        if idx not in sites:
            continue
        d = min_distance(registry[unit].centroid, sites[idx])
        out.append(DistanceRecord(unit, idx, d, getattr(cell, attr)))
    return out


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    p_value: float
    n: int
    slope_stderr: float = float("nan")


def ols(x: Sequence[float], y: Sequence[float]) -> RegressionFit:
    """Simple linear regression of y on x with a two-sided t-test on the slope."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 3:
        raise ValueError(f"need at least 3 records, got {n}")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("all x values identical; slope undefined")
    dy = y - y.mean()
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    sse = float(resid @ resid)
    syy = float(dy @ dy)
    r2 = 1.0 - sse / syy if syy > 0 else 1.0
    r2 = min(1.0, max(0.0, r2))
    df = n - 2
    se = math.sqrt(sse / df / sxx)
    if se == 0.0:
        p = 0.0 if slope != 0.0 else 1.0
    else:
        p = float(2.0 * stats.t.sf(abs(slope / se), df))
    # an exact fit has p = 0; report the smallest positive double instead
    p = min(1.0, max(p, np.finfo(float).tiny))
    return RegressionFit(slope, intercept, r2, p, n, se)


def distance_regression(records: Iterable, zero_policy: str = "drop", epsilon: float = 1e-3) -> RegressionFit:
    """OLS of ln(per-capita count) on distance in miles.

    ``records`` holds ``(distance, value)`` pairs or :class:`DistanceRecord`.
    Non-positive values are dropped (``zero_policy="drop"``) or shifted by
    ``epsilon`` before the log (``"epsilon"``).
    """
    xs, ys = [], []
    for rec in records:
        d, v = (rec.distance, rec.value) if isinstance(rec, DistanceRecord) else rec
        if zero_policy == "epsilon":
            v = v + epsilon
        elif zero_policy != "drop":
            raise ValueError(f"unknown zero policy {zero_policy!r}")
        if v <= 0:
            continue
        xs.append(d)
        ys.append(math.log(v))
    return ols(xs, ys)


@dataclass(frozen=True)
class Contrast:
    diff: float
    lower: float
    upper: float

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@lru_cache(maxsize=256)
def _studentized_range_q(k: int, df: int, level: float) -> float:
    return float(stats.studentized_range.ppf(level, k, df))


def tukey_hsd(groups: dict, level: float = 0.95) -> dict[tuple[str, str], Contrast]:
    """Tukey-Kramer simultaneous intervals for every ordered pair ``(a, b)``
    with a after b in ``groups`` order; the difference is ``mean(a) - mean(b)``."""
    labels = list(groups)
    data = {g: np.asarray(list(groups[g]), dtype=float) for g in labels}
    for g, v in data.items():
        if len(v) < 2:
            raise ValueError(f"group {g!r} has {len(v)} record(s); need at least 2")
    k = len(labels)
    n_total = sum(len(v) for v in data.values())
    df = n_total - k
    sse = sum(float(((v - v.mean()) ** 2).sum()) for v in data.values())
    mse = sse / df
    q = _studentized_range_q(k, df, level)
    out = {}
    for i, b in enumerate(labels):
        for a in labels[i + 1:]:
            diff = float(data[a].mean() - data[b].mean())
            half = q * math.sqrt(mse / 2.0 * (1.0 / len(data[a]) + 1.0 / len(data[b])))
            out[(a, b)] = Contrast(diff, diff - half, diff + half)
    return out


def bin_contrasts(records: Iterable, level: float = 0.95, zero_policy: str = "drop",
                  epsilon: float = 1e-3, close_max: float = CLOSE_MAX_MI,
                  medium_max: float = MEDIUM_MAX_MI) -> dict[str, Contrast]:
    """Pairwise intervals for mean log per-capita counts between distance bins.

    Keys are ``"medium-close"``, ``"far-close"`` and ``"far-medium"``.
    """
    groups = {b: [] for b in BINS}
    for rec in records:
        d, v = (rec.distance, rec.value) if isinstance(rec, DistanceRecord) else rec
        if zero_policy == "epsilon":
            v = v + epsilon
        if v <= 0:
            continue
        groups[bin_distance(d, close_max, medium_max)].append(math.log(v))
    for b, vals in groups.items():
        if not vals:
            raise ValueError(f"distance bin {b!r} is empty")
    return {f"{a}-{b}": c for (a, b), c in tukey_hsd(groups, level).items()}


@dataclass(frozen=True)
class RetweetRecord:
    bucket: int
    coords: tuple[float, float]
    distance: float
    retweets: int
    total: int

    @property
    def fraction(self) -> float:
        return self.retweets / self.total


def retweet_fraction_by_distance(tweets: Iterable[Tweet], sites: dict, weeks: Sequence[TimeBucket],
                                 utc_offset_hours: float = DEFAULT_UTC_OFFSET_HOURS):
    """Retweet share per unique coordinate pair and week, against distance to
    the nearest high-impact site that week. Returns ``(records, fit)``;
    ``fit`` is None with fewer than 3 usable records."""
    if not weeks:
        return [], None
    start, length, n = weeks[0].start, weeks[0].length, len(weeks)
    counts: dict = defaultdict(lambda: [0, 0])
    for t in tweets:
        if t.coords is None:
            continue
        idx = bucket_index(local_date(t, utc_offset_hours), start, length, n)
        if idx is None or idx not in sites:
            continue
        c = counts[(idx, t.coords)]
        c[1] += 1
        if t.is_retweet:
            c[0] += 1
    records = [RetweetRecord(idx, coords, min_distance(coords, sites[idx]), rt, tot)
               for (idx, coords), (rt, tot) in sorted(counts.items()) if tot > 0]
    fit = None
    if len(records) >= 3 and len({r.distance for r in records}) > 1:
        fit = ols([r.distance for r in records], [r.fraction for r in records])
    return records, fit
