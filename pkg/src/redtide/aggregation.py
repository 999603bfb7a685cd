"""Spatiotemporal panels over (geo-unit, time bucket) cells.

Levels are ``total``, ``county``, ``city`` and ``zcta``; frequencies are
``weekly``, ``3day`` and ``daily`` buckets anchored at the study-window
start. Panels are dense: every unit of the level gets a cell for every
bucket, zero-filled where nothing was observed.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from typing import Iterable, Optional

from redtide.cleaning import DEFAULT_UTC_OFFSET_HOURS, local_date
from redtide.corpus import BeachReport, GeoRegistry, KBrevisSample, Tweet
from redtide.geospatial import assign_sample_to_county, credit_share, geodesic_miles, per_capita

LEVELS = ("total", "county", "city", "zcta")
FREQS = {"weekly": 7, "3day": 3, "daily": 1}
MATCH_FILTERS = ("explicit_only", "all")
ACCOUNT_FILTERS = ("everyone", "citizen", "media")
CONDITIONS = ("dead_fish", "respiratory", "kbrevis")


class PanelMismatch(ValueError):
    pass


def freq_days(freq) -> int:
    if isinstance(freq, int):
        if freq not in (1, 3, 7):
            raise ValueError(f"bucket length must be 1, 3 or 7 days, got {freq}")
        return freq
    try:
        return FREQS[freq]
    except KeyError:
        raise ValueError(f"unknown frequency {freq!r}; expected one of {sorted(FREQS)}") from None


def freq_name(days: int) -> str:
    return {v: k for k, v in FREQS.items()}[days]


@dataclass(frozen=True)
class TimeBucket:
    index: int
    start: date
    length: int
    partial: bool = False

    @property
    def end(self) -> date:
        """Last day covered (inclusive)."""
        return self.start + timedelta(days=self.length - 1)


def bucketize(start: date, end: date, freq) -> list[TimeBucket]:
    """Consecutive buckets from ``start`` through ``end`` inclusive; a short
    final bucket is kept with ``partial=True``."""
    if start > end:
        raise ValueError(f"window start {start} after end {end}")
    n_days = (end - start).days + 1
    length = freq_days(freq)
    out = []
    for i in range(math.ceil(n_days / length)):
        b_start = start + timedelta(days=i * length)
        remaining = n_days - i * length
        out.append(TimeBucket(i, b_start, length, partial=remaining < length))
    return out


def bucket_index(d: date, start: date, length: int, n_buckets: int) -> Optional[int]:
    offset = (d - start).days
    if offset < 0:
        return None
    i = offset // length
    return i if i < n_buckets else None


@dataclass
class PanelCell:
    unit: str
    bucket: TimeBucket
    tweet_count: float = 0.0
    per_capita_count: float = 0.0
    sentiment_total: float = 0.0
    per_capita_sentiment: float = 0.0
    dead_fish: float = 0.0
    respiratory: float = 0.0
    kbrevis: Optional[float] = 0.0
    retweet_count: float = 0.0
    matched_by: str = "all"
    condition_empty: bool = True
    has_tweet_side: bool = True
    has_condition_side: bool = True


TWEET_FIELDS = ("tweet_count", "per_capita_count", "sentiment_total", "per_capita_sentiment", "retweet_count")
CONDITION_FIELDS = ("dead_fish", "respiratory", "kbrevis", "condition_empty")


@dataclass
class Panel:
    level: str
    freq: int
    buckets: list[TimeBucket]
    cells: dict = field(default_factory=dict)  # (unit, bucket index) -> PanelCell
    match: str = "all"
    unresolved: list = field(default_factory=list)  # (tweet id, unit, reason)

    def units(self) -> list[str]:
        return sorted({u for u, _ in self.cells})

    def cell(self, unit: str, index: int) -> PanelCell:
        return self.cells[(unit, index)]

    def series(self, unit: str, attr: str) -> list:
        return [getattr(self.cells[(unit, b.index)], attr) for b in self.buckets if (unit, b.index) in self.cells]

    def total(self, attr: str = "tweet_count") -> float:
        return math.fsum(getattr(c, attr) or 0.0 for c in self.cells.values())

    def sorted_cells(self) -> list[PanelCell]:
        return [self.cells[k] for k in sorted(self.cells, key=lambda k: (k[0], k[1]))]


def _level_units(registry: GeoRegistry, level: str) -> list[str]:
    if level == "total":
        return [registry.root()]
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    return [u.id for u in registry.at_level(level)]


def target_unit(unit_id: str, registry: GeoRegistry, level: str) -> Optional[str]:
    """Unit at ``level`` that a located tweet rolls up to, or None when the
    location is coarser than the level."""
    if level == "total":
        return registry.root() if registry.ancestor(unit_id, "region") is not None else None
    return registry.ancestor(unit_id, level)


def _empty_panel(registry: GeoRegistry, level: str, freq, window, match: str) -> Panel:
    start, end = window
    buckets = bucketize(start, end, freq)
    p = Panel(level, freq_days(freq), buckets, match=match)
    for u in _level_units(registry, level):
        for b in buckets:
            p.cells[(u, b.index)] = PanelCell(u, b, matched_by="explicit" if match == "explicit_only" else "all")
    return p


def aggregate_tweets(tweets: Iterable[Tweet], registry: GeoRegistry, level: str, freq, window,
                     match_filter: str = "all", account_filter: str = "everyone",
                     sentiments: Optional[dict] = None,
                     utc_offset_hours: float = DEFAULT_UTC_OFFSET_HOURS,
                     scale: float = 100_000) -> Panel:
    """Per-cell tweet mass, retweets and sentiment with credit sharing.

    Tweets must carry a resolved ``location`` (see :func:`redtide.cleaning.clean`);
    tweets that cannot be placed at ``level`` are listed in ``panel.unresolved``.
    """
    if match_filter not in MATCH_FILTERS:
        raise ValueError(f"unknown match filter {match_filter!r}")
    if account_filter not in ACCOUNT_FILTERS:
        raise ValueError(f"unknown account filter {account_filter!r}")
    panel = _empty_panel(registry, level, freq, window, match_filter)
    start = window[0]
    n = len(panel.buckets)
    for t in tweets:
        loc = t.location
        if loc is None:
            panel.unresolved.append((t.id, None, "tweet has no resolved location"))
            continue
        if match_filter == "explicit_only" and loc.source != "place":
            continue
        if account_filter != "everyone" and t.account_class != account_filter:
            continue
        idx = bucket_index(local_date(t, utc_offset_hours), start, panel.freq, n)
        if idx is None:
            panel.unresolved.append((t.id, loc.unit_id, "outside study window"))
            continue
        if loc.unit_id not in registry:
            panel.unresolved.append((t.id, loc.unit_id, "unit not in registry"))
            continue
        score = sentiments.get(t.id, 0.0) if sentiments is not None else 0.0
        for unit, w in credit_share(loc.unit_id, registry).items():
            target = target_unit(unit, registry, level)
            if target is None:
                panel.unresolved.append((t.id, unit, f"location coarser than {level} level"))
                continue
            cell = panel.cells[(target, idx)]
            cell.tweet_count += w
            cell.sentiment_total += w * score
            if t.is_retweet:
                cell.retweet_count += w
    for cell in panel.cells.values():
        cell.per_capita_count = per_capita(cell.tweet_count, cell.unit, registry, scale)
        cell.per_capita_sentiment = per_capita(cell.sentiment_total, cell.unit, registry, scale)
    return panel


def top_k_stat(values: Iterable[float], k: int = 5, stat: str = "mean") -> float:
    """Summary of the ``k`` largest values (all of them when fewer)."""
    top = sorted(values, reverse=True)[:k]
    if not top:
        return 0.0
    if stat == "mean":
        return math.fsum(top) / len(top)
    if stat == "sum":
        return math.fsum(top)
    if stat == "max":
        return top[0]
    raise ValueError(f"unknown top-k statistic {stat!r}")


def aggregate_conditions(beach_reports: Iterable[BeachReport], kbrevis_samples: Iterable[KBrevisSample],
                         registry: GeoRegistry, level: str, freq, window,
                         beach_sites: Optional[dict] = None, radius_miles: float = 10.0,
                         top_k: int = 5, kbrevis_stat: str = "mean",
                         max_assign_miles: float = 30.0) -> Panel:
    """Condition indices per cell.

    Beach indices are plain means over the beach-day reports falling in the
    cell (county: that county's beaches; total: all beaches; city/ZCTA:
    beaches within ``radius_miles`` of the unit centroid, which needs
    ``beach_sites``). K. brevis is the mean of the ``top_k`` largest counts
    among the samples assigned to the county, and undefined (None) below
    county level. Cells with nothing to average stay 0 with
    ``condition_empty=True``.
    """
    panel = _empty_panel(registry, level, freq, window, "all")
    start, n = window[0], len(panel.buckets)
    units = _level_units(registry, level)

    # (unit, bucket) -> list of (dead_fish, respiratory)
    groups: dict = defaultdict(list)
    if level in ("city", "zcta"):
        if beach_sites is None:
            raise ValueError(f"beach site coordinates are required at {level} level")
        near = {u: [b for b, pt in beach_sites.items()
                    if geodesic_miles(registry[u].centroid, pt) <= radius_miles] for u in units}
        by_beach: dict = defaultdict(list)
        for r in beach_reports:
            by_beach[r.beach_id].append(r)
        for u, beaches in near.items():
            for b in beaches:
                for r in by_beach.get(b, ()):
                    idx = bucket_index(r.date, start, panel.freq, n)
                    if idx is not None:
                        groups[(u, idx)].append((r.dead_fish, r.respiratory))
    else:
        for r in beach_reports:
            idx = bucket_index(r.date, start, panel.freq, n)
            if idx is None:
                continue
            key_unit = units[0] if level == "total" else r.county
            groups[(key_unit, idx)].append((r.dead_fish, r.respiratory))

    for key, vals in groups.items():
        cell = panel.cells.get(key)
        if cell is None:
            continue
        cell.dead_fish = math.fsum(v[0] for v in vals) / len(vals)
        cell.respiratory = math.fsum(v[1] for v in vals) / len(vals)
        cell.condition_empty = False

    if level in ("city", "zcta"):
        for cell in panel.cells.values():
            cell.kbrevis = None
        return panel

    samples: dict = defaultdict(list)
    for s in kbrevis_samples:
        idx = bucket_index(s.date, start, panel.freq, n)
        if idx is None:
            continue
        if level == "total":
            samples[(units[0], idx)].append(s.cells_per_liter)
        else:
            county = assign_sample_to_county(s, registry, max_assign_miles)
            if county is not None:
                samples[(county, idx)].append(s.cells_per_liter)
    for key, vals in samples.items():
        cell = panel.cells.get(key)
        if cell is not None:
            cell.kbrevis = top_k_stat(vals, top_k, kbrevis_stat)
    return panel


def join_panels(tweet_panel: Panel, condition_panel: Panel) -> Panel:
    """Full outer join on (unit, bucket); a missing side is zero-filled and flagged."""
    if tweet_panel.level != condition_panel.level or tweet_panel.freq != condition_panel.freq:
        raise PanelMismatch(
            f"cannot join {tweet_panel.level}/{tweet_panel.freq}d with "
            f"{condition_panel.level}/{condition_panel.freq}d panels")
    buckets = tweet_panel.buckets if len(tweet_panel.buckets) >= len(condition_panel.buckets) \
        else condition_panel.buckets
    out = Panel(tweet_panel.level, tweet_panel.freq, list(buckets), match=tweet_panel.match,
                unresolved=list(tweet_panel.unresolved))
    matched_by = "explicit" if tweet_panel.match == "explicit_only" else "all"
    for key in set(tweet_panel.cells) | set(condition_panel.cells):
        tc = tweet_panel.cells.get(key)
        cc = condition_panel.cells.get(key)
        base = replace(tc) if tc is not None else PanelCell(key[0], cc.bucket, matched_by=matched_by)
        if cc is not None:
            for f in CONDITION_FIELDS:
                setattr(base, f, getattr(cc, f))
        else:
            base.condition_empty = True
        base.has_tweet_side = tc is not None
        base.has_condition_side = cc is not None
        out.cells[key] = base
    return out


def roll_up(panel: Panel, registry: GeoRegistry, level: str, scale: float = 100_000) -> Panel:
    """Sum tweet fields of a finer panel into ``level`` and recompute per-capita values."""
    out = Panel(level, panel.freq, list(panel.buckets), match=panel.match)
    for u in _level_units(registry, level):
        for b in panel.buckets:
            out.cells[(u, b.index)] = PanelCell(u, b)
    for (unit, idx), cell in panel.cells.items():
        target = target_unit(unit, registry, level)
        if target is None:
            continue
        dst = out.cells[(target, idx)]
        dst.tweet_count += cell.tweet_count
        dst.sentiment_total += cell.sentiment_total
        dst.retweet_count += cell.retweet_count
    for cell in out.cells.values():
        cell.per_capita_count = per_capita(cell.tweet_count, cell.unit, registry, scale)
        cell.per_capita_sentiment = per_capita(cell.sentiment_total, cell.unit, registry, scale)
    return out


PANEL_HEADER = ("unit", "level", "bucket_start", "freq", "match", "count", "per_capita", "sentiment",
                "per_capita_sentiment", "dead_fish", "respiratory", "kbrevis", "retweets")


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def write_panel_csv(panel: Panel, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PANEL_HEADER)
    match = "explicit" if panel.match == "explicit_only" else "all"
    for c in panel.sorted_cells():
        w.writerow([c.unit, panel.level, c.bucket.start.isoformat(), freq_name(panel.freq), match,
                    _fmt(c.tweet_count), _fmt(c.per_capita_count), _fmt(c.sentiment_total),
                    _fmt(c.per_capita_sentiment), _fmt(c.dead_fish), _fmt(c.respiratory),
                    _fmt(c.kbrevis), _fmt(c.retweet_count)])


def read_panel_csv(fh) -> Panel:
    """Rebuild a panel written by :func:`write_panel_csv`."""
    rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("empty panel file")
    level, freq = rows[0]["level"], freq_days(rows[0]["freq"])
    starts = sorted({date.fromisoformat(r["bucket_start"]) for r in rows})
    buckets = [TimeBucket(i, s, freq) for i, s in enumerate(starts)]
    by_start = {b.start: b for b in buckets}
    match = "explicit_only" if rows[0]["match"] == "explicit" else "all"
    panel = Panel(level, freq, buckets, match=match)

    def num(s):
        return float(s) if s != "" else None

    for r in rows:
        b = by_start[date.fromisoformat(r["bucket_start"])]
        panel.cells[(r["unit"], b.index)] = PanelCell(
            r["unit"], b, tweet_count=num(r["count"]), per_capita_count=num(r["per_capita"]),
            sentiment_total=num(r["sentiment"]), per_capita_sentiment=num(r["per_capita_sentiment"]),
            dead_fish=num(r["dead_fish"]), respiratory=num(r["respiratory"]), kbrevis=num(r["kbrevis"]),
            retweet_count=num(r["retweets"]), matched_by=r["match"], condition_empty=False)
    return panel
