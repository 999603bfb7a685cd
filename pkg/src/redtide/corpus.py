"""Domain records and file parsers: tweets, beach/K. brevis conditions,
the locality registry, and sentiment lexicons.

Parsers never drop a record silently. Each returns a :class:`RecordList`
(a plain list) whose ``errors`` attribute holds one :class:`RecordError`
per rejected line.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Optional

KINDS = ("original", "reply", "retweet")
ACCOUNT_CLASSES = ("citizen", "media", "other", "unknown")
LEVELS = ("region", "county", "city", "zcta")
LEXICON_CLASSES = ("polarized", "negator", "amplifier", "deamplifier", "adversative")

# parent level required for each level
_PARENT_LEVEL = {"county": "region", "city": "county", "zcta": "city"}

# default weights when the lexicon file leaves weight blank
DEFAULT_SHIFTER_WEIGHTS = {"amplifier": 0.8, "deamplifier": 0.6, "negator": 1.0, "adversative": 1.0}

TAMPA_BAY_SHARED = "tampa_bay_shared"
DEFAULT_SHARED_UNITS = {TAMPA_BAY_SHARED: ("hillsborough", "pinellas")}

# southwest Florida coast, generous margins
DEFAULT_BBOX = (24.5, -84.5, 30.0, -80.5)  # (lat_min, lon_min, lat_max, lon_max)


class DataValidationError(ValueError):
    """Raised when input data fails validation; carries per-record errors."""

    def __init__(self, message: str, errors: Optional[list] = None):
        super().__init__(message)
        self.errors = list(errors or [])


@dataclass(frozen=True)
class RecordError:
    source: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.source}:{self.line}: {self.message}"


class RecordList(list):
    """A list of parsed records plus the errors for lines that were rejected."""

    def __init__(self, items: Iterable = (), errors: Iterable[RecordError] = ()):
        super().__init__(items)
        self.errors: list[RecordError] = list(errors)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_for_errors(self) -> "RecordList":
        if self.errors:
            head = "; ".join(str(e) for e in self.errors[:5])
            raise DataValidationError(f"{len(self.errors)} invalid record(s): {head}", self.errors)
        return self


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class GeoRef:
    unit_id: str
    source: str  # "place" or "geoprofile"
    raw_label: str

    def __post_init__(self):
        if self.source not in ("place", "geoprofile"):
            raise ValueError(f"unknown match source {self.source!r}")
        if not self.raw_label:
            raise ValueError("GeoRef raw_label must be non-empty")


@dataclass(frozen=True)
class Tweet:
    id: str
    timestamp: datetime
    text: str
    kind: str = "original"
    account_class: str = "unknown"
    place_match: Optional[GeoRef] = None
    profile_match: Optional[GeoRef] = None
    coords: Optional[tuple[float, float]] = None
    verified: Optional[bool] = None
    handle: Optional[str] = None
    # set by cleaning once the place/geoprofile precedence has been applied
    location: Optional[GeoRef] = None

    @property
    def is_retweet(self) -> bool:
        return self.kind == "retweet"


@dataclass(frozen=True)
class GeoUnit:
    id: str
    level: str
    name: str
    parent: Optional[str] = None
    metro_group: Optional[str] = None
    population: int = 0
    centroid: tuple[float, float] = (0.0, 0.0)
    polygon: Optional[tuple[tuple[float, float], ...]] = None


@dataclass(frozen=True)
class BeachReport:
    beach_id: str
    county: str
    date: date
    dead_fish: int
    respiratory: int


@dataclass(frozen=True)
class KBrevisSample:
    sample_id: str
    date: date
    lat: float
    lon: float
    cells_per_liter: float


@dataclass(frozen=True)
class LexiconEntry:
    phrase: tuple[str, ...]
    cls: str
    weight: float

    @property
    def text(self) -> str:
        return " ".join(self.phrase)


# ---------------------------------------------------------------------------
# Geo registry


class GeoRegistry:
    """Read-only lookup over the locality hierarchy.

    ``shared`` maps a synthetic unit id (e.g. the greater Tampa Bay area)
    to the county ids whose populations decide its credit split.
    """

    def __init__(self, units: Iterable[GeoUnit], shared: Optional[dict] = None):
        self.units: dict[str, GeoUnit] = {}
        for u in units:
            if u.id in self.units:
                raise DataValidationError(f"duplicate unit id {u.id!r}")
            self.units[u.id] = u
        self.shared: dict[str, tuple[str, ...]] = {}
        shared = DEFAULT_SHARED_UNITS if shared is None else shared
        for sid, members in shared.items():
            members = tuple(members)
            if not all(m in self.units for m in members):
                continue
            self.shared[sid] = members
            if sid not in self.units:
                pop = sum(self.units[m].population for m in members)
                root = self.units[members[0]].parent
                lat = sum(self.units[m].centroid[0] for m in members) / len(members)
                lon = sum(self.units[m].centroid[1] for m in members) / len(members)
                name = sid.removesuffix("_shared").replace("_", " ").title()
                self.units[sid] = GeoUnit(sid, "region", name, root, None, pop, (lat, lon))
        self._by_name: dict[str, str] = {}
        for u in self.units.values():
            self._by_name.setdefault(_norm_label(u.name), u.id)
        self._metro_pop: dict[str, int] = {}
        for u in self.units.values():
            if u.level == "city" and u.metro_group:
                self._metro_pop[u.metro_group] = self._metro_pop.get(u.metro_group, 0) + u.population

    def __contains__(self, unit_id) -> bool:
        return unit_id in self.units

    def __getitem__(self, unit_id: str) -> GeoUnit:
        return self.units[unit_id]

    def __len__(self) -> int:
        return len(self.units)

    def at_level(self, level: str) -> list[GeoUnit]:
        """Units at ``level`` in id order; synthetic shared units are excluded."""
        return sorted((u for u in self.units.values() if u.level == level and u.id not in self.shared),
                      key=lambda u: u.id)

    def counties(self) -> list[GeoUnit]:
        return self.at_level("county")

    def lookup_label(self, label: str) -> Optional[str]:
        """Resolve a free-text location label (unit id or unit name) to a unit id."""
        if label in self.units:
            return label
        return self._by_name.get(_norm_label(label))

    def ancestor(self, unit_id: str, level: str) -> Optional[str]:
        """Nearest unit at ``level`` on the parent chain (the unit itself counts)."""
        u = self.units.get(unit_id)
        seen = set()
        while u is not None and u.id not in seen:
            if u.level == level and u.id not in self.shared:
                return u.id
            seen.add(u.id)
            u = self.units.get(u.parent) if u.parent else None
        return None

    def root(self) -> str:
        roots = [u.id for u in self.at_level("region") if not u.parent]
        if len(roots) != 1:
            raise DataValidationError(f"expected exactly one root region, found {roots}")
        return roots[0]

    def metro_population(self, metro_group: str) -> int:
        return self._metro_pop.get(metro_group, 0)

    def effective_metro(self, unit_id: str) -> Optional[str]:
        u = self.units[unit_id]
        if u.metro_group:
            return u.metro_group
        if u.level == "zcta" and u.parent in self.units:
            return self.units[u.parent].metro_group
        return None

    def denominator(self, unit_id: str) -> int:
        """Population used for per-capita rates.

        Cities and ZCTAs use the total population of their metro group so
        small towns are not inflated; counties and regions use their own.
        """
        u = self.units[unit_id]
        if u.level in ("city", "zcta"):
            metro = self.effective_metro(unit_id)
            if metro is not None and self._metro_pop.get(metro, 0) > 0:
                return self._metro_pop[metro]
        return u.population

    def summary(self) -> dict[str, int]:
        counts = {lvl: 0 for lvl in LEVELS}
        for u in self.units.values():
            if u.id not in self.shared:
                counts[u.level] += 1
        return counts


def _norm_label(label: str) -> str:
    return " ".join(label.lower().replace(".", "").split())


# ---------------------------------------------------------------------------
# Parsers


def _parse_timestamp(raw) -> datetime:
    if not isinstance(raw, str) or not raw.strip():
        raise ValueError("missing created_at")
    s = raw.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    ts = datetime.fromisoformat(s)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _opt_float(raw) -> Optional[float]:
    if raw is None or (isinstance(raw, str) and not raw.strip()):
        return None
    return float(raw)


def _opt_bool(raw) -> Optional[bool]:
    if raw is None or raw == "":
        return None
    if isinstance(raw, bool):
        return raw
    s = str(raw).strip().lower()
    if s in ("true", "1", "yes", "t"):
        return True
    if s in ("false", "0", "no", "f"):
        return False
    raise ValueError(f"bad boolean {raw!r}")


def _opt_str(raw) -> Optional[str]:
    if raw is None:
        return None
    s = str(raw).strip()
    return s or None


def _tweet_from_record(rec: dict, registry: Optional[GeoRegistry]) -> Tweet:
    tid = _opt_str(rec.get("id"))
    if tid is None:
        raise ValueError("missing id")
    ts = _parse_timestamp(rec.get("created_at"))
    text = rec.get("text")
    if not isinstance(text, str):
        raise ValueError("missing text")
    kind = _opt_str(rec.get("kind")) or "original"
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    account_class = _opt_str(rec.get("account_class")) or "unknown"
    if account_class not in ACCOUNT_CLASSES:
        raise ValueError(f"unknown account_class {account_class!r}")

    place = None
    place_unit = _opt_str(rec.get("place_unit"))
    if place_unit is not None:
        unit_id = place_unit
        if registry is not None:
            unit_id = registry.lookup_label(place_unit)
            if unit_id is None:
                raise ValueError(f"place_unit {place_unit!r} not in registry")
        place = GeoRef(unit_id, "place", _opt_str(rec.get("place_label")) or place_unit)

    profile = None
    label = _opt_str(rec.get("profile_label"))
    profile_unit = _opt_str(rec.get("profile_unit"))
    if label is not None or profile_unit is not None:
        unit_id = profile_unit
        if unit_id is None:
            unit_id = registry.lookup_label(label) if registry is not None else label
            if unit_id is None:
                raise ValueError(f"profile_label {label!r} not in registry")
        elif registry is not None and unit_id not in registry:
            raise ValueError(f"profile_unit {unit_id!r} not in registry")
        profile = GeoRef(unit_id, "geoprofile", label or unit_id)

    if place is None and profile is None:
        raise ValueError("record has no geo field (place_unit or profile_label)")

    lat, lon = _opt_float(rec.get("lat")), _opt_float(rec.get("lon"))
    coords = None
    if lat is not None and lon is not None:
        if not (-90 <= lat <= 90 and -180 <= lon <= 180):
            raise ValueError(f"coordinates out of range ({lat}, {lon})")
        coords = (lat, lon)

    location = None
    loc_unit = _opt_str(rec.get("resolved_unit"))
    if loc_unit is not None:
        location = GeoRef(loc_unit, _opt_str(rec.get("resolved_source")) or "place",
                          _opt_str(rec.get("resolved_label")) or loc_unit)

    return Tweet(id=tid, timestamp=ts, text=text, kind=kind, account_class=account_class,
                 place_match=place, profile_match=profile, coords=coords,
                 verified=_opt_bool(rec.get("verified")), handle=_opt_str(rec.get("handle")),
                 location=location)


def tweet_to_record(t: Tweet) -> dict:
    """Inverse of the JSONL tweet contract; ``parse_tweets`` round-trips it."""
    rec = {
        "id": t.id,
        "created_at": t.timestamp.astimezone(timezone.utc).isoformat().replace("+00:00", "Z"),
        "text": t.text,
        "kind": t.kind,
        "verified": t.verified,
        "account_class": t.account_class,
    }
    if t.handle is not None:
        rec["handle"] = t.handle
    if t.place_match is not None:
        rec["place_unit"] = t.place_match.unit_id
        if t.place_match.raw_label != t.place_match.unit_id:
            rec["place_label"] = t.place_match.raw_label
    if t.profile_match is not None:
        rec["profile_label"] = t.profile_match.raw_label
        rec["profile_unit"] = t.profile_match.unit_id
    if t.coords is not None:
        rec["lat"], rec["lon"] = t.coords
    if t.location is not None:
        rec["resolved_unit"] = t.location.unit_id
        rec["resolved_source"] = t.location.source
        rec["resolved_label"] = t.location.raw_label
    return rec


def _iter_jsonl(path: Path) -> Iterator[tuple[int, object]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, exc


def _iter_csv(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            yield reader.line_num, row


def parse_tweets(path, format: Optional[str] = None, registry: Optional[GeoRegistry] = None) -> RecordList:
    """Parse a tweet corpus in JSONL (one object per line) or CSV.

    When ``registry`` is given, ``place_unit`` and ``profile_label`` are
    resolved against it and unknown locations become record errors.
    Duplicate ids are errors; the first occurrence is kept.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise ValueError(f"unknown tweet format {format!r}")

    rows = _iter_jsonl(path) if format == "jsonl" else _iter_csv(path)
    out = RecordList()
    seen: set[str] = set()
    for lineno, rec in rows:
        if isinstance(rec, Exception):
            out.errors.append(RecordError(path.name, lineno, f"invalid JSON: {rec}"))
            continue
        if not isinstance(rec, dict):
            out.errors.append(RecordError(path.name, lineno, "record is not an object"))
            continue
        try:
            tweet = _tweet_from_record(rec, registry)
        except ValueError as exc:
            out.errors.append(RecordError(path.name, lineno, str(exc)))
            continue
        if tweet.id in seen:
            out.errors.append(RecordError(path.name, lineno, f"duplicate id {tweet.id!r}"))
            continue
        seen.add(tweet.id)
        out.append(tweet)
    return out


def write_tweets(tweets: Iterable[Tweet], fh) -> None:
    for t in tweets:
        fh.write(json.dumps(tweet_to_record(t), ensure_ascii=False, sort_keys=True) + "\n")


def _int_in_range(raw, name: str, lo: int, hi: int) -> int:
    try:
        value = int(str(raw).strip())
    except ValueError:
        raise ValueError(f"{name} is not an integer: {raw!r}") from None
    if not lo <= value <= hi:
        raise ValueError(f"{name}={value} outside [{lo}, {hi}]")
    return value


def parse_conditions(path, kind: str, bbox=DEFAULT_BBOX) -> RecordList:
    """Parse beach condition reports (``kind="beach"``) or K. brevis samples
    (``kind="kbrevis"``)."""
    path = Path(path)
    if kind not in ("beach", "kbrevis"):
        raise ValueError(f"unknown condition kind {kind!r}")
    required = (("beach_id", "county_id", "date", "dead_fish", "respiratory") if kind == "beach"
                else ("sample_id", "date", "lat", "lon", "cells_per_liter"))
    out = RecordList()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing and reader.fieldnames is not None:
            raise DataValidationError(f"{path.name}: missing columns {missing}")
        for row in reader:
            try:
                d = date.fromisoformat(row["date"].strip())
                if kind == "beach":
                    rec = BeachReport(row["beach_id"].strip(), row["county_id"].strip(), d,
                                      _int_in_range(row["dead_fish"], "dead_fish", 0, 2),
                                      _int_in_range(row["respiratory"], "respiratory", 0, 3))
                else:
                    lat, lon = float(row["lat"]), float(row["lon"])
                    cells = float(row["cells_per_liter"])
                    if not math.isfinite(cells) or cells < 0:
                        raise ValueError(f"cells_per_liter must be >= 0, got {cells}")
                    if bbox is not None and not point_in_bbox(lat, lon, bbox):
                        raise ValueError(f"sample ({lat}, {lon}) outside bounding box")
                    rec = KBrevisSample(row["sample_id"].strip(), d, lat, lon, cells)
            except (ValueError, KeyError, AttributeError) as exc:
                out.errors.append(RecordError(path.name, reader.line_num, str(exc)))
                continue
            out.append(rec)
    return out


def point_in_bbox(lat: float, lon: float, bbox=DEFAULT_BBOX) -> bool:
    lat_min, lon_min, lat_max, lon_max = bbox
    return lat_min <= lat <= lat_max and lon_min <= lon <= lon_max


def parse_beach_sites(path) -> dict[str, tuple[float, float]]:
    """beach_sites.csv: ``beach_id,lat,lon`` (extra columns ignored)."""
    sites = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            sites[row["beach_id"].strip()] = (float(row["lat"]), float(row["lon"]))
    return sites


def write_conditions(records, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    records = list(records)
    if records and isinstance(records[0], KBrevisSample):
        w.writerow(["sample_id", "date", "lat", "lon", "cells_per_liter"])
        for s in records:
            w.writerow([s.sample_id, s.date.isoformat(), repr(s.lat), repr(s.lon), repr(s.cells_per_liter)])
    else:
        w.writerow(["beach_id", "county_id", "date", "dead_fish", "respiratory"])
        for r in records:
            w.writerow([r.beach_id, r.county, r.date.isoformat(), r.dead_fish, r.respiratory])


def parse_polygons(path) -> dict[str, tuple[tuple[float, float], ...]]:
    """Read county rings from a GeoJSON FeatureCollection.

    Each feature needs ``properties.id`` and Polygon geometry whose outer
    ring is given in GeoJSON ``[lon, lat]`` order and explicitly closed.
    Returned rings are ``(lat, lon)`` tuples without the closing vertex.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    rings = {}
    for feat in doc.get("features", []):
        uid = feat["properties"]["id"]
        coords = feat["geometry"]["coordinates"][0]
        if len(coords) < 4 or list(coords[0]) != list(coords[-1]):
            raise DataValidationError(f"polygon for {uid!r} is not a closed ring")
        ring = tuple((float(lat), float(lon)) for lon, lat in coords[:-1])
        if _ring_self_intersects(ring):
            raise DataValidationError(f"polygon for {uid!r} self-intersects")
        rings[uid] = ring
    return rings


def polygons_to_geojson(rings: dict) -> dict:
    feats = []
    for uid, ring in sorted(rings.items()):
        coords = [[lon, lat] for lat, lon in ring]
        coords.append(coords[0])
        feats.append({"type": "Feature", "properties": {"id": uid},
                      "geometry": {"type": "Polygon", "coordinates": [coords]}})
    return {"type": "FeatureCollection", "features": feats}


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2, o3, o4 = orient(p1, p2, q1), orient(p1, p2, q2), orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_seg(p1, p2, q1)) or (o2 == 0 and on_seg(p1, p2, q2))
            or (o3 == 0 and on_seg(q1, q2, p1)) or (o4 == 0 and on_seg(q1, q2, p2)))


def _ring_self_intersects(ring) -> bool:
    n = len(ring)
    edges = [(ring[i], ring[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            # adjacent edges share a vertex by construction
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return True
    return False


def parse_geo_registry(path, polygons=None, shared: Optional[dict] = None) -> GeoRegistry:
    """Load and validate the locality hierarchy.

    ``polygons`` is either a path to a ring file (see :func:`parse_polygons`)
    or an already-parsed ``{county_id: ring}`` mapping.
    """
    path = Path(path)
    rings = {}
    if polygons is not None:
        rings = polygons if isinstance(polygons, dict) else parse_polygons(polygons)

    units, errors = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                level = row["level"].strip()
                if level not in LEVELS:
                    raise ValueError(f"unknown level {level!r}")
                pop_raw = (row.get("population") or "").strip()
                pop = int(float(pop_raw)) if pop_raw else 0
                if pop < 0:
                    raise ValueError("negative population")
                uid = row["id"].strip()
                units.append(GeoUnit(
                    id=uid, level=level, name=row["name"].strip(),
                    parent=_opt_str(row.get("parent")), metro_group=_opt_str(row.get("metro_group")),
                    population=pop,
                    centroid=(float(row["centroid_lat"]), float(row["centroid_lon"])),
                    polygon=rings.get(uid)))
            except (ValueError, KeyError, AttributeError) as exc:
                errors.append(RecordError(path.name, reader.line_num, str(exc)))
    if errors:
        raise DataValidationError(f"{len(errors)} invalid registry row(s)", errors)
    validate_registry(units)
    return GeoRegistry(units, shared=shared)


def validate_registry(units: list[GeoUnit]) -> None:
    by_id = {u.id: u for u in units}
    problems = []
    for u in units:
        if u.level == "region":
            if u.parent and u.parent in by_id and by_id[u.parent].level != "region":
                problems.append(f"region {u.id!r} has non-region parent")
        else:
            p = by_id.get(u.parent) if u.parent else None
            if p is None:
                problems.append(f"{u.level} {u.id!r} has missing parent {u.parent!r}")
            elif p.level != _PARENT_LEVEL[u.level]:
                problems.append(f"{u.level} {u.id!r} has {p.level} parent {p.id!r}")
        if u.level in ("region", "county", "city") and u.population <= 0:
            problems.append(f"{u.level} {u.id!r} lacks a positive population")
        if u.polygon is not None and u.level != "county":
            problems.append(f"polygon attached to non-county {u.id!r}")

    # parentage cycles
    for u in units:
        seen, cur = set(), u
        while cur is not None and cur.parent:
            if cur.id in seen:
                problems.append(f"cycle in parentage through {u.id!r}")
                break
            seen.add(cur.id)
            cur = by_id.get(cur.parent)

    # a metro group lives inside one county
    metro_county: dict[str, set] = {}
    for u in units:
        if u.level == "city" and u.metro_group:
            metro_county.setdefault(u.metro_group, set()).add(u.parent)
    for g, counties in metro_county.items():
        if len(counties) > 1:
            problems.append(f"metro group {g!r} spans counties {sorted(counties)}")
    for u in units:
        if u.level != "zcta" or u.parent not in by_id:
            continue
        city = by_id[u.parent]
        metro = u.metro_group or city.metro_group
        if metro is None:
            problems.append(f"zcta {u.id!r} has no metro group")
            continue
        counties = metro_county.get(metro)
        if not counties:
            problems.append(f"zcta {u.id!r} references metro group {metro!r} with no cities")
        elif city.parent not in counties:
            problems.append(f"zcta {u.id!r}: parent city {city.id!r} is in {city.parent!r} "
                            f"but metro group {metro!r} is in {sorted(counties)}")
    if problems:
        raise DataValidationError(f"registry invalid: {problems[0]}", problems)


def write_geo_registry(units: Iterable[GeoUnit], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["id", "level", "name", "parent", "metro_group", "population", "centroid_lat", "centroid_lon"])
    for u in units:
        w.writerow([u.id, u.level, u.name, u.parent or "", u.metro_group or "", u.population,
                    repr(u.centroid[0]), repr(u.centroid[1])])


# ---------------------------------------------------------------------------
# Lexicon


def phrase_tokens(phrase: str) -> tuple[str, ...]:
    return tuple(phrase.lower().replace("’", "'").split())


class Lexicon:
    """Immutable phrase index: token tuple -> entry, with the longest phrase
    length kept for longest-match-first scanning."""

    def __init__(self, entries: Iterable[LexiconEntry] = ()):
        index: dict[tuple[str, ...], LexiconEntry] = {}
        for e in entries:
            index[e.phrase] = e
        self._index = index
        self.max_len = max((len(p) for p in index), default=0)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, phrase) -> bool:
        key = phrase_tokens(phrase) if isinstance(phrase, str) else tuple(phrase)
        return key in self._index

    def __iter__(self):
        return iter(self._index.values())

    def get(self, phrase) -> Optional[LexiconEntry]:
        key = phrase_tokens(phrase) if isinstance(phrase, str) else tuple(phrase)
        return self._index.get(key)

    def entries(self) -> list[LexiconEntry]:
        return list(self._index.values())


def make_entry(phrase: str, cls: str, weight=None) -> LexiconEntry:
    if cls not in LEXICON_CLASSES:
        raise ValueError(f"unknown lexicon class {cls!r}")
    tokens = phrase_tokens(phrase)
    if not tokens:
        raise ValueError("empty phrase")
    if weight is None or (isinstance(weight, str) and not weight.strip()):
        if cls == "polarized":
            raise ValueError(f"polarized entry {phrase!r} needs a weight")
        w = DEFAULT_SHIFTER_WEIGHTS[cls]
    else:
        w = float(weight)
    if cls == "polarized" and not -1.0 <= w <= 1.0:
        raise ValueError(f"polarized weight {w} outside [-1, 1] for {phrase!r}")
    if cls in ("amplifier", "deamplifier") and w < 0:
        raise ValueError(f"{cls} weight must be a positive delta, got {w}")
    return LexiconEntry(tokens, cls, w)


def parse_lexicon(path) -> Lexicon:
    path = Path(path)
    entries, errors = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                entries.append(make_entry(row["phrase"], row["class"].strip(), row.get("weight")))
            except (ValueError, KeyError, AttributeError) as exc:
                errors.append(RecordError(path.name, reader.line_num, str(exc)))
    if errors:
        raise DataValidationError(f"{len(errors)} invalid lexicon row(s): {errors[0]}", errors)
    return Lexicon(entries)


def write_lexicon(lexicon: Lexicon, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["phrase", "class", "weight"])
    for e in lexicon:
        w.writerow([e.text, e.cls, repr(e.weight)])


def data_path(name: str) -> Path:
    """Path of a file bundled under ``redtide/data``."""
    return Path(__file__).parent / "data" / name
