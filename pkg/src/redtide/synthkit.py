"""Deterministic synthetic corpora with planted ground truth.

The generator builds a toy coastline of counties (one city, one ZCTA and
one reporting beach each), a smooth bloom process driving beach indices
and K. brevis samples, and a tweet stream whose per-capita counts are
coupled to the dead-fish index with a chosen correlation and decay with
distance to high-impact sites.

Randomness comes from :class:`XorShift64Star` only, so the same spec
yields byte-identical files on any platform:

* seeding: ``state = splitmix64(seed)`` (0 is replaced by
  ``0x9E3779B97F4A7C15``);
* step: ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27`` (64-bit), output
  ``x * 0x2545F4914F6CDD1D mod 2**64``;
* ``random()`` is ``(u64 >> 11) * 2**-53``; ``normal()`` is one Box-Muller
  draw ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`` using two ``random()`` calls.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Optional

from redtide.aggregation import bucketize, freq_days
from redtide.analytics import HIGH_IMPACT_CELLS
from redtide.corpus import (
    BeachReport,
    GeoRef,
    GeoRegistry,
    GeoUnit,
    KBrevisSample,
    Tweet,
    polygons_to_geojson,
    write_conditions,
    write_geo_registry,
    write_tweets,
)
from redtide.geospatial import min_distance

MASK64 = (1 << 64) - 1


class InfeasibleSpec(ValueError):
    pass


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        self.state = state or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self.random()

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        u1, u2 = self.random(), self.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def randint(self, lo: int, hi: int) -> int:
        """Integer in ``[lo, hi]``."""
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def bernoulli(self, p: float) -> bool:
        return self.random() < p


@dataclass
class SynthSpec:
    seed: int = 0
    n_counties: int = 5
    window_start: date = date(2018, 5, 15)
    n_days: int = 357
    coupling_rho: float = 0.8
    distance_decay: float = 0.0
    retweet_base: float = 0.3
    retweet_distance_slope: float = 0.0
    political_noise_rate: float = 0.0
    base_rate: float = 2.0  # tweets per 100k per day
    signal_scale: float = 1.0  # tweets per 100k per day per dead-fish level
    target_freq: str = "weekly"
    county_population: int = 100_000
    county_spacing_mi: float = 25.0
    explicit_fraction: float = 0.3
    n_peaks: int = 5
    samples_per_day: float = 1.0
    utc_offset_hours: float = -5.0

    def validate(self) -> None:
        if not -1.0 <= self.coupling_rho <= 1.0:
            raise InfeasibleSpec(f"coupling_rho {self.coupling_rho} outside [-1, 1]")
        for name in ("distance_decay", "base_rate", "signal_scale", "samples_per_day"):
            if getattr(self, name) < 0:
                raise InfeasibleSpec(f"{name} must be >= 0")
        for name in ("political_noise_rate", "explicit_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InfeasibleSpec(f"{name} must lie in [0, 1]")
        if self.n_counties < 1 or self.n_days < 1 or self.county_population <= 0:
            raise InfeasibleSpec("need at least one county, one day and positive population")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window_start"] = self.window_start.isoformat()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        if isinstance(d.get("window_start"), str):
            d["window_start"] = date.fromisoformat(d["window_start"])
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown synth spec keys: {sorted(unknown)}")
        return cls(**d)

    @property
    def window(self) -> tuple[date, date]:
        return self.window_start, self.window_start + timedelta(days=self.n_days - 1)


COAST_LON = -82.6
LAT0 = 26.0
MI_PER_DEG_LAT = 69.0


@dataclass
class Layout:
    units: list
    polygons: dict
    beach_sites: dict  # beach id -> (lat, lon)
    beach_county: dict
    county_city: dict

    def registry(self) -> GeoRegistry:
        return GeoRegistry(self.units, shared={})


def default_layout(spec: SynthSpec) -> Layout:
    """Counties stacked north-south along a straight coast; each has one
    city (its own metro group), one ZCTA and one beach about 6 mi west of
    the centroid."""
    step = spec.county_spacing_mi / MI_PER_DEG_LAT
    n = spec.n_counties
    units = [GeoUnit("region", "region", "Synthetic Coast", None, None, n * spec.county_population,
                     (LAT0 + step * (n - 1) / 2, COAST_LON + 0.1))]
    polygons, sites, beach_county, county_city = {}, {}, {}, {}
    for i in range(n):
        lat = round(LAT0 + i * step, 6)
        cid, city, z = f"county_{i:02d}", f"city_{i:02d}", f"zcta_{i:02d}"
        centroid = (lat, COAST_LON + 0.1)
        lo, hi = round(lat - step / 2, 6), round(lat + step / 2, 6)
        ring = ((lo, COAST_LON - 0.3), (lo, COAST_LON + 0.5), (hi, COAST_LON + 0.5), (hi, COAST_LON - 0.3))
        polygons[cid] = ring
        units.append(GeoUnit(cid, "county", f"County {i:02d}", "region", None, spec.county_population,
                             centroid, ring))
        units.append(GeoUnit(city, "city", f"City {i:02d}", cid, f"metro_{i:02d}", spec.county_population,
                             centroid))
        units.append(GeoUnit(z, "zcta", f"{34000 + i}", city, f"metro_{i:02d}", spec.county_population,
                             centroid))
        bid = f"beach_{i:02d}"
        sites[bid] = (lat, COAST_LON)
        beach_county[bid] = cid
        county_city[cid] = city
    return Layout(units, polygons, sites, beach_county, county_city)


_TEMPLATES_NEG = (
    "Red tide at {place} today. Dead fish everywhere, the smell is horrible",
    "#redtide is so bad in {place}... coughing all day",
    "Toxic red tide killing fish near {place}",
    "Is the red tide really bad at {place}?",
    "The red tide in {place} is a disaster for local business",
)
_TEMPLATES_NEU = (
    "Red tide update for {place} beaches",
    "Reading about the red tide near {place}",
    "#redtide report {place}",
    "Anyone know the red tide status at {place}?",
)
_TEMPLATES_POS = (
    "Red tide is gone from {place}! Gorgeous day",
    "No signs of red tide at {place} today",
    "Beautiful water at {place}, no more red tide",
)
_TEMPLATES_POLITICAL = (
    "Vote out Red Tide Rick!",
    "#RedTideRick strikes again in {place}",
    "The Red Tide Party has to go",
    "Red Tide Rick and the Red Tide Party, same thing",
)


@dataclass
class SynthData:
    spec: SynthSpec
    layout: Layout
    tweets: list
    beach: list
    kbrevis: list
    truth: dict

    def registry(self) -> GeoRegistry:
        return self.layout.registry()

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "tweets": out / "tweets.jsonl",
            "beach": out / "beach.csv",
            "kbrevis": out / "kbrevis.csv",
            "truth": out / "truth.json",
            "registry": out / "geo_registry.csv",
            "polygons": out / "county_polygons.geojson",
            "beach_sites": out / "beach_sites.csv",
        }
        writers = {
            "tweets": lambda fh: write_tweets(self.tweets, fh),
            "beach": lambda fh: write_conditions(self.beach, fh),
            "kbrevis": lambda fh: _write_kbrevis(self.kbrevis, fh),
            "truth": lambda fh: fh.write(json.dumps(self.truth, indent=2, sort_keys=True) + "\n"),
            "registry": lambda fh: write_geo_registry(self.layout.units, fh),
            "polygons": lambda fh: fh.write(json.dumps(polygons_to_geojson(self.layout.polygons),
                                                       sort_keys=True) + "\n"),
            "beach_sites": lambda fh: _write_sites(self.layout, fh),
        }
        for key, path in paths.items():
            tmp = path.with_name(path.name + ".tmp")
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                writers[key](fh)
            os.replace(tmp, path)
        return paths


def _write_kbrevis(samples, fh) -> None:
    fh.write("sample_id,date,lat,lon,cells_per_liter\n")
    for s in samples:
        fh.write(f"{s.sample_id},{s.date.isoformat()},{s.lat!r},{s.lon!r},{s.cells_per_liter!r}\n")


def _write_sites(layout: Layout, fh) -> None:
    fh.write("beach_id,county_id,lat,lon\n")
    for bid, (lat, lon) in sorted(layout.beach_sites.items()):
        fh.write(f"{bid},{layout.beach_county[bid]},{lat!r},{lon!r}\n")


def _bloom_intensity(spec: SynthSpec, rng: XorShift64Star, n_counties: int) -> list[list[float]]:
    """Latent intensity in [0, 1] per county and day: a sum of Gaussian
    bumps shared along the coast, scaled per county (southern counties
    harder hit)."""
    peaks = []
    for _ in range(spec.n_peaks):
        center = rng.uniform(0.05, 0.95) * spec.n_days
        width = rng.uniform(6.0, 18.0)
        peaks.append((center, width))
    out = []
    for c in range(n_counties):
        south = 1.0 - c / max(1, n_counties)
        amps = [rng.uniform(0.3, 1.0) * (0.5 + 0.6 * south) for _ in peaks]
        row = []
        for d in range(spec.n_days):
            v = sum(a * math.exp(-0.5 * ((d - m) / w) ** 2) for a, (m, w) in zip(amps, peaks))
            row.append(min(1.0, v))
        out.append(row)
    return out


def _largest_remainder(values: list[float], total: int) -> list[int]:
    """Integers summing to ``total`` proportional to non-negative ``values``."""
    s = math.fsum(values)
    if total <= 0:
        return [0] * len(values)
    if s <= 0:
        values, s = [1.0] * len(values), float(len(values))
    raw = [v / s * total for v in values]
    base = [int(math.floor(r)) for r in raw]
    short = total - sum(base)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def _std(xs: list[float]) -> float:
    m = math.fsum(xs) / len(xs)
    return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / len(xs))


def generate(spec: SynthSpec) -> SynthData:
    spec.validate()
    rng = XorShift64Star(spec.seed)
    layout = default_layout(spec)
    counties = [u for u in layout.units if u.level == "county"]
    n_c, n_d = len(counties), spec.n_days
    days = [spec.window_start + timedelta(days=d) for d in range(n_d)]
    intensity = _bloom_intensity(spec, rng, n_c)

    # beach reports: one beach per county, every day
    beach = []
    dead = [[0] * n_d for _ in range(n_c)]
    beach_ids = sorted(layout.beach_sites)
    for c, bid in enumerate(beach_ids):
        for d in range(n_d):
            lvl = intensity[c][d]
            df = max(0, min(2, int(round(2.0 * lvl + 0.35 * rng.normal()))))
            rs = max(0, min(3, int(round(3.0 * lvl + 0.5 * rng.normal()))))
            dead[c][d] = df
            beach.append(BeachReport(bid, layout.beach_county[bid], days[d], df, rs))

    # K. brevis samples offshore of each county
    step = spec.county_spacing_mi / MI_PER_DEG_LAT
    kbrevis = []
    for d in range(n_d):
        for c, county in enumerate(counties):
            n_samples = int(spec.samples_per_day) + (1 if rng.random() < spec.samples_per_day % 1 else 0)
            for k in range(n_samples):
                lat = round(county.centroid[0] + rng.uniform(-0.45, 0.45) * step, 5)
                lon = round(COAST_LON - rng.uniform(0.0, 0.15), 5)
                lvl = intensity[c][d]
                if rng.random() < 0.15 + 0.85 * lvl:
                    cells = round(10 ** (3.5 + 3.2 * lvl + 0.4 * rng.normal()), 1)
                else:
                    cells = 0.0
                kbrevis.append(KBrevisSample(f"s{d:04d}_{c:02d}_{k}", days[d], lat, lon, cells))

    # weekly high-impact sites drive the distance effects
    weeks = bucketize(*spec.window, "weekly")
    week_sites: dict[int, list] = {}
    for s in kbrevis:
        if s.cells_per_liter > HIGH_IMPACT_CELLS:
            week_sites.setdefault((s.date - spec.window_start).days // 7, set()).add((s.lat, s.lon))
    week_sites = {w: sorted(v) for w, v in week_sites.items()}

    cache: dict[tuple[int, int], Optional[float]] = {}

    def site_distance(c: int, d: int) -> Optional[float]:
        key = (c, d // 7)
        if key not in cache:
            sites = week_sites.get(key[1])
            cache[key] = None if not sites else min_distance(counties[c].centroid, sites)
        return cache[key]

    # coupling: per target bucket, Y = base*len + g*S + sigma*eps (per 100k)
    length = freq_days(spec.target_freq)
    buckets = bucketize(*spec.window, spec.target_freq)
    sums = [[sum(dead[c][b.index * length: b.index * length + length]) for b in buckets] for c in range(n_c)]
    flat = [s for row in sums for s in row]
    sd_s = _std(flat)
    rho = spec.coupling_rho
    if rho == 0.0:
        g, sigma = 0.0, spec.signal_scale * (sd_s if sd_s > 0 else 1.0)
    else:
        if sd_s == 0.0:
            raise InfeasibleSpec("dead-fish series has no variance; cannot plant a non-zero correlation")
        g = math.copysign(spec.signal_scale, rho)
        sigma = spec.signal_scale * sd_s * math.sqrt(max(0.0, 1.0 - rho * rho)) / abs(rho)
    if g < 0 and spec.base_rate * length + g * max(flat) < 0:
        raise InfeasibleSpec("base_rate too low for a negative coupling without clipping")

    factor = spec.county_population / 100_000
    counts = [[0] * n_d for _ in range(n_c)]
    clipped = 0
    for c in range(n_c):
        for b in buckets:
            lo, hi = b.index * length, min(n_d, b.index * length + length)
            eps = rng.normal() if sigma > 0 else 0.0
            noise_per_day = sigma * eps / (hi - lo)
            daily = []
            for d in range(lo, hi):
                v = spec.base_rate + g * dead[c][d] + noise_per_day
                if v < 0:
                    clipped += 1
                    v = 0.0
                if spec.distance_decay > 0:
                    dist = site_distance(c, d)
                    if dist is not None:
                        v *= math.exp(-spec.distance_decay * dist)
                daily.append(v * factor)
            total = int(round(math.fsum(daily)))
            for d, n in zip(range(lo, hi), _largest_remainder(daily, total)):
                counts[c][d] = n

    tweets = []
    serial = 0
    offset = timedelta(hours=spec.utc_offset_hours)
    for c, county in enumerate(counties):
        city_id = layout.county_city[county.id]
        city = next(u for u in layout.units if u.id == city_id)
        zcta = next(u for u in layout.units if u.parent == city_id)
        for d in range(n_d):
            dist = site_distance(c, d)
            p_rt = spec.retweet_base if dist is None else spec.retweet_base + spec.retweet_distance_slope * dist
            p_rt = min(1.0, max(0.0, p_rt))
            for _ in range(counts[c][d]):
                serial += 1
                tweets.append(_make_tweet(rng, serial, days[d], offset, city, zcta, dead[c][d], p_rt,
                                          spec.explicit_fraction, political=False))
    n_regular = len(tweets)
    n_political = int(round(spec.political_noise_rate * n_regular))
    cities = [u for u in layout.units if u.level == "city"]
    zcta_of = {u.parent: u for u in layout.units if u.level == "zcta"}
    for _ in range(n_political):
        serial += 1
        d = rng.randint(0, n_d - 1)
        city = rng.choice(cities)
        tweets.append(_make_tweet(rng, serial, days[d], offset, city, zcta_of[city.id], 0, 0.0,
                                  spec.explicit_fraction, political=True))
    tweets.sort(key=lambda t: (t.timestamp, t.id))

    truth = {
        "spec": spec.to_dict(),
        "planted": {
            "coupling_rho": rho,
            "distance_decay": spec.distance_decay,
            "retweet_base": spec.retweet_base,
            "retweet_distance_slope": spec.retweet_distance_slope,
            "signal_coefficient": g,
            "noise_sd": sigma,
            "target_bucket_dead_fish_sum_sd": sd_s,
        },
        "realized": {
            "regular_tweets": n_regular,
            "political_tweets": n_political,
            "clipped_days": clipped,
            "beach_reports": len(beach),
            "kbrevis_samples": len(kbrevis),
            "high_impact_weeks": sorted(week_sites),
        },
    }
    return SynthData(spec, layout, tweets, beach, kbrevis, truth)


def _make_tweet(rng: XorShift64Star, serial: int, day: date, offset: timedelta, city: GeoUnit,
                zcta: GeoUnit, dead_fish: int, p_retweet: float, explicit_fraction: float, political: bool) -> Tweet:
    # local time between 08:00 and 20:00 keeps the local date unambiguous
    seconds = 8 * 3600 + rng.randint(0, 12 * 3600 - 1)
    local = datetime(day.year, day.month, day.day, tzinfo=timezone.utc) + timedelta(seconds=seconds)
    ts = local - offset
    place = city.name
    if political:
        text = rng.choice(_TEMPLATES_POLITICAL).format(place=place)
    elif dead_fish >= 1:
        text = rng.choice(_TEMPLATES_NEG).format(place=place)
    elif rng.random() < 0.3:
        text = rng.choice(_TEMPLATES_POS).format(place=place)
    else:
        text = rng.choice(_TEMPLATES_NEU).format(place=place)
    kind = "original"
    if rng.random() < p_retweet:
        kind = "retweet"
        text = "RT @coastnews: " + text
    elif rng.random() < 0.1:
        kind = "reply"
    explicit = rng.random() < explicit_fraction
    verified = rng.random() < 0.1
    # matches resolve to the ZCTA so every locality level receives credit
    ref_place = GeoRef(zcta.id, "place", city.name) if explicit else None
    ref_profile = None if explicit else GeoRef(zcta.id, "geoprofile", city.name)
    return Tweet(
        id=f"t{serial:08d}", timestamp=ts, text=text, kind=kind,
        place_match=ref_place, profile_match=ref_profile,
        coords=zcta.centroid if explicit else None,
        verified=verified, handle=f"user{rng.randint(0, 99999):05d}",
    )


def file_digest(paths) -> str:
    """SHA-256 over the given files' contents, in the given order."""
    h = hashlib.sha256()
    for p in paths:
        with open(p, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()
