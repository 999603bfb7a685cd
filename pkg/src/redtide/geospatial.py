"""Great-circle distances, county assignment of water samples, credit
sharing for ambiguous locations, per-capita rates and distance bins."""

from __future__ import annotations

import math
from typing import Optional

from redtide.corpus import GeoRegistry, KBrevisSample

EARTH_RADIUS_MI = 3958.7613

BINS = ("close", "medium", "far")
CLOSE_MAX_MI = 25.0
MEDIUM_MAX_MI = 50.0


def _check_coord(lat: float, lon: float) -> None:
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise ValueError(f"coordinate out of range: ({lat}, {lon})")


def geodesic_miles(a, b) -> float:
    """Haversine distance in statute miles between ``(lat, lon)`` pairs."""
    lat1, lon1 = a
    lat2, lon2 = b
    _check_coord(lat1, lon1)
    _check_coord(lat2, lon2)
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_MI * math.asin(min(1.0, math.sqrt(h)))


def min_distance(point, sites) -> float:
    """Distance from ``point`` to the nearest of ``sites`` (must be non-empty)."""
    if not sites:
        raise ValueError("no sites given")
    return min(geodesic_miles(point, s) for s in sites)


def _on_segment(p, a, b, eps=1e-12) -> bool:
    (py, px), (ay, ax), (by, bx) = p, a, b
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if abs(cross) > eps * max(1.0, abs(bx - ax) + abs(by - ay)):
        return False
    return min(ax, bx) - eps <= px <= max(ax, bx) + eps and min(ay, by) - eps <= py <= max(ay, by) + eps


def point_in_polygon(point, ring) -> bool:
    """Even-odd ray casting on a ``(lat, lon)`` ring; boundary points count as inside."""
    lat, lon = point
    lats = [v[0] for v in ring]
    lons = [v[1] for v in ring]
    if not (min(lats) <= lat <= max(lats) and min(lons) <= lon <= max(lons)):
        return False
    n = len(ring)
    inside = False
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if _on_segment(point, a, b):
            return True
        (alat, alon), (blat, blon) = a, b
        if (alat > lat) != (blat > lat):
            x_cross = alon + (lat - alat) * (blon - alon) / (blat - alat)
            if lon < x_cross:
                inside = not inside
    return inside


def assign_sample_to_county(sample: KBrevisSample, registry: GeoRegistry,
                            max_miles: float = 30.0) -> Optional[str]:
    """County for a water sample.

    Containment wins; several containing polygons (shared boundary) resolve
    to the lexicographically smallest county id. Otherwise the county with
    the nearest centroid is used if within ``max_miles``; else ``None``.
    """
    point = (sample.lat, sample.lon)
    counties = registry.counties()
    hits = [c.id for c in counties if c.polygon and point_in_polygon(point, c.polygon)]
    if hits:
        return min(hits)
    best, best_d = None, math.inf
    for c in counties:
        d = geodesic_miles(point, c.centroid)
        if d < best_d or (d == best_d and best is not None and c.id < best):
            best, best_d = c.id, d
    return best if best_d <= max_miles else None


def credit_share(unit_id: str, registry: GeoRegistry) -> dict[str, float]:
    """Fractional credit of one tweet located at ``unit_id``.

    Shared units split by member population; everything else keeps full
    credit.
    """
    if unit_id not in registry:
        raise KeyError(f"unknown unit {unit_id!r}")
    members = registry.shared.get(unit_id)
    if not members:
        return {unit_id: 1.0}
    pops = [registry[m].population for m in members]
    if any(p <= 0 for p in pops):
        raise ValueError(f"shared unit {unit_id!r} has members without population")
    total = float(sum(pops))
    weights = {m: p / total for m, p in zip(members, pops)}
    # absorb rounding so weights sum to exactly 1
    last = members[-1]
    weights[last] = 1.0 - math.fsum(w for m, w in weights.items() if m != last)
    return weights


def per_capita(count: float, unit_id: str, registry: GeoRegistry, scale: float = 100_000) -> float:
    denom = registry.denominator(unit_id)
    if denom <= 0:
        raise ZeroDivisionError(f"unit {unit_id!r} has zero population denominator")
    return count / denom * scale


def bin_distance(miles: float, close_max: float = CLOSE_MAX_MI, medium_max: float = MEDIUM_MAX_MI) -> str:
    """close below ``close_max``, medium up to and including ``medium_max``, far beyond."""
    if miles < 0 or math.isnan(miles):
        raise ValueError(f"distance must be non-negative, got {miles}")
    if miles < close_max:
        return "close"
    if miles <= medium_max:
        return "medium"
    return "far"
