"""Shared fixtures: a five-county Gulf-coast registry with 2018 population
estimates, the bundled lexicon, and small tweet builders."""

from __future__ import annotations

import sys

from datetime import date, datetime, timedelta, timezone

import pytest

from redtide.corpus import GeoRef, GeoRegistry, GeoUnit, Tweet
from redtide.sentiment import load_default_lexicon

COUNTY_POP = {
    "hillsborough": 1_500_000,
    "pinellas": 973_000,
    "pasco": 539_000,
    "sarasota": 426_000,
    "manatee": 400_000,
}

# (lat_lo, lat_hi, lon_lo, lon_hi); pinellas and hillsborough share lon -82.65
COUNTY_BOX = {
    "pasco": (28.17, 28.48, -82.90, -82.05),
    "pinellas": (27.65, 28.17, -82.90, -82.65),
    "hillsborough": (27.65, 28.17, -82.65, -82.05),
    "manatee": (27.40, 27.65, -82.90, -82.05),
    "sarasota": (26.90, 27.40, -82.90, -82.05),
}

CITIES = [
    # id, county, metro, population, centroid
    ("tampa", "hillsborough", "tampa_metro", 392_890, (27.9506, -82.4572)),
    ("brandon", "hillsborough", "tampa_metro", 114_626, (27.9378, -82.2859)),
    ("st_petersburg", "pinellas", "st_pete_metro", 265_098, (27.7676, -82.6403)),
    ("clearwater", "pinellas", "clearwater_metro", 116_478, (27.9659, -82.8001)),
    ("bradenton", "manatee", "bradenton_metro", 57_076, (27.4989, -82.5748)),
    ("bradenton_beach", "manatee", "bradenton_metro", 1_171, (27.4670, -82.7040)),
    ("sarasota_city", "sarasota", "sarasota_metro", 57_738, (27.3364, -82.5307)),
    ("venice", "sarasota", "venice_metro", 23_000, (27.0998, -82.4543)),
    ("new_port_richey", "pasco", "npr_metro", 16_000, (28.2442, -82.7193)),
]

CITY_NAMES = {
    "tampa": "Tampa", "brandon": "Brandon", "st_petersburg": "St. Petersburg", "clearwater": "Clearwater",
    "bradenton": "Bradenton", "bradenton_beach": "Bradenton Beach", "sarasota_city": "Sarasota",
    "venice": "Venice", "new_port_richey": "New Port Richey",
}

ZCTAS = [
    ("z33602", "tampa", (27.9500, -82.4580)),
    ("z34217", "bradenton_beach", (27.4660, -82.7030)),
    ("z34236", "sarasota_city", (27.3350, -82.5400)),
]


def box_ring(box):
    lat_lo, lat_hi, lon_lo, lon_hi = box
    return ((lat_lo, lon_lo), (lat_lo, lon_hi), (lat_hi, lon_hi), (lat_hi, lon_lo))


def five_county_units() -> list[GeoUnit]:
    units = [GeoUnit("tampa_bay_area", "region", "Tampa Bay Area", None, None, sum(COUNTY_POP.values()),
                     (27.7, -82.5))]
    for cid, pop in sorted(COUNTY_POP.items()):
        lat_lo, lat_hi, lon_lo, lon_hi = COUNTY_BOX[cid]
        centroid = ((lat_lo + lat_hi) / 2, (lon_lo + lon_hi) / 2)
        units.append(GeoUnit(cid, "county", cid.title(), "tampa_bay_area", None, pop, centroid,
                             box_ring(COUNTY_BOX[cid])))
    for cid, county, metro, pop, centroid in CITIES:
        units.append(GeoUnit(cid, "city", CITY_NAMES[cid], county, metro, pop, centroid))
    for zid, city, centroid in ZCTAS:
        units.append(GeoUnit(zid, "zcta", zid[1:], city, None, 0, centroid))
    return units


@pytest.fixture(scope="session")
def registry() -> GeoRegistry:
    return GeoRegistry(five_county_units())


@pytest.fixture(scope="session")
def lexicon():
    return load_default_lexicon()


T0 = datetime(2018, 8, 6, 17, 0, tzinfo=timezone.utc)  # 12:00 local at UTC-5


def make_tweet(tid, text="red tide today", place=None, profile=None, profile_label=None,
               when=T0, kind="original", verified=False, coords=None, location=None,
               account_class="unknown", handle=None) -> Tweet:
    place_ref = GeoRef(place, "place", place) if place else None
    profile_ref = GeoRef(profile, "geoprofile", profile_label or profile) if profile else None
    return Tweet(id=tid, timestamp=when, text=text, kind=kind, account_class=account_class,
                 place_match=place_ref, profile_match=profile_ref, coords=coords,
                 verified=verified, handle=handle, location=location)


def day(d: date, hour: int = 12) -> datetime:
    """UTC timestamp for ``hour`` local time (UTC-5) on ``d``."""
    return datetime(d.year, d.month, d.day, hour, tzinfo=timezone.utc) + timedelta(hours=5)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
