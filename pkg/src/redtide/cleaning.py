"""Post-collection cleaning of the tweet corpus.

Order of stages: account classification, political-nickname exclusion,
study-window filter, location resolution (place beats geoprofile) and
the "Tampa Bay" geoprofile reassignment. Every rejected tweet lands in
exactly one counter of :class:`CleaningReport`.
"""

from __future__ import annotations

import csv
import re
from functools import lru_cache
from dataclasses import asdict, dataclass, replace
from datetime import date, timedelta, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence

from redtide.corpus import TAMPA_BAY_SHARED, GeoRef, Tweet, data_path

DEFAULT_POLITICAL_PHRASES = ("red tide rick", "red tide party")
DEFAULT_UTC_OFFSET_HOURS = -5.0

# "red tide" / "redtide" / "#redtide"; leading guard stops "bored tide"
_MENTION_RE = re.compile(r"(?<![a-z0-9])red\s*tide")


class ConfigError(ValueError):
    pass


class LocationError(ValueError):
    pass


@dataclass
class CleaningReport:
    input_count: int = 0
    excluded_political: int = 0
    out_of_window: int = 0
    unresolved: int = 0
    deduped: int = 0
    reassigned_tampa_bay: int = 0
    admitted: int = 0

    def check(self) -> None:
        expected = self.input_count - self.excluded_political - self.out_of_window - self.unresolved
        if self.admitted != expected:
            raise AssertionError(f"cleaning counts do not balance: {self}")

    def merge(self, other: "CleaningReport") -> "CleaningReport":
        return CleaningReport(**{k: v + getattr(other, k) for k, v in asdict(self).items()})

    def to_dict(self) -> dict:
        return asdict(self)


def normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


def load_political_phrases(path=None) -> tuple[str, ...]:
    path = data_path("political_phrases.txt") if path is None else Path(path)
    with open(path, encoding="utf-8") as fh:
        phrases = [normalize_text(line) for line in fh if line.strip() and not line.lstrip().startswith("#")]
    return tuple(phrases)


@lru_cache(maxsize=256)
def _phrase_pattern(phrase: str) -> re.Pattern:
    # words may be separated by whitespace or run together, as in hashtags
    words = [re.escape(w) for w in phrase.split()]
    return re.compile(r"(?<![a-z0-9])" + r"\s*".join(words) + r"(?![a-z0-9])")


@lru_cache(maxsize=64)
def _any_phrase_pattern(phrases: tuple) -> re.Pattern:
    return re.compile("|".join(_phrase_pattern(p).pattern for p in phrases) or r"(?!)")


def red_tide_mentions(text: str, phrases: Sequence[str] = DEFAULT_POLITICAL_PHRASES) -> tuple[int, int]:
    """Count red-tide mentions and how many of them sit inside a political phrase."""
    norm = normalize_text(text)
    spans = [m.span() for m in _MENTION_RE.finditer(norm)]
    if not spans or not _any_phrase_pattern(tuple(phrases)).search(norm):
        return len(spans), 0
    political = []
    for p in phrases:
        political.extend(m.span() for m in _phrase_pattern(p).finditer(norm))
    embedded = sum(1 for s, e in spans if any(ps <= s and e <= pe for ps, pe in political))
    return len(spans), embedded


def is_political_only(text: str, phrases: Sequence[str] = DEFAULT_POLITICAL_PHRASES) -> bool:
    """True when every red-tide mention belongs to a political nickname."""
    total, embedded = red_tide_mentions(text, phrases)
    return total == embedded


def filter_political(tweets: Iterable[Tweet], phrases: Sequence[str] = DEFAULT_POLITICAL_PHRASES):
    kept, excluded = [], []
    for t in tweets:
        (excluded if is_political_only(t.text, phrases) else kept).append(t)
    return kept, excluded


def resolve_location(tweet: Tweet) -> GeoRef:
    if tweet.place_match is not None:
        return tweet.place_match
    if tweet.profile_match is not None:
        return tweet.profile_match
    raise LocationError(f"tweet {tweet.id!r} has neither a place nor a geoprofile match")


def reassign_tampa_bay(ref: GeoRef, shared_id: str = TAMPA_BAY_SHARED) -> GeoRef:
    """Point a geoprofile "Tampa Bay" match at the shared Tampa Bay unit."""
    if ref.source == "geoprofile" and " ".join(ref.raw_label.lower().split()) == "tampa bay":
        return GeoRef(shared_id, ref.source, ref.raw_label)
    return ref


def local_date(tweet: Tweet, utc_offset_hours: float = DEFAULT_UTC_OFFSET_HOURS) -> date:
    return (tweet.timestamp.astimezone(timezone.utc) + timedelta(hours=utc_offset_hours)).date()


def filter_window(tweets: Iterable[Tweet], start: date, end: date,
                  utc_offset_hours: float = DEFAULT_UTC_OFFSET_HOURS) -> list[Tweet]:
    """Keep tweets whose local calendar date is within ``[start, end]``."""
    if start > end:
        raise ConfigError(f"study window start {start} is after end {end}")
    return [t for t in tweets if start <= local_date(t, utc_offset_hours) <= end]


def load_account_overrides(path) -> dict[str, str]:
    overrides = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cls = row["class"].strip()
            if cls not in ("media", "other"):
                raise ConfigError(f"override class must be media or other, got {cls!r}")
            overrides[row["handle"].strip().lstrip("@").lower()] = cls
    return overrides


def classify_account(verified: Optional[bool], handle: Optional[str] = None,
                     overrides: Optional[dict] = None) -> str:
    if verified is None:
        return "unknown"
    if not verified:
        return "citizen"
    if handle and overrides:
        return overrides.get(handle.lstrip("@").lower(), "media")
    return "media"


@dataclass(frozen=True)
class CleaningConfig:
    start: date = date(2018, 5, 15)
    end: date = date(2019, 5, 15)
    utc_offset_hours: float = DEFAULT_UTC_OFFSET_HOURS
    political_phrases: tuple[str, ...] = DEFAULT_POLITICAL_PHRASES
    account_overrides: Optional[dict] = None
    shared_id: str = TAMPA_BAY_SHARED


def clean(tweets: Iterable[Tweet], cfg: CleaningConfig = CleaningConfig()) -> tuple[list[Tweet], CleaningReport]:
    """Run the full cleaning pipeline; returns admitted tweets with
    ``location`` set, plus the report."""
    if cfg.start > cfg.end:
        raise ConfigError(f"study window start {cfg.start} is after end {cfg.end}")
    report = CleaningReport()
    admitted = []
    for t in tweets:
        report.input_count += 1
        account = t.account_class
        if t.verified is not None or t.handle is not None:
            account = classify_account(t.verified, t.handle, cfg.account_overrides)
        if is_political_only(t.text, cfg.political_phrases):
            report.excluded_political += 1
            continue
        if not cfg.start <= local_date(t, cfg.utc_offset_hours) <= cfg.end:
            report.out_of_window += 1
            continue
        try:
            ref = resolve_location(t)
        except LocationError:
            report.unresolved += 1
            continue
        if t.place_match is not None and t.profile_match is not None:
            report.deduped += 1
        moved = reassign_tampa_bay(ref, cfg.shared_id)
        if moved is not ref:
            report.reassigned_tampa_bay += 1
        admitted.append(replace(t, account_class=account, location=moved))
    report.admitted = len(admitted)
    report.check()
    return admitted, report
