"""Concern-category keyword counts and per-unit polarized term frequencies."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from redtide.aggregation import bucket_index, target_unit
from redtide.cleaning import DEFAULT_UTC_OFFSET_HOURS, local_date
from redtide.corpus import DataValidationError, GeoRegistry, Lexicon, Tweet, data_path
from redtide.geospatial import credit_share, per_capita
from redtide.sentiment import match_phrases, tokenize

CATEGORIES = ("environment", "health", "economy", "government")


def stem(token: str) -> str:
    """Strip one plural/-ed/-ing suffix, keeping at least three characters."""
    for suffix in ("ing", "ed"):
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    if len(token) > 4 and token.endswith(("ches", "shes", "ses", "xes", "zes")):
        return token[:-2]
    if token.endswith("s") and not token.endswith(("ss", "us", "is")) and len(token) > 3:
        return token[:-1]
    return token


def _key(phrase: str, stemming: bool) -> tuple[str, ...]:
    toks = _words(phrase)
    return tuple(stem(t) for t in toks) if stemming else tuple(toks)


def load_vocabularies(paths: Optional[dict] = None, stemming: bool = True) -> dict[str, set[str]]:
    """Read ``concern_<category>.txt`` files (one term per line).

    ``paths`` maps category to file; by default the bundled files are used.
    A term (after stemming) listed under two categories is an error.
    """
    if paths is None:
        paths = {c: data_path(f"concern_{c}.txt") for c in CATEGORIES}
    elif isinstance(paths, (str, Path)):
        base = Path(paths)
        paths = {c: base / f"concern_{c}.txt" for c in CATEGORIES if (base / f"concern_{c}.txt").exists()}
    vocab: dict[str, set[str]] = {}
    owner: dict[tuple, str] = {}
    for cat, path in paths.items():
        terms = set()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                term = " ".join(line.lower().split())
                if not term or term.startswith("#"):
                    continue
                k = _key(term, stemming)
                if k in owner and owner[k] != cat:
                    raise DataValidationError(f"term {term!r} appears in both {owner[k]!r} and {cat!r}")
                owner[k] = cat
                terms.add(term)
        vocab[cat] = terms
    return vocab


@dataclass
class CategoryStats:
    category: str
    vocabulary_size: int
    unique_terms_hit: int = 0
    mention_count: int = 0
    term_counts: Counter = field(default_factory=Counter)
    series: dict = field(default_factory=dict)  # bucket index -> mentions


def _words(text: str) -> list[str]:
    out = []
    for s in tokenize(text).sentences:
        out.extend(s.tokens)
    return out


def categorize(tweets: Iterable[Tweet], vocabularies: dict, stemming: bool = True,
               window=None, freq_days: int = 7,
               utc_offset_hours: float = DEFAULT_UTC_OFFSET_HOURS) -> dict[str, CategoryStats]:
    """Count concern-term occurrences per category.

    Multi-word terms are matched on consecutive tokens, longest first, and
    consume their tokens. When ``window`` is given, per-bucket mention
    series are filled as well.
    """
    index: dict[tuple, tuple[str, str]] = {}
    for cat, terms in vocabularies.items():
        for term in terms:
            index[_key(term, stemming)] = (cat, term)
    max_len = max((len(k) for k in index), default=0)
    result = {cat: CategoryStats(cat, len(terms)) for cat, terms in vocabularies.items()}
    n_buckets = None
    if window is not None:
        n_buckets = ((window[1] - window[0]).days // freq_days) + 1

    for t in tweets:
        toks = [stem(w) if stemming else w for w in _words(t.text)]
        idx = None
        if window is not None:
            idx = bucket_index(local_date(t, utc_offset_hours), window[0], freq_days, n_buckets)
        i = 0
        while i < len(toks):
            hit = None
            for length in range(min(max_len, len(toks) - i), 0, -1):
                hit = index.get(tuple(toks[i:i + length]))
                if hit is not None:
                    break
            if hit is None:
                i += 1
                continue
            cat, term = hit
            st = result[cat]
            st.mention_count += 1
            st.term_counts[term] += 1
            if idx is not None:
                st.series[idx] = st.series.get(idx, 0) + 1
            i += length
    for st in result.values():
        st.unique_terms_hit = len(st.term_counts)
    return result


@dataclass(frozen=True)
class TermFrequency:
    term: str
    count: float
    per_capita: float


def top_polarized_terms(tweets: Iterable[Tweet], lexicon: Lexicon, unit: str, registry: GeoRegistry,
                        k: int = 10, scale: float = 100_000) -> tuple[list[TermFrequency], list[TermFrequency]]:
    """Most frequent positive and negative lexicon phrases in tweets credited
    to ``unit``; counts carry credit-share weights. Ties break by term."""
    level = registry[unit].level
    level = "total" if level == "region" else level
    counts: dict[str, float] = defaultdict(float)
    signs: dict[str, float] = {}
    for t in tweets:
        if t.location is None or t.location.unit_id not in registry:
            continue
        weight = sum(w for u, w in credit_share(t.location.unit_id, registry).items()
                     if target_unit(u, registry, level) == unit)
        if weight == 0:
            continue
        for s in tokenize(t.text).sentences:
            for _, _, e in match_phrases(s.tokens, lexicon):
                if e is not None and e.cls == "polarized" and e.weight != 0:
                    counts[e.text] += weight
                    signs[e.text] = e.weight

    def ranked(positive: bool) -> list[TermFrequency]:
        items = [(term, c) for term, c in counts.items() if (signs[term] > 0) == positive]
        items.sort(key=lambda kv: (-kv[1], kv[0]))
        return [TermFrequency(term, c, per_capita(c, unit, registry, scale)) for term, c in items[:k]]

    return ranked(True), ranked(False)
