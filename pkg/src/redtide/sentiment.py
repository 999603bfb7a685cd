"""Lexicon sentiment scoring with valence shifters.

Scoring follows the usual polarized-word + valence-shifter design:

* phrases are matched longest-first and consume their tokens, so
  "no signs of red tide" fires once as a whole and its inner "no" is not
  a negator;
* each polarized hit looks at a context window of nearby items for
  negators (sign parity), amplifiers and de-amplifiers (additive deltas
  on a multiplier floored at 0.1) and adversative conjunctions anywhere
  in the sentence (x1.25 when one precedes the hit, x0.75 when one
  follows it);
* the sentence sum is divided by sqrt(token count), questions are damped
  by the question weight, and every ellipsis run in the tweet subtracts a
  fixed penalty from the tweet total.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from redtide.corpus import (
    LEXICON_CLASSES,
    DataValidationError,
    Lexicon,
    LexiconEntry,
    RecordError,
    Tweet,
    data_path,
    make_entry,
    parse_lexicon,
    phrase_tokens,
)


@dataclass(frozen=True)
class SentimentConfig:
    window_before: int = 4
    window_after: int = 2
    amplifier_delta: Optional[float] = None  # None: use the lexicon entry weight
    deamplifier_delta: Optional[float] = None
    multiplier_floor: float = -0.9
    adversative_before: float = 1.25
    adversative_after: float = 0.75
    question_weight: float = 0.25
    ellipsis_penalty: float = 0.15
    aggregate: str = "sum"  # or "mean" over sentences


DEFAULT_CONFIG = SentimentConfig()


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    question: bool = False


@dataclass(frozen=True)
class Tokenized:
    sentences: tuple[Sentence, ...]
    ellipsis_runs: int


@dataclass(frozen=True)
class Hit:
    """One polarized match and its weight after valence shifting."""
    phrase: str
    weight: float
    adjusted: float
    start: int
    end: int


@dataclass
class ScoredText:
    tweet_id: str
    sentence_scores: list[float]
    total: float
    question_flags: list[bool]
    ellipsis_runs: int
    hits: list[list[Hit]] = field(default_factory=list)


_TOKEN_RE = re.compile(
    r"(?P<url>(?:https?://|www\.)\S+)"
    r"|(?P<mention>@\w+)"
    r"|(?P<hashtag>#\w+)"
    r"|(?P<ellipsis>\.{2,}|…+)"
    r"|(?P<end>[!?]+|\.)"
    r"|(?P<word>[^\W_]+(?:['’][^\W_]+)*)",
    re.UNICODE,
)


def tokenize(text: str) -> Tokenized:
    """Split text into sentences of lowercase tokens.

    URLs, mentions and hashtags stay single tokens (hashtags lose the
    ``#``). A run of two or more periods counts as one ellipsis and neither
    ends nor appears in the sentence.
    """
    sentences: list[Sentence] = []
    current: list[str] = []
    runs = 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        tok = m.group()
        if kind == "ellipsis":
            runs += 1
        elif kind == "end":
            if current:
                sentences.append(Sentence(tuple(current), "?" in tok))
                current = []
        elif kind == "hashtag":
            current.append(tok[1:].lower())
        elif kind == "word":
            current.append(tok.lower().replace("’", "'"))
        else:
            current.append(tok.lower())
    if current:
        sentences.append(Sentence(tuple(current), False))
    return Tokenized(tuple(sentences), runs)


def match_phrases(tokens, lexicon: Lexicon) -> list[tuple[int, int, Optional[LexiconEntry]]]:
    """Longest-match-first segmentation of ``tokens``.

    Returns ``(start, end, entry)`` items covering the sentence in order;
    ``entry`` is None for tokens outside any lexicon phrase.
    """
    items = []
    i, n = 0, len(tokens)
    while i < n:
        hit = None
        for length in range(min(lexicon.max_len, n - i), 0, -1):
            e = lexicon.get(tuple(tokens[i:i + length]))
            if e is not None:
                hit = (i, i + length, e)
                break
        if hit is None:
            items.append((i, i + 1, None))
            i += 1
        else:
            items.append(hit)
            i = hit[1]
    return items


def _shifter_delta(entry: LexiconEntry, cfg: SentimentConfig) -> float:
    if entry.cls == "amplifier":
        return cfg.amplifier_delta if cfg.amplifier_delta is not None else entry.weight
    return -(cfg.deamplifier_delta if cfg.deamplifier_delta is not None else entry.weight)


def polarity_hits(tokens, lexicon: Lexicon, cfg: SentimentConfig = DEFAULT_CONFIG) -> list[Hit]:
    """Polarized matches in one sentence with their shifted weights
    (before length normalization and question damping)."""
    items = match_phrases(tokens, lexicon)
    # polarized items are "consumed"; the window walks over everything else
    free = [k for k, (_, _, e) in enumerate(items) if e is None or e.cls != "polarized"]
    adversatives = [k for k, (_, _, e) in enumerate(items) if e is not None and e.cls == "adversative"]
    hits = []
    for k, (start, end, e) in enumerate(items):
        if e is None or e.cls != "polarized":
            continue
        before = [j for j in free if j < k][-cfg.window_before:] if cfg.window_before > 0 else []
        after = [j for j in free if j > k][:cfg.window_after]
        negators, delta = 0, 0.0
        for j in before + after:
            ctx = items[j][2]
            if ctx is None:
                continue
            if ctx.cls == "negator":
                negators += 1
            elif ctx.cls in ("amplifier", "deamplifier"):
                delta += _shifter_delta(ctx, cfg)
        factor = 1.0
        if any(j < k for j in adversatives):
            factor *= cfg.adversative_before
        if any(j > k for j in adversatives):
            factor *= cfg.adversative_after
        sign = -1.0 if negators % 2 else 1.0
        adjusted = e.weight * sign * (1.0 + max(cfg.multiplier_floor, delta)) * factor
        hits.append(Hit(e.text, e.weight, adjusted, start, end))
    return hits


def score_sentence(tokens, lexicon: Lexicon, question: bool = False,
                   cfg: SentimentConfig = DEFAULT_CONFIG) -> float:
    tokens = tuple(tokens)
    if not tokens:
        return 0.0
    hits = polarity_hits(tokens, lexicon, cfg)
    score = math.fsum(h.adjusted for h in hits) / math.sqrt(len(tokens))
    if question:
        score *= cfg.question_weight
    return score


def score_text(text: str, lexicon: Lexicon, cfg: SentimentConfig = DEFAULT_CONFIG,
               tweet_id: str = "") -> ScoredText:
    tok = tokenize(text)
    scores, flags, hits = [], [], []
    for s in tok.sentences:
        sh = polarity_hits(s.tokens, lexicon, cfg)
        sc = math.fsum(h.adjusted for h in sh) / math.sqrt(len(s.tokens))
        if s.question:
            sc *= cfg.question_weight
        scores.append(sc)
        flags.append(s.question)
        hits.append(sh)
    if cfg.aggregate == "mean":
        base = math.fsum(scores) / len(scores) if scores else 0.0
    elif cfg.aggregate == "sum":
        base = math.fsum(scores)
    else:
        raise ValueError(f"unknown sentence aggregate {cfg.aggregate!r}")
    total = base - cfg.ellipsis_penalty * tok.ellipsis_runs
    return ScoredText(tweet_id, scores, total, flags, tok.ellipsis_runs, hits)


def score_tweet(tweet: Tweet, lexicon: Lexicon, cfg: SentimentConfig = DEFAULT_CONFIG) -> ScoredText:
    return score_text(tweet.text, lexicon, cfg, tweet_id=tweet.id)


def score_tweets(tweets: Iterable[Tweet], lexicon: Lexicon,
                 cfg: SentimentConfig = DEFAULT_CONFIG) -> dict[str, float]:
    """Total sentiment per tweet id."""
    return {t.id: score_tweet(t, lexicon, cfg).total for t in tweets}


# ---------------------------------------------------------------------------
# Lexicon customization

PATCH_ACTIONS = ("add", "remove", "override")


def apply_domain_customization(base: Lexicon, patch) -> Lexicon:
    """Apply an ordered patch to a lexicon; later rows win.

    ``patch`` is a path to a CSV with header ``action,phrase,class,weight``
    or an iterable of such dicts. ``remove`` ignores class and weight.
    """
    if isinstance(patch, (str, Path)):
        with open(patch, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        source = Path(patch).name
    else:
        rows, source = list(patch), "<patch>"

    index = {e.phrase: e for e in base}
    errors = []
    for lineno, row in enumerate(rows, 2):
        action = (row.get("action") or "").strip().lower()
        try:
            if action not in PATCH_ACTIONS:
                raise ValueError(f"unknown patch action {action!r}")
            key = phrase_tokens(row["phrase"])
            if action == "remove":
                index.pop(key, None)
                continue
            cls = (row.get("class") or "").strip()
            if cls not in LEXICON_CLASSES:
                raise ValueError(f"unknown lexicon class {cls!r}")
            entry = make_entry(row["phrase"], cls, row.get("weight"))
            # re-insert so iteration order reflects the latest write
            index.pop(key, None)
            index[key] = entry
        except (ValueError, KeyError) as exc:
            errors.append(RecordError(source, lineno, str(exc)))
    if errors:
        raise DataValidationError(f"invalid lexicon patch: {errors[0]}", errors)
    return Lexicon(index.values())


def load_default_lexicon(customized: bool = True) -> Lexicon:
    """The bundled base lexicon, optionally with the red-tide patch applied."""
    lex = parse_lexicon(data_path("lexicon.csv"))
    if customized:
        lex = apply_domain_customization(lex, data_path("lexicon_patch.csv"))
    return lex
