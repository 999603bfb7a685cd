"""Command-line front end: ``redtide <command> [options]``.

Every command reads a flat ``key = value`` config file (``--config``),
applies ``--set key=value`` overrides and writes its artifacts atomically
into ``--out`` together with ``manifest.json``.

Exit status: 0 success, 1 usage or configuration error, 2 invalid input data.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from datetime import date
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy
import scipy

from redtide import __version__
from redtide.aggregation import (
    FREQS,
    LEVELS,
    aggregate_conditions,
    aggregate_tweets,
    bucketize,
    join_panels,
    write_panel_csv,
)
from redtide.analytics import (
    METRIC_FIELDS,
    bin_contrasts,
    city_distance_records,
    correlation_grid,
    distance_regression,
    retweet_fraction_by_distance,
    sites_by_week,
)
from redtide.cleaning import CleaningConfig, ConfigError, clean, load_account_overrides, load_political_phrases
from redtide.corpus import (
    DataValidationError,
    GeoRegistry,
    data_path,
    parse_beach_sites,
    parse_conditions,
    parse_geo_registry,
    parse_lexicon,
    parse_tweets,
    write_tweets,
)
from redtide.sentiment import SentimentConfig, apply_domain_customization, score_text
from redtide.svg import heatmap, scatter
from redtide.synthkit import InfeasibleSpec, SynthSpec, generate
from redtide.topics import categorize, load_vocabularies, top_polarized_terms

PATH_KEYS = ("tweets", "beach", "kbrevis", "registry", "polygons", "beach_sites", "lexicon",
             "lexicon_patch", "vocabularies", "political_phrases", "account_overrides")
MATCHES = {"explicit": "explicit_only", "all": "all"}


@dataclass(frozen=True)
class RunConfig:
    tweets: Optional[str] = None
    beach: Optional[str] = None
    kbrevis: Optional[str] = None
    registry: Optional[str] = None
    polygons: Optional[str] = None
    beach_sites: Optional[str] = None
    lexicon: Optional[str] = None
    lexicon_patch: Optional[str] = None
    vocabularies: Optional[str] = None
    political_phrases: Optional[str] = None
    account_overrides: Optional[str] = None
    start: date = date(2018, 5, 15)
    end: date = date(2019, 5, 15)
    utc_offset_hours: float = -5.0
    levels: tuple = LEVELS
    freqs: tuple = tuple(FREQS)
    match: str = "explicit"
    account: str = "everyone"
    metric: str = "count"
    condition: str = "dead_fish"
    shift: int = 0
    pooled: bool = True
    window_before: int = 4
    window_after: int = 2
    amplifier_delta: Optional[float] = None
    deamplifier_delta: Optional[float] = None
    multiplier_floor: float = -0.9
    adversative_before: float = 1.25
    adversative_after: float = 0.75
    question_weight: float = 0.25
    ellipsis_penalty: float = 0.15
    sentiment_aggregate: str = "sum"
    per_capita_scale: float = 100_000.0
    radius_miles: float = 10.0
    top_k: int = 5
    kbrevis_stat: str = "mean"
    max_assign_miles: float = 30.0
    high_impact_cells: float = 1_000_000.0
    close_max_mi: float = 25.0
    medium_max_mi: float = 50.0
    distance_level: str = "city"
    zero_policy: str = "drop"
    zero_epsilon: float = 1e-3
    tukey_level: float = 0.95
    stemming: bool = True
    top_terms_k: int = 10
    threads: int = 1

    def validate(self) -> "RunConfig":
        for key in PATH_KEYS:
            p = getattr(self, key)
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{key}: file not found: {p}")
        if self.start > self.end:
            raise ConfigError(f"window start {self.start} is after end {self.end}")
        for lvl in self.levels:
            if lvl not in LEVELS:
                raise ConfigError(f"unknown level {lvl!r}")
        for f in self.freqs:
            if f not in FREQS:
                raise ConfigError(f"unknown frequency {f!r}")
        checks = {
            "match": (self.match, tuple(MATCHES)),
            "account": (self.account, ("everyone", "citizen", "media")),
            "metric": (self.metric, tuple(METRIC_FIELDS)),
            "condition": (self.condition, ("dead_fish", "respiratory", "kbrevis")),
            "sentiment_aggregate": (self.sentiment_aggregate, ("sum", "mean")),
            "kbrevis_stat": (self.kbrevis_stat, ("mean", "sum", "max")),
            "distance_level": (self.distance_level, ("county", "city", "zcta")),
            "zero_policy": (self.zero_policy, ("drop", "epsilon")),
        }
        for key, (value, allowed) in checks.items():
            if value not in allowed:
                raise ConfigError(f"{key} must be one of {', '.join(allowed)}; got {value!r}")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not 0 < self.tukey_level < 1:
            raise ConfigError("tukey_level must lie in (0, 1)")
        return self

    def sentiment_config(self) -> SentimentConfig:
        return SentimentConfig(
            window_before=self.window_before, window_after=self.window_after,
            amplifier_delta=self.amplifier_delta, deamplifier_delta=self.deamplifier_delta,
            multiplier_floor=self.multiplier_floor, adversative_before=self.adversative_before,
            adversative_after=self.adversative_after, question_weight=self.question_weight,
            ellipsis_penalty=self.ellipsis_penalty, aggregate=self.sentiment_aggregate,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"], d["end"] = self.start.isoformat(), self.end.isoformat()
        d["levels"], d["freqs"] = list(self.levels), list(self.freqs)
        return d


def _parse_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _coerce(key: str, raw: str, default):
    raw = raw.strip()
    if key in ("amplifier_delta", "deamplifier_delta"):
        return None if raw.lower() in ("", "none") else float(raw)
    if key in PATH_KEYS:
        return None if raw.lower() in ("", "none") else raw
    if key in ("levels", "freqs"):
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if key in ("start", "end"):
        return date.fromisoformat(raw)
    if isinstance(default, bool):
        return _parse_bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def apply_settings(cfg: RunConfig, items: dict, base_dir: Optional[Path] = None) -> RunConfig:
    """Return ``cfg`` with string ``items`` coerced and applied.

    Relative paths are resolved against ``base_dir`` when given.
    """
    known = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    changes = {}
    for key, raw in items.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            value = _coerce(key, raw, known[key])
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        if key in PATH_KEYS and value is not None and base_dir is not None and not Path(value).is_absolute():
            value = str(base_dir / value)
        changes[key] = value
    return replace(cfg, **changes)


def read_config_file(path) -> dict:
    items = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            items[key.strip()] = value.strip()
    return items


def load_config(path=None, overrides=()) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = apply_settings(cfg, read_config_file(path), path.parent)
    items = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        items[k.strip()] = v
    return apply_settings(cfg, items)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _num(x) -> str:
    return "" if x is None else repr(float(x))


class Pipeline:
    """Lazily computed stages sharing one configuration."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    def _need(self, key: str) -> str:
        value = getattr(self.cfg, key)
        if value is None:
            raise ConfigError(f"config key {key!r} is required for this command")
        return value

    @cached_property
    def registry(self) -> GeoRegistry:
        return parse_geo_registry(self._need("registry"), polygons=self.cfg.polygons)

    @cached_property
    def raw_tweets(self) -> list:
        return list(parse_tweets(self._need("tweets"), registry=self.registry).raise_for_errors())

    @cached_property
    def beach(self) -> list:
        return list(parse_conditions(self._need("beach"), "beach").raise_for_errors())

    @cached_property
    def kbrevis(self) -> list:
        if self.cfg.kbrevis is None:
            return []
        return list(parse_conditions(self.cfg.kbrevis, "kbrevis").raise_for_errors())

    @cached_property
    def beach_sites(self) -> Optional[dict]:
        return None if self.cfg.beach_sites is None else parse_beach_sites(self.cfg.beach_sites)

    @cached_property
    def cleaned(self):
        overrides = None
        if self.cfg.account_overrides is not None:
            overrides = load_account_overrides(self.cfg.account_overrides)
        ccfg = CleaningConfig(
            start=self.cfg.start, end=self.cfg.end, utc_offset_hours=self.cfg.utc_offset_hours,
            political_phrases=load_political_phrases(self.cfg.political_phrases),
            account_overrides=overrides,
        )
        return clean(self.raw_tweets, ccfg)

    @cached_property
    def lexicon(self):
        lex = parse_lexicon(self.cfg.lexicon or data_path("lexicon.csv"))
        return apply_domain_customization(lex, self.cfg.lexicon_patch or data_path("lexicon_patch.csv"))

    @cached_property
    def scored(self) -> list:
        scfg = self.cfg.sentiment_config()
        return [score_text(t.text, self.lexicon, scfg, t.id) for t in self.cleaned[0]]

    @property
    def window(self) -> tuple[date, date]:
        return self.cfg.start, self.cfg.end

    def panel(self, level: str, freq: str, match: Optional[str] = None):
        cfg = self.cfg
        sentiments = {s.tweet_id: s.total for s in self.scored}
        tp = aggregate_tweets(self.cleaned[0], self.registry, level, freq, self.window,
                              match_filter=MATCHES[match or cfg.match], account_filter=cfg.account,
                              sentiments=sentiments, utc_offset_hours=cfg.utc_offset_hours,
                              scale=cfg.per_capita_scale)
        cp = aggregate_conditions(self.beach, self.kbrevis, self.registry, level, freq, self.window,
                                  beach_sites=self.beach_sites, radius_miles=cfg.radius_miles,
                                  top_k=cfg.top_k, kbrevis_stat=cfg.kbrevis_stat,
                                  max_assign_miles=cfg.max_assign_miles)
        return join_panels(tp, cp)

    @cached_property
    def panels(self) -> dict:
        keys = [(lvl, f) for lvl in self.cfg.levels for f in self.cfg.freqs]
        # load shared inputs before fanning out so threads never race on them
        for attr in ("scored", "beach", "kbrevis", "beach_sites"):
            getattr(self, attr)
        if self.cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.threads) as pool:
                built = list(pool.map(lambda k: self.panel(*k), keys))
        else:
            built = [self.panel(*k) for k in keys]
        return dict(zip(keys, built))

    # -- stages; each returns {artifact name: text} -------------------------

    def stage_ingest(self) -> dict:
        tweets = self.raw_tweets
        summary = {
            "tweets": len(tweets),
            "beach_reports": len(self.beach) if self.cfg.beach else 0,
            "kbrevis_samples": len(self.kbrevis),
            "registry": self.registry.summary(),
        }
        buf = io.StringIO()
        write_tweets(tweets, buf)
        return {"ingested.jsonl": buf.getvalue(), "ingest_summary.json": _json_text(summary)}

    def stage_clean(self) -> dict:
        admitted, report = self.cleaned
        buf = io.StringIO()
        write_tweets(admitted, buf)
        return {"cleaned.jsonl": buf.getvalue(), "cleaning_report.json": _json_text(report.to_dict())}

    def stage_sentiment(self) -> dict:
        lines = []
        for s in self.scored:
            rec = {"tweet_id": s.tweet_id, "total": s.total, "ellipsis_runs": s.ellipsis_runs,
                   "sentences": [{"score": sc, "question": q}
                                 for sc, q in zip(s.sentence_scores, s.question_flags)]}
            lines.append(json.dumps(rec, sort_keys=True) + "\n")
        return {"scored.jsonl": "".join(lines)}

    def stage_aggregate(self) -> dict:
        buf = io.StringIO()
        for i, key in enumerate(sorted(self.panels, key=lambda k: (LEVELS.index(k[0]), FREQS[k[1]]))):
            part = io.StringIO()
            write_panel_csv(self.panels[key], part)
            text = part.getvalue()
            # one header for the combined file
            buf.write(text if i == 0 else text.split("\n", 1)[1])
        return {"panel.csv": buf.getvalue()}

    def stage_correlate(self) -> dict:
        cfg = self.cfg
        grid = correlation_grid(self.panels, cfg.metric, cfg.match, cfg.condition, cfg.shift,
                                cfg.pooled, cfg.threads)
        rows = []
        for lvl in cfg.levels:
            for f in cfg.freqs:
                r = grid.get(lvl, f)
                rows.append((lvl, f, cfg.metric, cfg.match, cfg.condition, cfg.shift,
                             _num(r), grid.n.get((lvl, f), 0), grid.missing.get((lvl, f), "")))
        svg = heatmap(list(cfg.levels), list(cfg.freqs), dict(grid.entries),
                      title=f"{cfg.metric} ({cfg.match}) vs {cfg.condition}, shift {cfg.shift}")
        header = ("level", "freq", "metric", "match", "condition", "shift", "r", "n", "note")
        return {"grid.csv": _csv_text(header, rows), "heatmap.svg": svg}

    def stage_distance(self) -> dict:
        cfg = self.cfg
        weeks = bucketize(cfg.start, cfg.end, "weekly")
        sites = sites_by_week(self.kbrevis, weeks, cfg.high_impact_cells)
        panel = self.panel(cfg.distance_level, "weekly")
        records = city_distance_records(panel, self.registry, sites, "count")
        scatter_rows = [(r.unit, panel.buckets[r.bucket].start.isoformat(), repr(r.distance), repr(r.value))
                        for r in records]
        out = {"scatter.csv": _csv_text(("unit", "bucket_start", "distance_mi", "per_capita"), scatter_rows)}
        try:
            fit = distance_regression(records, cfg.zero_policy, cfg.zero_epsilon)
            out["fit.json"] = _json_text(asdict(fit))
            line = (fit.slope, fit.intercept)
        except ValueError as exc:
            out["fit.json"] = _json_text({"error": str(exc)})
            line = None
        try:
            bins = bin_contrasts(records, cfg.tukey_level, cfg.zero_policy, cfg.zero_epsilon,
                                 cfg.close_max_mi, cfg.medium_max_mi)
            out["bins.json"] = _json_text({k: asdict(v) for k, v in bins.items()})
        except ValueError as exc:
            out["bins.json"] = _json_text({"error": str(exc)})
        pts = []
        for r in records:
            v = r.value + cfg.zero_epsilon if cfg.zero_policy == "epsilon" else r.value
            if v > 0:
                pts.append((r.distance, float(numpy.log(v))))
        out["scatter.svg"] = scatter(pts, line, title="log per-capita tweets vs distance",
                                     x_label="miles to nearest high-impact site", y_label="ln(per 100k)")
        rt_records, rt_fit = retweet_fraction_by_distance(self.cleaned[0], sites, weeks, cfg.utc_offset_hours)
        out["retweets.csv"] = _csv_text(
            ("bucket_start", "lat", "lon", "distance_mi", "retweets", "total", "fraction"),
            [(weeks[r.bucket].start.isoformat(), r.coords[0], r.coords[1], repr(r.distance),
              r.retweets, r.total, repr(r.fraction)) for r in rt_records])
        out["retweet_fit.json"] = _json_text(asdict(rt_fit) if rt_fit else {"error": "too few records"})
        return out

    def stage_topics(self) -> dict:
        cfg = self.cfg
        admitted = self.cleaned[0]
        vocab = load_vocabularies(cfg.vocabularies, cfg.stemming)
        stats = categorize(admitted, vocab, cfg.stemming)
        concern_rows = [(c, s.vocabulary_size, s.unique_terms_hit, s.mention_count)
                        for c, s in sorted(stats.items())]
        term_rows = [(c, term, n) for c, s in sorted(stats.items())
                     for term, n in sorted(s.term_counts.items(), key=lambda kv: (-kv[1], kv[0]))]
        top_rows = []
        for county in self.registry.counties():
            pos, neg = top_polarized_terms(admitted, self.lexicon, county.id, self.registry,
                                           cfg.top_terms_k, cfg.per_capita_scale)
            for polarity, items in (("positive", pos), ("negative", neg)):
                for rank, tf in enumerate(items, 1):
                    top_rows.append((county.id, polarity, rank, tf.term, repr(tf.count), repr(tf.per_capita)))
        return {
            "concerns.csv": _csv_text(("category", "vocabulary_size", "unique_terms_hit", "mentions"),
                                      concern_rows),
            "concern_terms.csv": _csv_text(("category", "term", "count"), term_rows),
            "top_terms.csv": _csv_text(("unit", "polarity", "rank", "term", "count", "per_capita"), top_rows),
        }


REPORT_STAGES = ("ingest", "clean", "sentiment", "aggregate", "correlate", "distance", "topics")


def _manifest(command: str, cfg: RunConfig, outputs: dict) -> dict:
    inputs = {}
    for key in PATH_KEYS:
        p = getattr(cfg, key)
        if p is not None:
            inputs[key] = {"path": str(p), "sha256": sha256_file(p)}
    settings = {k: v for k, v in cfg.to_dict().items() if k not in PATH_KEYS and k != "threads"}
    canonical = json.dumps({"settings": settings, "inputs": {k: v["sha256"] for k, v in inputs.items()}},
                           sort_keys=True)
    return {
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "inputs": inputs,
        "outputs": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(outputs.items())},
        "versions": {"redtide": __version__, "python": platform.python_version(),
                     "numpy": numpy.__version__, "scipy": scipy.__version__},
    }


def run(command: str, cfg: RunConfig, out_dir) -> dict:
    """Run one command and write its artifacts; returns ``{name: text}``."""
    cfg.validate()
    pipe = Pipeline(cfg)
    stages = REPORT_STAGES if command == "report" else (command,)
    outputs: dict = {}
    for stage in stages:
        outputs.update(getattr(pipe, f"stage_{stage}")())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(outputs.items()):
        write_atomic(out / name, text)
    write_atomic(out / "manifest.json", _json_text(_manifest(command, cfg, outputs)))
    return outputs


def run_synth(spec_path, out_dir) -> dict:
    try:
        with open(spec_path, encoding="utf-8") as fh:
            spec = SynthSpec.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad synth spec: {exc}") from None
    return generate(spec).write(out_dir)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, help="worker threads within a stage")
    common.add_argument("--level", action="append", help="restrict to a locality level (repeatable)")
    common.add_argument("--freq", action="append", help="restrict to a frequency (repeatable)")
    common.add_argument("--match", choices=tuple(MATCHES), help="explicit geo-tags only, or all matches")

    parser = _Parser(prog="redtide", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"redtide {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "ingest": "parse and validate the raw inputs",
        "clean": "filter political, out-of-window and unlocated tweets",
        "sentiment": "score admitted tweets",
        "aggregate": "build panels for each level and frequency",
        "correlate": "correlation grid and heatmap",
        "distance": "distance regression, bin contrasts and retweet fractions",
        "topics": "concern-category counts and top polarized terms",
        "report": "run every stage above",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    sp = sub.add_parser("synth", help="generate a synthetic corpus")
    sp.add_argument("--spec", required=True, help="JSON synth spec")
    sp.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            paths = run_synth(args.spec, args.out)
            print(f"wrote {len(paths)} files to {args.out}")
            return 0
        overrides = list(args.set)
        if args.threads is not None:
            overrides.append(f"threads={args.threads}")
        if args.level:
            overrides.append("levels=" + ",".join(args.level))
        if args.freq:
            overrides.append("freqs=" + ",".join(args.freq))
        if args.match:
            overrides.append(f"match={args.match}")
        cfg = load_config(args.config, overrides)
        outputs = run(args.command, cfg, args.out)
        print(f"{args.command}: wrote {len(outputs) + 1} files to {args.out}")
        return 0
    except (ConfigError, InfeasibleSpec) as exc:
        print(f"redtide: config error: {exc}", file=sys.stderr)
        return 1
    except DataValidationError as exc:
        out = Path(getattr(args, "out", "out"))
        out.mkdir(parents=True, exist_ok=True)
        report = [str(e) for e in exc.errors] or [str(exc)]
        write_atomic(out / "validation_errors.json", _json_text({"message": str(exc), "errors": report}))
        print(f"redtide: invalid data: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
