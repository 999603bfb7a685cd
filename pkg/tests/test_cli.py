import json

import pytest

from redtide.cli import REPORT_STAGES, load_config, main, run
from redtide.synthkit import SynthSpec, generate

SYNTH_KEYS = ("tweets", "beach", "kbrevis", "registry", "polygons", "beach_sites")


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    spec = SynthSpec(seed=21, n_counties=4, n_days=120, distance_decay=0.03, political_noise_rate=0.05)
    (d / "spec.json").write_text(json.dumps(spec.to_dict()))
    assert main(["synth", "--spec", str(d / "spec.json"), "--out", str(d)]) == 0
    cfg = d / "run.cfg"
    lines = [f"{k} = {p}" for k, p in (("tweets", "tweets.jsonl"), ("beach", "beach.csv"),
                                      ("kbrevis", "kbrevis.csv"), ("registry", "geo_registry.csv"),
                                      ("polygons", "county_polygons.geojson"),
                                      ("beach_sites", "beach_sites.csv"))]
    lines += ["start = 2018-05-15", "end = 2018-09-11", "match = all"]
    cfg.write_text("# synthetic run\n" + "\n".join(lines) + "\n")
    return d, cfg


def outputs(d):
    return {p.name: p.read_text() for p in sorted(d.iterdir()) if p.name != "manifest.json"}


def test_synth_is_reproducible_through_the_cli(corpus, tmp_path):
    d, _ = corpus
    assert main(["synth", "--spec", str(d / "spec.json"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "tweets.jsonl").read_bytes() == (d / "tweets.jsonl").read_bytes()


def test_report_writes_every_artifact(corpus, tmp_path):
    d, cfg = corpus
    assert main(["report", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    names = set(outputs(tmp_path / "a"))
    assert {"ingest_summary.json", "cleaned.jsonl", "scored.jsonl", "panel.csv", "grid.csv", "heatmap.svg",
            "fit.json", "bins.json", "scatter.svg", "concerns.csv", "top_terms.csv"} <= names
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["command"] == "report"
    assert set(manifest["inputs"]) == set(SYNTH_KEYS)
    grid = (tmp_path / "a" / "grid.csv").read_text().splitlines()
    assert grid[0].startswith("level,freq,metric,match")
    assert len(grid) == 1 + 4 * 3

    assert main(["report", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    again = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert again["config_hash"] == manifest["config_hash"]
    assert again["outputs"] == manifest["outputs"]


def test_config_hash_tracks_settings(corpus, tmp_path):
    _, cfg = corpus
    main(["clean", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["clean", "--config", str(cfg), "--set", "question_weight=0.5", "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert a["config_hash"] != b["config_hash"]


def test_stages_compose_to_report(corpus, tmp_path):
    _, cfg = corpus
    c = load_config(cfg)
    whole = run("report", c, tmp_path / "whole")
    parts = {}
    for stage in REPORT_STAGES:
        parts.update(run(stage, c, tmp_path / stage))
    assert parts == whole


def test_threads_do_not_change_results(corpus, tmp_path):
    _, cfg = corpus
    one = run("correlate", load_config(cfg, ["threads=1"]), tmp_path / "one")
    four = run("correlate", load_config(cfg, ["threads=4"]), tmp_path / "four")
    assert one == four


def test_political_only_corpus_gives_empty_cleaned_file(corpus, tmp_path):
    d, cfg = corpus
    tweets = tmp_path / "political.jsonl"
    rows = [{"id": f"p{i}", "created_at": "2018-06-01T15:00:00Z", "text": "Vote out Red Tide Rick!",
             "kind": "original", "verified": False, "place_unit": "zcta_00"} for i in range(5)]
    tweets.write_text("".join(json.dumps(r) + "\n" for r in rows))
    code = main(["clean", "--config", str(cfg), "--set", f"tweets={tweets}", "--out", str(tmp_path / "o")])
    assert code == 0
    assert (tmp_path / "o" / "cleaned.jsonl").read_text() == ""
    report = json.loads((tmp_path / "o" / "cleaning_report.json").read_text())
    assert report["excluded_political"] == 5 and report["admitted"] == 0


def test_exit_codes(corpus, tmp_path, capsys):
    d, cfg = corpus
    assert main(["report", "--config", str(cfg), "--set", "no_such_key=1", "--out", str(tmp_path)]) == 1
    assert main(["report", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as info:
        main(["explode"])
    assert info.value.code == 1
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "1", "created_at": "2018-06-01T15:00:00Z", "text": "red tide", "place_unit": "zcta_00"}\n'
                   "this is not json\n")
    assert main(["ingest", "--config", str(cfg), "--set", f"tweets={bad}", "--out", str(tmp_path / "v")]) == 2
    errors = json.loads((tmp_path / "v" / "validation_errors.json").read_text())
    assert len(errors["errors"]) == 1
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"coupling_rho": 3.0}))
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "s")]) == 1


def test_relative_paths_resolve_against_config_dir(corpus):
    d, cfg = corpus
    c = load_config(cfg)
    assert c.tweets == str(d / "tweets.jsonl")
    assert c.match == "all"
