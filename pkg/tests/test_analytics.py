import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import day, make_tweet
from redtide.aggregation import Panel, PanelCell, bucketize
from redtide.analytics import (
    DistanceRecord,
    UndefinedCorrelation,
    bin_contrasts,
    correlation_grid,
    distance_regression,
    high_impact_sites,
    ols,
    panel_correlation,
    pearson,
    retweet_fraction_by_distance,
    sites_by_week,
    tukey_hsd,
)
from redtide.corpus import KBrevisSample

START = date(2018, 5, 15)

# oracle values computed by hand and with scipy.stats.linregress / statsmodels
PEARSON_SMALL = 0.8315218406202999
LINREG_X = [3.1, 7.4, 12.0, 18.5, 22.2, 27.9, 33.3, 41.0, 47.6, 55.2, 61.8, 70.4]
LINREG_Y = [2.9, 2.7, 2.41, 2.2, 1.95, 1.8, 1.52, 1.2, 0.95, 0.62, 0.45, 0.02]
LINREG = dict(slope=-0.04195659881746634, intercept=2.95995184720946, r2=0.9970945032307336,
              p=5.101865446215075e-14, stderr=0.0007162131862193286)
TUKEY_GROUPS = {
    "close": [1.2, 0.8, 1.5, 1.1, 0.9, 1.3],
    "medium": [0.2, 0.5, -0.1, 0.4, 0.0],
    "far": [-0.9, -1.2, -0.6, -1.0, -0.8, -1.4, -0.7],
}
TUKEY = {
    ("medium", "close"): (-0.9333333333333333, -1.3535073324952445, -0.5131593341714222),
    ("far", "close"): (-2.0761904761904764, -2.462237750096675, -1.6901432022842775),
    ("far", "medium"): (-1.142857142857143, -1.5491601717504018, -0.7365541139638843),
}


def synthetic_panel(xs_by_unit, ys_by_unit, freq=7):
    n = len(next(iter(xs_by_unit.values())))
    buckets = bucketize(START, START + timedelta(days=freq * n - 1), freq)
    p = Panel("county", freq, buckets)
    for u, xs in xs_by_unit.items():
        for b, x, y in zip(buckets, xs, ys_by_unit[u]):
            p.cells[(u, b.index)] = PanelCell(u, b, tweet_count=x, per_capita_count=x, dead_fish=y,
                                             kbrevis=None)
    return p


def test_pearson_small_example():
    assert pearson([1, 2, 3, 4], [1, 3, 2, 5]) == pytest.approx(PEARSON_SMALL, abs=1e-12)
    assert pearson([1, 2, 3, 4], [1, 3, 2, 5]) == pytest.approx((11 / 2) / math.sqrt(5 * 35 / 4), abs=1e-15)


def test_pearson_undefined():
    with pytest.raises(UndefinedCorrelation):
        pearson([1, 2], [3, 4])
    with pytest.raises(UndefinedCorrelation):
        pearson([1, 1, 1], [1, 2, 3])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=30), st.floats(0.1, 10), finite)
def test_pearson_affine_and_negation(pairs, a, b):
    x = [p[0] for p in pairs]
    y = [p[1] for p in pairs]
    try:
        r = pearson(x, y)
    except UndefinedCorrelation:
        return
    if np.std(x) < 1e-3 or np.std(y) < 1e-3:
        return
    assert -1.0 <= r <= 1.0
    assert pearson([a * v + b for v in x], y) == pytest.approx(r, abs=1e-9)
    assert pearson([-v for v in x], y) == pytest.approx(-r, abs=1e-12)
    # brute-force definition
    mx, my = sum(x) / len(x), sum(y) / len(y)
    num = sum((u - mx) * (v - my) for u, v in zip(x, y))
    den = math.sqrt(sum((u - mx) ** 2 for u in x) * sum((v - my) ** 2 for v in y))
    assert r == pytest.approx(num / den, abs=1e-9)


def test_lead_shift_recovers_identity_coupling():
    rng = np.random.default_rng(7)
    xs = {u: list(rng.normal(size=40)) for u in ("a", "b", "c")}
    ys = {u: [0.0] + v[:-1] for u, v in xs.items()}  # condition at t+1 equals metric at t
    p = synthetic_panel(xs, ys)
    r, n = panel_correlation(p, shift=1)
    assert r == pytest.approx(1.0, abs=1e-12) and n == 3 * 39
    r0, _ = panel_correlation(p, shift=0)
    assert r0 < 0.5
    r_unpooled, _ = panel_correlation(p, shift=1, pooled=False)
    assert r_unpooled == pytest.approx(1.0, abs=1e-12)


def test_independent_series_are_uncorrelated():
    rng = np.random.default_rng(11)
    xs = {"a": list(rng.normal(size=2000))}
    ys = {"a": list(rng.normal(size=2000))}
    r, n = panel_correlation(synthetic_panel(xs, ys, freq=1))
    assert n == 2000 and abs(r) < 0.1


def test_correlation_grid_records_missing_panels():
    good = synthetic_panel({"a": [1.0, 2.0, 3.0, 5.0]}, {"a": [1.0, 3.0, 2.0, 5.0]})
    flat = synthetic_panel({"a": [0.0, 0.0, 0.0, 0.0]}, {"a": [1.0, 3.0, 2.0, 5.0]})
    grid = correlation_grid({("county", "weekly"): good, ("zcta", "weekly"): flat}, threads=2)
    assert grid.get("county", "weekly") == pytest.approx(pearson([1, 2, 3, 5], [1, 3, 2, 5]))
    assert grid.get("zcta", "weekly") is None
    assert "variance" in grid.missing[("zcta", "weekly")]


def test_ols_matches_oracle():
    fit = ols(LINREG_X, LINREG_Y)
    assert fit.slope == pytest.approx(LINREG["slope"], abs=1e-10)
    assert fit.intercept == pytest.approx(LINREG["intercept"], abs=1e-10)
    assert fit.r_squared == pytest.approx(LINREG["r2"], abs=1e-10)
    assert fit.slope_stderr == pytest.approx(LINREG["stderr"], abs=1e-10)
    assert fit.p_value == pytest.approx(LINREG["p"], rel=1e-6)


def test_exponential_decay_gives_exact_log_slope():
    recs = [DistanceRecord("u", 0, d, 50 * math.exp(-0.05 * d)) for d in range(0, 80, 5)]
    fit = distance_regression(recs)
    assert fit.slope == pytest.approx(-0.05, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert 0 < fit.p_value < 1e-100


def test_zero_policy():
    recs = [(1.0, 2.0), (2.0, 0.0), (3.0, 1.0), (4.0, 0.5)]
    assert distance_regression(recs).n == 3
    assert distance_regression(recs, zero_policy="epsilon").n == 4
    with pytest.raises(ValueError):
        distance_regression(recs, zero_policy="impute")


def test_null_p_values_are_uniform():
    rng = np.random.default_rng(2024)
    x = np.linspace(0, 60, 40)
    ps = [ols(x, rng.normal(size=40)).p_value for _ in range(400)]
    assert stats.kstest(ps, "uniform").pvalue > 0.01


def test_high_impact_threshold_is_strict():
    week = bucketize(START, START + timedelta(days=6), "weekly")[0]

    def s(c, lat=27.3):
        return KBrevisSample("s", START + timedelta(days=2), lat, -82.6, c)

    assert high_impact_sites([s(9e5)], week) == []
    assert high_impact_sites([s(1e6)], week) == []
    assert high_impact_sites([s(1.2e6), s(9e5, 27.4)], week) == [(27.3, -82.6)]
    weeks = bucketize(START, START + timedelta(days=20), "weekly")
    assert sites_by_week([s(1.2e6)], weeks) == {0: [(27.3, -82.6)]}


def test_tukey_matches_oracle():
    out = tukey_hsd(TUKEY_GROUPS)
    assert set(out) == set(TUKEY)
    for key, (diff, lo, hi) in TUKEY.items():
        c = out[key]
        assert c.diff == pytest.approx(diff, abs=1e-10)
        assert c.lower == pytest.approx(lo, abs=1e-8)
        assert c.upper == pytest.approx(hi, abs=1e-8)


def test_constant_bins_give_zero_width_intervals():
    out = tukey_hsd({"close": [1.0, 1.0, 1.0], "medium": [0.5, 0.5], "far": [0.0, 0.0, 0.0]})
    for c in out.values():
        assert c.lower == c.upper == c.diff


def test_bin_contrasts_keys_and_empty_bin():
    recs = [(d, math.exp(-0.05 * d)) for d in (5, 10, 20, 30, 40, 45, 60, 80, 90)]
    out = bin_contrasts(recs)
    assert set(out) == {"medium-close", "far-close", "far-medium"}
    assert out["far-close"].diff < out["medium-close"].diff < 0
    with pytest.raises(ValueError, match="far"):
        bin_contrasts([(5, 1.0), (6, 2.0), (30, 1.0), (31, 2.0)])


def test_retweet_fraction_all_retweets():
    weeks = bucketize(START, START + timedelta(days=13), "weekly")
    sites = {0: [(27.3, -82.6)]}
    tweets = [make_tweet(f"t{i}", kind="retweet", when=day(START + timedelta(days=1)),
                         coords=(27.3 + 0.1 * (i % 3), -82.6)) for i in range(9)]
    records, fit = retweet_fraction_by_distance(tweets, sites, weeks)
    assert len(records) == 3
    assert all(r.fraction == 1.0 for r in records)
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


def test_retweet_fraction_planted_slope():
    weeks = bucketize(START, START + timedelta(days=6), "weekly")
    sites = {0: [(27.0, -82.6)]}
    tweets = []
    for k in range(6):
        coords = (27.0 + 0.15 * k, -82.6)
        for i in range(10):
            kind = "retweet" if i < 1 + k else "original"
            tweets.append(make_tweet(f"t{k}-{i}", kind=kind, when=day(START), coords=coords))
    records, fit = retweet_fraction_by_distance(tweets, sites, weeks)
    assert len(records) == 6
    assert fit.slope > 0 and fit.p_value < 0.01
