from datetime import date, datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import day, make_tweet
from redtide.cleaning import (
    CleaningConfig,
    CleaningReport,
    ConfigError,
    LocationError,
    classify_account,
    clean,
    filter_political,
    filter_window,
    is_political_only,
    reassign_tampa_bay,
    red_tide_mentions,
    resolve_location,
)
from redtide.corpus import GeoRef


@pytest.mark.parametrize("text,kept", [
    ("Red Tide Rick must go! #vote", False),
    ("Red Tide Rick ignores the red tide killing fish", True),
    ("red tide at Lido today", True),
    ("#RedTideRick and the RED TIDE PARTY", False),
    ("Vote against the Red  Tide\nParty", False),
    ("#redtide is back, thanks Red Tide Rick", True),
])
def test_political_filter(text, kept):
    k, ex = filter_political([make_tweet("1", text)])
    assert (len(k) == 1) is kept
    assert len(k) + len(ex) == 1


def test_mention_counts():
    assert red_tide_mentions("Red Tide Rick ignores the red tide") == (2, 1)
    assert red_tide_mentions("bored tide") == (0, 0)


def test_place_beats_profile():
    t = make_tweet("1", place="bradenton", profile="sarasota")
    assert resolve_location(t).unit_id == "bradenton"


def test_profile_fallback_and_rejection():
    assert resolve_location(make_tweet("1", profile="venice")).unit_id == "venice"
    with pytest.raises(LocationError):
        resolve_location(make_tweet("2"))


def test_tampa_bay_reassignment():
    moved = reassign_tampa_bay(GeoRef("hillsborough", "geoprofile", "Tampa Bay"))
    assert moved.unit_id == "tampa_bay_shared"
    tampa = GeoRef("tampa", "geoprofile", "Tampa")
    assert reassign_tampa_bay(tampa) is tampa
    stpete = GeoRef("st_petersburg", "place", "St. Petersburg")
    assert reassign_tampa_bay(stpete) is stpete
    tagged = GeoRef("hillsborough", "place", "Tampa Bay")
    assert reassign_tampa_bay(tagged) is tagged


def test_window_bounds():
    start, end = date(2018, 5, 15), date(2019, 5, 15)
    first = make_tweet("a", when=datetime(2018, 5, 15, 5, 0, tzinfo=timezone.utc))  # 00:00 local
    late = make_tweet("b", when=day(date(2019, 5, 16)))
    peak = make_tweet("c", when=day(date(2018, 8, 6)))
    before = make_tweet("d", when=datetime(2018, 5, 15, 4, 59, tzinfo=timezone.utc))
    kept = filter_window([first, late, peak, before], start, end)
    assert [t.id for t in kept] == ["a", "c"]
    with pytest.raises(ConfigError):
        filter_window([], end, start)


def test_account_classes():
    assert classify_account(False) == "citizen"
    assert classify_account(True, "@wfla") == "media"
    assert classify_account(True, "@SarasotaCounty", {"sarasotacounty": "other"}) == "other"
    assert classify_account(None) == "unknown"


def test_report_counts_every_rejection():
    tweets = [
        make_tweet("p", "Red Tide Rick!", place="tampa"),
        make_tweet("w", when=day(date(2017, 1, 1)), place="tampa"),
        make_tweet("u"),
        make_tweet("ok", place="tampa", profile="sarasota"),
        make_tweet("tb", profile="hillsborough", profile_label="Tampa Bay"),
    ]
    admitted, rep = clean(tweets)
    assert [t.id for t in admitted] == ["ok", "tb"]
    assert (rep.excluded_political, rep.out_of_window, rep.unresolved) == (1, 1, 1)
    assert rep.reassigned_tampa_bay == 1 and rep.deduped == 1
    assert admitted[0].location.unit_id == "tampa"
    assert admitted[1].location.unit_id == "tampa_bay_shared"
    assert admitted[0].account_class == "citizen"


def test_report_check_detects_imbalance():
    with pytest.raises(AssertionError):
        CleaningReport(input_count=3, admitted=1).check()


def test_inverted_window_is_config_error():
    with pytest.raises(ConfigError):
        clean([], CleaningConfig(start=date(2019, 1, 1), end=date(2018, 1, 1)))


texts = st.sampled_from([
    "red tide again", "Red Tide Rick", "red tide party rally", "#redtide in Venice",
    "Red Tide Rick and red tide", "no mention", "RT @x: red tide at Lido",
])
places = st.sampled_from([None, "tampa", "venice", "clearwater"])
profiles = st.sampled_from([None, "sarasota", "hillsborough"])


@st.composite
def corpora(draw):
    n = draw(st.integers(0, 25))
    out = []
    for i in range(n):
        d = draw(st.dates(date(2018, 4, 1), date(2019, 6, 30)))
        prof = draw(profiles)
        label = draw(st.sampled_from(["Tampa Bay", None])) if prof == "hillsborough" else None
        out.append(make_tweet(f"t{i}", draw(texts), place=draw(places), profile=prof, profile_label=label,
                              when=day(d, draw(st.integers(0, 23))), verified=draw(st.sampled_from([None, True, False]))))
    return out


@settings(max_examples=80, deadline=None)
@given(corpora())
def test_cleaning_invariants(tweets):
    once, rep = clean(tweets)
    twice, rep2 = clean(once)
    assert twice == once
    assert rep2.admitted == rep.admitted
    assert rep.admitted + rep.excluded_political + rep.out_of_window + rep.unresolved == rep.input_count
    for t in once:
        assert t.location is not None
        if t.place_match is not None:
            assert t.location.unit_id == t.place_match.unit_id
        assert not is_political_only(t.text)
