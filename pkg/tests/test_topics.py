import random
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import day, make_tweet
from redtide.corpus import DataValidationError, GeoRef
from redtide.topics import categorize, load_vocabularies, stem, top_polarized_terms

VOCAB = load_vocabularies()


def tw(tid, text, unit="sarasota_city", when=None):
    return make_tweet(tid, text, when=when or day(date(2018, 8, 6)), location=GeoRef(unit, "place", unit))


def test_environment_mentions():
    out = categorize([tw("1", "dead fish on the beach")], VOCAB)
    assert out["environment"].mention_count >= 2
    assert out["environment"].unique_terms_hit >= 2


def test_empty_vocabulary_counts_nothing():
    out = categorize([tw("1", "dead fish on the beach")], {"environment": set()})
    assert out["environment"].mention_count == 0 and out["environment"].vocabulary_size == 0


def test_duplicate_term_across_categories(tmp_path):
    (tmp_path / "a.txt").write_text("fish\nbeach\n")
    (tmp_path / "b.txt").write_text("Fishes\n")
    with pytest.raises(DataValidationError, match="fish"):
        load_vocabularies({"environment": tmp_path / "a.txt", "economy": tmp_path / "b.txt"})
    load_vocabularies({"environment": tmp_path / "a.txt", "economy": tmp_path / "b.txt"}, stemming=False)


def test_bundled_vocabularies_are_disjoint():
    assert set(VOCAB) == {"environment", "health", "economy", "government"}
    assert all(VOCAB.values())


def test_stemming():
    assert stem("fishes") == "fish" and stem("beaches") == "beach" and stem("killed") == "kill"
    assert stem("closing") == "clos" and stem("close") == "close"
    assert stem("grass") == "grass" and stem("bus") == "bus" and stem("red") == "red"
    on = categorize([tw("1", "the beaches")], {"environment": {"beach"}})
    off = categorize([tw("1", "the beaches")], {"environment": {"beach"}}, stemming=False)
    assert on["environment"].mention_count == 1 and off["environment"].mention_count == 0


def test_multiword_terms_consume_tokens():
    vocab = {"environment": {"dead fish", "fish"}}
    out = categorize([tw("1", "dead fish and more fish")], vocab)
    assert out["environment"].term_counts == {"dead fish": 1, "fish": 1}


def test_series_by_bucket():
    window = (date(2018, 8, 6), date(2018, 8, 26))
    tweets = [tw("1", "fish", when=day(date(2018, 8, 6))), tw("2", "fish fish", when=day(date(2018, 8, 20)))]
    out = categorize(tweets, {"environment": {"fish"}}, window=window)
    assert out["environment"].series == {0: 1, 2: 2}


words = st.sampled_from(["fish", "beach", "doctor", "cough", "tourism", "hotel", "governor", "red", "tide"])
texts = st.lists(words, max_size=12).map(" ".join)


@settings(max_examples=100, deadline=None)
@given(st.lists(texts, max_size=8), st.lists(texts, max_size=8))
def test_counts_are_additive(a, b):
    ta = [tw(f"a{i}", t) for i, t in enumerate(a)]
    tb = [tw(f"b{i}", t) for i, t in enumerate(b)]
    both = categorize(ta + tb, VOCAB)
    left, right = categorize(ta, VOCAB), categorize(tb, VOCAB)
    for cat in VOCAB:
        assert both[cat].mention_count == left[cat].mention_count + right[cat].mention_count
        assert both[cat].term_counts == left[cat].term_counts + right[cat].term_counts


def test_top_terms(registry, lexicon):
    tweets = [tw("1", "dead fish everywhere, dead again"), tw("2", "so dead and toxic"),
              tw("3", "beautiful sunset"), tw("4", "dead", unit="tampa")]
    pos, neg = top_polarized_terms(tweets, lexicon, "sarasota_city", registry)
    assert neg[0].term == "dead" and neg[0].count == 3
    assert [t.term for t in pos] == ["beautiful"]
    assert neg[0].per_capita == pytest.approx(3 / 57_738 * 1e5)
    many, _ = top_polarized_terms(tweets, lexicon, "sarasota_city", registry, k=500)
    assert [t.term for t in many] == ["beautiful"]
    county_pos, county_neg = top_polarized_terms(tweets, lexicon, "sarasota", registry)
    assert county_neg[0].count == 3


def test_top_terms_ties_and_shuffle_stability(registry, lexicon):
    texts = ["toxic", "horrible", "bad", "disgusting", "gorgeous", "great", "good"]
    tweets = [tw(str(i), t) for i, t in enumerate(texts)]
    pos, neg = top_polarized_terms(tweets, lexicon, "sarasota_city", registry, k=3)
    assert [t.term for t in neg] == sorted(["toxic", "horrible", "bad", "disgusting"])[:3]
    assert [t.term for t in pos] == ["good", "gorgeous", "great"]
    rng = random.Random(5)
    for _ in range(10):
        rng.shuffle(tweets)
        assert top_polarized_terms(tweets, lexicon, "sarasota_city", registry, k=3) == (pos, neg)
