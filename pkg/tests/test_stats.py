import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus_passport.errors import UnknownTermError, ValidationError
from corpus_passport.ingest import generate_fixture
from corpus_passport.preprocess import build_variant, corpus_from_token_lists
from corpus_passport.stats import (
    FrequencyTable, compare_frequencies, cooccurrence_around, corpus_structure, ngrams,
    term_frequency, zipf_fit,
)

from oracles import brute_ngrams


def test_structure_hand_fixture(hand_a, lists):
    s = corpus_structure(hand_a, lists)
    assert (s.total_tokens, s.unique_terms, s.special_count, s.meaningful_count) == (12, 8, 2, 5)
    assert s.unique_ratio == pytest.approx(8 / 12, abs=1e-12)
    assert s.special_fraction_all == pytest.approx(2 / 12, abs=1e-12)
    assert s.special_to_meaningful == pytest.approx(0.4, abs=1e-12)
    assert s.special_share_of_content == pytest.approx(2 / 7, abs=1e-12)


def test_structure_single_word(lists):
    s = corpus_structure(corpus_from_token_lists([["design"]]), lists)
    assert (s.total_tokens, s.unique_terms, s.unique_ratio, s.special_count) == (1, 1, 1.0, 0)


def test_structure_empty_corpus_raises(lists):
    with pytest.raises(ValidationError, match="empty corpus"):
        corpus_structure(corpus_from_token_lists([[]]), lists)


def test_meaningful_length_threshold(lists):
    s = corpus_structure(corpus_from_token_lists([["abc", "abcd", "about", "#tag"]]), lists)
    # "abc" too short, "about" is a stopword
    assert s.meaningful_count == 1


def test_term_frequency_hand(hand_a):
    assert term_frequency(hand_a, 3).entries == (("design", 3), ("great", 2), ("new", 2))
    assert len(term_frequency(hand_a, 100)) == hand_a.V
    assert term_frequency(corpus_from_token_lists([]), 5).entries == ()
    with pytest.raises(ValidationError):
        term_frequency(hand_a, 0)


def test_frequency_sums_to_total():
    c = build_variant(generate_fixture(2, 200, "planted_topics"), "A")
    table = term_frequency(c)
    assert sum(table.counts()) == c.vocab.total_tokens == sum(len(d) for d in c.docs)
    counts = table.counts()
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    for (t1, c1), (t2, c2) in zip(table.entries, table.entries[1:]):
        assert c1 > c2 or t1 < t2


def test_zipf_exact_power_law():
    fit = zipf_fit([1200, 600, 400, 300])
    assert fit.slope == pytest.approx(-1.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-9)
    assert fit.intercept == pytest.approx(math.log10(1200), abs=1e-9)


def test_zipf_constant_counts():
    fit = zipf_fit([5, 5, 5, 5])
    assert fit.slope == pytest.approx(0.0, abs=1e-9)
    assert 0.0 <= fit.r_squared <= 1.0


def test_zipf_insufficient():
    with pytest.raises(ValidationError, match="insufficient"):
        zipf_fit([3, 2])


def test_zipf_max_rank_truncates():
    fit = zipf_fit([1000 // r for r in range(1, 50)], max_rank=10)
    assert fit.ranks_used == 10


def test_zipf_matches_polyfit():
    counts = sorted(np.random.default_rng(0).integers(1, 500, 80).tolist(), reverse=True)
    fit = zipf_fit(counts)
    x, y = np.log10(np.arange(1, 81)), np.log10(counts)
    slope, intercept = np.polyfit(x, y, 1)
    r2 = np.corrcoef(x, y)[0, 1] ** 2
    assert fit.slope == pytest.approx(slope, abs=1e-10)
    assert fit.intercept == pytest.approx(intercept, abs=1e-10)
    assert fit.r_squared == pytest.approx(r2, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 10_000), min_size=3, max_size=60), st.integers(2, 1000))
def test_zipf_scale_invariance(counts, scale):
    counts = sorted(counts, reverse=True)
    a, b = zipf_fit(counts), zipf_fit([c * scale for c in counts])
    assert b.slope == pytest.approx(a.slope, abs=1e-9)
    assert b.r_squared == pytest.approx(a.r_squared, abs=1e-9)
    assert b.intercept == pytest.approx(a.intercept + math.log10(scale), abs=1e-9)


def test_ngrams_hand():
    c = corpus_from_token_lists([["design", "is", "not", "new"]])
    assert ngrams(c, 2).as_dict() == {("design", "is"): 1, ("is", "not"): 1, ("not", "new"): 1}
    assert ngrams(c, 3).as_dict() == {("design", "is", "not"): 1, ("is", "not", "new"): 1}


def test_ngrams_single_token_docs():
    c = corpus_from_token_lists([["a"], ["b"], ["a"]])
    assert ngrams(c, 2).entries == ()


def test_ngrams_never_cross_documents():
    c = corpus_from_token_lists([["a", "b"], ["c", "d"]])
    assert ("b", "c") not in ngrams(c, 2).as_dict()


def test_ngrams_bad_n():
    with pytest.raises(ValidationError):
        ngrams(corpus_from_token_lists([["a"]]), 4)


def test_ngrams_brute_force_oracle():
    rng = random.Random(11)
    vocab = [f"w{i}" for i in range(15)]
    docs = [[rng.choice(vocab) for _ in range(rng.randint(0, 12))] for _ in range(1000)]
    c = corpus_from_token_lists(docs)
    for n in (2, 3):
        table = ngrams(c, n)
        assert table.as_dict() == brute_ngrams(docs, n)
        assert table.total == sum(max(0, len(d) - n + 1) for d in docs)


def test_cooccurrence_hand():
    c = corpus_from_token_lists([["new", "design"], ["great", "design"]])
    assert cooccurrence_around(c, "design") == [(("great", "design"), 1), (("new", "design"), 1)]


def test_cooccurrence_isolated_and_unknown():
    c = corpus_from_token_lists([["design"], ["other"]])
    assert cooccurrence_around(c, "design") == []
    with pytest.raises(UnknownTermError):
        cooccurrence_around(c, "missing")


def test_cooccurrence_entries_contain_term():
    c = build_variant(generate_fixture(4, 300, "planted_topics"), "C")
    term = term_frequency(c, 1).entries[0][0]
    rows = cooccurrence_around(c, term, 10)
    assert len(rows) == 10
    assert all(term in g for g, _ in rows)
    assert [n for _, n in rows] == sorted((n for _, n in rows), reverse=True)


def test_compare_frequencies():
    a = FrequencyTable.from_counts({"x": 10, "b": 5, "c": 3, "d": 2, "e": 1})
    b = FrequencyTable.from_counts({"b": 10, "c": 9, "d": 8, "e": 7, "x": 1})
    rows = compare_frequencies(a, b, ["x", "missing"])
    assert rows[0] == ("x", 1, 5, 10 / 21, 1 / 35)
    assert rows[1] == ("missing", None, None, 0.0, 0.0)
    same = compare_frequencies(a, a, ["x", "b", "c"])
    assert all(r[1] == r[2] for r in same)


def test_compare_uses_untruncated_total():
    counts = {"a": 6, "b": 3, "c": 1}
    top = FrequencyTable.from_counts(counts, top_k=1)
    assert compare_frequencies(top, top, ["a"])[0][3] == pytest.approx(0.6)
