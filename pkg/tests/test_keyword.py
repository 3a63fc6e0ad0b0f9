from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from ngramkit.keyword import (KeywordSpec, augment_keywords, count_keywords,
                              load_keyword_spec, occurrences)

from conftest import FIXTURES
from oracles import keyword_recount


def spec(*entries):
    return KeywordSpec(tuple((tuple(k.split()), t) for k, t in entries))


def test_single_occurrence_duplicated():
    corpus = [["a", "foo", "b"], ["c"]]
    out, rep = augment_keywords(corpus, spec(("foo", 5)), max_dup_per_sentence=10)
    assert out[:2] == corpus
    assert out[2:] == [["a", "foo", "b"]] * 4
    assert rep["foo"].after == 5
    assert rep["foo"].duplicated == 4
    assert rep["foo"].status == "ok"


def test_cooccurring_keyword_never_duplicated():
    corpus = [["foo", "bar"], ["bar"]]
    out, rep = augment_keywords(corpus, spec(("foo", 3), ("bar", 2)))
    assert rep["foo"].status == "unsatisfiable"
    assert rep["foo"].after == 1
    assert out == corpus


def test_absent_keyword_unsatisfiable():
    out, rep = augment_keywords([["a"]], spec(("zz", 2)))
    assert rep["zz"].status == "unsatisfiable"
    assert out == [["a"]]


def test_max_dup_caps_and_flags_partial():
    out, rep = augment_keywords([["foo"]], spec(("foo", 10)), max_dup_per_sentence=3)
    assert rep["foo"].after == 4
    assert rep["foo"].status == "partial"
    assert len(out) == 4


def test_removal_shortest_first():
    corpus = [["foo", "x", "y"], ["foo"], ["foo", "x"], ["other"]]
    out, rep = augment_keywords(corpus, spec(("foo", 1)))
    assert out == [["foo", "x", "y"], ["other"]]
    assert rep["foo"].removed == 2


def test_removal_does_not_undershoot():
    # removing the sentence with two occurrences would overshoot below target
    corpus = [["foo", "foo"], ["foo", "a", "b"]]
    out, rep = augment_keywords(corpus, spec(("foo", 2)))
    assert rep["foo"].after == 2
    assert out == [["foo", "foo"]]


def test_round_robin_duplication():
    corpus = [["foo", "1"], ["foo", "2"], ["foo", "3"]]
    out, _ = augment_keywords(corpus, spec(("foo", 8)))
    assert Counter(s[1] for s in out[3:]) == {"1": 2, "2": 2, "3": 1}


def test_multi_token_keyword_overlaps():
    assert occurrences(["a", "a", "a"], ("a", "a")) == 2
    assert count_keywords([["new", "york", "new", "york"]], [("new", "york")]) == {("new", "york"): 2}


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError, match="duplicate"):
        spec(("a", 1), ("a", 2))
    with pytest.raises(ValueError, match="positive"):
        spec(("a", 0))
    with pytest.raises(ValueError, match="empty"):
        KeywordSpec(())
    p = tmp_path / "kw.tsv"
    p.write_text("new york\t3\nfoo\t2\n", encoding="utf-8")
    assert load_keyword_spec(p).entries == ((("new", "york"), 3), (("foo",), 2))
    p.write_text("foo 2\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":1:"):
        load_keyword_spec(p)


def check_invariants(corpus, kw_spec, max_dup):
    out, rep = augment_keywords(corpus, kw_spec, max_dup_per_sentence=max_dup)
    n = len(corpus)
    kept = out[:len(out) - sum(e.duplicated for e in rep.entries)]
    appended = out[len(kept):]
    for e, (kw, target) in zip(rep.entries, kw_spec.entries):
        assert keyword_recount(out, kw) == e.after
        assert e.before == keyword_recount(corpus, kw)
        # never overshoot, in either direction
        assert min(e.before, target) <= e.after <= max(e.before, target)
        assert (e.status == "ok") == (e.after == target)
    for s in appended:
        assert sum(1 for kw in kw_spec.keywords if keyword_recount([s], kw)) == 1
    copies = Counter(tuple(s) for s in appended)
    originals = Counter(tuple(s) for s in corpus)
    for s, c in copies.items():
        assert c <= max_dup * originals[s]
    assert len(kept) <= n
    return out, rep


def test_fixture_recount():
    kw_spec = load_keyword_spec(FIXTURES / "keyword" / "spec.tsv")
    corpus = [line.split() for line in open(FIXTURES / "keyword" / "corpus.txt", encoding="utf-8")]
    assert len(corpus) == 100
    for max_dup in (0, 1, 3, 20):
        _, rep = check_invariants(corpus, kw_spec, max_dup)
        assert {e.status for e in rep.entries} >= {"ok", "unsatisfiable"}


words = st.sampled_from(list("abcdxy"))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(words, min_size=1, max_size=6), max_size=25),
       st.dictionaries(st.lists(words, min_size=1, max_size=2).map(" ".join),
                       st.integers(1, 30), min_size=1, max_size=4),
       st.integers(0, 5))
def test_invariants_property(corpus, targets, max_dup):
    check_invariants(corpus, spec(*targets.items()), max_dup)
