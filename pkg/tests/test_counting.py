import io
import random

import pytest
from hypothesis import given, settings, strategies as st

from ngramkit.counting import (MIN_MEMORY_BUDGET, CountingError, ThresholdConfig,
                               apply_thresholds, count_ngrams, read_counts, write_counts)

from conftest import TOY, random_corpus
from oracles import naive_counts


def flat(table):
    out = {}
    for level in table.counts:
        out.update(level)
    return out


def test_toy_counts():
    t = count_ngrams(TOY, 2)
    assert t.counts[0] == {("a",): 2, ("b",): 1, ("</s>",): 2}
    assert t.counts[1] == {("<s>", "a"): 2, ("a", "b"): 1, ("b", "</s>"): 1, ("a", "</s>"): 1}
    assert t.total_sentences == 2
    assert t.total_tokens == 5


def test_context_counts():
    t = count_ngrams(TOY, 2)
    assert t.context_count(()) == 5
    assert t.context_count(("<s>",)) == 2
    assert t.context_count(("a",)) == 2


def test_empty_sentences_skipped():
    assert count_ngrams([[], ["a"], []], 2) == count_ngrams([["a"]], 2)


def test_invalid_arguments():
    with pytest.raises(CountingError, match="order"):
        count_ngrams(TOY, 0)
    with pytest.raises(CountingError, match="order"):
        count_ngrams(TOY, 6)
    with pytest.raises(CountingError, match="memory budget"):
        count_ngrams(TOY, 2, memory_budget=MIN_MEMORY_BUDGET - 1)
    with pytest.raises(CountingError):
        count_ngrams([["a", "<s>"]], 2)


def test_spill_matches_in_memory(tmp_path):
    # a tiny buffer forces many spill runs
    sents = random_corpus(random.Random(1), 30000, 400)
    expected = count_ngrams(sents, 3)
    import ngramkit.counting as counting
    orig = counting.entry_bytes
    counting.entry_bytes = lambda m: 4096
    try:
        spilled = count_ngrams(sents, 3, memory_budget=MIN_MEMORY_BUDGET, tmpdir=tmp_path)
    finally:
        counting.entry_bytes = orig
    assert spilled == expected
    assert flat(spilled) == naive_counts(sents, 3)
    assert list(tmp_path.iterdir()) == []


sentences = st.lists(st.lists(st.sampled_from(["a", "b", "c", "dd", "é"]), max_size=8), max_size=15)


@settings(max_examples=200, deadline=None)
@given(sentences, st.integers(1, 5))
def test_counts_match_oracle(sents, order):
    t = count_ngrams(sents, order)
    assert flat(t) == naive_counts(sents, order)
    n_tok = sum(len(s) + 1 for s in sents if s)
    assert t.total_tokens == n_tok
    assert sum(t.counts[0].values()) == n_tok
    # every higher-order count is bounded by its suffix and prefix counts
    for m in range(2, order + 1):
        for g, c in t.counts[m - 1].items():
            assert c <= t.counts[m - 2][g[1:]]
            if g[0] != "<s>":
                assert c <= t.counts[m - 2][g[:-1]]


@settings(max_examples=100, deadline=None)
@given(sentences, st.integers(1, 3), st.integers(1, 3))
def test_thresholds(sents, k2, k3):
    t = count_ngrams(sents, 3)
    cfg = ThresholdConfig({1: 1, 2: k2, 3: k3})
    th = apply_thresholds(t, cfg)
    for m, level in enumerate(th.counts, 1):
        assert all(c >= cfg.min_count[m] for c in level.values())
        assert all(t.counts[m - 1][g] == c for g, c in level.items())
        assert sum(1 for c in t.counts[m - 1].values() if c >= cfg.min_count[m]) == len(level)
    # raw history counts survive thresholding
    assert th.context_count(("a",)) == t.context_count(("a",))


def test_threshold_config_parsing():
    assert ThresholdConfig.parse("1,4,4").min_count == {1: 1, 2: 4, 3: 4}
    assert ThresholdConfig.parse("1:1,2:4,3:4") == ThresholdConfig.default(3)
    with pytest.raises(ValueError):
        ThresholdConfig({1: 0})
    with pytest.raises(ValueError, match="no entry"):
        apply_thresholds(count_ngrams(TOY, 2), ThresholdConfig({1: 1}))


def test_counts_io_roundtrip():
    t = count_ngrams(random_corpus(random.Random(3), 500, 20), 3)
    buf = io.StringIO()
    write_counts(t, buf)
    buf.seek(0)
    back = read_counts(buf)
    assert back == t
    assert back.total_sentences == t.total_sentences
    assert back.total_tokens == t.total_tokens


def test_read_counts_malformed():
    with pytest.raises(CountingError, match="line 2"):
        read_counts(io.StringIO("a\t1\nbad line\n"))
