import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botgeo.similarity import (
    BatchScorer,
    indel_distance,
    lcs_length,
    length_window,
    similarity,
)
from oracles import indel_distance_dp, lcs_dp, similarity_oracle


def test_identity():
    assert similarity("paris", "paris") == 1.0


def test_single_insertion():
    # one insertion, lengths 5 + 6
    assert similarity("londn", "london") == pytest.approx(10 / 11, abs=1e-12)


def test_mostly_disjoint():
    assert lcs_dp("berlin", "munich") == 1
    assert similarity("berlin", "munich") == pytest.approx(
        1.0 - 10 / 12, abs=1e-12
    )


def test_empty_rules():
    assert similarity("", "") == 1.0
    assert similarity("a", "") == 0.0
    assert similarity("", "abc") == 0.0


def test_symmetry_samples():
    rng = random.Random(3)
    for _ in range(200):
        a = "".join(rng.choice("abc") for _ in range(rng.randint(0, 10)))
        b = "".join(rng.choice("abc") for _ in range(rng.randint(0, 10)))
        assert similarity(a, b) == similarity(b, a)


@given(
    st.text(max_size=40),
    st.text(max_size=40),
)
@settings(max_examples=400, deadline=None)
def test_matches_dp_oracle(a, b):
    assert indel_distance(a, b) == indel_distance_dp(a, b)
    assert similarity(a, b) == similarity_oracle(a, b)


def test_long_strings_use_scalar_path():
    a = "a" * 801 + "b" * 199
    b = "a" * 801 + "c" * 199
    assert lcs_length(a, b) == 801
    assert similarity(a, b) == pytest.approx(0.801, abs=1e-12)


def test_length_window_is_exact():
    for la in (1, 2, 3, 5, 9, 17, 40):
        lo, hi = length_window(la, 0.8)
        assert 1.0 - abs(la - lo) / (la + lo) > 0.8
        assert 1.0 - abs(la - hi) / (la + hi) > 0.8
        if lo > 1:
            assert not 1.0 - abs(la - (lo - 1)) / (la + lo - 1) > 0.8
        assert not 1.0 - abs(la - (hi + 1)) / (la + hi + 1) > 0.8


def _make_scorer(names):
    alphabet = sorted({c for n in names for c in n})
    code = {c: i + 1 for i, c in enumerate(alphabet)}
    width = max((len(n) for n in names), default=1) or 1
    codes = np.zeros((len(names), width), dtype=np.uint32)
    for r, n in enumerate(names):
        codes[r, : len(n)] = [code[c] for c in n]
    lengths = np.array([len(n) for n in names], dtype=np.int64)
    return BatchScorer(codes, lengths, len(alphabet)), code


@pytest.mark.parametrize("qlen", [1, 7, 40, 63, 64, 70])
def test_batch_scorer_equals_scalar(kernel_mode, qlen):
    rng = random.Random(qlen)
    names = [
        "".join(rng.choice("abcdef") for _ in range(rng.randint(0, 80)))
        for _ in range(150)
    ]
    names = [n for n in names if n]
    scorer, code = _make_scorer(names)
    query = "".join(rng.choice("abcdefg") for _ in range(qlen))
    qcodes = [code.get(c, 0) for c in query]
    rows = np.arange(len(names), dtype=np.int64)
    got = scorer.similarity_rows(qcodes, rows)
    for name, sim in zip(names, got):
        assert sim == similarity(query, name)
