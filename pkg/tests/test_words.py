"""Word algebra: reduction, spheres, sampling."""

import random
from collections import Counter

import pytest

from f2walk.words import (
    CHARS,
    INV,
    LETTERS,
    SUCC,
    enumerate_sphere,
    invert,
    is_reduced,
    nbw_step,
    reduce_concat,
    sample_uniform_sphere,
    sphere_size,
    word_from_str,
    word_to_str,
)


def naive_reduce(letters):
    """Reference reduction: repeated adjacent-inverse cancellation."""
    out = []
    for s in letters:
        if out and out[-1] == INV[s]:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def test_letter_tables():
    assert INV == (2, 3, 0, 1)
    for s in LETTERS:
        assert INV[INV[s]] == s
        assert INV[s] not in SUCC[s]
        assert len(SUCC[s]) == 3


def test_reduce_concat_matches_naive():
    rng = random.Random(101)
    for _ in range(300):
        left = naive_reduce([rng.randrange(4) for _ in range(rng.randrange(12))])
        right = naive_reduce([rng.randrange(4) for _ in range(rng.randrange(12))])
        got = reduce_concat(left, right)
        want = naive_reduce(list(left) + list(right))
        assert got == want
        assert is_reduced(got)


def test_invert_is_involution_and_antihomomorphism():
    rng = random.Random(7)
    for _ in range(100):
        w = sample_uniform_sphere(rng.randrange(1, 8), rng)
        assert invert(invert(w)) == w
        assert reduce_concat(w, invert(w)) == ()
        v = sample_uniform_sphere(rng.randrange(1, 8), rng)
        assert invert(reduce_concat(w, v)) == reduce_concat(invert(v), invert(w))


def test_str_round_trip():
    assert word_from_str("abAB") == (0, 1, 2, 3)
    assert word_to_str((0, 1, 2, 3)) == "abAB"
    rng = random.Random(3)
    for _ in range(50):
        w = sample_uniform_sphere(6, rng)
        assert word_from_str(word_to_str(w)) == w
    with pytest.raises(ValueError):
        word_from_str("abX")


def test_sphere_sizes():
    assert sphere_size(0) == 1
    assert sphere_size(1) == 4
    assert sphere_size(2) == 12
    assert sphere_size(5) == 324
    for n in range(1, 8):
        assert sphere_size(n) == 4 * 3 ** (n - 1)


def test_enumerate_sphere_exact():
    for n in range(0, 6):
        words = list(enumerate_sphere(n, cap=8))
        assert len(words) == sphere_size(n)
        assert len(set(words)) == len(words)
        for w in words:
            assert len(w) == n
            assert is_reduced(w)


def test_enumerate_sphere_cap():
    with pytest.raises(Exception):
        list(enumerate_sphere(9, cap=8))


def test_sample_uniform_sphere_distribution():
    # n = 2 sphere has 12 words; chi-square-style band on 6000 draws
    rng = random.Random(20240817)
    counts = Counter(sample_uniform_sphere(2, rng) for _ in range(6000))
    assert set(counts) == set(enumerate_sphere(2))
    for c in counts.values():
        assert 380 <= c <= 620


def test_nbw_step_never_backtracks():
    rng = random.Random(5)
    last = None
    for _ in range(2000):
        s = nbw_step(last, rng)
        if last is not None:
            assert s != INV[last]
        last = s


def test_chars_table():
    assert CHARS == "abAB"
