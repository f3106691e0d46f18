import itertools
import random

import pytest

from soundlaw import _native, kernels


def words_up_to(alphabet, max_len):
    out = []
    for length in range(max_len + 1):
        out.extend(itertools.product(alphabet, repeat=length))
    return out


def test_levenshtein_basics():
    assert kernels.levenshtein((), ()) == 0
    assert kernels.levenshtein((), ("a", "b", "c")) == 3
    assert kernels.levenshtein(("k", "a"), ("k", "a")) == 0
    assert kernels.levenshtein(("k", "u", "u"), ("k", "i")) == 2
    # multigraph phones cost one edit
    assert kernels.levenshtein(("tʰ", "u", "m"), ("t", "u", "m")) == 1


def test_levenshtein_metric_axioms():
    rng = random.Random(3)
    alpha = ["a", "b", "c", "d"]
    words = [tuple(rng.choice(alpha) for _ in range(rng.randrange(0, 7))) for _ in range(60)]
    for a in words[:20]:
        for b in words[:20]:
            d = kernels.levenshtein(a, b)
            assert d == kernels.levenshtein(b, a)
            assert (d == 0) == (a == b)
    for a, b, c in zip(words[:15], words[15:30], words[30:45]):
        assert kernels.levenshtein(a, c) <= kernels.levenshtein(a, b) + kernels.levenshtein(b, c)


def test_dp_matches_bruteforce_small_grid():
    words = words_up_to("ab", 4)
    for a in words:
        for b in words:
            assert kernels.levenshtein(a, b) == kernels.levenshtein_bruteforce(a, b)
            assert len(kernels.lcs_pair(a, b)) == kernels.lcs_len_bruteforce(a, b)


def test_lcs_properties():
    rng = random.Random(9)
    alpha = ["a", "b", "c"]
    for _ in range(400):
        a = tuple(rng.choice(alpha) for _ in range(rng.randrange(0, 7)))
        b = tuple(rng.choice(alpha) for _ in range(rng.randrange(0, 7)))
        got = kernels.lcs_pair(a, b)
        # it is a common subsequence...
        for seq in (a, b):
            it = iter(seq)
            assert all(sym in it for sym in got)
        # ...of maximal length
        assert len(got) == kernels.lcs_len_bruteforce(a, b)
    assert kernels.lcs_pair(("x", "y"), ("x", "y")) == ("x", "y")
    assert len(kernels.lcs_pair(("a", "b"), ("b", "a"))) == 1


def test_backends_agree():
    if kernels.BACKEND != "cython":
        pytest.skip("compiled backend not built; nothing to compare")
    rng = random.Random(17)
    alpha = ["a", "b", "c", "tʰ"]
    for _ in range(500):
        a = tuple(rng.choice(alpha) for _ in range(rng.randrange(0, 8)))
        b = tuple(rng.choice(alpha) for _ in range(rng.randrange(0, 8)))
        assert kernels.levenshtein(a, b) == _native.levenshtein(a, b)
        assert kernels.lcs_pair(a, b) == _native.lcs_pair(a, b)
        assert kernels.levenshtein_bruteforce(a, b) == _native.levenshtein_bruteforce(a, b)
        assert kernels.lcs_len_bruteforce(a, b) == _native.lcs_len_bruteforce(a, b)


def test_bruteforce_lcs_guard():
    with pytest.raises(ValueError):
        kernels.lcs_len_bruteforce(tuple("a" * 21), ("a",))
