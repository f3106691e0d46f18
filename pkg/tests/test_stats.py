import random

import pytest
from scipy import stats as scipy_stats

from soundlaw.stats import (
    AllZeroDifferences,
    StatsError,
    bonferroni,
    wilcoxon_signed_rank,
)


def test_all_zero_differences():
    with pytest.raises(AllZeroDifferences):
        wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])


def test_zero_differences_dropped():
    res = wilcoxon_signed_rank([1, 2, 3, 10], [1, 2, 5, 4])
    assert res.n == 2


def test_statistic_is_min_of_sums_two_sided():
    x = [5, 9, 1, 12, 7, 3]
    y = [1, 2, 3, 4, 5, 6]
    res = wilcoxon_signed_rank(x, y)
    assert res.statistic == min(res.w_plus, res.w_minus)
    total = res.n * (res.n + 1) / 2
    assert res.w_plus + res.w_minus == total


def test_swap_symmetry():
    rng = random.Random(4)
    for _ in range(50):
        n = rng.randrange(5, 40)
        x = [rng.random() * 10 for _ in range(n)]
        y = [v + rng.choice([-1, 1]) * rng.random() for v in x]
        a = wilcoxon_signed_rank(x, y)
        b = wilcoxon_signed_rank(y, x)
        assert a.pvalue == pytest.approx(b.pvalue, abs=1e-12)
        assert a.w_plus == pytest.approx(b.w_minus)
        assert a.w_minus == pytest.approx(b.w_plus)


def test_exact_matches_scipy_small_n():
    rng = random.Random(8)
    checked = 0
    while checked < 60:
        n = rng.randrange(5, 26)
        x = rng.sample(range(10_000), n)
        y = [v + rng.choice([-9, -5, -2, 2, 5, 9]) * (i + 1) for i, v in enumerate(x)]
        absd = [abs(a - b) for a, b in zip(x, y)]
        if len(set(absd)) != n or 0 in absd:
            continue
        checked += 1
        for alt in ("two-sided", "less", "greater"):
            mine = wilcoxon_signed_rank(x, y, alt)
            ref = scipy_stats.wilcoxon(x, y, alternative=alt, method="exact")
            assert mine.method == "exact"
            assert mine.statistic == pytest.approx(float(ref.statistic))
            assert mine.pvalue == pytest.approx(float(ref.pvalue), abs=1e-9)


def test_approx_matches_scipy_large_n():
    rng = random.Random(9)
    for n in (30, 200, 5100):
        x = [rng.randrange(0, 60) for _ in range(n)]
        y = [v + rng.choice([-2, -1, 1, 2, 3]) for v in x]
        for alt in ("two-sided", "less", "greater"):
            mine = wilcoxon_signed_rank(x, y, alt)
            ref = scipy_stats.wilcoxon(x, y, alternative=alt, method="approx", correction=True)
            assert mine.method == "approx"
            assert mine.statistic == pytest.approx(float(ref.statistic))
            assert mine.pvalue == pytest.approx(float(ref.pvalue), abs=1e-9)


def test_exact_with_ties_stays_sane():
    # scipy cannot do exact with ties; ours just needs the basic properties
    x = [1, 2, 3, 4, 5, 6, 7, 8]
    y = [2, 1, 5, 2, 7, 3, 9, 6]
    res = wilcoxon_signed_rank(x, y)
    assert res.method == "exact"
    assert 0 < res.pvalue <= 1


def test_alternative_validation():
    with pytest.raises(StatsError):
        wilcoxon_signed_rank([1], [2], alternative="sideways")
    with pytest.raises(StatsError):
        wilcoxon_signed_rank([1, 2], [3], alternative="less")


def test_bonferroni_values():
    assert bonferroni(0.05, 7) == pytest.approx(0.05 / 7)
    assert round(bonferroni(0.05, 7), 3) == 0.007
    assert bonferroni(0.05, 5) == 0.01
    assert bonferroni(0.05, 2) == 0.025
    with pytest.raises(StatsError):
        bonferroni(1.5, 3)
    with pytest.raises(StatsError):
        bonferroni(0.05, 0)
