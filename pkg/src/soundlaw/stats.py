"""Paired Wilcoxon signed-rank test and Bonferroni correction.

The test drops zero differences, ranks |d| with average ranks for ties,
and reports min(W+, W-) for two-sided alternatives (W+ otherwise).  The
p-value comes from the exact null distribution for n <= 25 pairs after
zero removal, and from the normal approximation with tie and continuity
corrections beyond that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EXACT_LIMIT = 25


class StatsError(Exception):
    pass


class AllZeroDifferences(StatsError):
    pass


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    pvalue: float
    n: int
    w_plus: float
    w_minus: float
    method: str


def _average_ranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _exact_counts(double_ranks) -> list[int]:
    """Distribution of 2*W+ over all sign assignments (integer support)."""
    total = sum(double_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in double_ranks:
        for w in range(total - r, -1, -1):
            if counts[w]:
                counts[w + r] += counts[w]
    return counts


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def wilcoxon_signed_rank(x, y, alternative: str = "two-sided") -> WilcoxonResult:
    """Paired test of x against y.

    alternative 'less' tests whether x tends to be smaller than y (the
    one-sided option for ordered comparisons), 'greater' the reverse.
    """
    if alternative not in ("two-sided", "less", "greater"):
        raise StatsError(f"unknown alternative {alternative!r}")
    if len(x) != len(y) or not x:
        raise StatsError("x and y must be equal-length, non-empty vectors")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    diffs = [d for d in diffs if d != 0.0]
    if not diffs:
        raise AllZeroDifferences("every paired difference is zero")
    n = len(diffs)
    ranks = _average_ranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    statistic = min(w_plus, w_minus) if alternative == "two-sided" else w_plus

    if n <= EXACT_LIMIT:
        double_ranks = [round(2 * r) for r in ranks]
        counts = _exact_counts(double_ranks)
        total = float(2**n)
        t2 = round(2 * w_plus)

        def cdf(k2: int) -> float:
            return sum(counts[: min(k2, len(counts) - 1) + 1]) / total

        def sf(k2: int) -> float:
            return sum(counts[max(k2, 0) :]) / total

        # conservative rounding for half-integer statistics (ties)
        if alternative == "less":
            p = cdf(t2 + (t2 % 2))
        elif alternative == "greater":
            p = sf(t2 - (t2 % 2))
        else:
            p = 2 * min(sf(t2 - (t2 % 2)), cdf(t2 + (t2 % 2)))
            p = min(p, 1.0)
        return WilcoxonResult(statistic, p, n, w_plus, w_minus, "exact")

    mn = n * (n + 1) * 0.25
    se = n * (n + 1) * (2 * n + 1)
    tie_sizes = {}
    for r in ranks:
        tie_sizes[r] = tie_sizes.get(r, 0) + 1
    tie_correct = sum(t**3 - t for t in tie_sizes.values())
    se = math.sqrt((se - tie_correct / 2) / 24)
    z = (w_plus - mn) / se
    # continuity correction: shrink |z| by half a step
    if alternative == "greater":
        z -= 0.5 / se
    elif alternative == "less":
        z += 0.5 / se
    else:
        z -= math.copysign(0.5 / se, z)
    if alternative == "two-sided":
        p = 2 * _normal_sf(abs(z))
    elif alternative == "greater":
        p = _normal_sf(z)
    else:
        p = 1 - _normal_sf(z)
    return WilcoxonResult(statistic, min(p, 1.0), n, w_plus, w_minus, "approx")


def bonferroni(alpha: float, m: int) -> float:
    """Per-comparison significance level for m comparisons."""
    if not 0 < alpha < 1:
        raise StatsError("alpha must lie in (0, 1)")
    if m < 1:
        raise StatsError("m must be >= 1")
    return alpha / m
