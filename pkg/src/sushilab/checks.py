"""Statistical decision rules shared by tests, experiments and the CLI.

Thresholds are fixed here: 5 standard errors for estimator/oracle
agreement, significance 1e-3 for distributional tests, and ``4/sqrt(R)`` for
sample correlations that should vanish.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import stats

NSIGMA = 5
ALPHA = 1e-3
MIN_EXPECTED = 5


def agrees(estimate: float, target: float, std_error: float, nsigma: float = NSIGMA) -> bool:
    """``|estimate - target| <= nsigma * std_error`` (exact match when the error is 0)."""
    if std_error == 0:
        return math.isclose(float(estimate), float(target), rel_tol=0, abs_tol=1e-12)
    return abs(float(estimate) - float(target)) <= nsigma * std_error


def mean_and_se(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return float(values.mean()) if len(values) else 0.0, 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def _poisson_bins(mean: float, n: int) -> list[tuple[int, int | None]]:
    # half-open count ranges [a, b); b None is the upper tail
    bins = []
    start = 0
    k = 0
    acc = 0.0
    while True:
        acc += n * stats.poisson.pmf(k, mean)
        tail = n * stats.poisson.sf(k, mean)
        if tail < MIN_EXPECTED:
            bins.append((start, None))
            return bins
        if acc >= MIN_EXPECTED:
            bins.append((start, k + 1))
            start = k + 1
            acc = 0.0
        k += 1


def poisson_chisquare(counts: Sequence[int], mean: float) -> float:
    """p-value of Pearson's test of ``counts`` against Poisson(``mean``).

    Adjacent counts are pooled so every bin expects at least 5 hits.
    """
    counts = np.asarray(counts)
    n = len(counts)
    mean = float(mean)
    if mean == 0:
        return 1.0 if not counts.any() else 0.0
    bins = _poisson_bins(mean, n)
    if len(bins) < 2:
        return 1.0
    observed, expected = [], []
    for a, b in bins:
        if b is None:
            observed.append(int((counts >= a).sum()))
            expected.append(n * stats.poisson.sf(a - 1, mean))
        else:
            observed.append(int(((counts >= a) & (counts < b)).sum()))
            expected.append(n * (stats.poisson.cdf(b - 1, mean) - stats.poisson.cdf(a - 1, mean)))
    expected = np.asarray(expected)
    expected *= n / expected.sum()
    return float(stats.chisquare(observed, expected).pvalue)


def two_sample_chisquare(first: Sequence[int], second: Sequence[int]) -> float:
    """p-value for "both count samples come from the same law".

    Values are pooled into bins holding at least ``2 * MIN_EXPECTED`` pooled
    observations, then a 2 x K contingency test is run.
    """
    first, second = np.asarray(first), np.asarray(second)
    pooled = np.concatenate([first, second])
    values, freq = np.unique(pooled, return_counts=True)
    edges = []
    acc = 0
    for v, f in zip(values, freq):
        acc += f
        if acc >= 2 * MIN_EXPECTED:
            edges.append(v + 1)
            acc = 0
    if not edges:
        return 1.0
    if acc:
        edges[-1] = values[-1] + 1
    edges = np.asarray([values[0]] + edges)
    if len(edges) < 3:
        return 1.0
    table = np.vstack([np.histogram(first, bins=edges)[0], np.histogram(second, bins=edges)[0]])
    return float(stats.chi2_contingency(table, correction=False).pvalue)


def correlation(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.std() == 0 or y.std() == 0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


def correlation_bound(replicates: int) -> float:
    return 4 / math.sqrt(replicates)


def ks_uniform(samples, lo: float = 0.0, hi: float = 1.0) -> float:
    return float(stats.kstest(np.asarray(samples, dtype=float), "uniform", args=(lo, hi - lo)).pvalue)
