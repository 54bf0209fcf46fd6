"""Nonparametric statistics: Spearman rank correlation, Wilcoxon signed-rank
with exact small-n enumeration, and Holm-Bonferroni stepdown correction."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations, product
from math import factorial

import numpy as np
from scipy.special import ndtr, stdtr
from scipy.stats import rankdata

EXACT_SPEARMAN_N = 9
EXACT_WILCOXON_N = 12


class ConstantInputError(ValueError):
    """Rank correlation is undefined for a constant vector."""


class DegenerateDifferences(ValueError):
    """All paired differences are zero (or too few are non-zero)."""


@dataclass(frozen=True)
class StatTestResult:
    statistic: float
    p_value: float
    n: int
    method: str
    correction: dict = field(default_factory=dict)


def _spearman_r(rx: np.ndarray, ry: np.ndarray) -> float:
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    return float(rx @ ry / denom)


def spearman(x, y) -> StatTestResult:
    """Rank correlation with average ranks for ties.

    Exact permutation p-value for n <= 9, t-approximation otherwise.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if len(y) != n:
        raise ValueError("inputs must have equal length")
    if n < 3:
        raise ValueError("need at least 3 pairs")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ConstantInputError("constant input vector")
    rx = rankdata(x)
    ry = rankdata(y)
    r = _spearman_r(rx, ry)
    if n <= EXACT_SPEARMAN_N:
        count = 0
        for perm in permutations(ry):
            if abs(_spearman_r(rx, np.array(perm))) >= abs(r) - 1e-12:
                count += 1
        p = count / factorial(n)
    else:
        if abs(r) >= 1.0:
            p = 0.0
        else:
            t = r * np.sqrt((n - 2) / (1.0 - r * r))
            p = 2.0 * stdtr(n - 2, -abs(t))
    return StatTestResult(statistic=r, p_value=float(min(p, 1.0)), n=n,
                          method="spearman")


def wilcoxon_signed_rank(a, b) -> StatTestResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped. For n <= 12 non-zero differences the p-value
    is computed by full enumeration of the 2^n sign assignments on the observed
    (possibly tied) ranks, as the probability of a rank sum at least as far
    from its mean as observed. Larger n uses the normal approximation with tie
    correction and continuity correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    d = a - b
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        raise DegenerateDifferences("all paired differences are zero")
    if n < 5:
        raise DegenerateDifferences(f"only {n} non-zero differences; need >= 5")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    mu = n * (n + 1) / 4.0
    dev = abs(w_plus - mu)
    if n <= EXACT_WILCOXON_N:
        count = 0
        for signs in product((0.0, 1.0), repeat=n):
            w = float(np.dot(signs, ranks))
            if abs(w - mu) >= dev - 1e-12:
                count += 1
        p = count / 2.0 ** n
    else:
        counts = np.unique(ranks, return_counts=True)[1]
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(counts ** 3 - counts) / 48.0
        z = max(dev - 0.5, 0.0) / np.sqrt(var)
        p = 2.0 * (1.0 - ndtr(z))
    statistic = min(w_plus, n * (n + 1) / 2.0 - w_plus)
    return StatTestResult(statistic=statistic, p_value=float(min(p, 1.0)), n=n,
                          method="wilcoxon")


def holm_bonferroni(p_values, alpha: float = 0.01) -> np.ndarray:
    """Stepdown rejection mask, aligned with the input order.

    Sorted ascending, p_(i) is rejected while p_(i) <= alpha / (m - i + 1);
    testing stops at the first failure.
    """
    p = np.asarray(p_values, dtype=float)
    if p.size and (np.any(p < 0) or np.any(p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    rejected = np.zeros(m, dtype=bool)
    order = np.argsort(p, kind="stable")
    for i, idx in enumerate(order):
        if p[idx] <= alpha / (m - i):
            rejected[idx] = True
        else:
            break
    return rejected
