"""Exact and resampling statistics: percentile bootstrap, paired t, Holm,
exact McNemar, cluster sign-flip permutation, variance inflation and the
uniform-rank null.

Resampling draws come from keyed blocks of fixed size, so a result depends on
``(seed, B)`` only, never on how the work is partitioned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy import stats as _sps

from ._keys import keyed_rng

_BLOCK = 1000


@dataclass(frozen=True)
class CiInterval:
    lo: float
    hi: float
    level: float
    B: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("CI lower bound exceeds upper bound")

    def fmt(self) -> str:
        return f"[{self.lo:.1f}, {self.hi:.1f}]"


@dataclass(frozen=True)
class DisagreementTable:
    """2x2 agreement-with-oracle table for a pair of selectors (A, B)."""

    both_correct: int
    a_only: int
    b_only: int
    neither: int

    @property
    def total(self) -> int:
        return self.both_correct + self.a_only + self.b_only + self.neither

    @classmethod
    def from_matches(cls, a: Sequence[bool], b: Sequence[bool]) -> "DisagreementTable":
        if len(a) != len(b):
            raise ValueError("match vectors differ in length")
        pairs = list(zip(map(bool, a), map(bool, b)))
        return cls(
            both_correct=sum(x and y for x, y in pairs),
            a_only=sum(x and not y for x, y in pairs),
            b_only=sum(y and not x for x, y in pairs),
            neither=sum(not x and not y for x, y in pairs),
        )


def _resample_means(x: np.ndarray, B: int, seed: Hashable, tag: str) -> np.ndarray:
    n = len(x)
    out = np.empty(B)
    for blk, start in enumerate(range(0, B, _BLOCK)):
        m = min(_BLOCK, B - start)
        idx = keyed_rng(seed, tag, n, blk).integers(0, n, size=(m, n))
        out[start:start + m] = x[idx].mean(axis=1)
    return out


def bootstrap_ci(samples: Sequence[float], B: int = 5000, level: float = 0.95, seed: Hashable = 0) -> CiInterval:
    """Percentile bootstrap CI of the mean of 0/1 ``samples``, scaled to pp.

    ``seed`` may be any hashable key; resamples are drawn in keyed blocks.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("bootstrap_ci needs at least one sample")
    if B < 1:
        raise ValueError("B must be >= 1")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    means = _resample_means(x, B, seed, "bootstrap")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    lo, hi = 100.0 * float(lo), 100.0 * float(hi)
    # guard float dust so degenerate samples give exact bounds
    lo, hi = round(lo, 10), round(hi, 10)
    return CiInterval(min(lo, hi), max(lo, hi), level, B)


def counts_ci(successes: int, n: int, B: int = 5000, level: float = 0.95, seed: int = 0) -> CiInterval:
    return bootstrap_ci([1.0] * successes + [0.0] * (n - successes), B, level, seed)


def paired_t_test(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Two-sided paired t on ``x - y``.

    All-zero differences give ``(0, 1)``; constant nonzero differences give an
    infinite statistic and ``p = 0``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = x - y
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(d.size))
    p = 2.0 * _sps.t.sf(abs(t), df=d.size - 1)
    return float(t), float(min(1.0, p))


def holm_bonferroni(pvals: Sequence[float], alpha: float = 0.05) -> tuple[list[float], list[bool]]:
    """Holm step-down adjusted p-values (clamped at 1) and rejection flags."""
    p = [float(v) for v in pvals]
    for v in p:
        if not 0.0 <= v <= 1.0 or math.isnan(v):
            raise ValueError(f"p-value out of range: {v}")
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p[i]))
        adjusted[i] = running
    return adjusted, [a <= alpha for a in adjusted]


def mcnemar_exact(b: int, c: int) -> float:
    """Two-sided exact McNemar: doubled lower binomial tail, clamped at 1."""
    if b < 0 or c < 0:
        raise ValueError("discordant counts must be nonnegative")
    n = b + c
    if n == 0:
        return 1.0
    k = min(b, c)
    tail = sum(math.comb(n, i) for i in range(k + 1)) / 2**n
    return min(1.0, 2.0 * tail)


def cluster_permutation(per_cluster_diffs: Sequence[float], B: int = 5000, seed: int = 0) -> float:
    """Sign-flip permutation p for the mean of per-cluster differences.

    Whole clusters flip together; ``p = (count + 1) / (B + 1)`` where count is
    the number of resamples with ``|mean| >= |observed mean|``.
    """
    d = np.asarray(per_cluster_diffs, dtype=float)
    if d.size == 0:
        raise ValueError("need at least one cluster")
    if B < 1:
        raise ValueError("B must be >= 1")
    obs = abs(d.sum())
    tol = 1e-9 * max(1.0, np.abs(d).sum())
    count = 0
    for blk, start in enumerate(range(0, B, _BLOCK)):
        m = min(_BLOCK, B - start)
        signs = keyed_rng(seed, "cluster-perm", d.size, blk).integers(0, 2, size=(m, d.size)) * 2 - 1
        count += int(np.count_nonzero(np.abs(signs @ d) >= obs - tol))
    return (count + 1) / (B + 1)


def variance_inflation(offdiag_rates: Sequence[float], diag_rates: Sequence[float]) -> float | None:
    """Sample variance of off-diagonal rates over that of diagonal rates.

    Returns ``None`` (undefined) when the diagonal variance is zero.
    """
    off = np.asarray(offdiag_rates, dtype=float)
    diag = np.asarray(diag_rates, dtype=float)
    if off.size < 2 or diag.size < 2:
        raise ValueError("each rate list needs at least two entries")
    vd = diag.var(ddof=1)
    if vd == 0.0:
        return None
    return float(off.var(ddof=1) / vd)


def rank_null_prob(rank: int, n: int) -> float:
    """P(rank <= ``rank``) when the rank is uniform on 1..n."""
    if n < 1 or not 1 <= rank <= n:
        raise ValueError(f"rank {rank} outside 1..{n}")
    return rank / n
