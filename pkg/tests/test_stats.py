import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skillgov.stats import (
    DisagreementTable,
    bootstrap_ci,
    cluster_permutation,
    counts_ci,
    holm_bonferroni,
    mcnemar_exact,
    paired_t_test,
    rank_null_prob,
    variance_inflation,
)


def exact_sign_flip_p(d):
    d = np.asarray(d, dtype=float)
    obs = abs(d.sum())
    hits = sum(abs(np.dot(s, d)) >= obs - 1e-9 for s in itertools.product((-1, 1), repeat=d.size))
    return hits / 2**d.size


def test_mcnemar_hand_value():
    # 2 * (C(17,0)+C(17,1)+C(17,2)+C(17,3)) / 2^17
    assert mcnemar_exact(3, 14) == pytest.approx(2 * 834 / 131072, abs=1e-15)


@given(st.integers(0, 60), st.integers(0, 60))
def test_mcnemar_properties(b, c):
    p = mcnemar_exact(b, c)
    assert p == mcnemar_exact(c, b)
    assert 0 < p <= 1
    if b == c:
        assert p == 1.0


def test_mcnemar_rejects_negative():
    with pytest.raises(ValueError):
        mcnemar_exact(-1, 2)


def test_holm_hand_value():
    adj, rej = holm_bonferroni([0.01, 0.04, 0.03], 0.05)
    assert adj == pytest.approx([0.03, 0.06, 0.06])
    assert rej == [True, False, False]


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_holm_properties(p):
    adj, _ = holm_bonferroni(p)
    order = sorted(range(len(p)), key=lambda i: p[i])
    assert all(adj[order[i]] <= adj[order[i + 1]] for i in range(len(p) - 1))
    assert all(a >= r and a <= 1.0 for a, r in zip(adj, p))


def test_holm_rejects_bad_p():
    with pytest.raises(ValueError):
        holm_bonferroni([0.5, 1.2])


def test_paired_t_closed_form_df2():
    # differences (1, 2, 3): t = sqrt(12); for df = 2, p = 1 - t / sqrt(2 + t^2)
    t, p = paired_t_test([1, 2, 3], [0, 0, 0])
    assert t == pytest.approx(math.sqrt(12))
    assert p == pytest.approx(1 - math.sqrt(12) / math.sqrt(14), rel=1e-10)


def test_paired_t_degenerate_conventions():
    assert paired_t_test([1, 2], [1, 2]) == (0.0, 1.0)
    t, p = paired_t_test([2, 3], [1, 2])
    assert t == math.inf and p == 0.0
    with pytest.raises(ValueError):
        paired_t_test([1], [1])
    with pytest.raises(ValueError):
        paired_t_test([1, 2], [1])


def test_bootstrap_degenerate_and_reproducible():
    assert counts_ci(30, 30).lo == 100.0 and counts_ci(30, 30).hi == 100.0
    assert counts_ci(0, 30).lo == 0.0 and counts_ci(0, 30).hi == 0.0
    a = bootstrap_ci([0, 1, 1, 0, 1], B=777, seed=3)
    b = bootstrap_ci([0, 1, 1, 0, 1], B=777, seed=3)
    assert a == b


@settings(max_examples=30, deadline=None)
@given(k=st.integers(0, 30), n=st.integers(1, 30), seed=st.integers(0, 10))
def test_bootstrap_contains_point_estimate(k, n, seed):
    k = min(k, n)
    ci = counts_ci(k, n, B=500, seed=seed)
    assert ci.lo - 1e-9 <= 100 * k / n <= ci.hi + 1e-9


def test_bootstrap_argument_checks():
    with pytest.raises(ValueError):
        bootstrap_ci([])
    with pytest.raises(ValueError):
        bootstrap_ci([1.0], B=0)
    with pytest.raises(ValueError):
        bootstrap_ci([1.0], level=1.0)


def test_cluster_permutation_small_exact():
    d = [1, 1, 0, 2]
    assert exact_sign_flip_p(d) == pytest.approx(4 / 16)
    assert cluster_permutation(d, B=20000, seed=1) == pytest.approx(0.25, abs=0.01)


def test_cluster_permutation_all_zero_and_reproducible():
    assert cluster_permutation([0, 0, 0], B=100) == 1.0
    assert cluster_permutation([1, -2, 3], B=1234, seed=9) == cluster_permutation([1, -2, 3], B=1234, seed=9)


def test_cluster_permutation_floor():
    # a strongly one-sided vector can never drop below 1 / (B + 1)
    assert cluster_permutation([5] * 16, B=999) >= 1 / 1000


def test_variance_inflation():
    assert variance_inflation([0, 2, 4, 6], [1, 2, 3]) == pytest.approx((20 / 3) / 1.0)
    assert variance_inflation([1, 2], [5, 5, 5]) is None
    with pytest.raises(ValueError):
        variance_inflation([1], [1, 2])


def test_rank_null_prob():
    assert rank_null_prob(7, 16) == 0.4375
    assert rank_null_prob(1, 4) == 0.25
    with pytest.raises(ValueError):
        rank_null_prob(0, 4)


def test_disagreement_table():
    t = DisagreementTable.from_matches([True, True, False, False], [True, False, True, False])
    assert (t.both_correct, t.a_only, t.b_only, t.neither) == (1, 1, 1, 1)
    assert t.total == 4
