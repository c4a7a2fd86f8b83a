import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from bctree import (
    ROOT,
    ContextTree,
    TimeSeries,
    build_counts,
    enumerate_trees,
    log_marginal_likelihood,
    log_pe,
    log_posterior,
    log_prior,
    map_tree,
    run_ctw,
)
from bctree.ctw import context_code, decode_context
from bctree.exceptions import DomainError

from conftest import random_series


def test_log_pe_examples():
    assert log_pe([0, 0]) == 0.0
    assert log_pe([1, 0]) == pytest.approx(math.log(0.5), abs=1e-14)
    assert log_pe([2, 2]) == pytest.approx(math.log(3 / 128), abs=1e-14)


def test_log_pe_vectorised():
    rows = np.array([[0, 0], [1, 0], [2, 2]])
    np.testing.assert_allclose(log_pe(rows), [0, math.log(0.5), math.log(3 / 128)], atol=1e-14)


def test_build_counts_examples(toy):
    c = build_counts(toy, 1)
    assert c.as_dict() == {ROOT: (2, 2), (0,): (0, 2), (1,): (2, 0)}
    c = build_counts(TimeSeries([1, 1], [1, 1, 1], 2), 2)
    assert c.as_dict() == {ROOT: (0, 3), (1,): (0, 3), (1, 1): (0, 3)}
    c = build_counts(TimeSeries([0, 1], [], 2), 2)
    assert c.n == 0 and c.count(ROOT).tolist() == [0, 0]


def test_build_counts_needs_context():
    with pytest.raises(DomainError):
        build_counts(TimeSeries([1], [0, 1], 2), 2)


def _naive_counts(x, D):
    full = x.full.tolist()
    out = {}
    for i in range(x.depth, len(full)):
        for d in range(D + 1):
            s = tuple(full[i - 1 - k] for k in range(d))
            out.setdefault(s, [0] * x.m)[full[i]] += 1
    return {k: tuple(v) for k, v in out.items()}


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 4), st.lists(st.integers(0, 3), max_size=60), st.data())
def test_counts_match_direct_count(m, D, body, data):
    body = [a % m for a in body]
    ctx = data.draw(st.lists(st.integers(0, m - 1), min_size=D, max_size=D))
    x = TimeSeries(ctx, body, m)
    c = build_counts(x, D)
    expected = _naive_counts(x, D)
    if not body:
        expected = {ROOT: (0,) * m}
    assert c.as_dict() == expected
    # parent counts are the sum over children that occur
    for k in range(len(c)):
        kids = c.children[k][c.children[k] >= 0]
        if kids.size and c.depths[k] < D:
            assert (c.counts[kids].sum(axis=0) == c.counts[k]).all()


@given(st.lists(st.integers(0, 4), max_size=7))
def test_context_code_roundtrip(s):
    assert decode_context(len(s), context_code(s, 5), 5) == tuple(s)


def test_ctw_hand_example(toy):
    wt = run_ctw(build_counts(toy, 1), beta=0.5)
    assert math.exp(wt.log_evidence) == pytest.approx(21 / 256, abs=1e-14)
    tree_root = ContextTree.root(2)
    assert math.exp(log_posterior(tree_root, wt)) == pytest.approx(1 / 7, abs=1e-14)
    assert math.exp(log_posterior(ContextTree.complete(2, 1), wt)) == pytest.approx(6 / 7, abs=1e-14)


def test_zero_data_weighted_tree():
    wt = run_ctw(build_counts(TimeSeries([0, 1, 1], [], 2), 3), beta=0.3)
    assert wt.log_evidence == 0.0
    assert wt.branching_probability(ROOT) == pytest.approx(0.3)
    assert wt.branching_probability((1, 0)) == pytest.approx(0.3)
    for t in enumerate_trees(2, 2):
        assert log_posterior(t, wt) == pytest.approx(log_prior(t, 3, 0.3), abs=1e-12)


def test_log_prior_examples():
    assert log_prior(ContextTree.root(2), 0, 0.5) == 0.0
    assert log_prior(ContextTree.root(2), 3, 0.4) == pytest.approx(math.log(0.4))
    assert log_prior(ContextTree.complete(2, 1), 2, 0.5) == pytest.approx(math.log(1 / 8))
    with pytest.raises(DomainError):
        log_prior(ContextTree.complete(2, 2), 1, 0.5)


def test_log_marginal_likelihood_examples(toy):
    c = build_counts(toy, 1)
    assert log_marginal_likelihood(c, ContextTree.root(2)) == pytest.approx(math.log(3 / 128))
    empty = build_counts(TimeSeries([0], [], 2), 1)
    assert log_marginal_likelihood(empty, ContextTree.complete(2, 1)) == 0.0


@pytest.mark.parametrize("m,D,beta", [(2, 1, 0.5), (2, 2, 0.5), (2, 3, 0.7), (3, 1, None), (3, 2, 0.6)])
def test_prior_normalises(m, D, beta):
    total = logsumexp([log_prior(t, D, beta) for t in enumerate_trees(m, D)])
    assert abs(math.exp(total) - 1) < 1e-12


@pytest.mark.parametrize("D", [1, 2])
@pytest.mark.parametrize("seed", range(10))
def test_exact_posterior_oracles(D, seed):
    rng = np.random.default_rng(seed)
    x = random_series(rng, 2, D, int(rng.integers(0, 51)))
    beta = float(rng.uniform(0.2, 0.9))
    c = build_counts(x, D)
    wt = run_ctw(c, beta)
    trees = enumerate_trees(2, D)
    joint = np.array([log_prior(t, D, beta) + log_marginal_likelihood(c, t) for t in trees])
    post = np.array([log_posterior(t, wt) for t in trees])
    # brute-force prior predictive likelihood
    assert abs(math.exp(logsumexp(joint)) - math.exp(wt.log_evidence)) < 1e-10
    # product form equals Bayes quotient, and normalises
    np.testing.assert_allclose(np.exp(post), np.exp(joint - wt.log_evidence), atol=1e-10)
    assert abs(np.exp(post).sum() - 1) < 1e-10
    # MAP via the max recursion
    tree, lp = map_tree(wt)
    assert lp == pytest.approx(post.max(), abs=1e-12)
    assert lp == pytest.approx(log_posterior(tree, wt), abs=1e-12)


def test_map_prefers_smaller_tree_on_ties():
    wt = run_ctw(build_counts(TimeSeries([0], [], 2), 1), beta=0.5)
    # pi({λ}) = 1/2 = pi({0, 1}): the tie goes to the pruned tree
    assert map_tree(wt)[0] == ContextTree.root(2)


def test_branching_probabilities_in_range(rng):
    x = random_series(rng, 3, 6, 400)
    wt = run_ctw(build_counts(x, 6))
    pb = np.exp(wt.log_pb)
    assert np.all(pb > 0) and np.all(pb <= 1)
    zero = wt.counts.totals == 0
    np.testing.assert_allclose(pb[zero & (wt.counts.depths < 6)], wt.beta)


def test_long_series_stays_finite(rng):
    x = TimeSeries(rng.integers(0, 2, 10), rng.integers(0, 2, 10**6), 2)
    wt = run_ctw(build_counts(x, 10))
    assert np.isfinite(wt.log_evidence)
    assert wt.log_evidence / x.n == pytest.approx(-math.log(2), abs=1e-3)
