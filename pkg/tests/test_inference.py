import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bctree import (
    ContextTree,
    PosteriorSummary,
    SequentialPredictor,
    TimeSeries,
    build_counts,
    enumerate_trees,
    estimate_functional,
    joint_blocks,
    log_posterior,
    matching_leaf,
    order_posterior,
    predictive,
    rao_blackwell_params,
    run_ctw,
    sample_joint,
    sample_tree_batch,
)
from bctree.exceptions import DomainError, EstimationError

from conftest import random_series


def test_zero_data_predictive_is_uniform():
    wt = run_ctw(build_counts(TimeSeries([0, 1, 2], [], 3), 3))
    np.testing.assert_allclose(predictive(wt, (2, 1, 0)).probabilities, 1 / 3, atol=1e-15)


def test_hand_example(toy):
    wt = run_ctw(build_counts(toy, 1), beta=0.5)
    dist = predictive(wt, (1,))
    assert dist[0] == pytest.approx(11 / 14, abs=1e-14)
    np.testing.assert_allclose(dist.gamma, [1 / 7, 6 / 7], atol=1e-14)


def test_wrong_past_length(toy):
    wt = run_ctw(build_counts(toy, 1))
    with pytest.raises(DomainError):
        predictive(wt, (1, 0))


@pytest.mark.parametrize("seed", range(8))
def test_predictive_matches_tree_mixture(seed):
    rng = np.random.default_rng(seed)
    D = 1 + seed % 2
    x = random_series(rng, 2, D, int(rng.integers(0, 51)))
    c = build_counts(x, D)
    wt = run_ctw(c, float(rng.uniform(0.2, 0.9)))
    for past in [tuple(rng.integers(0, 2, D)) for _ in range(4)]:
        oracle = np.zeros(2)
        for t in enumerate_trees(2, D):
            a = c.count(matching_leaf(t, past))
            oracle += math.exp(log_posterior(t, wt)) * (a + 0.5) / (a.sum() + 1.0)
        dist = predictive(wt, past)
        np.testing.assert_allclose(dist.probabilities, oracle, atol=1e-10)
        assert abs(dist.gamma.sum() - 1) < 1e-12
        assert abs(dist.probabilities.sum() - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 6), st.integers(0, 10**6))
def test_gamma_weights_sum_to_one(m, D, seed):
    rng = np.random.default_rng(seed)
    x = random_series(rng, m, D, int(rng.integers(0, 200)))
    wt = run_ctw(build_counts(x, D))
    dist = predictive(wt, tuple(rng.integers(0, m, D)))
    assert np.all(dist.gamma >= 0)
    assert abs(dist.gamma.sum() - 1) < 1e-12
    assert abs(dist.probabilities.sum() - 1) < 1e-12


@pytest.mark.parametrize("m,D,n", [(2, 3, 300), (3, 5, 400), (4, 2, 200)])
def test_chain_rule_identity(rng, m, D, n):
    x = random_series(rng, m, D, n)
    sp = SequentialPredictor(m, D, x.initial_context)
    probs = sp.extend(x.body)
    wt = run_ctw(build_counts(x, D))
    assert abs(sp.log_loss + wt.log_evidence) < 1e-8
    assert abs(sp.log_evidence - wt.log_evidence) < 1e-8
    assert abs(-np.log(probs).sum() + wt.log_evidence) < 1e-8
    # the incremental predictor agrees with the batch predictive after the last symbol
    np.testing.assert_allclose(sp.predict().probabilities,
                               predictive(wt, x.recent_past(D)).probabilities, atol=1e-10)


def test_chain_rule_with_batch_predictive(rng):
    x = random_series(rng, 2, 2, 40)
    total = 0.0
    for i in range(x.n):
        prefix = TimeSeries(x.initial_context, x.body[:i], 2)
        wt = run_ctw(build_counts(prefix, 2))
        total += math.log(predictive(wt, prefix.recent_past(2))[int(x.body[i])])
    assert abs(total - run_ctw(build_counts(x, 2)).log_evidence) < 1e-8


def test_summary_constant():
    s = PosteriorSummary.from_samples(np.full(50, 0.7))
    assert s.mean == 0.7 and s.sd == 0 and s.credible_interval == (0.7, 0.7)
    assert s.mode == pytest.approx(0.7, abs=0.01)


def test_summary_two_pass_moments(rng):
    x = rng.normal(3.0, 0.1, 20_001)
    s = PosteriorSummary.from_samples(x)
    mean = math.fsum(x) / x.size
    sd = math.sqrt(math.fsum((x - mean) ** 2) / x.size)
    assert abs(s.mean - mean) < 1e-12 and abs(s.sd - sd) < 1e-12
    lo, hi = s.credible_interval
    assert lo in x and hi in x
    assert s.bin_counts.sum() == x.size and len(s.bin_counts) == 100
    assert not s.bimodal


def test_summary_detects_two_modes(rng):
    x = np.concatenate([rng.normal(1.406, 0.031, 9100), rng.normal(1.632, 0.020, 900)])
    s = PosteriorSummary.from_samples(x)
    assert s.bimodal
    main, minor = s.components
    assert main.weight == pytest.approx(0.91, abs=0.01)
    assert main.mean == pytest.approx(1.406, abs=0.005)
    assert minor.mean == pytest.approx(1.632, abs=0.005)


def test_estimate_functional(rng):
    x = random_series(rng, 2, 3, 100)
    c = build_counts(x, 3)
    wt = run_ctw(c)
    s = estimate_functional(sample_joint(wt, c, 200, seed=1), lambda t, p: 2.5)
    assert s.mean == 2.5 and s.sd == 0

    def bad(t, p, calls=[0]):
        calls[0] += 1
        return math.nan if calls[0] == 5 else 1.0

    with pytest.raises(EstimationError) as err:
        estimate_functional(sample_joint(wt, c, 20, seed=1), bad)
    assert err.value.index == 4


def test_prior_leaf_count_moment():
    # under the prior with m=2, beta=1/2 the expected number of depth-1 nodes is rho = 1
    from bctree.sampling import sample_joint as joint

    s = estimate_functional(joint(None, None, 20_000, seed=2, m=2, depth=8, beta=0.5),
                            lambda t, p: t.nodes_at_depth(1))
    assert abs(s.mean - 1.0) < 3 * math.sqrt(1.0 / 20_000)


def test_rao_blackwell(rng):
    x = random_series(rng, 2, 3, 80)
    c = build_counts(x, 3)
    wt = run_ctw(c)
    est = rao_blackwell_params([ContextTree.root(2)], c, ())
    a = c.count(())
    np.testing.assert_allclose(est, (a + 0.5) / (a.sum() + 1.0))
    empty = build_counts(TimeSeries([0, 0, 0], [], 2), 3)
    np.testing.assert_allclose(rao_blackwell_params([ContextTree.complete(2, 2)], empty, (1, 0)), 0.5)
    with pytest.raises(DomainError):
        rao_blackwell_params([ContextTree.root(2)], c, (0, 0, 0, 0))


def test_rao_blackwell_reduces_variance(rng):
    x = random_series(rng, 2, 3, 60)
    c = build_counts(x, 3)
    wt = run_ctw(c)
    ctx = (1, 0, 1)
    rb, mc = [], []
    for rep in range(50):
        pairs = list(sample_joint(wt, c, 200, seed=rep))
        rb.append(rao_blackwell_params([t for t, _ in pairs], c, ctx)[0])
        mc.append(np.mean([p[matching_leaf(t, ctx)][0] for t, p in pairs]))
    assert np.var(rb) <= np.var(mc)


def test_order_posterior(rng):
    prior = sample_tree_batch(None, 100, seed=0, m=2, depth=0, beta=0.5)
    assert order_posterior(prior).tolist() == [1.0]
    x = TimeSeries(rng.integers(0, 2, 10), rng.integers(0, 2, 10_000), 2)
    post = order_posterior(sample_tree_batch(run_ctw(build_counts(x, 10)), 5000, seed=1), 10)
    assert post.size == 11 and post[0] > 0.9
    batch = joint_blocks(run_ctw(build_counts(x, 10)), None, 10, seed=0)
    assert len(batch[0]) == 10
