"""Scikit-learn style wrappers around the functional API.

``fit`` takes a single symbol sequence (or a :class:`TimeSeries`).  Hyper
parameters live in ``__init__`` so ``get_params``/``set_params``/``clone``
work as usual; fitted state carries a trailing underscore.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_beta, check_depth, check_symbols
from .ctw import build_counts, map_tree, run_ctw
from .entropy import entropy_samples
from .exceptions import DataError
from .inference import PosteriorSummary, predictive
from .sampling import BLOCK_SIZE, joint_blocks, sample_joint, sample_tree_batch
from .trees import TimeSeries


def as_series(X, depth, alphabet_size=None, initial_context=None):
    """Coerce ``X`` into a :class:`TimeSeries` with a context of ``depth`` symbols."""
    if isinstance(X, TimeSeries):
        if X.depth < depth:
            raise DataError(f"series carries {X.depth} context symbols, depth {depth} needs more")
        if alphabet_size is not None and alphabet_size != X.m:
            X = TimeSeries(X.initial_context, X.body, alphabet_size)
        return TimeSeries(X.initial_context[X.depth - depth:], X.body, X.m)
    x = check_symbols(X, alphabet_size)
    if x.size == 0:
        raise DataError("no data")
    return TimeSeries.from_sequence(x, depth, alphabet_size, initial_context)


class BayesianContextTree(BaseEstimator):
    """Posterior over variable-memory chain models for one discrete series.

    Parameters
    ----------
    depth : maximum model depth ``D``.
    beta : prior hyperparameter; ``None`` picks ``1 - 2**(1 - m)``.
    alphabet_size : ``m``; inferred from the data when ``None``.
    initial_context : the ``D`` symbols before the series (chronological);
        when ``None`` the head of the series is reused.
    random_state : seed for the sampling methods.
    """

    def __init__(self, depth=10, beta=None, alphabet_size=None, initial_context=None,
                 random_state=None):
        self.depth = depth
        self.beta = beta
        self.alphabet_size = alphabet_size
        self.initial_context = initial_context
        self.random_state = random_state

    def fit(self, X, y=None):
        depth = check_depth(self.depth)
        series = as_series(X, depth, self.alphabet_size, self.initial_context)
        self.series_ = series
        self.alphabet_size_ = series.m
        self.beta_ = check_beta(self.beta, series.m)
        self.counts_ = build_counts(series, depth)
        self.weighted_tree_ = run_ctw(self.counts_, self.beta_)
        self.map_tree_, self.map_log_posterior_ = map_tree(self.weighted_tree_)
        self.log_evidence_ = self.weighted_tree_.log_evidence
        return self

    @property
    def map_posterior_(self):
        return float(np.exp(self.map_log_posterior_))

    def _pasts(self, pasts):
        check_is_fitted(self, "weighted_tree_")
        if pasts is None:
            return np.asarray([self.series_.recent_past(self.depth)], dtype=np.int64)
        arr = np.asarray(pasts)
        if arr.ndim == 1:
            arr = arr[None, :]
        return arr

    def predict_proba(self, pasts=None):
        """Posterior predictive rows, one per recent past (``D`` symbols, most recent first).

        With no argument, the distribution of the symbol following the fitted series.
        """
        rows = [predictive(self.weighted_tree_, p).probabilities for p in self._pasts(pasts)]
        return np.vstack(rows) if rows else np.zeros((0, self.alphabet_size_))

    def predict(self, pasts=None):
        return np.argmax(self.predict_proba(pasts), axis=1)

    def sample_trees(self, n_samples, n_jobs=1):
        """:class:`~bctree.sampling.TreeBatch` of i.i.d. posterior trees."""
        check_is_fitted(self, "weighted_tree_")
        return sample_tree_batch(self.weighted_tree_, n_samples, self.random_state, n_jobs=n_jobs)

    def sample_joint(self, n_samples):
        """Iterator over i.i.d. ``(tree, params)`` posterior draws."""
        check_is_fitted(self, "weighted_tree_")
        return sample_joint(self.weighted_tree_, self.counts_, n_samples, self.random_state)


class EntropyRateEstimator(BaseEstimator):
    """Posterior of the entropy rate, in nats per symbol.

    After ``fit``, ``summary_`` holds the full :class:`PosteriorSummary`;
    ``estimate_`` is its mean and ``samples_`` the raw draws.
    """

    def __init__(self, depth=10, beta=None, alphabet_size=None, initial_context=None,
                 n_samples=100_000, bins=100, level=0.95, random_state=None, n_jobs=1,
                 block_size=BLOCK_SIZE):
        self.depth = depth
        self.beta = beta
        self.alphabet_size = alphabet_size
        self.initial_context = initial_context
        self.n_samples = n_samples
        self.bins = bins
        self.level = level
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.block_size = block_size

    def fit(self, X, y=None):
        depth = check_depth(self.depth)
        series = as_series(X, depth, self.alphabet_size, self.initial_context)
        counts = build_counts(series, depth)
        wt = run_ctw(counts, check_beta(self.beta, series.m))
        blocks = joint_blocks(wt, counts, self.n_samples, self.random_state,
                              n_jobs=self.n_jobs, block_size=self.block_size)
        self.samples_ = entropy_samples(blocks)
        self.summary_ = PosteriorSummary.from_samples(self.samples_, bins=self.bins, level=self.level)
        self.estimate_ = self.summary_.mean
        return self
