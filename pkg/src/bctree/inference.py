"""Posterior predictive distribution and Monte Carlo summaries of functionals."""

import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_beta, check_depth, check_symbols
from .exceptions import DomainError, EstimationError
from .sampling import TreeBatch
from .trees import matching_leaf


@dataclass(frozen=True)
class PredictiveDistribution:
    """Next-symbol probabilities and the leaf weights ``gamma_0..gamma_D``.

    ``gamma[i]`` is the posterior probability that the length-``i`` context
    preceding the next symbol is a leaf of the model.
    """

    probabilities: np.ndarray
    gamma: np.ndarray

    def __getitem__(self, a):
        return float(self.probabilities[a])


def _check_past(recent_past, depth, m):
    past = check_symbols(recent_past, m, "recent past")
    if past.size != depth:
        raise DomainError(f"prediction needs exactly {depth} past symbols, got {past.size}")
    return past


def _mixture(gamma_log_terms, counts_rows, m):
    gamma = np.exp(gamma_log_terms)
    rows = np.asarray(counts_rows, dtype=float)
    probs = (gamma[:, None] * (rows + 0.5) / (rows.sum(axis=1, keepdims=True) + m / 2.0)).sum(axis=0)
    return PredictiveDistribution(probs, gamma)


def predictive(wt, recent_past, counts=None):
    """Posterior predictive distribution of the next symbol.

    ``recent_past`` holds the ``D`` symbols preceding the next one, most
    recent first.  Contexts absent from the data use zero counts and
    branching probability ``beta``.
    """
    counts = wt.counts if counts is None else counts
    m, D = wt.m, wt.depth
    past = _check_past(recent_past, D, m)
    lb, l1b = np.log(wt.beta), np.log1p(-wt.beta)
    log_gamma = np.empty(D + 1)
    rows = np.zeros((D + 1, m))
    survive = 0.0
    k = 0
    for i in range(D + 1):
        if k >= 0:
            rows[i] = counts.counts[k]
            leaf, stay = (wt.log_pb[k], wt.log_1mpb[k]) if i < D else (0.0, -np.inf)
        else:
            leaf, stay = (lb, l1b) if i < D else (0.0, -np.inf)
        log_gamma[i] = survive + leaf
        survive += stay
        if i < D and k >= 0:
            k = int(counts.children[k, past[i]])
    return _mixture(log_gamma, rows, m)


class _Node:
    __slots__ = ("counts", "log_pe", "log_pw", "children")

    def __init__(self, m):
        self.counts = np.zeros(m, dtype=np.int64)
        self.log_pe = 0.0
        self.log_pw = 0.0
        self.children = {}


class SequentialPredictor:
    """Posterior predictive updated one symbol at a time.

    Keeps its own context tree of counts and log probabilities, touching only
    the ``D + 1`` contexts of each new symbol.  After feeding ``x_1..x_n`` the
    accumulated log-loss equals minus the log prior predictive likelihood.
    """

    def __init__(self, m, depth, initial_context, beta=None):
        self.m = m
        self.depth = check_depth(depth)
        self.beta = check_beta(beta, m)
        ctx = check_symbols(initial_context, m, "initial context")
        if ctx.size < depth:
            raise DomainError(f"initial context has {ctx.size} symbols, need {depth}")
        self._past = [int(a) for a in ctx[ctx.size - depth:][::-1]] if depth else []
        self._lb = math.log(self.beta)
        self._l1b = math.log1p(-self.beta)
        self.root = _Node(m)
        self.n = 0
        self.log_loss = 0.0

    @property
    def log_evidence(self):
        return self.root.log_pw

    @property
    def recent_past(self):
        return tuple(self._past)

    def _path(self, create):
        nodes = [self.root]
        node = self.root
        for i in range(self.depth):
            child = node.children.get(self._past[i])
            if child is None:
                if not create:
                    break
                child = _Node(self.m)
                node.children[self._past[i]] = child
            nodes.append(child)
            node = child
        return nodes

    def predict(self):
        nodes = self._path(create=False)
        D = self.depth
        log_gamma = np.empty(D + 1)
        rows = np.zeros((D + 1, self.m))
        survive = 0.0
        for i in range(D + 1):
            if i < len(nodes):
                node = nodes[i]
                rows[i] = node.counts
                if i < D:
                    leaf = self._lb + node.log_pe - node.log_pw
                    stay = min(self._l1b + self._child_sum(node) - node.log_pw, 0.0)
                else:
                    leaf, stay = 0.0, -math.inf
            else:
                leaf, stay = (self._lb, self._l1b) if i < D else (0.0, -math.inf)
            log_gamma[i] = survive + min(leaf, 0.0)
            survive += stay
        return _mixture(log_gamma, rows, self.m)

    @staticmethod
    def _child_sum(node):
        return math.fsum(c.log_pw for c in node.children.values())

    def update(self, a):
        """Add symbol ``a``; returns its predictive probability before the update."""
        a = int(a)
        if not 0 <= a < self.m:
            raise DomainError(f"symbol {a} outside alphabet of size {self.m}")
        p = self.predict()[a]
        nodes = self._path(create=True)
        for node in nodes:
            node.log_pe += math.log((node.counts[a] + 0.5) / (node.counts.sum() + self.m / 2.0))
            node.counts[a] += 1
        for d in range(self.depth, -1, -1):
            node = nodes[d]
            if d == self.depth:
                node.log_pw = node.log_pe
            else:
                node.log_pw = float(
                    np.logaddexp(self._lb + node.log_pe, self._l1b + self._child_sum(node))
                )
        if self.depth:
            self._past = [a] + self._past[:-1]
        self.n += 1
        self.log_loss -= math.log(p)
        return p

    def extend(self, symbols):
        return [self.update(a) for a in symbols]


@dataclass(frozen=True)
class Component:
    weight: float
    mean: float
    sd: float


def _block_moments(x, block=4096):
    """Mean and population variance by merging per-block moments.

    Moments are taken about ``x[0]`` so a constant sample is reproduced exactly.
    """
    shift = x[0]
    x = x - shift
    count, mean, m2 = 0, 0.0, 0.0
    for start in range(0, x.size, block):
        chunk = x[start:start + block]
        n_b = chunk.size
        mean_b = chunk.sum() / n_b
        m2_b = ((chunk - mean_b) ** 2).sum()
        delta = mean_b - mean
        total = count + n_b
        mean += delta * n_b / total
        m2 += m2_b + delta**2 * count * n_b / total
        count = total
    return shift + mean, m2 / count


def _split_modes(x, edges, hist, valley_ratio, min_weight, smooth):
    if hist.size < 3:
        return None
    kernel = np.ones(smooth) / smooth
    sm = np.convolve(hist, kernel, mode="same")
    left_max = np.maximum.accumulate(sm)
    right_max = np.maximum.accumulate(sm[::-1])[::-1]
    best, best_ratio = None, np.inf
    for v in range(1, hist.size - 1):
        shoulder = min(left_max[v - 1], right_max[v + 1])
        if shoulder <= 0 or sm[v] >= shoulder:
            continue
        ratio = sm[v] / shoulder
        if ratio < best_ratio:
            best, best_ratio = v, ratio
    if best is None or best_ratio >= valley_ratio:
        return None
    cut = 0.5 * (edges[best] + edges[best + 1])
    parts = [x[x < cut], x[x >= cut]]
    if min(p.size for p in parts) < min_weight * x.size:
        return None
    comps = [Component(p.size / x.size, float(p.mean()), float(p.std())) for p in parts]
    return sorted(comps, key=lambda c: -c.weight)


@dataclass
class PosteriorSummary:
    """Monte Carlo summary of a scalar functional's posterior."""

    samples: np.ndarray
    mean: float
    sd: float
    mode: float
    quantiles: dict
    level: float
    credible_interval: tuple
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    components: list = field(default=None)

    @property
    def n_samples(self):
        return int(self.samples.size)

    @property
    def bimodal(self):
        return self.components is not None

    @classmethod
    def from_samples(cls, samples, bins=100, level=0.95, quantiles=(0.05, 0.25, 0.5, 0.75, 0.95),
                     valley_ratio=0.5, min_weight=0.02, smooth=5):
        x = np.asarray(samples, dtype=float).ravel()
        if x.size == 0:
            raise DomainError("cannot summarise an empty sample")
        bad = np.flatnonzero(~np.isfinite(x))
        if bad.size:
            raise EstimationError(int(bad[0]), float(x[bad[0]]))
        if not 0 < level < 1:
            raise DomainError(f"credible level must lie in (0, 1), got {level}")
        mean, var = _block_moments(x)
        lo, hi = float(x.min()), float(x.max())
        rng = (lo - 0.5, hi + 0.5) if lo == hi else (lo, hi)
        counts, edges = np.histogram(x, bins=bins, range=rng)
        peak = int(np.argmax(counts))
        tail = (1.0 - level) / 2.0
        ci = tuple(float(v) for v in np.quantile(x, [tail, 1.0 - tail], method="inverted_cdf"))
        qs = {float(q): float(np.quantile(x, q, method="inverted_cdf")) for q in quantiles}
        comps = _split_modes(x, edges, counts, valley_ratio, min_weight, smooth)
        return cls(
            samples=x,
            mean=float(mean),
            sd=float(math.sqrt(max(var, 0.0))),
            mode=float(0.5 * (edges[peak] + edges[peak + 1])),
            quantiles=qs,
            level=level,
            credible_interval=ci,
            bin_edges=edges,
            bin_counts=counts,
            components=comps,
        )

    def histogram_rows(self):
        """``(bin_left, bin_right, count)`` triples."""
        return [
            (float(self.bin_edges[i]), float(self.bin_edges[i + 1]), int(c))
            for i, c in enumerate(self.bin_counts)
        ]


def estimate_functional(samples, F, **summary_kw):
    """Summarise ``F(tree, params)`` over a stream of joint posterior samples."""
    values = []
    for i, (tree, params) in enumerate(samples):
        v = float(F(tree, params))
        if not math.isfinite(v):
            raise EstimationError(i, v)
        values.append(v)
    if not values:
        raise DomainError("estimate_functional needs at least one sample")
    return PosteriorSummary.from_samples(values, **summary_kw)


def _as_batch(trees):
    if isinstance(trees, TreeBatch):
        return trees
    trees = list(trees)
    lookup, distinct, index = {}, [], []
    for t in trees:
        k = lookup.setdefault(t, len(distinct))
        if k == len(distinct):
            distinct.append(t)
        index.append(k)
    return TreeBatch(distinct, np.asarray(index, dtype=np.int64))


def rao_blackwell_params(trees, counts, context):
    """Rao-Blackwellised posterior mean of the next-symbol distribution at ``context``.

    ``context`` is a past (most recent first) of at most ``D`` symbols; each
    sampled tree contributes the Dirichlet posterior mean at its leaf that
    governs the context.
    """
    context = tuple(int(a) for a in context)
    if len(context) > counts.depth:
        raise DomainError(f"context of length {len(context)} exceeds maximum depth {counts.depth}")
    batch = _as_batch(trees)
    if len(batch) == 0:
        raise DomainError("need at least one sampled tree")
    m = counts.m
    weights = np.bincount(batch.index, minlength=len(batch.trees)) / len(batch)
    est = np.zeros(m)
    for tree, w in zip(batch.trees, weights):
        if w == 0:
            continue
        a = counts.count(matching_leaf(tree, context)).astype(float)
        est += w * (a + 0.5) / (a.sum() + m / 2.0)
    return est


def order_posterior(trees, max_depth=None):
    """Empirical distribution of the depth (Markov order) of sampled trees."""
    batch = _as_batch(trees)
    if len(batch) == 0:
        raise DomainError("need at least one sampled tree")
    depths = batch.depths()
    size = int(depths.max()) + 1 if max_depth is None else check_depth(max_depth) + 1
    return np.bincount(depths, minlength=size)[:size] / depths.size


def summarize(values, **kw):
    """Shorthand for :meth:`PosteriorSummary.from_samples`."""
    if not isinstance(values, Iterable):
        raise DomainError("values must be iterable")
    return PosteriorSummary.from_samples(values, **kw)
