"""Classical entropy-rate estimators: plug-in, Lempel-Ziv match length and CTW."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_beta, check_depth, check_symbols
from .ctw import build_counts, run_ctw
from .exceptions import DomainError
from .trees import TimeSeries

ESTIMATORS = ("plugin", "lz", "ctw", "ppm")


@dataclass(frozen=True)
class BaselineReport:
    """One estimate in nats per symbol, with the settings that produced it."""

    name: str
    estimate: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in ESTIMATORS:
            raise DomainError(f"unknown estimator {self.name!r}")
        if not (math.isfinite(self.estimate) and self.estimate >= 0):
            raise DomainError(f"estimate must be finite and non-negative, got {self.estimate}")

    @property
    def label(self):
        if self.name == "plugin":
            return f"plugin(k={self.params['k']})"
        return self.name


def _body(x):
    if isinstance(x, TimeSeries):
        return x.body
    return check_symbols(x)


def plugin_entropy(x, k):
    """``H(p_k) / k`` for the empirical law of the overlapping ``k``-blocks of ``x``."""
    x = _body(x)
    n = x.size
    k = int(k)
    if k < 1:
        raise DomainError(f"block length must be at least 1, got {k}")
    if k > n:
        raise DomainError(f"block length {k} exceeds series length {n}")
    windows = np.lib.stride_tricks.sliding_window_view(x, k)
    _, counts = np.unique(windows, axis=0, return_counts=True)
    p = counts / counts.sum()
    return max(0.0, float(-(p * np.log(p)).sum() / k))


def suffix_array(x):
    """Suffix array of an integer sequence by prefix doubling."""
    x = np.asarray(x, dtype=np.int64)
    n = x.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    _, rank = np.unique(x, return_inverse=True)
    rank = rank.astype(np.int64)
    step = 1
    while True:
        second = np.full(n, -1, dtype=np.int64)
        second[:n - step] = rank[step:]
        sa = np.lexsort((second, rank))
        key_r, key_s = rank[sa], second[sa]
        new = np.empty(n, dtype=np.int64)
        new[sa] = np.concatenate([[0], np.cumsum((key_r[1:] != key_r[:-1]) | (key_s[1:] != key_s[:-1]))])
        rank = new
        if rank.max() == n - 1 or step >= n:
            return sa
        step *= 2


def lcp_array(x, sa):
    """Kasai: ``lcp[r]`` is the common prefix length of suffixes ``sa[r - 1]`` and ``sa[r]``."""
    x = np.asarray(x).tolist()
    n = len(x)
    rank = [0] * n
    for r, i in enumerate(sa.tolist()):
        rank[i] = r
    sa_l = sa.tolist()
    lcp = [0] * n
    h = 0
    for i in range(n):
        r = rank[i]
        if r == 0:
            h = 0
            continue
        j = sa_l[r - 1]
        while i + h < n and j + h < n and x[i + h] == x[j + h]:
            h += 1
        lcp[r] = h
        if h:
            h -= 1
    return np.asarray(lcp, dtype=np.int64)


class _RangeMin:
    """Sparse table for range-minimum queries on a fixed array."""

    def __init__(self, a):
        self.levels = [np.asarray(a)]
        width = 1
        while 2 * width <= len(a):
            prev = self.levels[-1]
            self.levels.append(np.minimum(prev[:-width], prev[width:]))
            width *= 2

    def query(self, lo, hi):
        """Elementwise ``min(a[lo:hi])`` for index arrays with ``hi > lo``."""
        span = hi - lo
        k = np.floor(np.log2(span)).astype(np.int64)
        out = np.empty(lo.shape, dtype=np.int64)
        for level in np.unique(k):
            sel = k == level
            tab = self.levels[level]
            out[sel] = np.minimum(tab[lo[sel]], tab[hi[sel] - (1 << level)])
        return out


def lz_match_lengths(x):
    """``l[i]``: longest prefix of ``x[i:]`` that also starts at some earlier position.

    Matches may run past ``i`` (the usual overlapping convention).  Computed
    with a suffix array, its LCP array and nearest earlier suffixes in rank
    order.
    """
    x = np.asarray(_body(x), dtype=np.int64)
    n = x.size
    out = np.zeros(n, dtype=np.int64)
    if n < 2:
        return out
    sa = suffix_array(x)
    lcp = lcp_array(x, sa)
    sa_l = sa.tolist()
    prev = [-1] * n
    nxt = [-1] * n
    stack = []
    for r in range(n):
        while stack and sa_l[stack[-1]] > sa_l[r]:
            nxt[stack.pop()] = r
        prev[r] = stack[-1] if stack else -1
        stack.append(r)
    prev = np.asarray(prev)
    nxt = np.asarray(nxt)
    rmq = _RangeMin(lcp)
    ranks = np.arange(n)
    best = np.zeros(n, dtype=np.int64)
    has = prev >= 0
    best[has] = rmq.query(prev[has] + 1, ranks[has] + 1)
    has = nxt >= 0
    best[has] = np.maximum(best[has], rmq.query(ranks[has] + 1, nxt[has] + 1))
    out[sa] = best
    out[0] = 0
    return out


def lz_match_lengths_naive(x):
    """Quadratic reference for :func:`lz_match_lengths`."""
    x = list(_body(x))
    n = len(x)
    out = [0] * n
    for i in range(1, n):
        for j in range(i):
            h = 0
            while i + h < n and x[j + h] == x[i + h]:
                h += 1
            out[i] = max(out[i], h)
    return np.asarray(out, dtype=np.int64)


def lz_entropy(x):
    """Increasing-window match-length estimate ``(1/n) sum_{i>=2} log(i) / (1 + l_i)``."""
    x = _body(x)
    n = x.size
    if n < 2:
        raise DomainError(f"LZ estimator needs at least 2 symbols, got {n}")
    lengths = lz_match_lengths(x)
    i = np.arange(2, n + 1)
    return float(np.sum(np.log(i) / (1.0 + lengths[1:])) / n)


def ctw_entropy(x, depth=10, beta=None):
    """``-log P(x) / n`` with ``P`` the prior predictive likelihood of the series.

    A plain sequence reuses its first ``depth`` symbols as the initial context.
    """
    depth = check_depth(depth)
    if not isinstance(x, TimeSeries):
        x = check_symbols(x)
        if x.size <= depth:
            raise DomainError("no data beyond the initial context")
        x = TimeSeries.from_sequence(x, depth)
    if x.n == 0:
        raise DomainError("no data: the series body is empty")
    counts = build_counts(x, depth)
    wt = run_ctw(counts, check_beta(beta, x.m))
    return max(0.0, -wt.log_evidence / x.n)


def baseline_reports(x, ks=(1, 2, 3), depth=10, beta=None):
    """All implemented estimators on ``x``; block lengths beyond ``n`` are skipped."""
    body = _body(x)
    reports = [BaselineReport("ctw", ctw_entropy(x, depth, beta), {"depth": depth})]
    if body.size >= 2:
        reports.append(BaselineReport("lz", lz_entropy(body)))
    for k in ks:
        if k <= body.size:
            reports.append(BaselineReport("plugin", plugin_entropy(body, k), {"k": int(k)}))
    return reports
