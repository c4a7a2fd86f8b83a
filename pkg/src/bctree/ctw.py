"""Count tables and the context-tree weighting recursion, in log domain.

Contexts that never occur in the data are not stored.  Their count vectors
are zero, so their estimated and weighted probabilities are 1 and their
branching probability equals ``beta``.
"""

from collections import deque

import numpy as np
from scipy.special import gammaln

from ._validation import check_beta, check_depth
from .exceptions import CapacityError, DomainError
from .trees import ROOT, ContextTree, TimeSeries

_CODE_LIMIT = 2**62


def context_code(s, m):
    """Integer code of a context: ``sum(s[k] * m**k)``."""
    code = 0
    scale = 1
    for a in s:
        code += int(a) * scale
        scale *= m
    return code


def decode_context(depth, code, m):
    s = []
    for _ in range(depth):
        code, a = divmod(code, m)
        s.append(int(a))
    return tuple(s)


def log_pe(a):
    """Log of the KT (Dirichlet(1/2)) marginal probability of a count vector.

    Accepts a single count vector or a 2-D array of them (one per row).
    """
    a = np.asarray(a, dtype=float)
    m = a.shape[-1]
    total = a.sum(axis=-1)
    out = (
        gammaln(a + 0.5).sum(axis=-1)
        - m * gammaln(0.5)
        - gammaln(total + m / 2.0)
        + gammaln(m / 2.0)
    )
    return np.where(total == 0, 0.0, out) if out.ndim else (0.0 if total == 0 else float(out))


class CountTable:
    """Symbol counts following every context of length at most ``D``.

    Nodes are stored level by level (root first) in flat arrays: ``depths``,
    ``codes`` (see :func:`context_code`) and ``counts`` with one row per node.
    ``children[k, j]`` is the row of child ``j`` of node ``k`` or -1 if that
    child never occurs.
    """

    def __init__(self, m, depth, depths, codes, counts):
        self.m = m
        self.depth = depth
        self.depths = depths
        self.codes = codes
        self.counts = counts
        self.totals = counts.sum(axis=1)
        starts = np.searchsorted(depths, np.arange(depth + 2))
        self.level_slices = [slice(int(starts[d]), int(starts[d + 1])) for d in range(depth + 1)]
        self.children = np.full((len(codes), m), -1, dtype=np.int64)
        self.parents = np.full(len(codes), -1, dtype=np.int64)
        for d in range(depth):
            here = self.level_slices[d]
            below = self.level_slices[d + 1]
            child_codes = codes[below]
            if child_codes.size == 0:
                continue
            parent_codes = child_codes % (m**d)
            pos = np.searchsorted(codes[here], parent_codes) + here.start
            sym = child_codes // (m**d)
            self.children[pos, sym] = np.arange(below.start, below.stop)
            self.parents[below] = pos
        for arr in (self.depths, self.codes, self.counts, self.totals, self.children, self.parents):
            arr.setflags(write=False)
        self._index = None

    @property
    def n(self):
        """Number of counted symbols (the root total)."""
        return int(self.totals[0])

    def __len__(self):
        return len(self.codes)

    def index(self, s):
        """Row of context ``s``, or -1 if it does not occur."""
        if self._index is None:
            self._index = {
                (int(d), int(c)): k for k, (d, c) in enumerate(zip(self.depths, self.codes))
            }
        s = tuple(s)
        if len(s) > self.depth:
            raise DomainError(f"context of length {len(s)} exceeds table depth {self.depth}")
        return self._index.get((len(s), context_code(s, self.m)), -1)

    def __contains__(self, s):
        return self.index(s) >= 0

    def rows(self, depths, codes):
        """Vectorised :meth:`index` over arrays of context depths and codes."""
        depths = np.asarray(depths, dtype=np.int64)
        codes = np.asarray(codes, dtype=np.int64)
        out = np.full(depths.shape, -1, dtype=np.int64)
        for d in range(min(int(depths.max(initial=0)), self.depth) + 1):
            mask = depths == d
            if not mask.any():
                continue
            sl = self.level_slices[d]
            level = self.codes[sl]
            if level.size == 0:
                continue
            pos = np.minimum(np.searchsorted(level, codes[mask]), level.size - 1)
            found = level[pos] == codes[mask]
            out[np.flatnonzero(mask)[found]] = pos[found] + sl.start
        return out

    def count(self, s):
        """Count vector ``a_s``; zeros for contexts absent from the data."""
        k = self.index(s)
        if k < 0:
            return np.zeros(self.m, dtype=np.int64)
        return self.counts[k].copy()

    def context(self, k):
        return decode_context(int(self.depths[k]), int(self.codes[k]), self.m)

    def contexts(self):
        for k in range(len(self)):
            yield self.context(k)

    def as_dict(self):
        return {self.context(k): tuple(int(v) for v in self.counts[k]) for k in range(len(self))}


def _check_code_range(m, depth):
    if m ** (depth + 1) >= _CODE_LIMIT:
        raise CapacityError(f"alphabet size {m} with depth {depth} overflows 64-bit context codes")


def build_counts(x, depth=None):
    """Count, for each context of length ``0..D``, how often each symbol follows it.

    Only the body of ``x`` is counted; the initial context supplies the
    conditioning symbols of the first ``D`` positions.
    """
    if not isinstance(x, TimeSeries):
        raise DomainError("build_counts expects a TimeSeries")
    depth = x.depth if depth is None else check_depth(depth)
    if x.depth < depth:
        raise DomainError(f"initial context has {x.depth} symbols, depth {depth} needs {depth}")
    m = x.m
    _check_code_range(m, depth)
    full = x.full
    start = x.depth
    n = x.n
    body = full[start:]

    all_depths, all_codes, all_counts = [], [], []
    code = np.zeros(n, dtype=np.int64)
    for d in range(depth + 1):
        if d > 0:
            code = code + full[start - d:start - d + n] * (m ** (d - 1))
        if n == 0:
            if d == 0:
                all_depths.append(np.zeros(1, dtype=np.int64))
                all_codes.append(np.zeros(1, dtype=np.int64))
                all_counts.append(np.zeros((1, m), dtype=np.int64))
            continue
        uniq, cnt = np.unique(code * m + body, return_counts=True)
        ctx, sym = np.divmod(uniq, m)
        nodes, inv = np.unique(ctx, return_inverse=True)
        table = np.zeros((nodes.size, m), dtype=np.int64)
        np.add.at(table, (inv, sym), cnt)
        all_depths.append(np.full(nodes.size, d, dtype=np.int64))
        all_codes.append(nodes)
        all_counts.append(table)
    return CountTable(
        m,
        depth,
        np.concatenate(all_depths),
        np.concatenate(all_codes),
        np.concatenate(all_counts),
    )


class WeightedTree:
    """Per-context log estimated, weighted and branching probabilities.

    ``log_pb`` is the log-probability that a node is a leaf of a posterior
    tree; depth-``D`` nodes always are, so their ``log_pb`` is 0.
    ``log_1mpb`` holds ``log(1 - P_b)`` computed without cancellation.
    """

    def __init__(self, counts, beta, log_pe_, log_pw, log_pb, log_1mpb):
        self.counts = counts
        self.beta = beta
        self.log_pe = log_pe_
        self.log_pw = log_pw
        self.log_pb = log_pb
        self.log_1mpb = log_1mpb
        for arr in (log_pe_, log_pw, log_pb, log_1mpb):
            arr.setflags(write=False)

    @property
    def m(self):
        return self.counts.m

    @property
    def depth(self):
        return self.counts.depth

    @property
    def log_evidence(self):
        """Log prior predictive likelihood of the data (root weighted probability)."""
        return float(self.log_pw[0])

    def branching_log_probs(self, s):
        """``(log P_b, log(1 - P_b))`` at context ``s`` with off-support conventions."""
        s = tuple(s)
        if len(s) >= self.depth:
            return 0.0, -np.inf
        k = self.counts.index(s)
        if k < 0:
            return np.log(self.beta), np.log1p(-self.beta)
        return float(self.log_pb[k]), float(self.log_1mpb[k])

    def branching_probability(self, s):
        return float(np.exp(self.branching_log_probs(s)[0]))


def run_ctw(counts, beta=None):
    """Run the weighting recursion from depth ``D`` up to the root."""
    beta = check_beta(beta, counts.m)
    lb, l1b = np.log(beta), np.log1p(-beta)
    pe = np.asarray(log_pe(counts.counts), dtype=float)
    pw = np.empty_like(pe)
    pb = np.empty_like(pe)
    p1b = np.empty_like(pe)
    D = counts.depth
    for d in range(D, -1, -1):
        sl = counts.level_slices[d]
        if d == D:
            pw[sl] = pe[sl]
            pb[sl] = 0.0
            p1b[sl] = -np.inf
            continue
        child = counts.children[sl]
        child_sum = np.where(child >= 0, pw[np.maximum(child, 0)], 0.0).sum(axis=1)
        stop = lb + pe[sl]
        split = l1b + child_sum
        pw[sl] = np.logaddexp(stop, split)
        pb[sl] = np.minimum(stop - pw[sl], 0.0)
        p1b[sl] = np.minimum(split - pw[sl], 0.0)
    return WeightedTree(counts, beta, pe, pw, pb, p1b)


def _check_tree_depth(tree, depth):
    if tree.depth > depth:
        raise DomainError(f"tree of depth {tree.depth} exceeds maximum depth {depth}")


def log_prior(tree, depth, beta=None):
    """Log prior probability of ``tree`` among proper trees of depth at most ``depth``."""
    depth = check_depth(depth)
    _check_tree_depth(tree, depth)
    m = tree.m
    beta = check_beta(beta, m)
    log_alpha = np.log1p(-beta) / (m - 1)
    size = tree.n_leaves
    return (size - 1) * log_alpha + (size - tree.leaves_at_depth(depth)) * np.log(beta)


def log_marginal_likelihood(counts, tree):
    """Log marginal likelihood of the data under ``tree``, parameters integrated out."""
    _check_tree_depth(tree, counts.depth)
    total = 0.0
    for s in tree.leaves:
        k = counts.index(s)
        if k >= 0:
            total += float(log_pe(counts.counts[k]))
    return total


def log_posterior(tree, wt):
    """Log posterior probability of ``tree`` from the branching probabilities."""
    _check_tree_depth(tree, wt.depth)
    total = 0.0
    for s in tree.internal_nodes:
        total += wt.branching_log_probs(s)[1]
    for s in tree.leaves:
        if len(s) < wt.depth:
            total += wt.branching_log_probs(s)[0]
    return float(total)


def map_tree(wt):
    """Maximum a posteriori tree and its log posterior probability.

    Uses the maximising version of the weighting recursion.  Ties are broken
    toward pruning.
    """
    counts = wt.counts
    m, D = counts.m, counts.depth
    lb, l1b = np.log(wt.beta), np.log1p(-wt.beta)

    # off-support subtrees: all counts zero, so P_e = 1 at every node
    off_pm = np.zeros(D + 1)
    off_split = np.zeros(D + 1, dtype=bool)
    for d in range(D - 1, -1, -1):
        split = l1b + m * off_pm[d + 1]
        off_split[d] = split > lb
        off_pm[d] = max(lb, split)

    pm = np.empty(len(counts))
    prune = np.ones(len(counts), dtype=bool)
    for d in range(D, -1, -1):
        sl = counts.level_slices[d]
        if d == D:
            pm[sl] = wt.log_pe[sl]
            continue
        child = counts.children[sl]
        child_sum = np.where(child >= 0, pm[np.maximum(child, 0)], off_pm[d + 1]).sum(axis=1)
        stop = lb + wt.log_pe[sl]
        split = l1b + child_sum
        prune[sl] = stop >= split
        pm[sl] = np.maximum(stop, split)

    leaves = []
    queue = deque([(ROOT, 0)])
    while queue:
        s, k = queue.popleft()
        d = len(s)
        if d == D:
            leaves.append(s)
            continue
        expand = (not prune[k]) if k >= 0 else off_split[d]
        if not expand:
            leaves.append(s)
            continue
        for j in range(m):
            child = int(counts.children[k, j]) if k >= 0 else -1
            queue.append((s + (j,), child))
    tree = ContextTree(frozenset(leaves), m, _validate=False)
    return tree, log_posterior(tree, wt)
