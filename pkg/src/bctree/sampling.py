"""Exact i.i.d. sampling of context trees and their parameters.

A tree is grown from the root: each node at depth below ``D`` becomes a
leaf with its branching probability, otherwise all ``m`` children are added.
Under the prior every branching probability is ``beta``; under the posterior
they come from a :class:`~bctree.ctw.WeightedTree`.

Batch sampling splits the ``N`` requested samples into fixed-size blocks.
Block ``b`` draws from its own generator spawned from the master seed, so the
output depends only on ``(seed, N)`` and not on how blocks are scheduled.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_alphabet_size, check_beta, check_depth, check_random_state
from .ctw import decode_context
from .exceptions import DomainError
from .trees import ROOT, ContextTree, ParamSet

BLOCK_SIZE = 4096


class _Branching:
    """Branching probabilities of the prior (``wt is None``) or the posterior."""

    def __init__(self, wt=None, m=None, depth=None, beta=None):
        self.wt = wt
        if wt is None:
            self.m = check_alphabet_size(m)
            self.depth = check_depth(depth)
            self.beta = check_beta(beta, self.m)
            self.pb = None
            self.children = None
        else:
            self.m = wt.m
            self.depth = wt.depth
            self.beta = wt.beta
            self.pb = np.exp(wt.log_pb)
            self.children = wt.counts.children

    def leaf_prob(self, nodes):
        if self.pb is None:
            return np.full(nodes.shape, self.beta)
        return np.where(nodes >= 0, self.pb[np.maximum(nodes, 0)], self.beta)

    def child_nodes(self, nodes):
        """Rows of all children of ``nodes``, shape ``(len(nodes), m)``."""
        if self.children is None:
            return np.full((nodes.size, self.m), -1, dtype=np.int64)
        return np.where(nodes[:, None] >= 0, self.children[np.maximum(nodes, 0)], -1)


def _grow(branching, rng):
    m, D = branching.m, branching.depth
    leaves = []
    queue = deque([(ROOT, 0 if branching.wt is not None else -1)])
    while queue:
        s, k = queue.popleft()
        if len(s) == D or rng.random() < branching.leaf_prob(np.array([k]))[0]:
            leaves.append(s)
            continue
        kids = branching.child_nodes(np.array([k]))[0]
        for j in range(m):
            queue.append((s + (j,), int(kids[j])))
    return ContextTree(frozenset(leaves), m, _validate=False)


def sample_prior_tree(depth, beta=None, rng=None, m=2):
    """Draw a tree from the prior by running the branching process."""
    return _grow(_Branching(m=m, depth=depth, beta=beta), check_random_state(rng))


def sample_posterior_tree(wt, rng=None):
    """Draw a tree from the posterior encoded by the weighted tree ``wt``."""
    return _grow(_Branching(wt), check_random_state(rng))


def _leaf_counts(tree, counts, m):
    """Count matrix with one row per leaf in ``tree.sorted_leaves``."""
    out = np.zeros((tree.n_leaves, m), dtype=float)
    if counts is None:
        return out
    if tree.depth > counts.depth:
        raise DomainError(f"tree of depth {tree.depth} exceeds count table depth {counts.depth}")
    for i, s in enumerate(tree.sorted_leaves):
        k = counts.index(s)
        if k >= 0:
            out[i] = counts.counts[k]
    return out


def _dirichlet(alpha, rng):
    """Rows of Dirichlet draws via normalised gamma variates; ``alpha`` is ``(..., m)``."""
    g = rng.standard_gamma(alpha)
    zero = np.any(g == 0.0, axis=-1)
    if np.any(zero):
        g[zero] = rng.standard_gamma(alpha[zero])
    return g / g.sum(axis=-1, keepdims=True)


def sample_params(tree, counts=None, rng=None):
    """Draw leaf parameters from their Dirichlet full conditional.

    With ``counts=None`` the draw is from the Dirichlet(1/2, ..., 1/2) prior.
    """
    rng = check_random_state(rng)
    m = tree.m
    theta = _dirichlet(_leaf_counts(tree, counts, m) + 0.5, rng)
    return ParamSet(dict(zip(tree.sorted_leaves, theta)), m)


@dataclass
class TreeBatch:
    """Sampled trees stored as distinct trees plus a per-sample index."""

    trees: list
    index: np.ndarray

    def __len__(self):
        return len(self.index)

    def __iter__(self):
        for i in self.index:
            yield self.trees[i]

    def frequencies(self):
        """Empirical frequency of every distinct tree, keyed by tree."""
        freq = np.bincount(self.index, minlength=len(self.trees)) / len(self.index)
        return dict(zip(self.trees, freq))

    def depths(self):
        d = np.array([t.depth for t in self.trees], dtype=np.int64)
        return d[self.index]


def _grow_batch(branching, n, rng):
    """Grow ``n`` trees level by level; returns leaves as (sample, depth, code)."""
    m, D = branching.m, branching.depth
    sid = np.arange(n, dtype=np.int64)
    code = np.zeros(n, dtype=np.int64)
    node = np.full(n, 0 if branching.wt is not None else -1, dtype=np.int64)
    out_sid, out_depth, out_code = [], [], []
    for d in range(D + 1):
        if sid.size == 0:
            break
        if d == D:
            leaf = np.ones(sid.size, dtype=bool)
        else:
            leaf = rng.random(sid.size) < branching.leaf_prob(node)
        out_sid.append(sid[leaf])
        out_depth.append(np.full(int(leaf.sum()), d, dtype=np.int64))
        out_code.append(code[leaf])
        grow = ~leaf
        sid = np.repeat(sid[grow], m)
        code = (code[grow][:, None] + np.arange(m) * m**d).ravel()
        node = branching.child_nodes(node[grow]).ravel()
    return np.concatenate(out_sid), np.concatenate(out_depth), np.concatenate(out_code)


def _leaf_keys(m, depth, code):
    offsets = np.cumsum([0] + [m**d for d in range(int(depth.max()) + 1)])
    return offsets[depth] + code


def _group_trees(n, m, sid, depth, code):
    """Sort leaves by sample and identify distinct trees.

    Returns ``(index, first, offsets, depth, code)`` where ``index[i]`` is the
    distinct-tree id of sample ``i``, ``first[t]`` the first sample drawing
    tree ``t`` and sample ``i`` owns leaf rows ``offsets[i]:offsets[i + 1]``.
    """
    key = _leaf_keys(m, depth, code)
    order = np.lexsort((key, sid))
    sid, depth, code, key = sid[order], depth[order], code[order], key[order]
    offsets = np.searchsorted(sid, np.arange(n + 1))
    seen = {}
    first = []
    index = np.empty(n, dtype=np.int64)
    for i in range(n):
        tag = key[offsets[i]:offsets[i + 1]].tobytes()
        t = seen.setdefault(tag, len(first))
        if t == len(first):
            first.append(i)
        index[i] = t
    return index, np.asarray(first, dtype=np.int64), offsets, depth, code


def _build_tree(m, depth, code):
    leaves = frozenset(decode_context(int(d), int(c), m) for d, c in zip(depth, code))
    return ContextTree(leaves, m, _validate=False)


def _block_sizes(N, block_size):
    full, rest = divmod(N, block_size)
    return [block_size] * full + ([rest] if rest else [])


def _block_rngs(seed, n_blocks):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n_blocks)]


def _check_count(N):
    if int(N) < 1:
        raise DomainError(f"number of samples must be at least 1, got {N}")
    return int(N)


def sample_tree_batch(wt=None, N=1, seed=None, *, m=None, depth=None, beta=None,
                      n_jobs=1, block_size=BLOCK_SIZE):
    """Draw ``N`` i.i.d. trees from the posterior (or the prior when ``wt`` is None)."""
    N = _check_count(N)
    branching = _Branching(wt, m=m, depth=depth, beta=beta)
    sizes = _block_sizes(N, block_size)
    rngs = _block_rngs(seed, len(sizes))

    def one(size, rng):
        index, first, offsets, d, c = _group_trees(size, branching.m,
                                                   *_grow_batch(branching, size, rng))
        trees = [_build_tree(branching.m, d[offsets[i]:offsets[i + 1]], c[offsets[i]:offsets[i + 1]])
                 for i in first]
        return trees, index

    results = Parallel(n_jobs=n_jobs)(delayed(one)(s, r) for s, r in zip(sizes, rngs))
    return _merge_batches(results)


def _merge_batches(parts):
    lookup = {}
    trees = []
    index = []
    for block_trees, block_index in parts:
        remap = np.empty(len(block_trees), dtype=np.int64)
        for j, t in enumerate(block_trees):
            k = lookup.get(t)
            if k is None:
                k = len(trees)
                lookup[t] = k
                trees.append(t)
            remap[j] = k
        index.append(remap[block_index])
    return TreeBatch(trees, np.concatenate(index))


class JointBlock:
    """One block of joint (tree, parameter) samples in flat form.

    Sample ``i`` owns leaf rows ``offsets[i]:offsets[i + 1]`` of the arrays
    ``depth``, ``code`` (see :func:`~bctree.ctw.context_code`) and ``theta``;
    rows are sorted by depth, then code.  ``index[i]`` is the id of the
    sample's tree among the block's distinct trees and ``first[t]`` the first
    sample that drew tree ``t``.
    """

    def __init__(self, m, index, first, offsets, depth, code, theta):
        self.m = m
        self.index = index
        self.first = first
        self.offsets = offsets
        self.depth = depth
        self.code = code
        self.theta = theta
        self._trees = {}

    def __len__(self):
        return len(self.index)

    @property
    def n_trees(self):
        return len(self.first)

    def leaf_rows(self, i):
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def tree(self, t):
        """Distinct tree ``t`` as a :class:`ContextTree`."""
        tree = self._trees.get(t)
        if tree is None:
            rows = self.leaf_rows(self.first[t])
            tree = self._trees[t] = _build_tree(self.m, self.depth[rows], self.code[rows])
        return tree

    def sample(self, i):
        """``(tree, params)`` of sample ``i``."""
        rows = self.leaf_rows(i)
        leaves = [decode_context(int(d), int(c), self.m)
                  for d, c in zip(self.depth[rows], self.code[rows])]
        return self.tree(int(self.index[i])), ParamSet(dict(zip(leaves, self.theta[rows])), self.m)


def _joint_block(branching, counts, size, rng):
    index, first, offsets, depth, code = _group_trees(
        size, branching.m, *_grow_batch(branching, size, rng)
    )
    alpha = np.full((depth.size, branching.m), 0.5)
    if counts is not None:
        rows = counts.rows(depth, code)
        hit = rows >= 0
        alpha[hit] += counts.counts[rows[hit]]
    theta = _dirichlet(alpha, rng)
    return JointBlock(branching.m, index, first, offsets, depth, code, theta)


def joint_blocks(wt=None, counts=None, N=1, seed=None, *, m=None, depth=None, beta=None,
                 n_jobs=1, block_size=BLOCK_SIZE):
    """Joint (tree, parameter) samples as a list of :class:`JointBlock`."""
    N = _check_count(N)
    branching = _Branching(wt, m=m, depth=depth, beta=beta)
    if counts is None and wt is not None:
        counts = wt.counts
    sizes = _block_sizes(N, block_size)
    rngs = _block_rngs(seed, len(sizes))
    return Parallel(n_jobs=n_jobs)(
        delayed(_joint_block)(branching, counts, s, r) for s, r in zip(sizes, rngs)
    )


def sample_joint(wt=None, counts=None, N=1, seed=None, *, m=None, depth=None, beta=None,
                 n_jobs=1, block_size=BLOCK_SIZE):
    """Yield ``N`` i.i.d. ``(tree, params)`` pairs from the joint posterior.

    Pass ``wt=None`` together with ``m``, ``depth`` and ``beta`` to sample
    from the prior instead.
    """
    blocks = joint_blocks(wt, counts, N, seed, m=m, depth=depth, beta=beta,
                          n_jobs=n_jobs, block_size=block_size)
    for block in blocks:
        for i in range(len(block)):
            yield block.sample(i)


__all__ = [
    "BLOCK_SIZE",
    "JointBlock",
    "TreeBatch",
    "joint_blocks",
    "sample_joint",
    "sample_params",
    "sample_posterior_tree",
    "sample_prior_tree",
    "sample_tree_batch",
]
