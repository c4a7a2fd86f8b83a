"""Entropy rate of variable-memory chains and its posterior distribution.

The exact rate needs the stationary distribution of the chain viewed as a
first-order chain on blocks of past symbols.  Rather than the full block
space ``A**depth`` we use the smallest refinement of the tree that is closed
under appending a symbol: every state together with the next symbol then
determines the next state.  It induces the same leaf-level stationary
probabilities and is often far smaller.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ._validation import check_depth, check_random_state, check_symbols
from .ctw import build_counts, run_ctw
from .exceptions import CapacityError, DomainError
from .inference import PosteriorSummary
from .sampling import BLOCK_SIZE, joint_blocks
from .simulate import _simulate, burn_in_context
from .trees import ROOT, ParamSet, TimeSeries, VariableMemoryChain

DENSE_STATES = 4096
STATE_CAP = 10**6
MC_PATH_LENGTH = 10**6
POWER_TOL = 1e-12
POWER_MAX_ITER = 10**6

# batched posterior path
_BATCH_DENSE_STATES = 64
_BATCH_POWER_ITER = 5000


@dataclass(frozen=True)
class StateSpace:
    """Block states of a tree and their deterministic successor map.

    ``leaf[i]`` indexes ``tree.sorted_leaves`` for state ``states[i]`` and
    ``successor[i, a]`` is the state reached after emitting symbol ``a``.
    """

    states: tuple
    leaf: np.ndarray
    successor: np.ndarray

    @property
    def size(self):
        return len(self.states)


def _successor_map(states, leaves, m):
    index = {s: i for i, s in enumerate(states)}
    leaf_index = {s: i for i, s in enumerate(leaves)}
    succ = np.empty((len(states), m), dtype=np.int64)
    leaf = np.empty(len(states), dtype=np.int64)
    for i, s in enumerate(states):
        for k in range(len(s) + 1):
            if s[:k] in leaf_index:
                leaf[i] = leaf_index[s[:k]]
                break
        for a in range(m):
            t = (a,) + s
            for k in range(len(t) + 1):
                j = index.get(t[:k])
                if j is not None:
                    succ[i, a] = j
                    break
    return StateSpace(tuple(states), leaf, succ)


def closed_state_space(tree, cap=STATE_CAP):
    """Smallest refinement of ``tree`` closed under the shift map."""
    m = tree.m
    states = set(tree.leaves)
    changed = True
    while changed:
        changed = False
        internal = {s[:k] for s in states for k in range(len(s))}
        for s in list(states):
            if any((a,) + s in internal for a in range(m)):
                states.remove(s)
                states.update(s + (b,) for b in range(m))
                changed = True
        if len(states) > cap:
            raise CapacityError(f"more than {cap} states; use entropy_rate_mc")
    ordered = sorted(states, key=lambda s: (len(s), s))
    return _successor_map(ordered, tree.sorted_leaves, m)


def block_state_space(tree, cap=STATE_CAP):
    """All ``m**depth`` blocks of past symbols as states."""
    m, k = tree.m, tree.depth
    if m**k > cap:
        raise CapacityError(f"{m**k} block states exceed the cap of {cap}; use entropy_rate_mc")
    states = [tuple(reversed(p)) for p in product(range(m), repeat=k)] if k else [ROOT]
    return _successor_map(states, tree.sorted_leaves, m)


def _theta_matrix(chain):
    return np.array([chain.params[s] for s in chain.tree.sorted_leaves])


def _transition_matrix(space, theta):
    S, m = space.successor.shape
    rows = np.repeat(np.arange(S), m)
    cols = space.successor.ravel()
    vals = theta[space.leaf].ravel()
    P = sparse.csr_matrix((vals, (rows, cols)), shape=(S, S))
    P.eliminate_zeros()  # graph routines treat stored zeros as edges
    return P


def _check_unique_stationary(P):
    """Raise unless the chain has exactly one closed communicating class."""
    n_comp, labels = connected_components(P, directed=True, connection="strong")
    if n_comp == 1:
        return
    coo = P.tocoo()
    mask = coo.data > 0
    leaving = labels[coo.row[mask]] != labels[coo.col[mask]]
    open_classes = np.unique(labels[coo.row[mask][leaving]])
    if n_comp - open_classes.size != 1:
        raise DomainError("chain has several closed classes; the stationary distribution is not unique")


def _dense_stationary(P):
    S = P.shape[0]
    A = P.T - np.eye(S)
    A[-1] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


def _power_stationary(P, tol=POWER_TOL, max_iter=POWER_MAX_ITER, start=None):
    S = P.shape[0]
    PT = P.T.tocsr()
    pi = np.full(S, 1.0 / S) if start is None else start.copy()
    for _ in range(max_iter):
        nxt = 0.5 * (pi + PT @ pi)
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    return pi


@dataclass(frozen=True)
class InducedChain:
    """First-order chain on block states induced by a variable-memory chain."""

    space: StateSpace
    transition: sparse.csr_matrix
    stationary: np.ndarray
    method: str

    @property
    def residual(self):
        """``||pi P - pi||_1``."""
        return float(np.abs(self.transition.T @ self.stationary - self.stationary).sum())


def induced_chain(chain, full_blocks=False, cap=STATE_CAP):
    """Build the induced first-order chain and solve for its stationary law.

    ``full_blocks=True`` uses every block of ``depth`` past symbols instead
    of the closed refinement.
    """
    space = block_state_space(chain.tree, cap) if full_blocks else closed_state_space(chain.tree, cap)
    theta = _theta_matrix(chain)
    P = _transition_matrix(space, theta)
    _check_unique_stationary(P)
    if space.size <= DENSE_STATES:
        pi, method = _dense_stationary(P.toarray()), "dense"
    else:
        pi, method = _power_stationary(P), "power"
    return InducedChain(space, P, pi, method)


def _leaf_entropies(theta):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(theta > 0, theta * np.log(theta), 0.0)
    return -terms.sum(axis=-1)


def entropy_rate_exact(chain, full_blocks=False, cap=STATE_CAP):
    """Entropy rate in nats per symbol, from the stationary block distribution.

    Parameters may contain zeros as long as the chain has a unique stationary
    distribution.  Raises :class:`CapacityError` when the state space exceeds
    ``cap``; :func:`entropy_rate_mc` is the fallback for that case.
    """
    ind = induced_chain(chain, full_blocks, cap)
    h = _leaf_entropies(_theta_matrix(chain))
    return float(ind.stationary @ h[ind.space.leaf])


def entropy_rate_mc(chain, M=MC_PATH_LENGTH, rng=None):
    """Monte Carlo entropy rate: ``-(1/M) log P(Y_1..Y_M | Y_{-D+1}..Y_0)`` on a simulated path."""
    M = int(M)
    if M < 1:
        raise DomainError(f"path length must be at least 1, got {M}")
    rng = check_random_state(rng)
    history = [int(a) for a in burn_in_context(chain, rng)]
    start = len(history)
    leaves, walker = _simulate(chain, M, history, rng)
    logs = walker.log_theta
    total = math.fsum(logs[leaf][a] for leaf, a in zip(leaves, history[start:]))
    return -total / M


def _batched_state_spaces(m, tid, depth, code):
    """Closed state spaces for many trees at once.

    ``tid``, ``depth`` and ``code`` list the leaves of every tree, sorted by
    tree id, then depth, then code.  Returns ``(state_start, successor,
    leaf)``: the states of tree ``t`` are rows ``state_start[t]:state_start[t +
    1]``; ``successor`` holds tree-local state indices and ``leaf`` tree-local
    leaf indices.
    """
    n_trees = int(tid.max()) + 1
    top = int(depth.max())
    offsets = np.cumsum([0] + [m**d for d in range(top + 2)])
    span = int(offsets[-1])
    power = m ** np.arange(top + 2, dtype=np.int64)
    if n_trees * span >= 2**62:
        raise CapacityError("too many states to index in one batch")

    def keys(t, d, c):
        return t * span + offsets[d] + c

    def member(sorted_keys, k):
        if sorted_keys.size == 0:
            return np.zeros(k.shape, dtype=bool), np.zeros(k.shape, dtype=np.int64)
        pos = np.minimum(np.searchsorted(sorted_keys, k), sorted_keys.size - 1)
        return sorted_keys[pos] == k, pos

    st, sd, sc = tid, depth, code
    while True:
        internal = np.unique(np.concatenate(
            [keys(st[sd > l], l, sc[sd > l] % power[l]) for l in range(top)]
            + [np.zeros(0, dtype=np.int64)]
        ))
        split = np.zeros(st.size, dtype=bool)
        for a in range(m):
            split |= member(internal, keys(st, sd + 1, a + m * sc))[0]
        if not split.any():
            break
        keep = ~split
        kids = np.arange(m)
        st = np.concatenate([st[keep], np.repeat(st[split], m)])
        new_d = np.repeat(sd[split] + 1, m)
        new_c = (sc[split][:, None] + kids * power[sd[split]][:, None]).ravel()
        sd = np.concatenate([sd[keep], new_d])
        sc = np.concatenate([sc[keep], new_c])

    skey = keys(st, sd, sc)
    order = np.argsort(skey)
    st, sd, sc, skey = st[order], sd[order], sc[order], skey[order]
    state_start = np.searchsorted(st, np.arange(n_trees + 1))
    leaf_start = np.searchsorted(tid, np.arange(n_trees + 1))
    lkey = keys(tid, depth, code)

    successor = np.full((st.size, m), -1, dtype=np.int64)
    for a in range(m):
        ext = a + m * sc
        for l in range(top + 1):
            ok = sd + 1 >= l
            hit, pos = member(skey, keys(st, l, ext % power[l]))
            hit &= ok
            successor[hit, a] = pos[hit] - state_start[st[hit]]
    leaf = np.full(st.size, -1, dtype=np.int64)
    for l in range(top + 1):
        hit, pos = member(lkey, keys(st, l, sc % power[l]))
        hit &= sd >= l
        leaf[hit] = pos[hit] - leaf_start[st[hit]]
    return state_start, successor, leaf


def _stationary_dense_batch(succ, theta):
    """Stationary laws for a batch of chains with ``S`` states each.

    ``succ`` and ``theta`` have shape ``(k, S, m)``: state ``s`` of chain
    ``i`` moves to ``succ[i, s, a]`` with probability ``theta[i, s, a]``.
    """
    k, S, m = theta.shape
    if S == 1:
        return np.ones((k, 1))
    out = np.empty((k, S))
    chunk = max(1, (1 << 23) // (S * S))
    src = np.broadcast_to(np.arange(S)[:, None], (S, m))
    for lo in range(0, k, chunk):
        th = theta[lo:lo + chunk]
        c = th.shape[0]
        A = np.zeros((c, S, S))
        batch = np.broadcast_to(np.arange(c)[:, None, None], th.shape)
        # A = P^T - I, last row replaced by the normalisation constraint
        A[batch, succ[lo:lo + c], np.broadcast_to(src, th.shape)] = th
        A[:, np.arange(S), np.arange(S)] -= 1.0
        A[:, -1, :] = 1.0
        b = np.zeros((c, S, 1))
        b[:, -1, 0] = 1.0
        out[lo:lo + c] = np.linalg.solve(A, b)[:, :, 0]
    return out


def _stationary_power_batch(succ, theta, tol=POWER_TOL, max_iter=_BATCH_POWER_ITER):
    """Power iteration for a batch of aperiodic chains; same layout as the dense version."""
    k, S, m = theta.shape
    flat_succ = (succ + (np.arange(k) * S)[:, None, None]).ravel()
    pi = np.full((k, S), 1.0 / S)
    for _ in range(max_iter):
        nxt = np.bincount(flat_succ, weights=(pi[:, :, None] * theta).ravel(), minlength=k * S)
        nxt = nxt.reshape(k, S)
        nxt /= nxt.sum(axis=1, keepdims=True)
        delta = np.abs(nxt - pi).sum(axis=1)
        pi = nxt
        if delta.max() < tol:
            return pi, np.ones(k, dtype=bool)
    return pi, delta < tol


def block_entropies(block):
    """Entropy rate of every sample in a :class:`~bctree.sampling.JointBlock`."""
    m = block.m
    n = len(block)
    h_leaf = _leaf_entropies(block.theta)
    first = block.first
    counts = np.diff(block.offsets)[first]
    rows = np.concatenate([np.arange(block.offsets[i], block.offsets[i + 1]) for i in first])
    tid = np.repeat(np.arange(first.size), counts)
    state_start, successor, leaf = _batched_state_spaces(m, tid, block.depth[rows], block.code[rows])
    sizes = np.diff(state_start)

    out = np.empty(n)
    has_zero = np.zeros(n, dtype=bool)
    zero_rows = np.flatnonzero(np.any(block.theta == 0.0, axis=1))
    if zero_rows.size:
        has_zero[np.searchsorted(block.offsets, zero_rows, side="right") - 1] = True
    sample_size = sizes[block.index]
    for S in np.unique(sample_size):
        members = np.flatnonzero((sample_size == S) & ~has_zero)
        if members.size == 0:
            continue
        states = state_start[block.index[members]][:, None] + np.arange(S)
        succ = successor[states]
        leaf_rows = block.offsets[members][:, None] + leaf[states]
        theta = block.theta[leaf_rows]
        if S <= _BATCH_DENSE_STATES:
            pi = _stationary_dense_batch(succ, theta)
        else:
            pi, done = _stationary_power_batch(succ, theta)
            for j in np.flatnonzero(~done):
                pi[j] = _dense_stationary(_dense_from(succ[j], theta[j]))
        out[members] = (pi * h_leaf[leaf_rows]).sum(axis=1)
    for i in np.flatnonzero(has_zero):
        tree, params = block.sample(i)
        out[i] = _single_entropy(VariableMemoryChain(tree, params))
    return out


def _dense_from(succ, theta):
    S = succ.shape[0]
    P = np.zeros((S, S))
    np.add.at(P, (np.repeat(np.arange(S), succ.shape[1]), succ.ravel()), theta.ravel())
    return P


def _single_entropy(chain):
    try:
        return entropy_rate_exact(chain)
    except CapacityError:
        return entropy_rate_mc(chain)


def entropy_samples(blocks):
    """Entropy rate of every joint sample in ``blocks``, in sample order."""
    return np.concatenate([block_entropies(b) for b in blocks])


def entropy_posterior(x, N=100_000, depth=None, beta=None, seed=None, *, bins=100, level=0.95,
                      n_jobs=1, block_size=BLOCK_SIZE, return_blocks=False):
    """Posterior distribution of the entropy rate given the series ``x``.

    ``x`` is a :class:`TimeSeries` (its context length is the default
    maximum depth) or a plain symbol sequence, in which case ``depth`` must be
    given and the first ``depth`` symbols are reused as the initial context.
    """
    if not isinstance(x, TimeSeries):
        if depth is None:
            raise DomainError("depth is required when x is a plain sequence")
        x = TimeSeries.from_sequence(check_symbols(x), check_depth(depth))
    depth = x.depth if depth is None else check_depth(depth)
    counts = build_counts(x, depth)
    wt = run_ctw(counts, beta)
    blocks = joint_blocks(wt, counts, N, seed, n_jobs=n_jobs, block_size=block_size)
    values = entropy_samples(blocks)
    summary = PosteriorSummary.from_samples(values, bins=bins, level=level)
    if return_blocks:
        return summary, blocks
    return summary
