"""Simulation of variable-memory chains and the reference fixture chains."""

from bisect import bisect_right
from dataclasses import dataclass
from itertools import product

import numpy as np

from ._validation import check_random_state, check_symbols
from .exceptions import DomainError
from .trees import ContextTree, ParamSet, TimeSeries, VariableMemoryChain, parse_context


class _Walker:
    """Leaf lookup by walking a nested-dict trie of the tree."""

    def __init__(self, chain):
        self.depth = chain.depth
        self.leaves = chain.tree.sorted_leaves
        root = {}
        for i, s in enumerate(self.leaves):
            node = root
            if not s:
                root = i
                break
            for a in s[:-1]:
                node = node.setdefault(a, {})
            node[s[-1]] = i
        self.trie = root
        self.cum = [np.cumsum(chain.params[s]).tolist() for s in self.leaves]
        for c in self.cum:
            c[-1] = 1.0
        self.log_theta = [
            np.log(np.where(chain.params[s] > 0, chain.params[s], 1.0)).tolist() for s in self.leaves
        ]


def _simulate(chain, n, history, rng):
    """Append ``n`` symbols to ``history`` (chronological list); returns leaf indices."""
    w = _Walker(chain)
    u = rng.random(n).tolist()
    leaf_seq = []
    trie = w.trie
    for t in range(n):
        node = trie
        k = 1
        while not isinstance(node, int):
            node = node[history[-k]]
            k += 1
        a = bisect_right(w.cum[node], u[t])
        history.append(a)
        leaf_seq.append(node)
    return leaf_seq, w


def burn_in_context(chain, rng, length=None, steps=None):
    """Context of ``length`` symbols (default: the chain's depth) taken from the
    end of a burn-in run of ``10 * depth`` steps started from all zeros."""
    D = chain.depth
    length = D if length is None else length
    steps = max(10 * D, length) if steps is None else steps
    history = [0] * D
    _simulate(chain, steps, history, rng)
    return np.asarray(history[len(history) - length:] if length else [], dtype=np.int64)


def generate(chain, n, initial_context=None, seed=None, depth=None):
    """Simulate ``n`` symbols from ``chain``.

    ``initial_context`` is chronological and must cover the chain's depth;
    when omitted it comes from a burn-in run.  The returned series keeps the
    last ``depth`` context symbols (default: the chain's depth).
    """
    rng = check_random_state(seed)
    D = chain.depth if depth is None else depth
    need = max(chain.depth, D)
    if initial_context is None:
        ctx = burn_in_context(chain, rng, need)
    else:
        ctx = check_symbols(initial_context, chain.m, "initial context")
        if ctx.size < need:
            raise DomainError(f"initial context has {ctx.size} symbols, need {need}")
    history = [int(a) for a in ctx]
    _simulate(chain, int(n), history, rng)
    body = np.asarray(history[ctx.size:], dtype=np.int64)
    return TimeSeries(ctx[ctx.size - D:], body, chain.m)


@dataclass(frozen=True)
class Fixture:
    name: str
    chain: VariableMemoryChain
    entropy_rate: float
    true_tree: ContextTree
    description: str = ""

    @property
    def m(self):
        return self.chain.m

    def generate(self, n, seed=None, depth=None):
        return generate(self.chain, n, seed=seed, depth=depth)


_TERNARY5 = {
    "1": (0.4, 0.4, 0.2),
    "2": (0.2, 0.4, 0.4),
    "00": (0.4, 0.2, 0.4),
    "01": (0.3, 0.6, 0.1),
    "022": (0.5, 0.3, 0.2),
    "0212": (0.1, 0.3, 0.6),
    "0211": (0.05, 0.25, 0.7),
    "0210": (0.35, 0.55, 0.1),
    "0202": (0.1, 0.2, 0.7),
    "0201": (0.8, 0.05, 0.15),
    "02002": (0.7, 0.2, 0.1),
    "02001": (0.1, 0.1, 0.8),
    "02000": (0.3, 0.45, 0.25),
}

# Stand-in parameters for the depth-3 binary tree pruned at 11; probability of symbol 0.
_BINARY3 = {
    "000": 0.8,
    "001": 0.3,
    "010": 0.6,
    "011": 0.2,
    "100": 0.7,
    "101": 0.4,
    "11": 0.13,
}

_BIMODAL_Q = (
    (0.5, 0.2, 0.1, 0.0, 0.05, 0.15),
    (0.4, 0.0, 0.4, 0.2, 0.0, 0.0),
    (0.3, 0.1, 0.23, 0.12, 0.05, 0.2),
    (0.05, 0.1, 0.05, 0.05, 0.03, 0.72),
    (0.0, 0.0, 1.0, 0.0, 0.0, 0.0),
    (0.1, 0.2, 0.3, 0.2, 0.05, 0.15),
)


def _ternary5():
    params = {parse_context(k): v for k, v in _TERNARY5.items()}
    tree = ContextTree(frozenset(params), 3)
    chain = VariableMemoryChain(tree, ParamSet(params, 3))
    return Fixture("ternary5", chain, 1.02, tree, "fifth-order ternary variable-memory chain")


def _binary3():
    params = {parse_context(k): (p, round(1.0 - p, 12)) for k, p in _BINARY3.items()}
    tree = ContextTree(frozenset(params), 2)
    chain = VariableMemoryChain(tree, ParamSet(params, 2))
    return Fixture(
        "binary3", chain, 0.4815, tree,
        "third-order binary chain on the depth-3 tree pruned at 11 (illustrative parameters)",
    )


def _bimodal6():
    params = {(a, b, i): _BIMODAL_Q[i] for a, b, i in product(range(6), repeat=3)}
    tree = ContextTree.complete(6, 3)
    chain = VariableMemoryChain(tree, ParamSet(params, 6))
    return Fixture(
        "bimodal6", chain, 1.355, tree,
        "third-order chain on 6 symbols depending on the past only through lag 3",
    )


FIXTURES = {"ternary5": _ternary5, "binary3": _binary3, "bimodal6": _bimodal6}


def fixture(name):
    """Return one of the reference chains: ``ternary5``, ``binary3`` or ``bimodal6``."""
    try:
        return FIXTURES[name]()
    except KeyError:
        raise DomainError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
