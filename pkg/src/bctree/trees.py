"""Sequences, contexts and context trees.

Contexts are tuples of symbols stored most-recent-first: the context ``(2, 0)``
means "the previous symbol was 2 and the one before it was 0".  The empty tuple
is the root.  A :class:`ContextTree` is identified with its set of leaves.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from ._validation import check_alphabet_size, check_depth, check_symbols, infer_alphabet_size
from .exceptions import CapacityError, DataError, DomainError, StructureError

ROOT = ()

MAX_ENUMERATED_TREES = 10**6


def format_context(s, m=None):
    """Render a context as a string, most recent symbol first ("λ" for the root)."""
    if len(s) == 0:
        return "λ"
    if m is not None and m > 10:
        # a trailing dot keeps one-symbol contexts such as "10." unambiguous
        return ".".join(str(a) for a in s) + ("." if len(s) == 1 else "")
    return "".join(str(a) for a in s)


def parse_context(text):
    """Inverse of :func:`format_context`."""
    text = text.strip()
    if text in ("λ", "root", "-", ""):
        return ROOT
    if "." in text:
        return tuple(int(t) for t in text.split(".") if t)
    return tuple(int(c) for c in text)


@dataclass(frozen=True)
class TimeSeries:
    """Observed symbols together with the ``D`` symbols preceding them.

    Both arrays are in chronological order: ``initial_context[-1]`` is the
    symbol immediately before ``body[0]``.
    """

    initial_context: np.ndarray
    body: np.ndarray
    m: int

    def __post_init__(self):
        m = check_alphabet_size(self.m)
        ctx = check_symbols(self.initial_context, m, "initial context")
        body = check_symbols(self.body, m, "series")
        ctx.setflags(write=False)
        body.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "initial_context", ctx)
        object.__setattr__(self, "body", body)

    @classmethod
    def from_sequence(cls, x, depth, m=None, initial_context=None):
        """Build a series from raw symbols.

        If ``initial_context`` is None the first ``depth`` symbols of ``x`` are
        reused as the context (cycled if ``x`` is shorter than ``depth``).
        """
        depth = check_depth(depth)
        x = check_symbols(x, m)
        if m is None:
            m = infer_alphabet_size(x)
        if initial_context is None:
            if depth and x.size == 0:
                raise DataError("cannot derive an initial context from an empty series")
            ctx = np.resize(x, depth) if depth else np.zeros(0, dtype=np.int64)
        else:
            ctx = check_symbols(initial_context, m, "initial context")
            if ctx.size < depth:
                raise DataError(f"initial context has {ctx.size} symbols, need {depth}")
            ctx = ctx[ctx.size - depth:]
        return cls(ctx, x, m)

    @property
    def n(self):
        return int(self.body.size)

    @property
    def depth(self):
        return int(self.initial_context.size)

    @property
    def full(self):
        """Context followed by body, chronological."""
        return np.concatenate([self.initial_context, self.body])

    def recent_past(self, depth=None):
        """The last ``depth`` symbols of the full series, most recent first."""
        depth = self.depth if depth is None else depth
        full = self.full
        if full.size < depth:
            raise DomainError(f"series holds only {full.size} symbols, need {depth}")
        return tuple(int(a) for a in full[full.size - depth:][::-1])


@dataclass(frozen=True)
class ContextTree:
    """A proper ``m``-ary tree, given by its leaves.

    Construction validates that the leaves form a complete, prefix-free set:
    every internal node has exactly ``m`` children in the tree.
    """

    leaves: frozenset
    m: int = 2
    _validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        leaves = frozenset(tuple(int(a) for a in s) for s in self.leaves)
        object.__setattr__(self, "leaves", leaves)
        object.__setattr__(self, "m", check_alphabet_size(self.m))
        if self._validate:
            self.check()

    @classmethod
    def root(cls, m=2):
        return cls(frozenset([ROOT]), m, _validate=False)

    @classmethod
    def complete(cls, m, depth):
        """The full tree with every leaf at ``depth``."""
        return cls(frozenset(product(range(m), repeat=depth)), m, _validate=False)

    @classmethod
    def from_strings(cls, strings, m=2):
        return cls(frozenset(parse_context(s) for s in strings), m)

    def check(self):
        """Raise :class:`StructureError` unless the tree is proper."""
        if not self.leaves:
            raise StructureError("a context tree needs at least one leaf")
        for s in self.leaves:
            if any(a < 0 or a >= self.m for a in s):
                raise StructureError(f"leaf {s} has symbols outside alphabet of size {self.m}")
        internal = self.internal_nodes
        clash = internal & self.leaves
        if clash:
            s = min(clash, key=len)
            raise StructureError(f"leaf {format_context(s, self.m)} is also an internal node")
        for s in internal:
            for a in range(self.m):
                c = s + (a,)
                if c not in internal and c not in self.leaves:
                    raise StructureError(
                        f"internal node {format_context(s, self.m)} is missing child {a}"
                    )

    @cached_property
    def internal_nodes(self):
        """All proper prefixes of leaves (the internal nodes)."""
        out = set()
        for s in self.leaves:
            for k in range(len(s)):
                out.add(s[:k])
        return frozenset(out)

    @cached_property
    def depth(self):
        return max(len(s) for s in self.leaves)

    @property
    def n_leaves(self):
        return len(self.leaves)

    def __len__(self):
        return len(self.leaves)

    def __iter__(self):
        return iter(sorted(self.leaves, key=lambda s: (len(s), s)))

    def __contains__(self, s):
        return tuple(s) in self.leaves

    def leaves_at_depth(self, d):
        """Number of leaves at depth exactly ``d``."""
        return sum(1 for s in self.leaves if len(s) == d)

    def nodes_at_depth(self, d):
        """Number of nodes (leaves and internal) at depth exactly ``d``."""
        return self.leaves_at_depth(d) + sum(1 for s in self.internal_nodes if len(s) == d)

    @cached_property
    def sorted_leaves(self):
        return tuple(sorted(self.leaves, key=lambda s: (len(s), s)))

    def matching_leaf(self, recent_past):
        return matching_leaf(self, recent_past)

    def to_string(self):
        """Single-line listing of the leaves."""
        return " ".join(format_context(s, self.m) for s in self.sorted_leaves)

    def to_lines(self):
        """Indented listing of the tree, one node per line, leaves marked with '*'."""
        lines = []

        def walk(s):
            tag = "*" if s in self.leaves else ""
            lines.append("  " * len(s) + format_context(s, self.m) + tag)
            if s not in self.leaves:
                for a in range(self.m):
                    walk(s + (a,))

        walk(ROOT)
        return lines

    def __str__(self):
        return "{" + ", ".join(format_context(s, self.m) for s in self.sorted_leaves) + "}"


def matching_leaf(tree, recent_past):
    """Return the unique leaf of ``tree`` that is a suffix of the past.

    ``recent_past`` lists symbols most recent first and must supply at least
    ``tree.depth`` of them.
    """
    past = tuple(int(a) for a in recent_past[: tree.depth])
    if len(past) < tree.depth:
        raise DomainError(f"need {tree.depth} past symbols, got {len(past)}")
    s = ROOT
    internal = tree.internal_nodes
    while s not in tree.leaves:
        if s not in internal:
            raise StructureError(f"no leaf matches the past {past}; tree is not proper")
        s = past[: len(s) + 1]
    return s


def count_trees(m, depth):
    """Number of proper ``m``-ary trees of depth at most ``depth``."""
    n = 1
    for _ in range(depth):
        n = 1 + n**m
    return n


def enumerate_trees(m, depth, limit=MAX_ENUMERATED_TREES):
    """Every proper ``m``-ary tree of depth at most ``depth``, each exactly once."""
    m = check_alphabet_size(m)
    depth = check_depth(depth)
    total = count_trees(m, depth)
    if total > limit:
        raise CapacityError(f"{total} trees for m={m}, D={depth} exceeds the limit of {limit}")

    def subtrees(d):
        if d == 0:
            return [frozenset([ROOT])]
        below = subtrees(d - 1)
        out = [frozenset([ROOT])]
        for combo in product(below, repeat=m):
            out.append(frozenset((a,) + s for a, sub in enumerate(combo) for s in sub))
        return out

    return [ContextTree(leaves, m, _validate=False) for leaves in subtrees(depth)]


class ParamSet(Mapping):
    """Leaf-indexed next-symbol probability vectors."""

    def __init__(self, params, m=None, atol=1e-12):
        self._params = {}
        for s, theta in params.items():
            theta = np.asarray(theta, dtype=float)
            if m is None:
                m = theta.size
            if theta.shape != (m,):
                raise DomainError(f"parameter vector at {s} has shape {theta.shape}, expected ({m},)")
            if np.any(theta < 0) or abs(theta.sum() - 1.0) > atol:
                raise DomainError(f"parameter vector at {s} is not a probability vector: {theta}")
            theta.setflags(write=False)
            self._params[tuple(s)] = theta
        self.m = m

    def __getitem__(self, s):
        return self._params[tuple(s)]

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def __repr__(self):
        return f"ParamSet({len(self)} leaves, m={self.m})"


@dataclass(frozen=True)
class VariableMemoryChain:
    """A variable-memory Markov chain: context tree plus leaf parameters."""

    tree: ContextTree
    params: ParamSet

    def __post_init__(self):
        if not isinstance(self.params, ParamSet):
            object.__setattr__(self, "params", ParamSet(self.params, self.tree.m))
        if set(self.params) != set(self.tree.leaves):
            raise StructureError("parameters must be keyed exactly by the leaves of the tree")
        if self.params.m != self.tree.m:
            raise DomainError("parameter vectors do not match the alphabet size of the tree")

    @property
    def m(self):
        return self.tree.m

    @property
    def depth(self):
        return self.tree.depth

    def transition(self, recent_past):
        """Next-symbol distribution given the past, most recent first."""
        return self.params[matching_leaf(self.tree, recent_past)]
