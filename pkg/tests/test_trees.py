import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bctree import (
    ROOT,
    ContextTree,
    ParamSet,
    TimeSeries,
    VariableMemoryChain,
    count_trees,
    enumerate_trees,
    format_context,
    matching_leaf,
    parse_context,
)
from bctree.exceptions import CapacityError, DataError, DomainError, StructureError
from bctree.simulate import fixture


@pytest.mark.parametrize("m,D,expected", [(2, 0, 1), (2, 1, 2), (2, 2, 5), (2, 3, 26), (2, 4, 677),
                                          (3, 1, 2), (3, 2, 9)])
def test_enumeration_counts(m, D, expected):
    trees = enumerate_trees(m, D)
    assert len(trees) == expected == count_trees(m, D)
    assert len(set(trees)) == expected
    for t in trees:
        t.check()
        assert t.depth <= D


def test_count_recurrence():
    for m in (2, 3):
        for D in range(1, 4):
            assert count_trees(m, D) == 1 + count_trees(m, D - 1) ** m


def test_enumeration_guard():
    with pytest.raises(CapacityError):
        enumerate_trees(2, 6)


def test_matching_leaf_examples():
    assert matching_leaf(ContextTree.root(3), (2, 1)) == ROOT
    t5 = fixture("ternary5").true_tree
    assert matching_leaf(t5, (0, 2, 0, 0, 2)) == parse_context("02002")
    assert matching_leaf(ContextTree.complete(2, 2), (1, 0, 1)) == (1, 0)


def test_matching_leaf_needs_enough_past():
    with pytest.raises(DomainError):
        matching_leaf(ContextTree.complete(2, 2), (1,))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.lists(st.integers(0, 2), min_size=5, max_size=8))
def test_matching_leaf_is_unique_suffix(seed, past):
    from bctree import sample_prior_tree

    tree = sample_prior_tree(5, 0.4, np.random.default_rng(seed), m=3)
    leaf = matching_leaf(tree, past)
    hits = [s for s in tree.leaves if tuple(past[: len(s)]) == s]
    assert hits == [leaf]


@pytest.mark.parametrize("leaves", [
    ["0"],                  # missing sibling
    ["0", "1", "10", "11"],  # leaf also internal
    ["00", "01", "1", "2"],  # symbol outside the binary alphabet
])
def test_improper_trees_rejected(leaves):
    with pytest.raises(StructureError):
        ContextTree.from_strings(leaves, 2)


def test_tree_accessors():
    t = ContextTree.from_strings(["1", "00", "01"], 2)
    assert t.depth == 2 and t.n_leaves == 3
    assert t.internal_nodes == frozenset({ROOT, (0,)})
    assert t.leaves_at_depth(2) == 2
    assert t.to_string() == "1 00 01"
    assert t.to_lines()[0] == "λ"


@given(st.lists(st.integers(0, 11), max_size=6))
def test_context_format_roundtrip(s):
    s = tuple(s)
    assert parse_context(format_context(s, 12)) == s


def test_paramset_validation():
    with pytest.raises(DomainError):
        ParamSet({ROOT: (0.5, 0.6)})
    with pytest.raises(DomainError):
        ParamSet({ROOT: (1.2, -0.2)})
    with pytest.raises(StructureError):
        VariableMemoryChain(ContextTree.complete(2, 1), {(0,): (0.5, 0.5)})


def test_timeseries_from_sequence():
    x = TimeSeries.from_sequence([2, 0, 1, 1], 3)
    assert x.m == 3 and list(x.initial_context) == [2, 0, 1] and x.n == 4
    assert x.recent_past(2) == (1, 1)
    with pytest.raises(DataError):
        TimeSeries([0], [3], 2)
    with pytest.raises(DataError):
        TimeSeries.from_sequence([], 2)
