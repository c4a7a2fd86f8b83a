import hashlib
import json

import numpy as np
import pytest

from bctree import ContextTree, VariableMemoryChain, build_counts, generate, induced_chain
from bctree.exceptions import DomainError
from bctree.simulate import FIXTURES, fixture


def _digest(chain):
    payload = {"".join(map(str, s)): [repr(float(v)) for v in chain.params[s]]
               for s in chain.tree.sorted_leaves}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def test_fixture_literals_pinned():
    t5 = fixture("ternary5").chain
    assert t5.tree.n_leaves == 13 and t5.depth == 5
    assert tuple(t5.params[(0, 2, 0, 0, 2)]) == (0.7, 0.2, 0.1)
    assert tuple(t5.params[(1,)]) == (0.4, 0.4, 0.2)
    b6 = fixture("bimodal6").chain
    assert b6.tree == ContextTree.complete(6, 3)
    assert tuple(b6.params[(2, 5, 3)]) == (0.05, 0.1, 0.05, 0.05, 0.03, 0.72)
    # frozen checksums of every probability literal
    assert {name: _digest(fixture(name).chain) for name in FIXTURES} == {
        "ternary5": "79c65fe8099f6c5b",
        "binary3": "15feaf7d75555df3",
        "bimodal6": "3d99b36a3ccddba0",
    }


def test_binary3_tree():
    t = fixture("binary3").true_tree
    assert t == ContextTree.from_strings(["000", "001", "010", "011", "100", "101", "11"], 2)


def test_unknown_fixture():
    with pytest.raises(DomainError):
        fixture("nope")


def test_deterministic_chain():
    tree = ContextTree.complete(2, 1)
    chain = VariableMemoryChain(tree, {(0,): (0.0, 1.0), (1,): (1.0, 0.0)})
    x = generate(chain, 6, initial_context=[0], seed=0)
    assert x.body.tolist() == [1, 0, 1, 0, 1, 0]


def test_missing_context_rejected():
    with pytest.raises(DomainError):
        generate(fixture("ternary5").chain, 10, initial_context=[0, 1])


def test_reproducible():
    a = fixture("ternary5").generate(500, seed=3)
    b = fixture("ternary5").generate(500, seed=3)
    assert np.array_equal(a.full, b.full)


def test_transition_frequencies_converge():
    fx = fixture("ternary5")
    x = fx.generate(10**6, seed=1, depth=5)
    c = build_counts(x, 5)
    for s in fx.true_tree.leaves:
        a = c.count(s)
        M = a.sum()
        theta = np.asarray(fx.chain.params[s])
        se = np.sqrt(theta * (1 - theta) / M)
        assert np.all(np.abs(a / M - theta) <= 3 * se + 1e-12), s


def test_state_frequencies_match_stationary_law():
    fx = fixture("binary3")
    x = fx.generate(10**6, seed=2, depth=3)
    ind = induced_chain(fx.chain)
    c = build_counts(x, 3)
    n = x.n
    for state, p in zip(ind.space.states, ind.stationary):
        f = c.count(state).sum() / n
        # Markov-chain samples are correlated; allow a generous band
        assert abs(f - p) < 6 * np.sqrt(p * (1 - p) / n) + 1e-3
