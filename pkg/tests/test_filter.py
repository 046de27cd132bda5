import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procdisc.dfg import Dfg
from procdisc.filtering import (SINK, SOURCE, FilterConfig, FilterError, filter_dfg,
                                nearest_rank, no_filter)


def make(edges, starts, ends):
    nodes = frozenset([x for e in edges for x in e] + list(starts) + list(ends))
    return Dfg(nodes, dict(edges), dict(starts), dict(ends))


def reach(dfg, forward=True):
    adj = {}
    pairs = list(dfg.edges) + [(SOURCE, n) for n in dfg.starts] + [(n, SINK) for n in dfg.ends]
    for a, b in pairs:
        if forward:
            adj.setdefault(a, []).append(b)
        else:
            adj.setdefault(b, []).append(a)
    root = SOURCE if forward else SINK
    seen, todo = {root}, [root]
    while todo:
        for nxt in adj.get(todo.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return seen


def random_dfg(rng, n=6, density=0.35):
    labels = [chr(ord("a") + i) for i in range(n)]
    edges = {(a, b): rng.randint(1, 50) for a in labels for b in labels
             if a != b and rng.random() < density}
    # a spine keeps every node on some source-to-sink path
    for a, b in zip(labels, labels[1:]):
        edges.setdefault((a, b), rng.randint(1, 50))
    starts = {labels[0]: rng.randint(1, 50)}
    starts.update({x: rng.randint(1, 50) for x in labels[1:] if rng.random() < 0.2})
    ends = {labels[-1]: rng.randint(1, 50)}
    ends.update({x: rng.randint(1, 50) for x in labels[:-1] if rng.random() < 0.2})
    return make(edges, starts, ends)


def test_nearest_rank():
    assert nearest_rank([5, 1, 3], 0.0) == 1
    assert nearest_rank([5, 1, 3], 0.4) == 3
    assert nearest_rank([5, 1, 3], 1.0) == 5


def test_chain_is_unchanged_for_every_eta():
    dfg = make({("a", "b"): 5}, {"a": 5}, {"b": 5})
    for eta in (0.0, 0.4, 1.0):
        out = filter_dfg(dfg, FilterConfig(eta))
        assert out.edges == dfg.edges and out.starts == dfg.starts and out.ends == dfg.ends


def test_diamond_keeps_sole_entry_of_c():
    dfg = make({("a", "b"): 9, ("a", "c"): 1, ("b", "d"): 9, ("c", "d"): 1},
               {"a": 10}, {"d": 10})
    out = filter_dfg(dfg, FilterConfig(1.0))
    assert ("a", "c") in out.edges       # c has no other incoming edge
    assert ("c", "d") in out.edges       # nor another outgoing one


def test_diamond_drops_alternative_entry():
    dfg = make({("a", "b"): 9, ("a", "c"): 1, ("b", "d"): 9, ("c", "d"): 1, ("b", "c"): 8},
               {"a": 10}, {"d": 10})
    out = filter_dfg(dfg, FilterConfig(1.0))
    assert ("a", "c") not in out.edges and ("b", "c") in out.edges


def test_eta_zero_keeps_everything_above_weakest_forced_edge():
    dfg = make({("a", "b"): 9, ("a", "c"): 2, ("b", "d"): 9, ("c", "d"): 3, ("b", "c"): 1},
               {"a": 10}, {"d": 10})
    out = filter_dfg(dfg, FilterConfig(0.0))
    assert ("b", "c") not in out.edges
    assert set(out.edges) == {("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")}


def test_isolated_activity_is_an_error():
    dfg = Dfg(frozenset({"a", "b"}), {}, {"a": 1}, {"a": 1})
    with pytest.raises(FilterError, match="'b'"):
        filter_dfg(dfg)


def test_eta_out_of_range():
    with pytest.raises(ValueError):
        FilterConfig(1.5)


def test_unreachable_node_is_wired_to_source():
    dfg = make({("a", "b"): 3, ("c", "b"): 1}, {"a": 3}, {"b": 3})
    out = filter_dfg(dfg)
    assert "c" in out.starts
    assert no_filter(dfg).starts["c"] == 1


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 1))
def test_every_node_stays_connected(seed, eta):
    dfg = random_dfg(random.Random(seed))
    out = filter_dfg(dfg, FilterConfig(eta))
    fwd, bwd = reach(out), reach(out, forward=False)
    assert all(n in fwd and n in bwd for n in dfg.nodes)
    assert set(out.edges) <= set(dfg.edges)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_eta(seed, e1, e2):
    lo, hi = sorted((e1, e2))
    dfg = random_dfg(random.Random(seed))
    strict, loose = filter_dfg(dfg, FilterConfig(hi)), filter_dfg(dfg, FilterConfig(lo))
    assert set(strict.edges) <= set(loose.edges)
    assert set(strict.starts) <= set(loose.starts)
    assert set(strict.ends) <= set(loose.ends)


def test_deterministic():
    dfg = random_dfg(random.Random(3), n=8)
    assert filter_dfg(dfg) == filter_dfg(dfg)
