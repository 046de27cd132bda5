from collections import Counter

import pytest

from procdisc.bpmn import from_tree
from procdisc.concurrency import count_overlaps
from procdisc.log import Phase, pair_lifecycles, write_csv
from procdisc.simulate import SimConfig, SimulationError, random_model, simulate
from procdisc.verify import language_upto_k

from test_verify import and_merged_by_xor


def words(log):
    return {tuple(e.label for e in t.events if e.phase is Phase.START) for t in log.traces}


def test_sequence_trace():
    log = simulate(from_tree(("seq", "a", "b")), SimConfig(trace_count=1, seed=1))
    (trace,) = log.traces
    assert [(e.label, e.phase) for e in trace.events] == [
        ("a", Phase.START), ("a", Phase.END), ("b", Phase.START), ("b", Phase.END)]
    assert trace.events[1].timestamp <= trace.events[2].timestamp


def test_parallel_branches_always_overlap():
    log = simulate(from_tree(("seq", "a", ("and", "b", "c"), "d")),
                   SimConfig(trace_count=200, seed=4))
    assert count_overlaps(log).concurrent_traces("b", "c") == 200


def test_or_subset_frequencies():
    model = from_tree(("seq", "a", ("or", "b", "c"), "d"))
    weights = {frozenset("b"): 1, frozenset("c"): 1, frozenset("bc"): 1}
    log = simulate(model, SimConfig(trace_count=10_000, seed=11, or_weights=weights))
    counts = Counter(frozenset(e.label for e in t.events) - {"a", "d"} for t in log.traces)
    assert set(counts) == {frozenset("b"), frozenset("c"), frozenset("bc")}
    assert all(abs(c / 10_000 - 1 / 3) < 0.05 for c in counts.values())


def test_xor_weights_are_respected():
    model = from_tree(("xor", "a", "b"))
    log = simulate(model, SimConfig(trace_count=2000, seed=2, xor_weights={"a": 3, "b": 1}))
    counts = Counter(t.events[0].label for t in log.traces)
    assert abs(counts["a"] / 2000 - 0.75) < 0.05


def test_same_seed_same_log():
    model = from_tree(("seq", "a", ("loop", ("and", "b", "c"), "d"), ("or", "e", "f")))
    a = simulate(model, SimConfig(trace_count=50, seed=9))
    b = simulate(model, SimConfig(trace_count=50, seed=9))
    assert write_csv(a) == write_csv(b)
    assert write_csv(a) != write_csv(simulate(model, SimConfig(trace_count=50, seed=10)))


def test_unsound_model_is_refused():
    with pytest.raises(SimulationError, match="not sound"):
        simulate(and_merged_by_xor())


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(trace_count=0)
    with pytest.raises(ValueError):
        SimConfig(duration=(0.0, 1.0))
    with pytest.raises(ValueError):
        SimConfig(duration=(30.0, 40.0), split_jitter=60.0)


@pytest.mark.parametrize("seed", range(30))
def test_generated_traces_belong_to_the_model(seed):
    _, model = random_model(seed, n_tasks=5, loops=True, inclusive=True)
    log = simulate(model, SimConfig(trace_count=40, seed=seed))
    short = {w for w in words(log) if len(w) <= 7}
    assert short <= language_upto_k(model, 7)
    for trace in log.traces:
        assert 2 * len(pair_lifecycles(trace)) == len(trace.events)
