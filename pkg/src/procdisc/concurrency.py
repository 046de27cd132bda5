"""Concurrency oracles: lifecycle overlap counting, the overlap-ratio test and
the classic directly-follows balance test, plus DFG pruning."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from itertools import combinations

from .dfg import Dfg, short_loop_patterns
from .log import ActivityInstance, RefinedLog, pair_lifecycles

Pair = tuple[str, str]


def pair(a: str, b: str) -> Pair:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class ConcurrencyStats:
    overlap_count: dict[Pair, int]
    instance_count: dict[str, int]
    cooccur_concurrent_traces: dict[Pair, int]
    exclusive_traces: dict[Pair, int]
    trace_count: int

    def overlaps(self, a: str, b: str) -> int:
        return self.overlap_count.get(pair(a, b), 0)

    def concurrent_traces(self, a: str, b: str) -> int:
        return self.cooccur_concurrent_traces.get(pair(a, b), 0)

    def exclusive(self, a: str, b: str) -> int:
        return self.exclusive_traces.get(pair(a, b), 0)

    def to_json(self) -> str:
        def enc(d):
            return {f"{a}|{b}": v for (a, b), v in sorted(d.items())}

        return json.dumps({
            "trace_count": self.trace_count,
            "instance_count": dict(sorted(self.instance_count.items())),
            "overlap_count": enc(self.overlap_count),
            "cooccur_concurrent_traces": enc(self.cooccur_concurrent_traces),
            "exclusive_traces": enc(self.exclusive_traces),
        }, indent=2, ensure_ascii=False)


@dataclass(frozen=True)
class ConcurrencyRelation:
    pairs: frozenset[Pair]
    epsilon: float

    def __contains__(self, item) -> bool:
        a, b = item
        return pair(a, b) in self.pairs

    def concurrent(self, a: str, b: str) -> bool:
        return pair(a, b) in self.pairs


def overlapping_pairs(instances: list[ActivityInstance]) -> list[Pair]:
    """Sweep over instances sorted by start; one entry per overlapping instance pair
    of distinct labels. Touching intervals (end == start) do not overlap."""
    order = sorted(instances, key=lambda i: i.start_ts)
    active: list[ActivityInstance] = []
    found = []
    for cur in order:
        s = cur.start_ts
        active = [a for a in active if a.end_ts > s]
        for a in active:
            if a.label != cur.label and a.start_ts < cur.end_ts:
                found.append(pair(a.label, cur.label))
        active.append(cur)
    return found


def count_overlaps(log: RefinedLog, pairing: str = "strict") -> ConcurrencyStats:
    overlap: Counter = Counter()
    instances: Counter = Counter()
    conc_traces: Counter = Counter()
    label_sets: Counter = Counter()
    for trace in log.traces:
        inst = pair_lifecycles(trace, pairing)
        instances.update(i.label for i in inst)
        hits = overlapping_pairs(inst)
        overlap.update(hits)
        conc_traces.update(set(hits))
        label_sets[frozenset(i.label for i in inst)] += 1

    alphabet = sorted(instances)
    exclusive: Counter = Counter()
    for labels, mult in label_sets.items():
        present = [a for a in alphabet if a in labels]
        absent = [a for a in alphabet if a not in labels]
        for a in present:
            for b in absent:
                exclusive[pair(a, b)] += mult
    return ConcurrencyStats(dict(overlap), dict(instances), dict(conc_traces),
                            dict(exclusive), len(log.traces))


def overlap_ratio(stats: ConcurrencyStats, a: str, b: str) -> float:
    total = stats.instance_count.get(a, 0) + stats.instance_count.get(b, 0)
    if total == 0:
        return 0.0
    return 2 * stats.overlaps(a, b) / total


def _check_epsilon(epsilon: float):
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")


def refined_concurrency(stats: ConcurrencyStats, epsilon: float,
                        self_loops=(), short_loops=()) -> ConcurrencyRelation:
    """Pairs whose lifecycles overlap in at least an ``epsilon`` share of their
    observations, excluding self-loop activities and short loops."""
    _check_epsilon(epsilon)
    loops = set(self_loops)
    shorts = {pair(*p) for p in short_loops}
    pairs = set()
    for a, b in combinations(sorted(stats.instance_count), 2):
        if a in loops or b in loops or (a, b) in shorts:
            continue
        if overlap_ratio(stats, a, b) >= epsilon:
            pairs.add((a, b))
    return ConcurrencyRelation(frozenset(pairs), epsilon)


def classic_concurrency(dfg: Dfg, log: RefinedLog, epsilon: float) -> ConcurrencyRelation:
    """Interleaving-based test on a plain DFG built from end events only."""
    _check_epsilon(epsilon)
    loops = {a for (a, b) in dfg.edges if a == b} | set(dfg.self_loops)
    shorts = short_loop_patterns(t.end_projection() for t in log.traces)
    pairs = set()
    for (a, b), f_ab in dfg.edges.items():
        if a >= b or a in loops or b in loops:
            continue
        f_ba = dfg.edges.get((b, a), 0)
        if not f_ba or (a, b) in shorts:
            continue
        if abs(f_ab - f_ba) / (f_ab + f_ba) < epsilon:
            pairs.add((a, b))
    return ConcurrencyRelation(frozenset(pairs), epsilon)


def prune_dfg(dfg: Dfg, rel: ConcurrencyRelation) -> Dfg:
    edges = {e: f for e, f in dfg.edges.items() if pair(*e) not in rel.pairs or e[0] == e[1]}
    return dfg.copy(edges=edges)
