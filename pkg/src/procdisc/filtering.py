"""Frequency-based filtering of a pruned DFG that keeps every activity on a
source-to-sink path."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

from .dfg import Dfg

log = logging.getLogger("procdisc")

SOURCE = ("source",)
SINK = ("sink",)


class FilterError(ValueError):
    pass


@dataclass
class FilterConfig:
    eta: float = 0.4

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")


def _all_edges(dfg: Dfg) -> dict:
    edges = dict(dfg.edges)
    edges.update({(SOURCE, n): f for n, f in dfg.starts.items()})
    edges.update({(n, SINK): f for n, f in dfg.ends.items()})
    return edges


def _sort_key(item):
    (a, b), f = item
    return (-f, repr(a), repr(b))


def _reach(edges, root, forward=True) -> set:
    adj: dict = {}
    for a, b in edges:
        if forward:
            adj.setdefault(a, []).append(b)
        else:
            adj.setdefault(b, []).append(a)
    seen = {root}
    todo = deque([root])
    while todo:
        for nxt in adj.get(todo.popleft(), ()):
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return seen


def nearest_rank(values, q: float):
    ordered = sorted(values)
    rank = max(1, math.ceil(q * len(ordered)))
    return ordered[rank - 1]


def forced_edges(all_edges: dict, nodes) -> set:
    """Most frequent incoming and outgoing edge of every activity."""
    forced = set()
    for n in nodes:
        ins = [(e, f) for e, f in all_edges.items() if e[1] == n]
        outs = [(e, f) for e, f in all_edges.items() if e[0] == n]
        if ins:
            forced.add(min(ins, key=_sort_key)[0])
        if outs:
            forced.add(min(outs, key=_sort_key)[0])
    return forced


def _repair(kept: set, candidates: dict, nodes) -> tuple[set, list]:
    """Greedily re-add the most frequent candidate edge that extends source
    reachability or sink co-reachability, until every node is covered.

    Nodes the candidates cannot connect are wired straight to the source/sink
    and reported."""
    kept = set(kept)
    fallback = []
    ranked = sorted(candidates.items(), key=_sort_key)
    while True:
        fwd = _reach(kept, SOURCE)
        bwd = _reach(kept, SINK, forward=False)
        if all(n in fwd and n in bwd for n in nodes):
            return kept, fallback
        pick = None
        for (a, b), _ in ranked:
            if (a, b) in kept:
                continue
            if (a in fwd and b not in fwd) or (b in bwd and a not in bwd):
                pick = (a, b)
                break
        if pick is None:
            n = next(n for n in sorted(nodes) if n not in fwd or n not in bwd)
            edge = (SOURCE, n) if n not in fwd else (n, SINK)
            fallback.append(edge)
            kept.add(edge)
        else:
            kept.add(pick)


def _wire(out: Dfg, fallback: list) -> None:
    """Attach nodes no observed edge connects to the source or sink."""
    for a, b in fallback:
        if a == SOURCE:
            log.warning("no observed path reaches %r; wired to the source", b)
            out.starts[b] = 1
        else:
            log.warning("no observed path leaves %r; wired to the sink", a)
            out.ends[a] = 1


def filter_dfg(pdfg: Dfg, config: FilterConfig | None = None) -> Dfg:
    """Drop infrequent edges.

    Every activity keeps its most frequent incoming and outgoing edge; other
    edges survive if their frequency reaches the ``eta`` nearest-rank quantile
    of the kept-by-force frequencies. Connectivity repairs are computed once
    against the strictest threshold so that the result is monotone in ``eta``.
    """
    config = config or FilterConfig()
    edges = _all_edges(pdfg)
    nodes = sorted(pdfg.nodes)
    touched = {x for e in edges for x in e}
    for n in nodes:
        if n not in touched:
            raise FilterError(f"activity {n!r} has no edges and cannot be connected")

    forced = forced_edges(edges, nodes)
    freqs = [edges[e] for e in forced]
    strict_cut = max(freqs) if freqs else 0
    strict = forced | {e for e, f in edges.items() if f >= strict_cut}
    repaired, fallback = _repair(strict, {e: f for e, f in edges.items() if e not in strict}, nodes)

    cut = nearest_rank(freqs, config.eta) if freqs else 0
    kept = forced | {e for e, f in edges.items() if f >= cut} | repaired
    out = pdfg.copy()
    out.edges = {e: f for e, f in edges.items() if e in kept and SOURCE not in e and SINK not in e}
    out.starts = {e[1]: edges.get(e, 1) for e in kept if e[0] == SOURCE}
    out.ends = {e[0]: edges.get(e, 1) for e in kept if e[1] == SINK}
    _wire(out, fallback)
    out.starts = dict(sorted(out.starts.items()))
    out.ends = dict(sorted(out.ends.items()))
    return out


def no_filter(pdfg: Dfg) -> Dfg:
    """Connectivity repair only (used when filtering is switched off)."""
    edges = _all_edges(pdfg)
    nodes = sorted(pdfg.nodes)
    kept, fallback = _repair(set(edges), {}, nodes)
    out = pdfg.copy()
    _wire(out, fallback)
    return out
