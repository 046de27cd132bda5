"""Directly-follows graphs under the classic, IM-lifecycle and refined relations."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

from .log import Phase, RefinedLog, Trace

MODES = ("classic", "imlc", "refined")

Pair = tuple[str, str]


@dataclass
class Dfg:
    """Activity graph with edge frequencies.

    ``starts``/``ends`` hold the frequencies of the edges from the artificial
    source and into the artificial sink.
    """

    nodes: frozenset[str]
    edges: dict[Pair, int]
    starts: dict[str, int] = field(default_factory=dict)
    ends: dict[str, int] = field(default_factory=dict)
    self_loops: frozenset[str] = frozenset()
    short_loops: frozenset[Pair] = frozenset()
    mode: str = "refined"

    def copy(self, **changes) -> Dfg:
        base = replace(self, edges=dict(self.edges), starts=dict(self.starts), ends=dict(self.ends))
        return replace(base, **changes) if changes else base

    def edge_set(self) -> set[Pair]:
        return set(self.edges)

    def successors(self, node: str) -> list[str]:
        return sorted(b for (a, b) in self.edges if a == node)

    def predecessors(self, node: str) -> list[str]:
        return sorted(a for (a, b) in self.edges if b == node)


def _refined_edges(trace: Trace, edges: Counter, starts: Counter, ends: Counter):
    evs = trace.events
    n = len(evs)
    for i, ev in enumerate(evs):
        if ev.phase is not Phase.END:
            continue
        for j in range(i + 1, n):
            nxt = evs[j]
            if nxt.phase is Phase.END:
                break
            edges[(ev.label, nxt.label)] += 1
    # artificial source behaves as an end event before the trace,
    # the artificial sink as a start event after it
    for ev in evs:
        if ev.phase is Phase.END:
            break
        starts[ev.label] += 1
    for ev in reversed(evs):
        if ev.phase is Phase.END:
            ends[ev.label] += 1
            break


def _instance_ids(trace: Trace) -> list[int]:
    """FIFO instance id for every event (orphans get their own id)."""
    open_: dict[str, list[int]] = {}
    ids = []
    nxt = 0
    for ev in trace.events:
        if ev.phase is Phase.START:
            ids.append(nxt)
            open_.setdefault(ev.label, []).append(nxt)
            nxt += 1
        else:
            pending = open_.get(ev.label)
            if pending:
                ids.append(pending.pop(0))
            else:
                ids.append(nxt)
                nxt += 1
    return ids


def _imlc_edges(trace: Trace, edges: Counter, starts: Counter, ends: Counter):
    evs = trace.events
    inst = _instance_ids(trace)
    n = len(evs)
    for i in range(n):
        started: set[int] = set()
        for j in range(i + 1, n):
            ej = evs[j]
            if inst[i] != inst[j]:
                edges[(evs[i].label, ej.label)] += 1
            # a full lifecycle strictly inside ]i, j'[ blocks every later j'
            if ej.phase is Phase.END and inst[j] in started:
                break
            if ej.phase is Phase.START:
                started.add(inst[j])
    if evs:
        starts[evs[0].label] += 1
        ends[evs[-1].label] += 1


def _plain_edges(seq: list[str], edges: Counter, starts: Counter, ends: Counter):
    for a, b in zip(seq, seq[1:]):
        edges[(a, b)] += 1
    if seq:
        starts[seq[0]] += 1
        ends[seq[-1]] += 1


def plain_dfg(sequences, mode: str = "classic") -> Dfg:
    """Directly-follows graph of plain label sequences."""
    edges: Counter = Counter()
    starts: Counter = Counter()
    ends: Counter = Counter()
    nodes = set()
    for seq in sequences:
        nodes.update(seq)
        _plain_edges(list(seq), edges, starts, ends)
    return Dfg(frozenset(nodes), dict(edges), dict(starts), dict(ends), mode=mode)


def build_dfg(log: RefinedLog, mode: str = "refined") -> Dfg:
    """Build the DFG of ``log``.

    ``classic`` applies the plain directly-follows relation to the label
    sequence of all lifecycle events; ``imlc`` relates any two lifecycle events
    with no complete lifecycle in between; ``refined`` relates an end event of
    x to a later start event of y with no end event in between.
    """
    if mode not in MODES:
        raise ValueError(f"unknown relation mode {mode!r}")
    if not log.traces:
        raise ValueError("cannot build a DFG from an empty log")
    if mode == "classic":
        return plain_dfg((t.labels() for t in log.traces), mode="classic")
    edges: Counter = Counter()
    starts: Counter = Counter()
    ends: Counter = Counter()
    builder = _refined_edges if mode == "refined" else _imlc_edges
    for trace in log.traces:
        builder(trace, edges, starts, ends)
    return Dfg(log.alphabet, dict(edges), dict(starts), dict(ends), mode=mode)


def end_projection_dfg(log: RefinedLog) -> Dfg:
    """Plain DFG over end events only (the lifecycle-free view of the log)."""
    return plain_dfg((t.end_projection() for t in log.traces), mode="classic")


def short_loop_patterns(sequences) -> set[Pair]:
    """Unordered pairs {x, y} (x != y) for which some sequence contains x, y, x."""
    found = set()
    for seq in sequences:
        for a, b, c in zip(seq, seq[1:], seq[2:]):
            if a == c and a != b:
                found.add(tuple(sorted((a, b))))
    return found


def discover_loops(dfg: Dfg, log: RefinedLog, concurrent=None) -> Dfg:
    """Annotate self-loops (removing their edges) and short loops.

    ``concurrent`` optionally names pairs already accepted as concurrent; those
    are not short loops.
    """
    self_loops = frozenset(a for (a, b) in dfg.edges if a == b)
    edges = {e: f for e, f in dfg.edges.items() if e[0] != e[1]}
    pairs = short_loop_patterns(t.end_projection() for t in log.traces)
    if concurrent:
        pairs -= {tuple(sorted(p)) for p in concurrent}
    return dfg.copy(edges=edges, self_loops=self_loops, short_loops=frozenset(pairs))


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(dfg: Dfg) -> str:
    lines = ["digraph dfg {", "  rankdir=LR;", '  "<source>" [shape=point];', '  "<sink>" [shape=doublecircle,label=""];']
    for node in sorted(dfg.nodes):
        extra = ",peripheries=2" if node in dfg.self_loops else ""
        lines.append(f"  {_dot_id(node)} [shape=box{extra}];")
    for node, f in sorted(dfg.starts.items()):
        lines.append(f'  "<source>" -> {_dot_id(node)} [label="{f}"];')
    for (a, b), f in sorted(dfg.edges.items()):
        lines.append(f'  {_dot_id(a)} -> {_dot_id(b)} [label="{f}"];')
    for node, f in sorted(dfg.ends.items()):
        lines.append(f'  {_dot_id(node)} -> "<sink>" [label="{f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
