"""Token-game semantics, bounded soundness checking, simplicity metrics and a
bounded-language oracle for BPMN models."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field
from itertools import combinations

import networkx as nx

from .bpmn import BpmnModel, Kind
from .graphs import matching_join, to_digraph

DEFAULT_STATE_BOUND = 10**6
DEFAULT_TOKEN_CAP = 8


class VerificationError(ValueError):
    pass


class LanguageExplosion(RuntimeError):
    def __init__(self, partial: int):
        super().__init__(f"language enumeration exceeded its bound after {partial} sequences")
        self.partial = partial


def _subsets(items):
    for r in range(1, len(items) + 1):
        yield from combinations(items, r)


class Semantics:
    """Enabling and firing rules over markings (tuples of per-flow token counts).

    OR-joins wait while a token elsewhere can still reach one of their unmarked
    inputs. For an OR-join paired with an OR-split only tokens inside that block
    count; unpaired OR-joins on a cycle are rejected.
    """

    def __init__(self, model: BpmnModel):
        model.check()
        self.model = model
        self.flows = sorted(model.flows)
        self.index = {f: i for i, f in enumerate(self.flows)}
        self.order = sorted(model.nodes)
        self.ins = {n: [self.index[(s, n)] for s in sorted(model.inc[n])] for n in self.order}
        self.outs = {n: [self.index[(n, t)] for t in sorted(model.out[n])] for n in self.order}
        self.labels = {n: model.nodes[n].label for n in model.tasks()}
        self.kinds = {n: model.nodes[n].kind for n in self.order}
        self.watch = self._or_join_watch()

    def _or_join_watch(self) -> dict[str, dict[int, frozenset[int]]]:
        model = self.model
        joins = [n for n in model.gateways(Kind.OR) if len(model.inc[n]) >= 2]
        if not joins:
            return {}
        g = to_digraph(model)
        pdom = nx.immediate_dominators(g.reverse(copy=False), model.end)
        dom = nx.immediate_dominators(g, model.start)
        paired = {}
        for s in model.gateways(Kind.OR, "split"):
            j = matching_join(model, s, g, pdom, dom)
            if j is not None:
                paired[j] = s
        watch = {}
        for j in joins:
            h = g.copy()
            h.remove_node(j)
            region = None
            if j in paired:
                s = paired[j]
                region = nx.descendants(h, s) | {s}
            elif any(j in c and len(c) > 1 for c in nx.strongly_connected_components(g)):
                raise VerificationError(f"unsupported OR-join context: {j} lies on a cycle "
                                        "without a paired OR-split")
            per_input = {}
            for src in sorted(model.inc[j]):
                fi = self.index[(src, j)]
                can_reach = nx.ancestors(h, src) | {src}
                if region is not None:
                    can_reach &= region
                per_input[fi] = frozenset(
                    self.index[(a, b)] for (a, b) in self.flows
                    if b in can_reach and (a, b) != (src, j) and b != j)
            watch[j] = per_input
        return watch

    def initial(self) -> tuple[int, ...]:
        m = [0] * len(self.flows)
        for i in self.outs[self.model.start]:
            m[i] += 1
        return tuple(m)

    def _or_join_ready(self, n, marking) -> bool:
        for fi, pending in self.watch[n].items():
            if marking[fi]:
                continue
            if any(marking[g] for g in pending):
                return False
        return True

    def transitions(self, marking):
        """Yield (node, task label or None, produced flow indices, consumed flow indices, ends)."""
        for n in self.order:
            kind = self.kinds[n]
            ins = self.ins[n]
            if kind is Kind.START:
                continue
            if kind is Kind.END:
                for i in ins:
                    if marking[i]:
                        yield n, None, (), (i,), 1
                continue
            marked = [i for i in ins if marking[i]]
            if not marked:
                continue
            outs = self.outs[n]
            label = self.labels.get(n)
            if kind is Kind.TASK:
                for i in marked:
                    yield n, label, tuple(outs), (i,), 0
            elif kind is Kind.XOR:
                for i in marked:
                    for o in outs:
                        yield n, None, (o,), (i,), 0
            elif kind is Kind.AND:
                if len(marked) == len(ins):
                    yield n, None, tuple(outs), tuple(ins), 0
            else:  # OR
                if len(ins) > 1:
                    if not self._or_join_ready(n, marking):
                        continue
                    consumed = tuple(marked)
                else:
                    consumed = (marked[0],)
                for sub in _subsets(outs):
                    yield n, None, sub, consumed, 0

    @staticmethod
    def fire(marking, produced, consumed):
        m = list(marking)
        for i in consumed:
            m[i] -= 1
        for i in produced:
            m[i] += 1
        return tuple(m)


@dataclass
class SoundnessReport:
    deadlock_free: bool
    proper_completion: bool
    no_dead_activities: bool
    explored_states: int
    verdict: str
    reasons: list[str] = field(default_factory=list)
    bound_hit: bool = False

    @property
    def sound(self) -> bool:
        return self.verdict == "sound"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def check_soundness(model: BpmnModel, state_bound: int = DEFAULT_STATE_BOUND,
                    token_cap: int = DEFAULT_TOKEN_CAP) -> SoundnessReport:
    """Explore the reachability graph of the token game.

    Markings holding more than ``token_cap`` tokens on one flow are not expanded
    further; like hitting ``state_bound`` this makes a clean result inconclusive.
    """
    if state_bound < 1:
        raise ValueError("state_bound must be >= 1")
    sem = Semantics(model)
    init = (sem.initial(), 0)
    ids = {init: 0}
    states = [init]
    succ: list[list[int]] = [[]]
    fired_tasks = set()
    reasons = []
    proper = True
    truncated = False
    capped = False
    dead_markings = 0

    queue = deque([0])
    while queue:
        sid = queue.popleft()
        marking, ends = states[sid]
        if ends:
            # the end event fired: anything left over is improper completion
            if any(marking):
                if proper:
                    reasons.append("end event reached while tokens remain")
                proper = False
            continue
        if max(marking, default=0) > token_cap:
            capped = True
            continue
        moved = False
        for node, label, produced, consumed, end in sem.transitions(marking):
            moved = True
            if label is not None:
                fired_tasks.add(node)
            nxt = (sem.fire(marking, produced, consumed), ends + end)
            tid = ids.get(nxt)
            if tid is None:
                if len(states) >= state_bound:
                    truncated = True
                    continue
                tid = len(states)
                ids[nxt] = tid
                states.append(nxt)
                succ.append([])
                queue.append(tid)
            succ[sid].append(tid)
        if not moved:
            dead_markings += 1

    complete = not truncated and not capped
    deadlock_free = True
    if dead_markings:
        deadlock_free = False
        reasons.append(f"{dead_markings} reachable marking(s) without enabled elements")
    elif complete:
        pred: list[list[int]] = [[] for _ in states]
        for s, ts in enumerate(succ):
            for t in ts:
                pred[t].append(s)
        good = {i for i, (_, e) in enumerate(states) if e}
        todo = list(good)
        while todo:
            for p in pred[todo.pop()]:
                if p not in good:
                    good.add(p)
                    todo.append(p)
        if len(good) < len(states):
            deadlock_free = False
            reasons.append("some executions can never reach the end event")

    no_dead = True
    unfired = sorted(sem.labels[t] or t for t in model.tasks() if t not in fired_tasks)
    if unfired and complete:
        no_dead = False
        reasons.append(f"dead activities: {unfired}")

    if truncated:
        reasons.append(f"state bound {state_bound} hit")
    if capped:
        reasons.append(f"token cap {token_cap} exceeded on some flow")
    if not (deadlock_free and proper and no_dead):
        verdict = "unsound"
    elif complete:
        verdict = "sound"
    else:
        verdict = "inconclusive"
    return SoundnessReport(deadlock_free, proper, no_dead, len(states), verdict, reasons,
                           bound_hit=not complete)


def compute_size(model: BpmnModel) -> int:
    return len(model.nodes)


def compute_cfc(model: BpmnModel) -> int:
    """XOR-split with n branches adds n, AND-split adds 1, OR-split adds 2**n - 1."""
    total = 0
    for n in model.gateways(direction="split"):
        k = len(model.out[n])
        kind = model.kind(n)
        if kind is Kind.XOR:
            total += k
        elif kind is Kind.AND:
            total += 1
        else:
            total += 2**k - 1
    return total


def language_upto_k(model: BpmnModel, k: int, max_states: int = 2_000_000,
                    token_cap: int = DEFAULT_TOKEN_CAP) -> set[tuple[str, ...]]:
    """Task sequences of at most ``k`` tasks produced by complete, proper executions."""
    if k < 1:
        raise ValueError("k must be >= 1")
    sem = Semantics(model)
    start = (sem.initial(), ())
    seen = {start}
    stack = [start]
    found = set()
    while stack:
        marking, seq = stack.pop()
        for node, label, produced, consumed, end in sem.transitions(marking):
            nm = sem.fire(marking, produced, consumed)
            if end:
                if not any(nm):
                    found.add(seq)
                continue
            nseq = seq + (label,) if label is not None else seq
            if len(nseq) > k or max(nm) > token_cap:
                continue
            state = (nm, nseq)
            if state not in seen:
                seen.add(state)
                if len(seen) > max_states:
                    raise LanguageExplosion(len(found))
                stack.append(state)
    return found


def is_structured(model: BpmnModel) -> bool:
    """True if the model reduces to a single flow by collapsing sequences,
    same-kind split/join bonds and XOR loops."""
    out: dict[str, dict[str, int]] = {n: {} for n in model.nodes}
    for s, t in model.flows:
        out[s][t] = out[s].get(t, 0) + 1
    kinds = {n: model.kind(n) for n in model.nodes}

    def inc_of(n):
        return {s: c[n] for s, c in out.items() if n in c}

    changed = True
    while changed:
        changed = False
        for n in list(out):
            if kinds[n] in (Kind.START, Kind.END):
                continue
            ins, outs = inc_of(n), out[n]
            nin, nout = sum(ins.values()), sum(outs.values())
            # sequence
            if nin == 1 and nout == 1:
                (s,), (t,) = ins, outs
                if s == n or t == n:
                    continue
                del out[n]
                out[s].pop(n)
                out[s][t] = out[s].get(t, 0) + 1
                changed = True
                break
            # bond: parallel flows between a split and a join of the same kind
            for t, c in list(outs.items()):
                if c > 1 and t != n and kinds[t] == kinds[n] and kinds[n] in (Kind.XOR, Kind.AND, Kind.OR):
                    outs[t] = 1
                    changed = True
            if changed:
                break
            # XOR loop: join -> split and split -> join
            if kinds[n] is Kind.XOR:
                for t in list(outs):
                    if kinds[t] is Kind.XOR and n in out[t] and t != n and outs[t] == 1 and out[t][n] == 1:
                        # n is the loop entry (join) if it has another incoming flow
                        if sum(ins.values()) >= 2 and sum(out[t].values()) >= 2:
                            out[t].pop(n)
                            changed = True
                            break
                if changed:
                    break
    start, end = model.start, model.end
    rest = [n for n in out if n not in (start, end)]
    return not rest and out[start] == {end: 1}
