"""BPMN synthesis from a filtered DFG: split gateways, join gateways, the
loop-edge repair for AND-splits and inclusive-split detection."""

from __future__ import annotations

import logging
from itertools import combinations, product

import networkx as nx

from .bpmn import BpmnModel, Kind
from .concurrency import ConcurrencyRelation, ConcurrencyStats
from .dfg import Dfg
from .graphs import back_edges, loop_edges, matching_join, to_digraph, topological_order

log = logging.getLogger(__name__)

STATE_CAP = 200_000
FAMILY_CAP = 4096


# ---------------------------------------------------------------------------
# gateway trees

def _components(items, linked) -> list[list]:
    comps = []
    seen = set()
    for x in items:
        if x in seen:
            continue
        comp = [x]
        seen.add(x)
        for y in comp:
            for z in items:
                if z not in seen and linked(y, z):
                    seen.add(z)
                    comp.append(z)
        comps.append(sorted(comp))
    return comps


def gateway_tree(items: list, related, strict: bool = False):
    """Decompose ``items`` into nested XOR/AND groups.

    Items are AND-related when ``related(a, b)``. Groups not linked to each other
    are exclusive (XOR); when the complement splits instead, the groups run in
    parallel (AND). If neither splits (a prime relation) the items fall back to
    an XOR, or ``None`` is returned when ``strict``.
    """
    items = sorted(items)
    if len(items) == 1:
        return items[0]
    comps = _components(items, related)
    if len(comps) > 1:
        kids = [gateway_tree(c, related, strict) for c in comps]
        if strict and any(k is None for k in kids):
            return None
        return (Kind.XOR, _flatten(Kind.XOR, kids))
    anti = _components(items, lambda a, b: not related(a, b))
    if len(anti) > 1:
        kids = [gateway_tree(c, related, strict) for c in anti]
        if strict and any(k is None for k in kids):
            return None
        return (Kind.AND, _flatten(Kind.AND, kids))
    if strict:
        return None
    return (Kind.XOR, items)


def _flatten(kind, kids):
    flat = []
    for k in kids:
        if isinstance(k, tuple) and k[0] is kind:
            flat.extend(k[1])
        else:
            flat.append(k)
    return flat


def tree_family(tree, cap: int = FAMILY_CAP):
    """Sets of leaves that a join tree accepts in one firing."""
    if not isinstance(tree, tuple):
        return {frozenset([tree])}
    kind, kids = tree
    fams = [tree_family(k, cap) for k in kids]
    if kind is Kind.XOR:
        return set().union(*fams)
    total = 1
    for f in fams:
        total *= len(f)
    if total > cap:
        raise OverflowError("join family too large")
    return {frozenset().union(*combo) for combo in product(*fams)}


def join_tree(inputs, family):
    """Smallest XOR/AND join tree over ``inputs`` accepting exactly ``family``,
    or ``None`` if no such tree exists."""
    seen = sorted({x for c in family for x in c})
    never = [x for x in sorted(inputs) if x not in seen]
    if not seen:
        return (Kind.XOR, never) if len(never) > 1 else never[0]
    together = {(a, b) for c in family for a in c for b in c if a != b}
    tree = gateway_tree(seen, lambda a, b: (a, b) in together, strict=True)
    if tree is None:
        return None
    try:
        if tree_family(tree) != set(family):
            return None
    except OverflowError:
        return None
    if never:
        kids = tree[1] if isinstance(tree, tuple) and tree[0] is Kind.XOR else [tree]
        tree = (Kind.XOR, list(kids) + never)
    return tree


def _materialize(model: BpmnModel, origin: str, tree, merge_xor_into: str | None = None):
    """Attach a split tree below ``origin`` whose leaves are node ids."""
    if not isinstance(tree, tuple):
        model.add_flow(origin, tree)
        return
    kind, kids = tree
    if merge_xor_into is not None and kind is Kind.XOR:
        g = merge_xor_into
    else:
        g = model.add_node(kind)
        model.add_flow(origin, g)
    for k in kids:
        _materialize(model, g, k)


# ---------------------------------------------------------------------------
# splits

def discover_splits(fdfg: Dfg, rel: ConcurrencyRelation) -> BpmnModel:
    """Create tasks and split gateways; merge points are left with several
    incoming flows for :func:`discover_joins`."""
    m = BpmnModel()
    start = m.add_node(Kind.START, node_id="start")
    end = m.add_node(Kind.END, node_id="end")
    ids = {}
    for i, label in enumerate(sorted(fdfg.nodes), 1):
        ids[label] = m.add_node(Kind.TASK, label, node_id=f"task{i}")
    labels = {v: k for k, v in ids.items()}

    def related(a, b):
        return a in labels and b in labels and rel.concurrent(labels[a], labels[b])

    succ: dict[str, list[str]] = {start: [ids[x] for x in sorted(fdfg.starts)]}
    for label in sorted(fdfg.nodes):
        succ[ids[label]] = []
    for (a, b) in sorted(fdfg.edges):
        succ[ids[a]].append(ids[b])
    for label in sorted(fdfg.ends):
        succ[ids[label]].append(end)

    for origin in [start] + [ids[x] for x in sorted(fdfg.nodes)]:
        targets = succ[origin]
        if not targets:
            m.flags.append(f"{origin} had no successor and was connected to the end event")
            targets = [end]
        tree = gateway_tree(targets, related)
        if len(targets) > 1 and gateway_tree(targets, related, strict=True) is None:
            m.flags.append(f"successors of {origin} have no nested XOR/AND form; "
                           "an XOR-split was used for the unresolved part")
        label = labels.get(origin)
        if label is not None and label in fdfg.self_loops:
            xs = m.add_node(Kind.XOR)
            m.add_flow(origin, xs)
            m.add_flow(xs, origin)
            _materialize(m, xs, tree, merge_xor_into=xs)
        else:
            _materialize(m, origin, tree)
    return m


# ---------------------------------------------------------------------------
# joins

def _propagate(model: BpmnModel, skip: set, result: dict | None = None):
    """Walk the acyclic part of the model in topological order, tracking every
    reachable set of live flows, and yield (node, forward inputs, family of input
    sets that can hold tokens together, overflow) for each merge node.

    Tokens sent along a back edge stay in the state. States holding such a token,
    or one that can only continue into a back edge, are left out of merge families
    as long as an alternative exists, since the loop is re-entered before those
    tokens can merge downstream.
    After the walk ``result["final"]`` holds the final states, from which the
    families of back-edge inputs are read.
    """
    order = topological_order(model, skip)
    start = model.start
    states = {frozenset((start, t) for t in model.out[start])}
    overflow = False
    exits = {model.end}
    todo = [model.end]
    while todo:
        x = todo.pop()
        for p in model.inc[x]:
            if p not in exits and (p, x) not in skip:
                exits.add(p)
                todo.append(p)
    looping = set(skip) | {f for f in model.flows if f[1] not in exits}
    for n in order:
        if n == start:
            continue
        fwd = [(s, n) for s in sorted(model.inc[n]) if (s, n) not in skip]
        fwd_set = frozenset(fwd)
        if len(fwd) >= 2:
            settled = [st for st in states if not (st & looping)] or states
            family = {st & fwd_set for st in settled} - {frozenset()}
            yield n, fwd, family, overflow
        outs = [(n, t) for t in sorted(model.out[n])]
        kind = model.kind(n)
        nxt = set()
        for st in states:
            got = st & fwd_set
            if not got:
                nxt.add(st)
                continue
            base = st - got
            if kind is Kind.XOR and len(outs) > 1:
                for f in outs:
                    nxt.add(base | {f})
            elif kind is Kind.OR and len(outs) > 1:
                for r in range(1, len(outs) + 1):
                    for sub in combinations(outs, r):
                        nxt.add(base | set(sub))
            else:
                nxt.add(base | set(outs))
        states = nxt
        if len(states) > STATE_CAP:
            # keep going with a truncated view; later joins fall back to OR
            overflow = True
            states = set(sorted(states, key=sorted)[:STATE_CAP])
    if result is not None:
        result["final"] = states
        result["overflow"] = overflow


def discover_joins(model: BpmnModel, fdfg: Dfg | None = None) -> BpmnModel:
    """Insert join gateways in front of every node with several incoming flows.

    A join is chosen from the combinations of its inputs that can carry tokens
    together: AND for inputs that always arrive together, XOR for inputs that
    never do, nested trees for mixtures, and an OR-join where no XOR/AND tree
    matches. Loop re-entries are joined the same way (XOR when no tree matches)
    and then merged with the forward inputs through an XOR-join.
    """
    m = model.copy()
    skip = back_edges(m)
    plans = {}
    walk = {}
    for n, fwd, family, overflow in _propagate(m, skip, walk):
        sources = [s for s, _ in fwd]
        tree = None
        if not overflow:
            tree = join_tree(sources, {frozenset(s for s, _ in c) for c in family})
        if tree is None:
            tree = (Kind.OR, sources)
            m.flags.append(f"OR-join inserted before {n}"
                           + (" (state cap reached)" if overflow else ""))
        plans[n] = tree
    back_plans = {}
    for n in sorted(m.nodes):
        back = [(s, n) for s in sorted(m.inc[n]) if (s, n) in skip]
        if not back:
            continue
        if n not in plans:
            fwd = [s for s in m.inc[n] if (s, n) not in skip]
            plans[n] = fwd[0] if fwd else None
        sources = [s for s, _ in back]
        tree = None
        if len(back) > 1 and not walk.get("overflow"):
            back_set = frozenset(back)
            family = {frozenset(s for s, _ in st & back_set) for st in walk["final"]}
            tree = join_tree(sources, family - {frozenset()})
        if tree is None:
            tree = sources[0] if len(sources) == 1 else (Kind.XOR, sources)
            if len(sources) > 1:
                m.flags.append(f"loop re-entries into {n} merged by XOR without evidence")
        back_plans[n] = tree
    for n in sorted(plans):
        tree = plans[n]
        target = n
        if n in back_plans:
            xj = m.add_node(Kind.XOR)
            m.add_flow(xj, n)
            target = xj
            _build_join(m, back_plans[n], n, xj)
        _build_join(m, tree, n, target)
    m.simplify()
    return m


def _build_join(m: BpmnModel, tree, old_target: str, new_target: str) -> None:
    """Re-route the inputs named by ``tree`` (leaves are source node ids)
    through join gateways ending at ``new_target``."""
    if tree is None:
        return
    if not isinstance(tree, tuple):
        if new_target != old_target:
            m.retarget(tree, old_target, new_target)
        return
    kind, kids = tree
    g = m.add_node(kind)
    for k in kids:
        _build_join(m, k, old_target, g)
    m.add_flow(g, new_target)


# ---------------------------------------------------------------------------
# heuristics

def repair_improper_completion(model: BpmnModel) -> BpmnModel:
    """Move loop-edges off AND-splits: each AND-split sourcing a back-edge gets
    a preceding XOR-split that becomes the source of those back-edges."""
    m = model.copy()
    for _ in range(2 * len(m.nodes) + 2):
        skip = loop_edges(m)
        bad = sorted(g for g in m.gateways(Kind.AND, "split")
                     if any((g, t) in skip for t in m.out[g]))
        if not bad:
            break
        g = bad[0]
        loops = sorted(t for t in m.out[g] if (g, t) in skip)
        (parent,) = m.inc[g]
        x = m.add_node(Kind.XOR)
        m.retarget(parent, g, x)
        m.add_flow(x, g)
        for t in loops:
            m.remove_flow(g, t)
            m.add_flow(x, t)
        if not m.out[g]:
            m.remove_node(g)
        m.simplify()
    return m


def branch_tasks(model: BpmnModel, split: str) -> list[str]:
    """Task labels first reached from ``split`` through gateways only."""
    found = set()
    seen = {split}
    todo = list(model.out[split])
    while todo:
        n = todo.pop()
        if n in seen:
            continue
        seen.add(n)
        node = model.nodes[n]
        if node.kind is Kind.TASK:
            found.add(node.label)
        elif node.is_gateway:
            todo.extend(model.out[n])
    return sorted(found)


def or_eligible(stats: ConcurrencyStats, a: str, b: str) -> bool:
    """Both concurrent and mutually exclusive, with at least one observation of
    the rarer kind for every two of the other."""
    conc, excl = stats.concurrent_traces(a, b), stats.exclusive(a, b)
    if conc < 1 or excl < 1:
        return False
    return min(conc, excl) / max(conc, excl) >= 0.5


def detect_or_splits(model: BpmnModel, stats: ConcurrencyStats) -> BpmnModel:
    """Turn AND-split/join pairs into OR pairs when most successor pairs are
    inclusive rather than strictly parallel."""
    m = model.copy()
    g = to_digraph(m)
    pdom = nx.immediate_dominators(g.reverse(copy=False), m.end)
    dom = nx.immediate_dominators(g, m.start)
    for s in sorted(m.gateways(Kind.AND, "split")):
        labels = branch_tasks(m, s)
        pairs = list(combinations(labels, 2))
        if not pairs:
            continue
        eligible = sum(or_eligible(stats, a, b) for a, b in pairs)
        if 2 * eligible <= len(pairs):
            continue
        j = matching_join(m, s, g, pdom, dom)
        if j is None or m.kind(j) is not Kind.AND:
            m.flags.append(f"AND-split {s} qualifies as inclusive but has no matching AND-join")
            continue
        log.debug("AND pair %s/%s -> OR (%d/%d eligible pairs)", s, j, eligible, len(pairs))
        m.nodes[s].kind = Kind.OR
        m.nodes[j].kind = Kind.OR
    return m
