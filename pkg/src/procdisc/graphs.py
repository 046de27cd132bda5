"""Graph helpers over BpmnModel: loop edges, dominators, split/join pairing."""

from __future__ import annotations

import networkx as nx

from .bpmn import BpmnModel


def back_edges(model: BpmnModel) -> set[tuple[str, str]]:
    """Loop edges by loop nesting: in every cyclic strongly connected component
    the entries are nodes with a predecessor outside it, and edges from inside
    into an entry close the loop. Components of what remains are handled the
    same way until the graph is acyclic. Unlike a depth-first search this does
    not depend on visit order when a loop has several entries."""
    h = to_digraph(model)
    found = set()
    for n in list(h.nodes):
        if h.has_edge(n, n):
            found.add((n, n))
            h.remove_edge(n, n)
    work = [set(h.nodes)]
    while work:
        nodes = work.pop()
        for comp in nx.strongly_connected_components(h.subgraph(nodes)):
            if len(comp) < 2:
                continue
            entries = [v for v in comp if any(p not in comp for p in h.predecessors(v))]
            if not entries:
                entries = [min(comp)]
            for v in entries:
                for u in list(h.predecessors(v)):
                    if u in comp:
                        found.add((u, v))
                        h.remove_edge(u, v)
            work.append(comp)
    return found


def loop_edges(model: BpmnModel) -> set[tuple[str, str]]:
    """Back edges with each cut moved upstream while a node sends all of its
    outgoing flows back and has a single incoming flow: a gateway whose every
    branch re-enters the loop lies on the loop path rather than closing it."""
    found = back_edges(model)
    changed = True
    while changed:
        changed = False
        for n in sorted(model.nodes):
            outs = model.out[n]
            if (n == model.start or len(model.inc[n]) != 1 or not outs
                    or any((n, t) not in found for t in outs)):
                continue
            (p,) = model.inc[n]
            if (p, n) in found:
                continue
            found -= {(n, t) for t in outs}
            found.add((p, n))
            changed = True
    return found


def topological_order(model: BpmnModel, skip: set) -> list[str]:
    """Topological order of the model without the ``skip`` edges (ties sorted)."""
    g = nx.DiGraph()
    g.add_nodes_from(model.nodes)
    g.add_edges_from(e for e in model.flows if e not in skip)
    return list(nx.lexicographical_topological_sort(g))


def to_digraph(model: BpmnModel) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(model.nodes)
    g.add_edges_from(model.flows)
    return g


def matching_join(model: BpmnModel, split: str, g: nx.DiGraph | None = None,
                  pdom=None, dom=None) -> str | None:
    """Nearest join gateway that post-dominates ``split`` and is dominated by it."""
    g = g if g is not None else to_digraph(model)
    if pdom is None:
        pdom = nx.immediate_dominators(g.reverse(copy=False), model.end)
    if dom is None:
        dom = nx.immediate_dominators(g, model.start)
    if split not in pdom:
        return None
    node = split
    while True:
        parent = pdom.get(node)
        if parent is None or parent == node:
            return None
        node = parent
        if model.is_join(node) and _dominates(dom, split, node):
            return node


def _dominates(idom, a, b) -> bool:
    while True:
        if b == a:
            return True
        nxt = idom.get(b)
        if nxt is None or nxt == b:
            return False
        b = nxt


def on_cycle(g: nx.DiGraph, node) -> bool:
    return any(node in comp and len(comp) > 1 for comp in nx.strongly_connected_components(g)) \
        or g.has_edge(node, node)
