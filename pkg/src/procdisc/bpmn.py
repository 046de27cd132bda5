"""BPMN process model: graph representation, block builder, XML and DOT I/O."""

from __future__ import annotations

import enum
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field


class ModelError(ValueError):
    pass


class Kind(str, enum.Enum):
    TASK = "task"
    XOR = "xor"
    AND = "and"
    OR = "or"
    START = "start"
    END = "end"


GATEWAYS = (Kind.XOR, Kind.AND, Kind.OR)


@dataclass
class Node:
    id: str
    kind: Kind
    label: str | None = None

    @property
    def is_gateway(self) -> bool:
        return self.kind in GATEWAYS


@dataclass
class BpmnModel:
    """Nodes keyed by id and a set of flows (ordered node pairs).

    Adjacency is kept in insertion order; all algorithms iterate it sorted where
    determinism matters.
    """

    nodes: dict[str, Node] = field(default_factory=dict)
    out: dict[str, list[str]] = field(default_factory=dict)
    inc: dict[str, list[str]] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    _counter: int = 0

    # construction -------------------------------------------------------
    def add_node(self, kind: Kind, label: str | None = None, node_id: str | None = None) -> str:
        if node_id is None:
            self._counter += 1
            node_id = f"gw{self._counter}" if kind in GATEWAYS else f"n{self._counter}"
        if node_id in self.nodes:
            raise ModelError(f"duplicate node id {node_id!r}")
        self.nodes[node_id] = Node(node_id, kind, label)
        self.out[node_id] = []
        self.inc[node_id] = []
        return node_id

    def remove_node(self, node_id: str):
        for t in list(self.out[node_id]):
            self.remove_flow(node_id, t)
        for s in list(self.inc[node_id]):
            self.remove_flow(s, node_id)
        del self.nodes[node_id], self.out[node_id], self.inc[node_id]

    def add_flow(self, src: str, tgt: str):
        if tgt in self.out[src]:
            raise ModelError(f"duplicate flow {src}->{tgt}")
        self.out[src].append(tgt)
        self.inc[tgt].append(src)

    def remove_flow(self, src: str, tgt: str):
        self.out[src].remove(tgt)
        self.inc[tgt].remove(src)

    def retarget(self, src: str, old: str, new: str):
        """Point flow src->old at new, keeping its position in src's outgoing list."""
        i = self.out[src].index(old)
        self.out[src][i] = new
        self.inc[old].remove(src)
        self.inc[new].append(src)

    def copy(self) -> BpmnModel:
        return BpmnModel(
            {k: Node(n.id, n.kind, n.label) for k, n in self.nodes.items()},
            {k: list(v) for k, v in self.out.items()},
            {k: list(v) for k, v in self.inc.items()},
            list(self.flags),
            self._counter,
        )

    # queries ------------------------------------------------------------
    @property
    def flows(self) -> list[tuple[str, str]]:
        return [(s, t) for s in self.nodes for t in self.out[s]]

    def kind(self, node_id: str) -> Kind:
        return self.nodes[node_id].kind

    def of_kind(self, *kinds: Kind) -> list[str]:
        return [n for n, node in self.nodes.items() if node.kind in kinds]

    @property
    def start(self) -> str:
        return self._unique(Kind.START)

    @property
    def end(self) -> str:
        return self._unique(Kind.END)

    def _unique(self, kind: Kind) -> str:
        found = self.of_kind(kind)
        if len(found) != 1:
            raise ModelError(f"expected exactly one {kind.value} event, found {len(found)}")
        return found[0]

    def tasks(self) -> list[str]:
        return self.of_kind(Kind.TASK)

    def task_labels(self) -> list[str]:
        return sorted(self.nodes[t].label for t in self.tasks())

    def is_split(self, n: str) -> bool:
        return self.nodes[n].is_gateway and len(self.out[n]) >= 2

    def is_join(self, n: str) -> bool:
        return self.nodes[n].is_gateway and len(self.inc[n]) >= 2

    def gateways(self, kind: Kind | None = None, direction: str | None = None) -> list[str]:
        found = []
        for n, node in self.nodes.items():
            if not node.is_gateway or (kind is not None and node.kind != kind):
                continue
            if direction == "split" and not self.is_split(n):
                continue
            if direction == "join" and not self.is_join(n):
                continue
            found.append(n)
        return found

    def validate(self) -> list[str]:
        problems = []
        for kind in (Kind.START, Kind.END):
            count = len(self.of_kind(kind))
            if count != 1:
                problems.append(f"expected one {kind.value} event, found {count}")
        for n, node in self.nodes.items():
            i, o = len(self.inc[n]), len(self.out[n])
            if node.kind is Kind.START and (i or o != 1):
                problems.append(f"start event {n} must have 0 incoming and 1 outgoing flow")
            elif node.kind is Kind.END and (o or i < 1):
                problems.append(f"end event {n} must have incoming and no outgoing flows")
            elif node.kind is Kind.TASK and (i != 1 or o != 1):
                problems.append(f"task {n} ({node.label}) has {i} incoming / {o} outgoing flows")
            elif node.is_gateway:
                if not ((i == 1 and o >= 2) or (i >= 2 and o == 1)):
                    problems.append(f"gateway {n} has {i} incoming / {o} outgoing flows")
        if not problems:
            seen = {self.start}
            todo = [self.start]
            while todo:
                for t in self.out[todo.pop()]:
                    if t not in seen:
                        seen.add(t)
                        todo.append(t)
            missing = sorted(set(self.nodes) - seen)
            if missing:
                problems.append(f"nodes unreachable from start: {missing}")
        return problems

    def check(self):
        problems = self.validate()
        if problems:
            raise ModelError("; ".join(problems))

    def simplify(self):
        """Remove gateways with a single incoming and single outgoing flow."""
        changed = True
        while changed:
            changed = False
            for n in list(self.nodes):
                node = self.nodes[n]
                if node.is_gateway and len(self.inc[n]) == 1 and len(self.out[n]) == 1:
                    s, t = self.inc[n][0], self.out[n][0]
                    if t in self.out[s] or s == n:
                        continue
                    self.remove_node(n)
                    self.add_flow(s, t)
                    changed = True
        return self


# ---------------------------------------------------------------------------
# block builder

def from_tree(tree) -> BpmnModel:
    """Build a block-structured model from a nested tuple tree.

    Leaves are task labels; inner nodes are ``("seq", ...)``, ``("xor", ...)``,
    ``("and", ...)``, ``("or", ...)`` or ``("loop", body[, redo])``.
    """
    m = BpmnModel()
    start = m.add_node(Kind.START, node_id="start")
    end = m.add_node(Kind.END, node_id="end")

    def build(t) -> tuple[str, str]:
        if isinstance(t, str):
            n = m.add_node(Kind.TASK, t)
            return n, n
        op, *kids = t
        if op == "seq":
            parts = [build(k) for k in kids]
            for (_, a), (b, _) in zip(parts, parts[1:]):
                m.add_flow(a, b)
            return parts[0][0], parts[-1][1]
        if op in ("xor", "and", "or"):
            kind = Kind(op)
            split = m.add_node(kind)
            join = m.add_node(kind)
            for k in kids:
                a, b = build(k)
                m.add_flow(split, a)
                m.add_flow(b, join)
            return split, join
        if op == "loop":
            join = m.add_node(Kind.XOR)
            split = m.add_node(Kind.XOR)
            a, b = build(kids[0])
            m.add_flow(join, a)
            m.add_flow(b, split)
            if len(kids) > 1:
                ra, rb = build(kids[1])
                m.add_flow(split, ra)
                m.add_flow(rb, join)
            else:
                m.add_flow(split, join)
            return join, split
        raise ModelError(f"unknown block {op!r}")

    first, last = build(tree)
    m.add_flow(start, first)
    m.add_flow(last, end)
    return m


# ---------------------------------------------------------------------------
# BPMN 2.0 XML

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
DI_NS = "http://www.omg.org/spec/BPMN/20100524/DI"
DC_NS = "http://www.omg.org/spec/DD/20100524/DC"
DD_DI_NS = "http://www.omg.org/spec/DD/20100524/DI"

_TAGS = {
    Kind.TASK: "task",
    Kind.XOR: "exclusiveGateway",
    Kind.AND: "parallelGateway",
    Kind.OR: "inclusiveGateway",
    Kind.START: "startEvent",
    Kind.END: "endEvent",
}
_KINDS = {v: k for k, v in _TAGS.items()}


def _layers(model: BpmnModel) -> dict[str, int]:
    depth = {model.start: 0}
    order = [model.start]
    for n in order:
        for t in sorted(model.out[n]):
            if t not in depth:
                depth[t] = depth[n] + 1
                order.append(t)
    for n in sorted(model.nodes):
        depth.setdefault(n, 0)
    return depth


def export_bpmn(model: BpmnModel, process_id: str = "process") -> bytes:
    model.check()
    ET.register_namespace("", BPMN_NS)
    ET.register_namespace("bpmndi", DI_NS)
    ET.register_namespace("dc", DC_NS)
    ET.register_namespace("di", DD_DI_NS)
    q = lambda tag, ns=BPMN_NS: f"{{{ns}}}{tag}"  # noqa: E731

    defs = ET.Element(q("definitions"), {
        "id": "definitions", "targetNamespace": "http://bpmn.io/schema/bpmn"})
    proc = ET.SubElement(defs, q("process"), {"id": process_id, "isExecutable": "false"})

    flow_ids = {}
    for s in sorted(model.nodes):
        for t in sorted(model.out[s]):
            flow_ids[(s, t)] = f"flow_{s}_{t}"

    for n in sorted(model.nodes):
        node = model.nodes[n]
        attrs = {"id": n}
        if node.label is not None:
            attrs["name"] = node.label
        if node.is_gateway:
            attrs["gatewayDirection"] = (
                "Diverging" if len(model.out[n]) > 1 else
                "Converging" if len(model.inc[n]) > 1 else "Unspecified")
        el = ET.SubElement(proc, q(_TAGS[node.kind]), attrs)
        for s in sorted(model.inc[n]):
            ET.SubElement(el, q("incoming")).text = flow_ids[(s, n)]
        for t in sorted(model.out[n]):
            ET.SubElement(el, q("outgoing")).text = flow_ids[(n, t)]
    for (s, t), fid in flow_ids.items():
        ET.SubElement(proc, q("sequenceFlow"), {"id": fid, "sourceRef": s, "targetRef": t})

    # trivial grid layout: column = BFS depth, row = order within column
    diagram = ET.SubElement(defs, q("BPMNDiagram", DI_NS), {"id": "diagram"})
    plane = ET.SubElement(diagram, q("BPMNPlane", DI_NS), {"id": "plane", "bpmnElement": process_id})
    depth = _layers(model)
    rows: dict[int, int] = {}
    centers = {}
    for n in sorted(model.nodes, key=lambda x: (depth[x], x)):
        col = depth[n]
        row = rows.get(col, 0)
        rows[col] = row + 1
        w, h = (100, 80) if model.nodes[n].kind is Kind.TASK else (36, 36) \
            if model.nodes[n].kind in (Kind.START, Kind.END) else (50, 50)
        x, y = 50 + col * 150, 50 + row * 120
        centers[n] = (x + w // 2, y + h // 2)
        shape = ET.SubElement(plane, q("BPMNShape", DI_NS), {"id": f"{n}_di", "bpmnElement": n})
        ET.SubElement(shape, q("Bounds", DC_NS), {"x": str(x), "y": str(y), "width": str(w), "height": str(h)})
    for (s, t), fid in flow_ids.items():
        edge = ET.SubElement(plane, q("BPMNEdge", DI_NS), {"id": f"{fid}_di", "bpmnElement": fid})
        for px, py in (centers[s], centers[t]):
            ET.SubElement(edge, q("waypoint", DD_DI_NS), {"x": str(px), "y": str(py)})

    ET.indent(defs)
    return ET.tostring(defs, encoding="utf-8", xml_declaration=True) + b"\n"


def import_bpmn(data: bytes) -> BpmnModel:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ModelError(f"malformed BPMN XML at {exc.position}") from None
    proc = root.find(f"{{{BPMN_NS}}}process")
    if proc is None:
        raise ModelError("no process element")
    m = BpmnModel()
    flows = []
    for el in proc:
        tag = el.tag.rsplit("}", 1)[-1]
        if tag in _KINDS:
            m.add_node(_KINDS[tag], el.get("name"), node_id=el.get("id"))
        elif tag == "sequenceFlow":
            flows.append((el.get("sourceRef"), el.get("targetRef")))
        elif tag in ("userTask", "serviceTask", "manualTask", "scriptTask"):
            m.add_node(Kind.TASK, el.get("name"), node_id=el.get("id"))
    for s, t in flows:
        if s not in m.nodes or t not in m.nodes:
            raise ModelError(f"sequence flow references unknown node {s!r} or {t!r}")
        m.add_flow(s, t)
    # keep generated ids clear of imported ones
    suffixes = [int(n[2:]) for n in m.nodes if n[:2] == "gw" and n[2:].isdigit()]
    suffixes += [int(n[1:]) for n in m.nodes if n[:1] == "n" and n[1:].isdigit()]
    m._counter = max(suffixes, default=0)
    return m


# ---------------------------------------------------------------------------
# DOT

_SHAPES = {
    Kind.TASK: 'shape=box,style=rounded',
    Kind.XOR: 'shape=diamond,label="X"',
    Kind.AND: 'shape=diamond,label="+"',
    Kind.OR: 'shape=diamond,label="O"',
    Kind.START: 'shape=circle,label=""',
    Kind.END: 'shape=doublecircle,label=""',
}


def to_dot(model: BpmnModel) -> str:
    lines = ["digraph bpmn {", "  rankdir=LR;"]
    for n in sorted(model.nodes):
        node = model.nodes[n]
        attrs = _SHAPES[node.kind]
        if node.kind is Kind.TASK:
            label = (node.label or "").replace('"', '\\"')
            attrs += f',label="{label}"'
        lines.append(f'  "{n}" [{attrs}];')
    for s in sorted(model.nodes):
        for t in sorted(model.out[s]):
            lines.append(f'  "{s}" -> "{t}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
