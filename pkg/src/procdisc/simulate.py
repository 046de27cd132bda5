"""Noise-free refined-log generation by timed execution of a BPMN model, plus
random block-structured models for fuzzing."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .bpmn import BpmnModel, Kind, from_tree
from .log import Event, Phase, RefinedLog, Trace
from .verify import Semantics, check_soundness


class SimulationError(ValueError):
    pass


@dataclass
class SimConfig:
    """Durations and gaps are in seconds.

    ``xor_weights`` weights an XOR branch by the label of the first task on it
    (``"<end>"`` for a branch reaching the end event); ``or_weights`` weights an
    OR subset by the frozenset of those labels. Missing entries weigh 1.
    """

    trace_count: int = 100
    seed: int = 0
    duration: tuple[float, float] = (300.0, 3600.0)
    durations: dict[str, tuple[float, float]] = field(default_factory=dict)
    gap: tuple[float, float] = (1.0, 60.0)
    split_jitter: float = 60.0
    force_overlap: bool = True
    xor_weights: dict[str, float] = field(default_factory=dict)
    or_weights: dict[frozenset, float] = field(default_factory=dict)
    max_steps: int = 10_000
    start_time: datetime = datetime(2020, 1, 1, tzinfo=timezone.utc)

    def __post_init__(self):
        if self.trace_count < 1:
            raise ValueError("trace_count must be >= 1")
        for lo, hi in [self.duration, *self.durations.values()]:
            if not 0 < lo <= hi:
                raise ValueError("durations must be strictly positive ranges")
        if self.force_overlap:
            min_dur = min(lo for lo, _ in [self.duration, *self.durations.values()])
            if self.split_jitter + self.gap[1] >= min_dur:
                raise ValueError("split_jitter + max gap must stay below the shortest duration "
                                 "so that parallel branches overlap")


def _branch_key(model: BpmnModel, node: str) -> str:
    seen = set()
    while model.nodes[node].is_gateway and node not in seen:
        seen.add(node)
        node = sorted(model.out[node])[0]
    kind = model.kind(node)
    if kind is Kind.TASK:
        return model.nodes[node].label
    return "<end>" if kind is Kind.END else node


class _Runner:
    def __init__(self, model: BpmnModel, config: SimConfig):
        self.model = model
        self.cfg = config
        self.sem = Semantics(model)
        self.rng = random.Random(config.seed)
        self.keys = {i: _branch_key(model, t) for i, (_, t) in enumerate(self.sem.flows)}

    def _duration(self, label):
        lo, hi = self.cfg.durations.get(label, self.cfg.duration)
        return self.rng.uniform(lo, hi)

    def _branch_delay(self):
        if self.cfg.force_overlap:
            return self.rng.uniform(0.0, self.cfg.split_jitter)
        lo, hi = self.cfg.duration
        return self.rng.uniform(0.0, 2 * hi)

    def run(self, case_id: str) -> Trace:
        sem, rng = self.sem, self.rng
        marking = list(sem.initial())
        times: dict[int, list[float]] = {i: [0.0] for i, c in enumerate(marking) if c}
        emitted: list[tuple[float, int, Event]] = []
        seq = 0
        for _ in range(self.cfg.max_steps):
            options = list(sem.transitions(tuple(marking)))
            if not options:
                raise SimulationError(f"case {case_id}: execution got stuck")
            node = options[0][0]
            same = [o for o in options if o[0] == node]
            kind = sem.kinds[node]
            if kind is Kind.XOR and len(same) > 1:
                consumed_flow = same[0][3]
                same = [o for o in same if o[3] == consumed_flow]
                weights = [self.cfg.xor_weights.get(self.keys[o[2][0]], 1.0) for o in same]
                choice = rng.choices(same, weights)[0]
            elif kind is Kind.OR and len(same) > 1:
                weights = [self.cfg.or_weights.get(frozenset(self.keys[i] for i in o[2]), 1.0)
                           for o in same]
                choice = rng.choices(same, weights)[0]
            else:
                choice = same[0]
            _, label, produced, consumed, end = choice
            t_in = max(times[i].pop(0) for i in consumed)
            for i in consumed:
                marking[i] -= 1
            if end:
                if any(marking):
                    raise SimulationError(f"case {case_id}: improper completion")
                break
            t_out = t_in
            if label is not None:
                start = t_in + rng.uniform(*self.cfg.gap)
                t_out = start + self._duration(label)
                for ts, phase in ((start, Phase.START), (t_out, Phase.END)):
                    stamp = self.cfg.start_time + timedelta(milliseconds=round(ts * 1000))
                    emitted.append((round(ts * 1000), seq, Event(label, phase, stamp, case_id)))
                    seq += 1
            parallel = len(produced) > 1
            for i in produced:
                marking[i] += 1
                times.setdefault(i, []).append(t_out + (self._branch_delay() if parallel else 0.0))
        else:
            raise SimulationError(f"case {case_id}: exceeded {self.cfg.max_steps} steps")
        emitted.sort(key=lambda x: (x[0], x[1]))
        return Trace(case_id, tuple(e for _, _, e in emitted))


def simulate(model: BpmnModel, config: SimConfig | None = None, verify: bool = True,
             state_bound: int = 200_000) -> RefinedLog:
    """Generate ``config.trace_count`` complete executions of ``model``.

    Parallel branches start within ``split_jitter`` of each other, so with the
    default settings every pair of parallel single-task branches overlaps.
    """
    config = config or SimConfig()
    if verify:
        report = check_soundness(model, state_bound)
        if not report.sound:
            raise SimulationError(f"refusing to simulate a model that is not sound: "
                                  f"{report.verdict} ({'; '.join(report.reasons)})")
    runner = _Runner(model, config)
    traces = []
    offset = timedelta(0)
    for k in range(config.trace_count):
        trace = runner.run(str(k + 1))
        if offset:
            trace = Trace(trace.case_id, tuple(
                Event(e.label, e.phase, e.timestamp + offset, e.case_id) for e in trace.events))
        traces.append(trace)
        offset += timedelta(days=1)
    return RefinedLog(tuple(traces))


# ---------------------------------------------------------------------------
# random block-structured models

def random_tree(rng: random.Random, n_tasks: int = 6, loops: bool = False,
                inclusive: bool = False, labels=None):
    """Random process tree over ``n_tasks`` distinct labels."""
    labels = list(labels or [chr(ord("a") + i) for i in range(n_tasks)])[:n_tasks]
    ops = ["seq", "seq", "xor", "and"] + (["or"] if inclusive else [])

    def grow(names):
        if len(names) == 1:
            if loops and rng.random() < 0.15:
                return ("loop", names[0])
            return names[0]
        if loops and len(names) >= 2 and rng.random() < 0.2:
            cut = rng.randint(1, len(names) - 1)
            return ("loop", grow(names[:cut]), grow(names[cut:]))
        op = rng.choice(ops)
        k = rng.randint(2, min(3, len(names)))
        cuts = sorted(rng.sample(range(1, len(names)), k - 1))
        parts = [names[a:b] for a, b in zip([0] + cuts, cuts + [len(names)])]
        return (op, *[grow(p) for p in parts])

    return grow(labels)


def random_model(seed: int, n_tasks: int | None = None, loops: bool = False,
                 inclusive: bool = False) -> tuple[tuple, BpmnModel]:
    rng = random.Random(seed)
    n = n_tasks or rng.randint(3, 7)
    tree = random_tree(rng, n, loops=loops, inclusive=inclusive)
    if isinstance(tree, str):
        tree = ("seq", tree)
    return tree, from_tree(tree)


def reference_models() -> dict[str, tuple[tuple, dict]]:
    """Small hand-built sound models with the simulation settings used to replay them.

    Each entry maps a name to a process tree and extra ``SimConfig`` fields.
    """
    return {
        "sequence": (("seq", "a", "b", "c", "d"), {}),
        "and_block": (("seq", "a", ("and", "b", "c", "d"), "e"), {}),
        "xor_block": (("seq", "a", ("xor", "b", "c", "d"), "e"), {}),
        # joint execution twice as likely as either branch alone
        "or_block": (("seq", "a", ("or", "b", "c"), "d"),
                     {"or_weights": {frozenset("b"): 1, frozenset("c"): 1, frozenset("bc"): 2}}),
        "xor_loop": (("seq", "a", ("loop", "b", "c"), "d"), {}),
        "xor_of_and": (("seq", "a", ("xor", ("and", "b", "c"), "d"), "e"), {}),
        "nested": (("seq", "a", ("and", ("seq", "b", ("xor", "c", "d")), "e"), "f"), {}),
    }
