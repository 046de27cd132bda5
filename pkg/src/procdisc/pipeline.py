"""End-to-end discovery: log -> DFG -> concurrency -> filter -> splits -> joins
-> loop repair -> OR detection."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .bpmn import BpmnModel
from .concurrency import (ConcurrencyRelation, ConcurrencyStats, classic_concurrency,
                          count_overlaps, prune_dfg, refined_concurrency)
from .dfg import Dfg, build_dfg, discover_loops, end_projection_dfg
from .filtering import FilterConfig, filter_dfg, no_filter
from .log import RefinedLog
from .synthesis import (detect_or_splits, discover_joins, discover_splits,
                        repair_improper_completion)

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.25
DEFAULT_ETA = 0.4


@dataclass
class DiscoveryConfig:
    epsilon: float = DEFAULT_EPSILON
    eta: float = DEFAULT_ETA
    oracle: str = "refined"
    pairing: str = "strict"
    filtering: bool = True
    or_detection: bool = True
    loop_repair: bool = True

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.oracle not in ("refined", "classic"):
            raise ValueError(f"unknown oracle {self.oracle!r}")


@dataclass
class DiscoveryResult:
    model: BpmnModel
    dfg: Dfg
    pdfg: Dfg
    fdfg: Dfg
    stats: ConcurrencyStats
    relation: ConcurrencyRelation
    timings: dict[str, float] = field(default_factory=dict)
    or_converted: int = 0


def discover(log_: RefinedLog, config: DiscoveryConfig | None = None) -> DiscoveryResult:
    cfg = config or DiscoveryConfig()
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    dfg = build_dfg(log_, "refined")
    stats = count_overlaps(log_, cfg.pairing)
    if cfg.oracle == "refined":
        overlap_rel = refined_concurrency(stats, cfg.epsilon)
        dfg = discover_loops(dfg, log_, concurrent=overlap_rel.pairs)
    else:
        dfg = discover_loops(dfg, log_)
    lap("dfg_and_loops")

    if cfg.oracle == "refined":
        rel = refined_concurrency(stats, cfg.epsilon, dfg.self_loops, dfg.short_loops)
    else:
        rel = classic_concurrency(end_projection_dfg(log_), log_, cfg.epsilon)
    pdfg = prune_dfg(dfg, rel)
    lap("concurrency")

    fdfg = filter_dfg(pdfg, FilterConfig(cfg.eta)) if cfg.filtering else no_filter(pdfg)
    lap("filtering")

    model = discover_splits(fdfg, rel)
    lap("splits")
    model = discover_joins(model, fdfg)
    lap("joins")
    if cfg.loop_repair:
        model = repair_improper_completion(model)
    converted = 0
    if cfg.or_detection:
        before = {n for n, node in model.nodes.items() if node.kind.value == "or"}
        model = detect_or_splits(model, stats)
        after = {n for n, node in model.nodes.items() if node.kind.value == "or"}
        converted = len(after - before) // 2
    lap("heuristics")
    for flag in model.flags:
        log.warning("%s", flag)
    return DiscoveryResult(model, dfg, pdfg, fdfg, stats, rel, timings, converted)
