"""Process discovery from logs with start and end events."""

from .bpmn import BpmnModel, Kind, export_bpmn, from_tree, import_bpmn
from .concurrency import count_overlaps, refined_concurrency
from .dfg import build_dfg
from .log import RefinedLog, log_from_sequences, read_log
from .pipeline import DiscoveryConfig, discover
from .simulate import SimConfig, simulate
from .verify import check_soundness, compute_cfc, compute_size, language_upto_k

__all__ = [
    "BpmnModel", "Kind", "export_bpmn", "from_tree", "import_bpmn", "count_overlaps",
    "refined_concurrency", "build_dfg", "RefinedLog", "log_from_sequences", "read_log",
    "DiscoveryConfig", "discover", "SimConfig", "simulate", "check_soundness",
    "compute_cfc", "compute_size", "language_upto_k",
]
