"""Command-line entry point: discover, generate, verify, metrics, dfg."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass

from . import dfg as dfg_mod
from .bpmn import ModelError, export_bpmn, import_bpmn, to_dot
from .filtering import FilterError
from .log import LogError, ParseOptions, read_log, write_csv
from .pipeline import DEFAULT_EPSILON, DEFAULT_ETA, DiscoveryConfig, discover
from .simulate import SimConfig, SimulationError, simulate
from .verify import (DEFAULT_STATE_BOUND, VerificationError, check_soundness, compute_cfc,
                     compute_size)

log = logging.getLogger("procdisc")

EXIT_OK, EXIT_INPUT, EXIT_PIPELINE, EXIT_UNSOUND = 0, 1, 2, 3


class InputError(ValueError):
    pass


@dataclass
class PipelineConfig:
    input_path: str
    input_format: str | None = None
    pairing: str = "strict"
    epsilon: float = DEFAULT_EPSILON
    eta: float = DEFAULT_ETA
    oracle: str = "refined"
    filtering: bool = True
    or_detection: bool = True
    loop_repair: bool = True
    bpmn_out: str | None = None
    dot_out: str | None = None
    dfg_out: str | None = None
    stats_out: str | None = None
    metrics_out: str | None = None
    fail_on_unsound: bool = False
    state_bound: int = DEFAULT_STATE_BOUND

    def validate(self):
        if not os.path.isfile(self.input_path):
            raise InputError(f"input log not found: {self.input_path}")
        if self.input_format not in (None, "csv", "xes"):
            raise InputError(f"unsupported format {self.input_format!r}")
        for name in ("epsilon", "eta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InputError(f"{name} must lie in [0, 1], got {value}")

    def discovery(self) -> DiscoveryConfig:
        return DiscoveryConfig(self.epsilon, self.eta, self.oracle, self.pairing,
                               self.filtering, self.or_detection, self.loop_repair)


def write_atomically(artifacts: dict[str, bytes]) -> None:
    """Write every artifact to a temp file first, then rename them all into place."""
    staged = []
    try:
        for path, data in artifacts.items():
            folder = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def metrics_report(model, state_bound: int = DEFAULT_STATE_BOUND) -> dict:
    report = check_soundness(model, state_bound)
    return {
        "size": compute_size(model),
        "cfc": compute_cfc(model),
        "structuredness": "not computed",
        "soundness": {
            "verdict": report.verdict,
            "deadlock_free": report.deadlock_free,
            "proper_completion": report.proper_completion,
            "no_dead_activities": report.no_dead_activities,
            "explored_states": report.explored_states,
            "reasons": report.reasons,
        },
    }


def _dumps(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def run_discovery(config: PipelineConfig) -> int:
    """Run the discovery pipeline and write the requested artifacts; returns an exit code."""
    try:
        config.validate()
        t0 = time.perf_counter()
        event_log = read_log(config.input_path, config.input_format,
                             ParseOptions(pairing=config.pairing))
        parse_time = time.perf_counter() - t0
        disc = config.discovery()
    except (InputError, LogError, OSError, ValueError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT

    try:
        result = discover(event_log, disc)
        model = result.model
        artifacts = {}
        if config.bpmn_out:
            artifacts[config.bpmn_out] = export_bpmn(model)
        if config.dot_out:
            artifacts[config.dot_out] = to_dot(model).encode()
        if config.dfg_out:
            artifacts[config.dfg_out] = dfg_mod.to_dot(result.fdfg).encode()
        if config.stats_out:
            artifacts[config.stats_out] = result.stats.to_json().encode()
        metrics = None
        if config.metrics_out or config.fail_on_unsound:
            metrics = metrics_report(model, config.state_bound)
            if config.metrics_out:
                artifacts[config.metrics_out] = _dumps(metrics)
    except (FilterError, ModelError, VerificationError, ValueError, RuntimeError) as exc:
        log.error("pipeline error: %s", exc)
        return EXIT_PIPELINE

    log.info("parse: %.3fs", parse_time)
    for stage, secs in result.timings.items():
        log.info("%s: %.3fs", stage, secs)
    log.info("log: %d traces, %d events", len(event_log), event_log.event_count())
    log.info("dfg: %d nodes, %d edges (%d after pruning, %d after filtering)",
             len(result.dfg.nodes), len(result.dfg.edges), len(result.pdfg.edges),
             len(result.fdfg.edges))
    log.info("concurrent pairs: %d", len(result.relation.pairs))
    log.info("model: %d nodes, %d gateways, %d AND pair(s) converted to OR",
             len(model.nodes), len(model.gateways()), result.or_converted)

    try:
        write_atomically(artifacts)
    except OSError as exc:
        log.error("could not write artifacts: %s", exc)
        return EXIT_INPUT
    if metrics is not None and config.fail_on_unsound and metrics["soundness"]["verdict"] != "sound":
        log.error("model is %s", metrics["soundness"]["verdict"])
        return EXIT_UNSOUND
    return EXIT_OK


def _load_model(path: str):
    try:
        with open(path, "rb") as fh:
            return import_bpmn(fh.read())
    except OSError as exc:
        raise InputError(str(exc)) from None


def _cmd_discover(args) -> int:
    if args.epsilon <= 0.0:
        log.error("input error: --epsilon must be > 0")
        return EXIT_INPUT
    cfg = PipelineConfig(
        input_path=args.log, input_format=args.format, pairing=args.pairing,
        epsilon=args.epsilon, eta=args.eta, oracle=args.oracle,
        filtering=not args.no_filter, or_detection=not args.no_or_detection,
        loop_repair=not args.no_loop_repair, bpmn_out=args.out, dot_out=args.dot,
        dfg_out=args.export_dfg, stats_out=args.export_stats, metrics_out=args.metrics,
        fail_on_unsound=args.fail_on_unsound, state_bound=args.state_bound)
    return run_discovery(cfg)


def _cmd_generate(args) -> int:
    try:
        model = _load_model(args.model)
        cfg = SimConfig(trace_count=args.traces, seed=args.seed)
    except (InputError, ModelError, ValueError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    try:
        generated = simulate(model, cfg)
    except (SimulationError, VerificationError) as exc:
        log.error("pipeline error: %s", exc)
        return EXIT_PIPELINE
    write_atomically({args.out: write_csv(generated).encode()})
    log.info("wrote %d traces, %d events to %s", len(generated), generated.event_count(), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        model = _load_model(args.model)
    except (InputError, ModelError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    try:
        report = check_soundness(model, args.state_bound)
    except VerificationError as exc:
        log.error("pipeline error: %s", exc)
        return EXIT_PIPELINE
    print(report.to_json())
    if args.fail_on_unsound and not report.sound:
        return EXIT_UNSOUND
    return EXIT_OK


def _cmd_metrics(args) -> int:
    try:
        model = _load_model(args.model)
    except (InputError, ModelError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    try:
        data = metrics_report(model, args.state_bound)
    except VerificationError as exc:
        log.error("pipeline error: %s", exc)
        return EXIT_PIPELINE
    sys.stdout.write(_dumps(data).decode())
    if args.fail_on_unsound and data["soundness"]["verdict"] != "sound":
        return EXIT_UNSOUND
    return EXIT_OK


def _cmd_dfg(args) -> int:
    try:
        event_log = read_log(args.log, args.format, ParseOptions(pairing=args.pairing))
    except (LogError, OSError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    text = dfg_mod.to_dot(dfg_mod.build_dfg(event_log, args.mode))
    if args.out:
        write_atomically({args.out: text.encode()})
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="procdisc",
                                description="Discover BPMN models from start/end event logs.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    p.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = p.add_subparsers(dest="command", required=True)

    def log_args(sp):
        sp.add_argument("log", help="CSV or XES event log")
        sp.add_argument("--format", choices=["csv", "xes"], help="default: by file extension")
        sp.add_argument("--pairing", choices=["strict", "repair"], default="strict")

    d = sub.add_parser("discover", help="discover a BPMN model from a log")
    log_args(d)
    d.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    d.add_argument("--eta", type=float, default=DEFAULT_ETA)
    d.add_argument("--oracle", choices=["refined", "classic"], default="refined")
    d.add_argument("--no-filter", action="store_true")
    d.add_argument("--no-or-detection", action="store_true")
    d.add_argument("--no-loop-repair", action="store_true")
    d.add_argument("--out", help="BPMN XML output path")
    d.add_argument("--dot", help="DOT rendering of the model")
    d.add_argument("--export-dfg", help="DOT rendering of the filtered DFG")
    d.add_argument("--export-stats", help="overlap/co-occurrence statistics as JSON")
    d.add_argument("--metrics", help="size, CFC and soundness report as JSON")
    d.add_argument("--fail-on-unsound", action="store_true")
    d.add_argument("--state-bound", type=int, default=DEFAULT_STATE_BOUND)
    d.set_defaults(func=_cmd_discover)

    g = sub.add_parser("generate", help="simulate a refined log from a BPMN model")
    g.add_argument("--model", required=True)
    g.add_argument("--traces", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    for name, func, text in (("verify", _cmd_verify, "check soundness of a BPMN model"),
                             ("metrics", _cmd_metrics, "size, CFC and soundness of a BPMN model")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("model")
        sp.add_argument("--state-bound", type=int, default=DEFAULT_STATE_BOUND)
        sp.add_argument("--fail-on-unsound", action="store_true")
        sp.set_defaults(func=func)

    f = sub.add_parser("dfg", help="print the directly-follows graph of a log as DOT")
    log_args(f)
    f.add_argument("--mode", choices=["refined", "imlc", "classic"], default="refined")
    f.add_argument("--out")
    f.set_defaults(func=_cmd_dfg)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr,
                        force=True)
    log.setLevel(level)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
