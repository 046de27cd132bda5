"""Time parsing plus discovery on a simulated log of a given size."""

import argparse
import logging
import tempfile
import time
from pathlib import Path

from procdisc.bpmn import export_bpmn, from_tree
from procdisc.log import read_log, write_csv
from procdisc.pipeline import discover
from procdisc.simulate import SimConfig, simulate

TREE = ("seq", "a", ("and", ("seq", "b", "c"), ("xor", "d", "e"), "f"),
        ("loop", ("seq", "g", "h")), ("or", "i", "j"), "k")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--traces", type=int, default=4600)
    p.add_argument("--seed", type=int, default=5)
    args = p.parse_args()
    logging.basicConfig(level=logging.ERROR)

    log = simulate(from_tree(TREE), SimConfig(trace_count=args.traces, seed=args.seed))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "log.csv"
        path.write_text(write_csv(log))
        t0 = time.perf_counter()
        parsed = read_log(path)
        t1 = time.perf_counter()
        result = discover(parsed)
        export_bpmn(result.model)
        t2 = time.perf_counter()
    print(f"events: {parsed.event_count()}  traces: {len(parsed)}")
    print(f"parse: {t1 - t0:.2f}s")
    for stage, secs in result.timings.items():
        print(f"{stage}: {secs:.2f}s")
    print(f"total: {t2 - t0:.2f}s")


if __name__ == "__main__":
    main()
