"""Discover a model from a real log and report size, CFC and soundness.

Intended for the public repair example log; pass its path explicitly.
"""

import argparse
import json
import logging

from procdisc.cli import metrics_report
from procdisc.log import ParseOptions, read_log
from procdisc.pipeline import DiscoveryConfig, discover


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("log")
    p.add_argument("--pairing", choices=["strict", "repair"], default="strict")
    p.add_argument("--epsilon", type=float, nargs="+", default=[DiscoveryConfig.epsilon])
    p.add_argument("--eta", type=float, nargs="+", default=[DiscoveryConfig.eta])
    args = p.parse_args()
    logging.basicConfig(level=logging.ERROR)

    log = read_log(args.log, options=ParseOptions(pairing=args.pairing))
    for eps in args.epsilon:
        for eta in args.eta:
            model = discover(log, DiscoveryConfig(eps, eta)).model
            report = metrics_report(model)
            print(json.dumps({"epsilon": eps, "eta": eta, "size": report["size"],
                              "cfc": report["cfc"],
                              "verdict": report["soundness"]["verdict"]}))


if __name__ == "__main__":
    main()
