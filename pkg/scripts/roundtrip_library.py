"""Replay each reference model, rediscover it and compare bounded languages."""

import argparse
import logging

from procdisc.bpmn import from_tree
from procdisc.pipeline import DiscoveryConfig, discover
from procdisc.simulate import SimConfig, reference_models, simulate
from procdisc.verify import check_soundness, compute_cfc, compute_size, language_upto_k


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--traces", type=int, default=500)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("-k", type=int, default=12, help="longest word compared")
    p.add_argument("--epsilon", type=float, default=DiscoveryConfig.epsilon)
    p.add_argument("--eta", type=float, default=DiscoveryConfig.eta)
    args = p.parse_args()
    logging.basicConfig(level=logging.ERROR)

    cfg = DiscoveryConfig(args.epsilon, args.eta)
    print(f"{'model':<12} {'equal':>5} {'orig':>5} {'found':>5} {'size':>4} {'cfc':>4} verdict")
    for name, (tree, extra) in reference_models().items():
        model = from_tree(tree)
        log = simulate(model, SimConfig(trace_count=args.traces, seed=args.seed, **extra))
        found = discover(log, cfg).model
        want, got = language_upto_k(model, args.k), language_upto_k(found, args.k)
        print(f"{name:<12} {str(want == got):>5} {len(want):>5} {len(got):>5} "
              f"{compute_size(found):>4} {compute_cfc(found):>4} {check_soundness(found).verdict}")


if __name__ == "__main__":
    main()
