"""Soundness of models discovered from logs of random block-structured models.

For every seed the log is rediscovered with and without the loop repair and
without filtering, so each unsound result can be traced to a pipeline stage.
"""

import argparse
import collections
import logging

from procdisc.pipeline import DiscoveryConfig, discover
from procdisc.simulate import SimConfig, random_model, simulate
from procdisc.verify import VerificationError, check_soundness


def has_loop(tree) -> bool:
    return not isinstance(tree, str) and (tree[0] == "loop" or any(map(has_loop, tree[1:])))


def verdict(log, cfg: DiscoveryConfig, bound: int) -> str:
    try:
        return check_soundness(discover(log, cfg).model, bound).verdict
    except VerificationError:
        return "refused"


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=1000)
    p.add_argument("--cyclic", action="store_true", help="only models containing a loop")
    p.add_argument("--traces", type=int, default=100)
    p.add_argument("--state-bound", type=int, default=50_000)
    p.add_argument("--show", type=int, default=3, help="example seeds per outcome")
    args = p.parse_args()
    logging.basicConfig(level=logging.ERROR)

    base = DiscoveryConfig(or_detection=False)
    outcomes = collections.Counter()
    examples = collections.defaultdict(list)
    seed = done = 0
    while done < args.seeds:
        tree, model = random_model(seed, loops=args.cyclic)
        seed += 1
        if args.cyclic and not has_loop(tree):
            continue
        done += 1
        log = simulate(model, SimConfig(trace_count=args.traces, seed=seed), verify=False)
        main_verdict = verdict(log, base, args.state_bound)
        if main_verdict == "sound":
            outcomes["sound"] += 1
            continue
        key = (main_verdict,
               "without repair: " + verdict(log, DiscoveryConfig(or_detection=False,
                                                                 loop_repair=False),
                                            args.state_bound),
               "without filter: " + verdict(log, DiscoveryConfig(or_detection=False,
                                                                 filtering=False),
                                            args.state_bound))
        outcomes[key] += 1
        examples[key].append((seed, tree))
    print(f"sound: {outcomes.pop('sound', 0)}/{done}")
    for key, n in outcomes.most_common():
        print(n, " | ".join(key))
        for seed, tree in examples[key][:args.show]:
            print("   seed", seed, tree)


if __name__ == "__main__":
    main()
