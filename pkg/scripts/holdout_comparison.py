"""Matched-data comparison of Label Wave against holdout selection, per seed.

    python3 scripts/holdout_comparison.py --fraction 0.2

The Label Wave run trains on the whole pool and counts prediction changes on
the rows the holdout run withholds; the holdout run trains on the rest and
picks the epoch with the lowest (noisy) holdout error.
"""

import argparse

import numpy as np

from labelwave import harness
from labelwave.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--set", action="append", default=[])
    ap.add_argument("--fraction", type=float, default=0.2)
    ap.add_argument("--seeds", type=int, nargs="+", default=None)
    args = ap.parse_args()

    cfg, _ = load_config(args.config, args.set)
    lw, ho = [], []
    for seed in args.seeds or cfg.harness.seeds:
        cmp = harness.matched_comparison(cfg.with_seed(seed), args.fraction)
        row = cmp.row()
        print({k: row[k] for k in ("seed", "lw_epoch", "lw_test_acc", "holdout_epoch", "holdout_test_acc", "gain")})
        if cmp.label_wave_accuracy is not None:
            lw.append(cmp.label_wave_accuracy)
        ho.append(cmp.holdout_accuracy)
    lw_mean = f"{np.mean(lw):.2f}" if lw else "n/a (all exhausted)"
    print(f"mean LW {lw_mean} (n={len(lw)})  mean holdout {np.mean(ho):.2f}")


if __name__ == "__main__":
    main()
