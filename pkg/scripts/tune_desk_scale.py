"""Grid over hidden width / learning rate / epochs used to pick the bundled defaults.

    python3 scripts/tune_desk_scale.py --hidden 64 128 --lr 0.01 0.005 --epochs 150 300

For each setting prints the worst per-seed oracle gap, the worst Pearson(PC', acc)
at k=3, and the matched-data LW / holdout mean test accuracies.
"""

import argparse
import itertools

import numpy as np

from labelwave import harness
from labelwave.config import load_config


def evaluate(cfg, seeds):
    diffs, rs, lw, ho = [], [], [], []
    for seed in seeds:
        cell = cfg.with_seed(seed)
        rec = harness.run_experiment(cell)
        rep = harness.selection_report(rec, cell.stopper)
        diffs.append(rep.difference)
        rs.append(harness.correlation_sweep([rec], ks=(3,))["records"][0]["pearson"][3])
        cmp = harness.matched_comparison(cell, 0.2)
        lw.append(cmp.label_wave_accuracy)
        ho.append(cmp.holdout_accuracy)
    return diffs, rs, lw, ho


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hidden", type=int, nargs="+", default=[64])
    ap.add_argument("--lr", type=float, nargs="+", default=[0.01])
    ap.add_argument("--epochs", type=int, nargs="+", default=[300])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    args = ap.parse_args()

    for hidden, lr, epochs in itertools.product(args.hidden, args.lr, args.epochs):
        cfg, _ = load_config(None, [
            f"engine.hidden={hidden}", f"engine.learning_rate={lr}", f"engine.max_epochs={epochs}",
        ])
        diffs, rs, lw, ho = evaluate(cfg, args.seeds)
        worst_diff = None if None in diffs else max(diffs)
        lw_mean = None if None in lw else round(float(np.mean(lw)), 2)
        print(
            f"H={hidden} lr={lr} E={epochs}: max diff {worst_diff}, max pearson {max(rs):.3f}, "
            f"LW {lw_mean} vs HO {np.mean(ho):.2f}",
            flush=True,
        )


if __name__ == "__main__":
    main()
