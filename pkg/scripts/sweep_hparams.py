#!/usr/bin/env python3
"""Ablation sweeps over segment count and loss weights.

Example:
    python scripts/sweep_hparams.py --axis lambda --values 0,0.01,0.1,1
    python scripts/sweep_hparams.py --axis S --values 2,4,8
"""

import argparse

from g2gmem.artifacts import write_sweep_csv
from g2gmem.config import Config
from g2gmem.protocol import sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--axis", choices=("S", "lambda", "eta"), required=True)
    ap.add_argument("--values", required=True, help="comma-separated")
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="optional CSV path")
    args = ap.parse_args()

    cast = int if args.axis == "S" else float
    values = [cast(v) for v in args.values.split(",") if v.strip()]
    cfg = Config(train_epochs=args.epochs,
                 train_proto_iters=min(20, args.epochs),
                 train_seed=args.seed, train_batch_size=16,
                 synth_per_class=10, synth_test_per_class=8)
    table = sweep(cfg, args.axis, values)
    print(f"{args.axis:>8}  avg_acc      pd   final")
    for value, m in table:
        print(f"{value:>8}  {m.average:7.2f} {m.pd:7.2f} "
              f"{m.session_acc[-1]:7.2f}")
    if args.out:
        write_sweep_csv(args.out, args.axis, table)
        print(f"saved {args.out}")


if __name__ == "__main__":
    main()
