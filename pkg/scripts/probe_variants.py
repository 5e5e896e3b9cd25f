#!/usr/bin/env python3
"""Per-variant segment-to-class-center distances on a small random dataset.

Compares how tightly each graph interactor clusters same-class node features,
using one shared feature pipeline so the graph models see identical inputs.

Example:
    python scripts/probe_variants.py --classes 4 --per-class 8
"""

import argparse

from g2gmem.config import Config
from g2gmem.data import synth_generate
from g2gmem.interactors import VARIANTS
from g2gmem.protocol import make_state, probe_centers


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--classes", type=int, default=4)
    ap.add_argument("--per-class", type=int, default=8)
    ap.add_argument("--cluster-sigma", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = Config(train_seed=args.seed)
    state = make_state(cfg)
    train, _ = synth_generate(args.classes, args.per_class, cfg.pipeline_d_h,
                              cfg.pipeline_L, args.cluster_sigma,
                              seed=args.seed)
    rows = probe_centers(cfg, state.store, train, list(VARIANTS),
                         seed=args.seed)
    print(f"{'variant':>10} {'class':>6} {'n':>4} {'mean dist':>12}")
    for r in rows:
        dist = "n/a" if r["mean_dist"] is None else f"{r['mean_dist']:.6f}"
        print(f"{r['variant']:>10} {r['class_id']:>6} {r['n_samples']:>4} "
              f"{dist:>12}")
    means = {}
    for r in rows:
        if r["mean_dist"] is not None:
            means.setdefault(r["variant"], []).append(r["mean_dist"])
    print("\nper-variant average:")
    for v, ds in sorted(means.items(), key=lambda kv: sum(kv[1])):
        print(f"{v:>10}  {sum(ds) / len(ds):.6f}")


if __name__ == "__main__":
    main()
