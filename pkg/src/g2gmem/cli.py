"""Command-line entry points.

Subcommands: train, eval, simulate, sweep, probe-centers, memory inspect.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .artifacts import (load_run, save_run, write_probe_csv, write_sweep_csv)
from .config import Config, dump_config, load_config
from .data import load_embeddings, save_embeddings
from .interactors import VARIANTS, InteractiveFeature
from .memory import dissimilarity, load_memory
from .pipeline import build_local_graph
from .protocol import (ExperimentState, build_sessions, evaluate,
                       load_datasets, make_interactor_config,
                       make_pipeline_config, make_state, probe_centers,
                       run_experiment, sweep)


def _print_result(result) -> None:
    # 0-based session numbering on all report surfaces
    for spec, acc in zip(result.sessions, result.metrics.session_acc):
        print(f"session {spec.index - 1} ({spec.role}, {len(spec.class_ids)} "
              f"classes): acc {acc:.2f}%")
    print(f"average acc {result.metrics.average:.2f}%  "
          f"pd {result.metrics.pd:.2f}")


def _progress(spec, acc) -> None:
    print(f"  finished session {spec.index - 1}: eval acc {acc:.2f}%",
          flush=True)


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    datasets = load_datasets(cfg)
    result = run_experiment(cfg, datasets=datasets, progress=_progress)
    _print_result(result)
    if args.out:
        out = Path(args.out)
        if not cfg.data_train_path:
            out.mkdir(parents=True, exist_ok=True)
            save_embeddings(datasets[0], out / "train.g2gemb")
            save_embeddings(datasets[1], out / "test.g2gemb")
            cfg = replace(cfg, data_train_path=str(out / "train.g2gemb"),
                          data_test_path=str(out / "test.g2gemb"))
        save_run(out, cfg, result)
        print(f"run saved to {out}")
    return 0


def cmd_eval(args) -> int:
    cfg, store, mem = load_run(args.state)
    datasets = load_datasets(cfg)
    sessions = build_sessions(datasets[0].classes(), cfg.protocol_base_classes,
                              cfg.protocol_sessions, cfg.protocol_ways,
                              cfg.protocol_shots, cfg.train_epochs)
    state = make_state(cfg)
    state.store = store
    state.memory = mem
    state.session_classes = {s.index: list(s.class_ids) for s in sessions}
    acc = evaluate(state, datasets[1], args.session + 1) * 100.0
    print(f"session {args.session}: eval acc {acc:.2f}%")
    return 0


def cmd_simulate(args) -> int:
    cfg = Config(protocol_base_classes=args.classes,
                 protocol_sessions=args.sessions,
                 protocol_ways=args.ways, protocol_shots=args.shots,
                 train_seed=args.seed)
    if args.variant:
        cfg = replace(cfg, interactor_variant=args.variant)
    if args.epochs:
        cfg = replace(cfg, train_epochs=args.epochs,
                      train_proto_iters=min(cfg.train_proto_iters, args.epochs))
    cfg.validate()
    datasets = load_datasets(cfg)
    result = run_experiment(cfg, datasets=datasets, progress=_progress)
    _print_result(result)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_embeddings(datasets[0], out / "train.g2gemb")
        save_embeddings(datasets[1], out / "test.g2gemb")
        cfg = replace(cfg, data_train_path=str(out / "train.g2gemb"),
                      data_test_path=str(out / "test.g2gemb"))
        save_run(out, cfg, result)
        print(f"run saved to {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config) if args.config else Config()
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if args.axis == "S":
        values = [int(v) for v in values]
    else:
        values = [float(v) for v in values]
    table = sweep(cfg, args.axis, values)
    print(f"{args.axis:>8}  avg_acc      pd   final")
    for value, metrics in table:
        print(f"{value:>8}  {metrics.average:7.2f} {metrics.pd:7.2f} "
              f"{metrics.session_acc[-1]:7.2f}")
    if args.out:
        write_sweep_csv(args.out, args.axis, table)
        print(f"table saved to {args.out}")
    return 0


def cmd_probe_centers(args) -> int:
    cfg, store, _ = load_run(args.state)
    dataset = load_embeddings(cfg.data_test_path,
                              expected_segments=cfg.pipeline_S, split="test")
    variants = [v.strip().lower() for v in args.variants.split(",") if v.strip()]
    rows = probe_centers(cfg, store, dataset, variants, seed=cfg.train_seed)
    out = args.out or str(Path(args.state) / "probe_centers.csv")
    write_probe_csv(out, rows)
    for r in rows:
        dist = "n/a" if r["mean_dist"] is None else f"{r['mean_dist']:.4f}"
        print(f"{r['variant']:>10}  class {r['class_id']:>3}  "
              f"n={r['n_samples']:>3}  dist {dist}")
    print(f"table saved to {out}")
    return 0


def cmd_memory_inspect(args) -> int:
    mem = load_memory(args.path)
    print(f"classes: {len(mem)}  S={mem.S}  width={mem.width}")
    for y in mem.seen:
        p = mem.prototypes[y]
        norm = float(np.linalg.norm(mem.value(y)))
        print(f"  class {y:>4}  session {p.session_of_origin:>2}  "
              f"frozen={'yes' if p.frozen else 'no'}  |m|={norm:.4f}")
    seen = mem.seen
    if len(seen) > 1:
        print("pairwise prototype dissimilarities (total):")
        header = "      " + "".join(f"{y:>9}" for y in seen)
        print(header)
        for a in seen:
            feat = InteractiveFeature(
                xi=mem.value(a), local_graph=build_local_graph(mem.value(a), mem.S))
            cells = []
            for b in seen:
                r, _, _ = dissimilarity(feat, mem, b)
                cells.append(f"{r:9.4f}")
            print(f"{a:>5} " + "".join(cells))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="g2gmem",
        description="Graph-to-graph prototype memory engine for few-shot "
                    "class-incremental learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the session protocol from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="directory for run artifacts")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="re-evaluate a saved run at a session")
    p.add_argument("--state", required=True)
    p.add_argument("--session", type=int, required=True,
                   help="0-based session index (base session = 0)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="synthetic end-to-end protocol run")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--sessions", type=int, default=4)
    p.add_argument("--ways", type=int, default=2)
    p.add_argument("--shots", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=VARIANTS, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="rerun the protocol over one hyperparameter")
    p.add_argument("--axis", choices=("S", "lambda", "eta"), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("probe-centers",
                       help="segment-to-center distances per variant")
    p.add_argument("--state", required=True)
    p.add_argument("--variants", required=True, help="comma-separated variants")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_probe_centers)

    p = sub.add_parser("memory", help="memory file utilities")
    msub = p.add_subparsers(dest="memory_command", required=True)
    pi = msub.add_parser("inspect", help="print classes and dissimilarities")
    pi.add_argument("path")
    pi.set_defaults(func=cmd_memory_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
