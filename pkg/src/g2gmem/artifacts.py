"""Run-directory persistence: config, parameters, memory, result tables."""

from __future__ import annotations

import csv
from pathlib import Path

from .config import Config, dump_config, load_config
from .memory import ExplicitMemory, load_memory, save_memory
from .params import ParamStore
from .protocol import ExperimentResult

CONFIG_FILE = "config.txt"
PARAMS_FILE = "params.npz"
MEMORY_FILE = "memory.g2gmem"
SESSIONS_FILE = "sessions.csv"
METRICS_FILE = "metrics.txt"


def save_run(outdir, cfg: Config, result: ExperimentResult) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_FILE).write_text(dump_config(cfg), encoding="utf-8")

    model_store = ParamStore()
    for name, p in result.state.store.items():
        if not name.startswith("proto."):
            model_store.add(name, p.value, trainable=p.trainable)
    model_store.save_npz(out / PARAMS_FILE)
    save_memory(result.state.memory, out / MEMORY_FILE)

    # report surfaces use 0-based session indices (base session = 0)
    with open(out / SESSIONS_FILE, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["session", "n_classes", "accuracy_percent", "seconds"])
        for spec, acc, sec in zip(result.sessions, result.metrics.session_acc,
                                  result.metrics.session_seconds):
            w.writerow([spec.index - 1, len(spec.class_ids),
                        f"{acc:.4f}", f"{sec:.3f}"])

    m = result.metrics
    lines = [f"average_acc = {m.average:.4f}", f"pd = {m.pd:.4f}",
             f"final_acc = {m.session_acc[-1]:.4f}",
             f"sessions = {len(m.session_acc)}"]
    (out / METRICS_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_run(outdir) -> tuple[Config, ParamStore, ExplicitMemory]:
    out = Path(outdir)
    cfg = load_config(out / CONFIG_FILE)
    store = ParamStore.load_npz(out / PARAMS_FILE)
    memory = load_memory(out / MEMORY_FILE, store=store)
    return cfg, store, memory


def write_probe_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["variant", "class_id", "n_samples", "mean_center_distance"])
        for r in rows:
            dist = "n/a" if r["mean_dist"] is None else f"{r['mean_dist']:.6f}"
            w.writerow([r["variant"], r["class_id"], r["n_samples"], dist])


def write_sweep_csv(path, axis: str, table) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow([axis, "average_acc", "pd", "final_acc", "per_session"])
        for value, metrics in table:
            w.writerow([value, f"{metrics.average:.4f}", f"{metrics.pd:.4f}",
                        f"{metrics.session_acc[-1]:.4f}",
                        " ".join(f"{a:.2f}" for a in metrics.session_acc)])
