"""Session protocol: base + incremental training, rehearsal, evaluation.

Sessions see disjoint class sets.  Each session adds prototypes for its new
classes (initialized at the class-mean interactive feature), trains the whole
model with the combined objective on session data plus one stored exemplar
per previously seen class, lets prototypes move only for the first
``proto_iters`` epochs, and finally freezes the session's prototypes for
good.  Evaluation after session t covers the test samples of every class
seen so far.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import Config
from .data import EmbeddingDataset, load_embeddings, synth_generate
from .errors import ConfigError, ProtocolError
from .interactors import (InteractorConfig, InteractiveFeature,
                          init_interactor_params, interact)
from .losses import Batch, total_loss
from .memory import ExplicitMemory, dissimilarity, retrieve
from .optim import Adam
from .params import ParamStore
from .pipeline import PipelineConfig, RawFeature, init_pipeline_params, synth_augment


@dataclass
class SessionSpec:
    index: int
    class_ids: list[int]
    shots: int                   # 0 = use every available sample
    epochs: int
    role: str = "incremental"    # "base" | "incremental"


@dataclass
class TrainSchedule:
    epochs: int = 100
    proto_iters: int = 20
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.proto_iters > self.epochs:
            raise ConfigError("proto_iters must not exceed epochs")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")


class RehearsalBuffer:
    """Exactly one immutable exemplar per seen class."""

    def __init__(self) -> None:
        self._items: dict[int, tuple[RawFeature, RawFeature | None]] = {}

    def add(self, class_id: int, raw: RawFeature,
            aug: RawFeature | None) -> None:
        if class_id in self._items:
            raise ProtocolError(f"class {class_id} already has an exemplar")
        self._items[class_id] = (raw, aug)

    def __len__(self) -> int:
        return len(self._items)

    def classes(self) -> list[int]:
        return sorted(self._items)

    def exemplars(self) -> list[tuple[RawFeature, int, RawFeature | None]]:
        return [(raw, y, aug) for y, (raw, aug) in sorted(self._items.items())]


@dataclass
class Metrics:
    session_acc: list[float]         # percentages, base session first
    average: float
    pd: float
    session_seconds: list[float] = field(default_factory=list)


def compute_metrics(session_accuracies) -> Metrics:
    accs = [float(a) for a in session_accuracies]
    if not accs:
        raise ProtocolError("no session accuracies")
    return Metrics(session_acc=accs,
                   average=float(np.mean(accs)),
                   pd=accs[0] - accs[-1])


@dataclass
class ExperimentState:
    cfg: Config
    pcfg: PipelineConfig
    icfg: InteractorConfig
    store: ParamStore
    memory: ExplicitMemory
    buffer: RehearsalBuffer
    schedule: TrainSchedule
    optimizer: Adam
    run_rng: np.random.Generator
    session_classes: dict[int, list[int]] = field(default_factory=dict)
    epoch_losses: dict[int, list[float]] = field(default_factory=dict)


def make_pipeline_config(cfg: Config) -> PipelineConfig:
    return PipelineConfig(d_h=cfg.pipeline_d_h, L=cfg.pipeline_L,
                          S=cfg.pipeline_S, d_zeta=cfg.pipeline_d_zeta,
                          mlp_hidden=cfg.pipeline_mlp_hidden)


def make_interactor_config(cfg: Config) -> InteractorConfig:
    pcfg = make_pipeline_config(cfg)
    return InteractorConfig(variant=cfg.interactor_variant, S=cfg.pipeline_S,
                            d_in=pcfg.seg_out, d_out_total=cfg.interactor_d_xi,
                            heads=cfg.interactor_heads,
                            layers=cfg.interactor_layers,
                            activation=cfg.interactor_activation)


def make_state(cfg: Config) -> ExperimentState:
    cfg.validate()
    pcfg = make_pipeline_config(cfg)
    icfg = make_interactor_config(cfg)
    init_ss, run_ss = np.random.SeedSequence(cfg.train_seed).spawn(2)
    store = ParamStore()
    init_rng = np.random.default_rng(init_ss)
    init_pipeline_params(store, pcfg, init_rng)
    init_interactor_params(store, icfg, init_rng)
    memory = ExplicitMemory(store, S=cfg.pipeline_S, width=cfg.interactor_d_xi)
    schedule = TrainSchedule(epochs=cfg.train_epochs,
                             proto_iters=cfg.train_proto_iters,
                             lr=cfg.train_lr, beta1=cfg.train_beta1,
                             beta2=cfg.train_beta2, epsilon=cfg.train_epsilon,
                             batch_size=cfg.train_batch_size,
                             seed=cfg.train_seed)
    optimizer = Adam(store, lr=schedule.lr, beta1=schedule.beta1,
                     beta2=schedule.beta2, eps=schedule.epsilon)
    return ExperimentState(cfg=cfg, pcfg=pcfg, icfg=icfg, store=store,
                           memory=memory, buffer=RehearsalBuffer(),
                           schedule=schedule, optimizer=optimizer,
                           run_rng=np.random.default_rng(run_ss))


def build_sessions(classes, base_count: int, incremental: int, ways: int,
                   shots: int, epochs: int) -> list[SessionSpec]:
    classes = sorted(classes)
    needed = base_count + incremental * ways
    if needed > len(classes):
        raise ConfigError(
            f"protocol needs {needed} classes, dataset has {len(classes)}")
    specs = [SessionSpec(index=1, class_ids=classes[:base_count], shots=0,
                         epochs=epochs, role="base")]
    cursor = base_count
    for t in range(2, incremental + 2):
        specs.append(SessionSpec(index=t,
                                 class_ids=classes[cursor:cursor + ways],
                                 shots=shots, epochs=epochs))
        cursor += ways
    return specs


def _session_samples(spec: SessionSpec, ds: EmbeddingDataset
                     ) -> list[tuple[RawFeature, int, RawFeature | None]]:
    out = []
    for y in spec.class_ids:
        idxs = ds.by_class(y)
        if not idxs:
            raise ProtocolError(f"session {spec.index}: class {y} has no samples")
        if spec.shots > 0:
            idxs = idxs[:spec.shots]
        for i in idxs:
            raw, aug = ds.record(i)
            out.append((raw, y, aug))
    return out


def _aug_view(state: ExperimentState, raw: RawFeature,
              stored: RawFeature | None, is_exemplar: bool) -> RawFeature:
    cfg = state.cfg
    use_stored = cfg.augment_use_stored and stored is not None
    if is_exemplar and not cfg.augment_rehearsal_views:
        use_stored = False
    if use_stored:
        return stored
    return RawFeature(h=synth_augment(raw.h, state.run_rng,
                                      cfg.augment_sigma_scale),
                      label=raw.label)


def run_session(spec: SessionSpec, state: ExperimentState,
                train_ds: EmbeddingDataset) -> dict:
    overlap = set(spec.class_ids) & set(state.memory.prototypes)
    if overlap:
        raise ProtocolError(
            f"session {spec.index} classes overlap earlier sessions: "
            f"{sorted(overlap)}")
    t0 = time.perf_counter()
    samples = _session_samples(spec, train_ds)

    # class-mean prototype init from this session's shots
    by_class: dict[int, list[np.ndarray]] = {y: [] for y in spec.class_ids}
    for raw, y, _ in samples:
        feat = interact(raw, state.pcfg, state.icfg, state.store)
        by_class[y].append(feat.xi)
    for y in spec.class_ids:
        hint = np.mean(by_class[y], axis=0)
        state.memory.add_class(y, init_hint=hint, session=spec.index)

    exemplars = [(raw, y, aug, True) for raw, y, aug in state.buffer.exemplars()]
    stream = [(raw, y, aug, False) for raw, y, aug in samples] + exemplars
    eta = state.cfg.loss_eta
    losses: list[float] = []
    for epoch in range(1, spec.epochs + 1):
        if epoch == state.schedule.proto_iters + 1:
            state.memory.set_phase_trainable(spec.class_ids, False)
        order = state.run_rng.permutation(len(stream))
        epoch_total = 0.0
        for start in range(0, len(order), state.schedule.batch_size):
            chunk = [stream[i] for i in order[start:start + state.schedule.batch_size]]
            batch_samples = [(raw, y) for raw, y, _, _ in chunk]
            augmented = None
            if eta > 0:
                augmented = [_aug_view(state, raw, aug, is_ex)
                             for raw, _, aug, is_ex in chunk]
            batch = Batch(samples=batch_samples, augmented=augmented)
            state.store.zero_grads()
            report = total_loss(batch, state.memory, state.pcfg, state.icfg,
                                state.cfg.loss_lambda, eta, state.store)
            state.optimizer.step()
            epoch_total += report.total * len(chunk)
        losses.append(epoch_total / len(stream))

    state.memory.freeze_session(spec.class_ids)
    for y in spec.class_ids:
        first = next((raw, aug) for raw, yy, aug in samples if yy == y)
        state.buffer.add(y, first[0], first[1])
    state.session_classes[spec.index] = list(spec.class_ids)
    state.epoch_losses[spec.index] = losses
    return {"session": spec.index, "classes": list(spec.class_ids),
            "epoch_losses": losses, "seconds": time.perf_counter() - t0}


def evaluate(state: ExperimentState, test_ds: EmbeddingDataset,
             upto_session: int) -> float:
    """Top-1 accuracy over the union of test sets of sessions 1..t."""
    seen: set[int] = set()
    for t, classes in state.session_classes.items():
        if t <= upto_session:
            seen.update(classes)
    idxs = [i for i, y in enumerate(test_ds.labels) if y in seen]
    if not idxs:
        raise ProtocolError(f"evaluation set empty for session {upto_session}")
    hits = 0
    for i in idxs:
        raw, _ = test_ds.record(i)
        feat = interact(raw, state.pcfg, state.icfg, state.store)
        hits += int(retrieve(feat, state.memory) == test_ds.labels[i])
    return hits / len(idxs)


@dataclass
class ExperimentResult:
    metrics: Metrics
    state: ExperimentState
    sessions: list[SessionSpec]
    logs: list[dict]


def load_datasets(cfg: Config) -> tuple[EmbeddingDataset, EmbeddingDataset]:
    if cfg.data_train_path and cfg.data_test_path:
        train = load_embeddings(cfg.data_train_path,
                                expected_segments=cfg.pipeline_S, split="train")
        test = load_embeddings(cfg.data_test_path,
                               expected_segments=cfg.pipeline_S, split="test")
        if train.d_h != cfg.pipeline_d_h or train.L != cfg.pipeline_L:
            raise ConfigError(
                f"dataset dims ({train.d_h},{train.L}) differ from configured "
                f"({cfg.pipeline_d_h},{cfg.pipeline_L})")
        return train, test
    n_classes = cfg.protocol_base_classes + cfg.protocol_sessions * cfg.protocol_ways
    data_ss = np.random.SeedSequence(cfg.train_seed).spawn(3)[2]
    return synth_generate(n_classes=n_classes, per_class=cfg.synth_per_class,
                          d_h=cfg.pipeline_d_h, L=cfg.pipeline_L,
                          cluster_sigma=cfg.synth_cluster_sigma,
                          seed=data_ss,
                          test_per_class=cfg.synth_test_per_class)


def run_experiment(cfg: Config,
                   datasets: tuple[EmbeddingDataset, EmbeddingDataset] | None = None,
                   progress=None) -> ExperimentResult:
    train_ds, test_ds = datasets if datasets is not None else load_datasets(cfg)
    sessions = build_sessions(train_ds.classes(), cfg.protocol_base_classes,
                              cfg.protocol_sessions, cfg.protocol_ways,
                              cfg.protocol_shots, cfg.train_epochs)
    state = make_state(cfg)
    accs: list[float] = []
    seconds: list[float] = []
    logs: list[dict] = []
    for spec in sessions:
        log = run_session(spec, state, train_ds)
        acc = evaluate(state, test_ds, spec.index) * 100.0
        accs.append(acc)
        seconds.append(log["seconds"])
        log["accuracy"] = acc
        logs.append(log)
        if progress is not None:
            progress(spec, acc)
    metrics = compute_metrics(accs)
    metrics.session_seconds = seconds
    return ExperimentResult(metrics=metrics, state=state, sessions=sessions,
                            logs=logs)


# -- diagnostics -------------------------------------------------------------------

def probe_centers(cfg: Config, store: ParamStore, dataset: EmbeddingDataset,
                  variants, seed: int = 0) -> list[dict]:
    """Mean segment-to-class-center distance per (variant, class).

    The trained variant reuses the given parameters; other variants get a
    fresh seeded interactor behind the same feature pipeline, so rows compare
    graph models on identical node inputs.  Classes with fewer than two
    samples report no distance.
    """
    pcfg = make_pipeline_config(cfg)
    rows: list[dict] = []
    for variant in variants:
        icfg = replace(make_interactor_config(cfg), variant=variant, layers=0)
        if variant.lower() == cfg.interactor_variant.lower():
            vstore = store
        else:
            vstore = ParamStore()
            rng = np.random.default_rng(np.random.SeedSequence(seed))
            for name, p in store.items():
                if name.startswith("pipeline."):
                    vstore.add(name, p.value.copy(), trainable=p.trainable)
            init_interactor_params(vstore, icfg, rng)
        for y in dataset.classes():
            idxs = dataset.by_class(y)
            if len(idxs) < 2:
                rows.append({"variant": icfg.variant, "class_id": y,
                             "n_samples": len(idxs), "mean_dist": None})
                continue
            segs = []
            for i in idxs:
                raw, _ = dataset.record(i)
                feat = interact(raw, pcfg, icfg, vstore)
                segs.append(feat.xi.reshape(icfg.S, -1))
            stacked = np.stack(segs)                  # (n, S, w)
            centers = stacked.mean(axis=0)            # per-node class center
            dist = float(np.mean(np.linalg.norm(stacked - centers, axis=2)))
            rows.append({"variant": icfg.variant, "class_id": y,
                         "n_samples": len(idxs), "mean_dist": dist})
    return rows


_SWEEP_KEYS = {"S": "pipeline_S", "lambda": "loss_lambda", "eta": "loss_eta"}


def sweep(cfg: Config, axis: str, values) -> list[tuple[float, Metrics]]:
    """Run the full protocol once per value of one hyperparameter axis."""
    if axis not in _SWEEP_KEYS:
        raise ConfigError(f"unknown sweep axis {axis!r}; "
                          f"choose one of {sorted(_SWEEP_KEYS)}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    out = []
    for v in values:
        swept = replace(cfg, **{_SWEEP_KEYS[axis]: type(getattr(cfg, _SWEEP_KEYS[axis]))(v)})
        result = run_experiment(swept)
        out.append((float(v), result.metrics))
    return out
