"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them live)."""

import time

import numpy as np
import pytest

from g2gmem.config import Config
from g2gmem.data import nearest_center_accuracy, synth_generate
from g2gmem.gradcheck import check_gradient
from g2gmem.interactors import (VARIANTS, InteractiveFeature, forward,
                                init_interactor_params)
from g2gmem.losses import (Batch, local_decoupling, local_graph_contrastive,
                           proto_contrastive, total_loss)
from g2gmem.memory import (ExplicitMemory, dissimilarity, retrieve,
                           retrieve_v2v)
from g2gmem.params import ParamStore
from g2gmem.pipeline import LocalGraph, build_local_graph
from g2gmem.protocol import (build_sessions, compute_metrics, evaluate,
                             load_datasets, make_state, run_experiment,
                             run_session)

from conftest import make_toy


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {name}: {status}" + (f"  ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def as_feature(vec, s):
    v = np.asarray(vec, dtype=float).reshape(-1, 1)
    return InteractiveFeature(xi=v, local_graph=build_local_graph(v, s))


def test_gradient_correctness_all_variants():
    """Analytic vs central-difference gradients of the combined loss,
    every interactor variant, toy instance, < 1e-4 and < 60 s total."""
    t0 = time.perf_counter()
    worst = {}
    for variant in VARIANTS:
        batch, mem, pcfg, icfg, store = make_toy(
            variant=variant, seed=0, n_classes=2, batch_size=4,
            d_h=8, L=2, S=4, d_zeta=16, d_xi=16)
        f = lambda st: total_loss(batch, mem, pcfg, icfg, 0.1, 0.1, st).total
        fv = lambda st: total_loss(batch, mem, pcfg, icfg, 0.1, 0.1, st,
                                   with_grad=False).total
        worst[variant] = check_gradient(f, store, 1e-5, fn_value=fv)
    elapsed = time.perf_counter() - t0
    detail = ", ".join(f"{v}={e:.1e}" for v, e in worst.items())
    report("gradient-correctness",
           max(worst.values()) < 1e-4 and elapsed < 60.0,
           f"{detail}; {elapsed:.1f}s")


def test_retrieval_oracle_equivalence():
    """Graph retrieval equals the exhaustive argmin scan on 1000 random
    memory/query instances with up to 50 classes; zero mismatches."""
    rng = np.random.default_rng(7)
    s, width = 4, 16
    mismatches = 0
    for _ in range(1000):
        mem = ExplicitMemory(ParamStore(), S=s, width=width)
        n = int(rng.integers(1, 51))
        for y in rng.choice(200, size=n, replace=False):
            mem.add_class(int(y), rng.normal(size=(width, 1)))
        q = as_feature(rng.normal(size=(width, 1)), s)
        best = min(mem.seen, key=lambda y: (dissimilarity(q, mem, y)[0], y))
        mismatches += int(retrieve(q, mem) != best)
    report("retrieval-oracle-equivalence", mismatches == 0,
           f"{mismatches} mismatches in 1000 trials")


def test_metric_arithmetic_matches_reported_row():
    """The published per-session accuracies reproduce PD and average."""
    accs = [90.13, 86.02, 83.97, 80.73, 80.80, 79.06, 78.84, 77.27, 76.06]
    m = compute_metrics(accs)
    ok = round(m.pd, 2) == 14.07 and round(m.average, 2) == 81.43
    report("metric-arithmetic", ok,
           f"pd={m.pd:.4f} avg={m.average:.4f}")


def test_loss_closed_forms():
    """Single-class contrast = 0 exactly; identical-segment decoupling =
    S(S-1) within 1e-10; tied views zero the alignment within 1e-12."""
    batch1, mem1, pcfg, icfg, store1 = make_toy(n_classes=1, seed=1)
    lg = proto_contrastive(batch1, mem1, pcfg, icfg, store1, with_grad=False)

    batch2, mem2, _, _, store2 = make_toy(n_classes=1, seed=2)
    seg = np.random.default_rng(3).normal(size=(4, 1))
    mem2.store["proto.0"].value[:] = np.tile(seg, (4, 1))
    ld = local_decoupling(batch2, mem2, store2, with_grad=False)

    batch3, mem3, pcfg3, icfg3, store3 = make_toy(seed=4)
    tied = Batch(samples=batch3.samples,
                 augmented=[raw for raw, _ in batch3.samples])
    lc = local_graph_contrastive(tied, mem3, pcfg3, icfg3, store3,
                                 with_grad=False)
    lg_tied = proto_contrastive(batch3, mem3, pcfg3, icfg3, store3,
                                with_grad=False)
    alignment = lc - lg_tied

    ok = lg == 0.0 and abs(ld - 12.0) < 1e-10 and abs(alignment) < 1e-12
    report("loss-closed-forms", ok,
           f"L_G={lg!r} L_D-12={ld - 12: .2e} align={alignment:.2e}")


def test_structural_invariants():
    """Adjacency symmetric/unit-diagonal/(0,1] on 1e4 random inputs;
    normalization postconditions within 1e-9; permutation equivariance of
    every variant within 1e-10."""
    rng = np.random.default_rng(11)
    ok_adj = True
    for _ in range(10_000):
        scale = float(rng.uniform(0.01, 20.0))
        zbar = rng.normal(scale=scale, size=(32, 1))
        a = build_local_graph(zbar, 8).adjacency
        ok_adj &= bool(np.array_equal(a, a.T)
                       and np.array_equal(np.diag(a), np.ones(8))
                       and np.all(a > 0) and np.all(a <= 1))
        if not ok_adj:
            break

    cfg_pn = None
    ok_pn = True
    for seed in range(20):
        from g2gmem.interactors import InteractorConfig
        cfg_pn = InteractorConfig(variant="pairnorm", S=4, d_in=4,
                                  d_out_total=16)
        store = ParamStore()
        init_interactor_params(store, cfg_pn, np.random.default_rng(seed))
        g = build_local_graph(np.random.default_rng(seed + 50)
                              .normal(size=(16, 1)), 4)
        out = forward(g, store, cfg_pn)
        msn = float(np.mean(np.sum(out * out, axis=1)))
        ok_pn &= bool(np.max(np.abs(out.mean(axis=0))) < 1e-9
                      and abs(msn - 1.0) < 1e-9)

    ok_perm = True
    perm = np.array([2, 0, 3, 1])
    for variant in VARIANTS:
        from g2gmem.interactors import InteractorConfig
        cfg = InteractorConfig(variant=variant, S=4, d_in=4, d_out_total=16,
                               heads=2)
        store = ParamStore()
        init_interactor_params(store, cfg, np.random.default_rng(31))
        g = build_local_graph(np.random.default_rng(32).normal(size=(16, 1)), 4)
        g_p = LocalGraph(nodes=g.nodes[perm],
                         adjacency=g.adjacency[np.ix_(perm, perm)])
        diff = np.max(np.abs(forward(g_p, store, cfg)
                             - forward(g, store, cfg)[perm]))
        ok_perm &= bool(diff < 1e-10)

    report("structural-invariants", ok_adj and ok_pn and ok_perm,
           f"adjacency={ok_adj} pairnorm={ok_pn} equivariance={ok_perm}")


PROTOCOL_CFG = Config(
    pipeline_d_h=16, pipeline_L=2, pipeline_S=4, pipeline_d_zeta=16,
    interactor_d_xi=16, train_epochs=3, train_proto_iters=2,
    train_batch_size=8, train_seed=9, synth_per_class=5,
    synth_test_per_class=4, synth_cluster_sigma=0.05,
    protocol_base_classes=4, protocol_sessions=2, protocol_ways=2,
    protocol_shots=3)


def _seeded_protocol_run():
    train, test = load_datasets(PROTOCOL_CFG)
    state = make_state(PROTOCOL_CFG)
    specs = build_sessions(train.classes(), 4, 2, 2, 3,
                           PROTOCOL_CFG.train_epochs)
    snapshots = {}
    accs = []
    for spec in specs:
        run_session(spec, state, train)
        for y in spec.class_ids:
            snapshots.setdefault(y, state.memory.value(y).tobytes())
        accs.append(evaluate(state, test, spec.index))
    return state, snapshots, accs


def test_protocol_invariants_three_session_run():
    """Frozen prototypes byte-stable, buffer exactly one exemplar per seen
    class, rerun with the same seed bit-identical; < 5 min."""
    t0 = time.perf_counter()
    s1, snaps1, accs1 = _seeded_protocol_run()
    frozen_stable = all(s1.memory.value(y).tobytes() == blob
                        for y, blob in snaps1.items())
    buffer_ok = (len(s1.buffer) == len(s1.memory)
                 and s1.buffer.classes() == s1.memory.seen)
    s2, snaps2, accs2 = _seeded_protocol_run()
    identical = (accs1 == accs2
                 and all(s1.memory.value(y).tobytes()
                         == s2.memory.value(y).tobytes()
                         for y in s1.memory.seen))
    elapsed = time.perf_counter() - t0
    report("protocol-invariants",
           frozen_stable and buffer_ok and identical and elapsed < 300.0,
           f"frozen={frozen_stable} buffer={buffer_ok} "
           f"reproducible={identical}; {elapsed:.1f}s")


def test_synthetic_end_to_end():
    """Well-separated clusters (nearest-center oracle at 100%): the full
    attention pipeline reaches >= 95% final accuracy with PD <= 5 over one
    base + four incremental sessions; < 10 min."""
    cfg = Config(train_epochs=5, train_proto_iters=3, train_batch_size=16,
                 train_seed=0, synth_per_class=15, synth_test_per_class=10,
                 synth_cluster_sigma=0.05, interactor_variant="gatv2")
    t0 = time.perf_counter()
    datasets = load_datasets(cfg)
    oracle = nearest_center_accuracy(*datasets)
    result = run_experiment(cfg, datasets=datasets)
    elapsed = time.perf_counter() - t0
    final = result.metrics.session_acc[-1]
    pd = result.metrics.pd
    ok = oracle == 1.0 and final >= 95.0 and pd <= 5.0 and elapsed < 600.0
    report("synthetic-end-to-end", ok,
           f"oracle={oracle:.3f} final={final:.2f}% pd={pd:.2f}; "
           f"{elapsed:.0f}s")


def test_v2v_vs_g2g_discrimination():
    """Two queries at equal vector distance from a prototype: the plain
    metric cannot separate them, the graph dissimilarity can."""
    s, width = 4, 16
    mem = ExplicitMemory(ParamStore(), S=s, width=width)
    proto = np.ones((width, 1))
    mem.add_class(0, init_hint=proto)
    q_flat = proto + 0.5 * np.ones((width, 1))
    delta = np.zeros((width, 1))
    delta[:4] = 1.0
    q_mixed = proto + delta

    d_flat = float(np.linalg.norm(q_flat - proto))
    d_mixed = float(np.linalg.norm(q_mixed - proto))
    f_flat = as_feature(q_flat, s)
    f_mixed = as_feature(q_mixed, s)
    r_flat, _, s_flat = dissimilarity(f_flat, mem, 0)
    r_mixed, _, s_mixed = dissimilarity(f_mixed, mem, 0)
    v2v_same = (retrieve_v2v(q_flat, mem) == retrieve_v2v(q_mixed, mem)
                and abs(d_flat - d_mixed) < 1e-12)
    ok = v2v_same and s_mixed > 1e-6 and s_flat < 1e-9 and r_mixed > r_flat
    report("v2v-vs-g2g-discrimination", ok,
           f"|d1-d2|={abs(d_flat - d_mixed):.1e} structure={s_mixed:.3f}")
