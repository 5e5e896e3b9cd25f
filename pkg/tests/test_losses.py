import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from g2gmem import autodiff as ad
from g2gmem.errors import ProtocolError, ShapeError
from g2gmem.gradcheck import check_gradient
from g2gmem.interactors import forward_var
from g2gmem.losses import (Batch, local_decoupling, local_graph_contrastive,
                           proto_contrastive, slice_views, total_loss)
from g2gmem.pipeline import (adjust, build_local_graph, concat_views,
                             segment_transform, token_average)

from conftest import make_toy
from oracles import ref_decoupling_per_sample


class TestProtoContrastive:
    def test_single_class_batch_is_exactly_zero(self):
        batch, mem, pcfg, icfg, store = make_toy(n_classes=1)
        assert proto_contrastive(batch, mem, pcfg, icfg, store,
                                 with_grad=False) == 0.0

    def test_equal_prototypes_give_log2(self):
        batch, mem, pcfg, icfg, store = make_toy(n_classes=2)
        mem.store[f"proto.1"].value[:] = mem.value(0)
        got = proto_contrastive(batch, mem, pcfg, icfg, store, with_grad=False)
        assert abs(got - np.log(2.0)) < 1e-9

    def test_gradient_check(self):
        batch, mem, pcfg, icfg, store = make_toy(variant="gcn", seed=1)
        f = lambda st: proto_contrastive(batch, mem, pcfg, icfg, st)
        fv = lambda st: proto_contrastive(batch, mem, pcfg, icfg, st,
                                          with_grad=False)
        assert check_gradient(f, store, 1e-5, fn_value=fv) < 1e-4

    def test_non_negative_on_random_instances(self):
        for seed in range(8):
            batch, mem, pcfg, icfg, store = make_toy(seed=seed, n_classes=2)
            assert proto_contrastive(batch, mem, pcfg, icfg, store,
                                     with_grad=False) >= 0.0

    def test_label_without_prototype(self):
        batch, mem, pcfg, icfg, store = make_toy(n_classes=2)
        bad = Batch(samples=[(batch.samples[0][0], 99)])
        with pytest.raises(ProtocolError, match="99"):
            proto_contrastive(bad, mem, pcfg, icfg, store)


class TestLocalDecoupling:
    def test_orthogonal_segments_zero(self):
        batch, mem, pcfg, icfg, store = make_toy(n_classes=1)
        proto = np.zeros((16, 1))
        for s in range(4):
            proto[s * 4 + s, 0] = 2.0 - 0.3 * s      # scaled one-hot segments
        mem.store["proto.0"].value[:] = proto
        assert local_decoupling(batch, mem, store, with_grad=False) == 0.0

    def test_identical_segments_ordered_pair_count(self):
        batch, mem, pcfg, icfg, store = make_toy(n_classes=1)
        seg = np.random.default_rng(0).normal(size=(4, 1))
        mem.store["proto.0"].value[:] = np.tile(seg, (4, 1))
        got = local_decoupling(batch, mem, store, with_grad=False)
        assert abs(got - 4 * 3) < 1e-10

    def test_matches_double_loop_oracle(self):
        batch, mem, pcfg, icfg, store = make_toy(n_classes=2, seed=3)
        got = local_decoupling(batch, mem, store, with_grad=False)
        want = np.mean([ref_decoupling_per_sample(mem.value(y), 4)
                        for y in batch.labels])
        assert abs(got - want) < 1e-12

    def test_gradient_check(self):
        batch, mem, pcfg, icfg, store = make_toy(n_classes=2, seed=4)
        f = lambda st: local_decoupling(batch, mem, st)
        fv = lambda st: local_decoupling(batch, mem, st, with_grad=False)
        assert check_gradient(f, store, 1e-5, fn_value=fv) < 1e-4

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 100_000))
    def test_per_sample_bounds(self, seed):
        proto = np.random.default_rng(seed).normal(size=(16, 1))
        val = ref_decoupling_per_sample(proto, 4)
        assert -12.0 - 1e-9 <= val <= 12.0 + 1e-9

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 100_000))
    def test_gradient_check_at_random_points(self, seed):
        batch, mem, pcfg, icfg, store = make_toy(n_classes=2, seed=seed)
        f = lambda st: local_decoupling(batch, mem, st)
        fv = lambda st: local_decoupling(batch, mem, st, with_grad=False)
        assert check_gradient(f, store, 1e-5, fn_value=fv) < 1e-4


class TestSliceViews:
    def test_inverse_of_concatenation(self):
        a = np.arange(4.0).reshape(-1, 1)
        b = np.arange(10.0, 14.0).reshape(-1, 1)
        x, y = slice_views(np.vstack([a, b]))
        assert np.array_equal(x, a) and np.array_equal(y, b)

    def test_index_contract(self):
        x, y = slice_views(np.arange(8.0))
        assert np.array_equal(x[:, 0], [0, 1, 2, 3])
        assert np.array_equal(y[:, 0], [4, 5, 6, 7])

    def test_odd_length_rejected(self):
        with pytest.raises(ShapeError):
            slice_views(np.arange(7.0))

    def test_tied_views_through_two_s_interactor(self):
        batch, mem, pcfg, icfg, store = make_toy(variant="gatv2", seed=5)
        h = batch.samples[0][0].h
        zeta = segment_transform(adjust(h, store), store, pcfg)
        cat = concat_views(zeta, zeta)
        g = build_local_graph(token_average(cat), 2 * pcfg.S)
        ctx = ad.TapeParams(store)
        out = forward_var(ad.constant(g.nodes), ad.constant(g.adjacency),
                          ctx, icfg).value
        xi, xi_tilde = slice_views(out.reshape(-1, 1))
        assert np.max(np.abs(xi - xi_tilde)) < 1e-12


class TestLocalGraphContrastive:
    def test_identical_views_reduce_to_contrast_of_batch(self):
        batch, mem, pcfg, icfg, store = make_toy(seed=6)
        tied = Batch(samples=batch.samples,
                     augmented=[raw for raw, _ in batch.samples])
        lc = local_graph_contrastive(tied, mem, pcfg, icfg, store,
                                     with_grad=False)
        lg = proto_contrastive(batch, mem, pcfg, icfg, store, with_grad=False)
        assert abs(lc - lg) < 1e-12

    def test_missing_views_rejected(self):
        batch, mem, pcfg, icfg, store = make_toy(with_aug=False)
        with pytest.raises(ShapeError, match="augment"):
            local_graph_contrastive(batch, mem, pcfg, icfg, store)

    def test_gradient_check(self):
        batch, mem, pcfg, icfg, store = make_toy(variant="gcn", seed=7)
        f = lambda st: local_graph_contrastive(batch, mem, pcfg, icfg, st)
        fv = lambda st: local_graph_contrastive(batch, mem, pcfg, icfg, st,
                                                with_grad=False)
        assert check_gradient(f, store, 1e-5, fn_value=fv) < 1e-4


class TestTotalLoss:
    def test_zero_weights_reduce_to_contrastive(self):
        batch, mem, pcfg, icfg, store = make_toy(seed=8)
        report = total_loss(batch, mem, pcfg, icfg, 0.0, 0.0, store,
                            with_grad=False)
        lg = proto_contrastive(batch, mem, pcfg, icfg, store, with_grad=False)
        assert report.total == lg
        assert report.l_d == 0.0 and report.l_c == 0.0

    def test_eta_zero_skips_alignment_lazily(self):
        batch, mem, pcfg, icfg, store = make_toy(with_aug=False, seed=9)
        report = total_loss(batch, mem, pcfg, icfg, 0.1, 0.0, store,
                            with_grad=False)
        assert report.l_c == 0.0
        with pytest.raises(ShapeError):
            total_loss(batch, mem, pcfg, icfg, 0.1, 0.1, store,
                       with_grad=False)

    def test_report_echoes_weights_and_recomposes(self):
        batch, mem, pcfg, icfg, store = make_toy(seed=10)
        report = total_loss(batch, mem, pcfg, icfg, 0.1, 0.1, store,
                            with_grad=False)
        assert report.lam == 0.1 and report.eta == 0.1
        recomposed = report.l_g + 0.1 * report.l_d + 0.1 * report.l_c
        assert abs(report.total - recomposed) < 1e-12

    def test_matches_component_sum(self):
        batch, mem, pcfg, icfg, store = make_toy(seed=11)
        report = total_loss(batch, mem, pcfg, icfg, 0.3, 0.2, store,
                            with_grad=False)
        lg = proto_contrastive(batch, mem, pcfg, icfg, store, with_grad=False)
        ld = local_decoupling(batch, mem, store, with_grad=False)
        lc = local_graph_contrastive(batch, mem, pcfg, icfg, store,
                                     with_grad=False)
        assert abs(report.total - (lg + 0.3 * ld + 0.2 * lc)) < 1e-12

    def test_gradients_sum_over_components(self):
        batch, mem, pcfg, icfg, store = make_toy(seed=12)
        store.zero_grads()
        total_loss(batch, mem, pcfg, icfg, 0.3, 0.2, store)
        combined = {n: p.grad.copy() for n, p in store.items()}
        store.zero_grads()
        proto_contrastive(batch, mem, pcfg, icfg, store)
        ld_store = {n: p.grad.copy() for n, p in store.items()}
        store.zero_grads()
        local_decoupling(batch, mem, store)
        for n, p in store.items():
            ld_store[n] += 0.3 * p.grad
        store.zero_grads()
        local_graph_contrastive(batch, mem, pcfg, icfg, store)
        for n, p in store.items():
            ld_store[n] += 0.2 * p.grad
        for n in combined:
            assert np.max(np.abs(combined[n] - ld_store[n])) < 1e-10

    def test_frozen_prototypes_get_no_gradient(self):
        batch, mem, pcfg, icfg, store = make_toy(seed=13)
        mem.freeze_session([0])
        store.zero_grads()
        total_loss(batch, mem, pcfg, icfg, 0.1, 0.1, store)
        assert np.array_equal(store["proto.0"].grad, np.zeros((16, 1)))
        assert np.max(np.abs(store["proto.1"].grad)) > 0

    def test_negative_weights_rejected(self):
        batch, mem, pcfg, icfg, store = make_toy()
        with pytest.raises(ShapeError):
            total_loss(batch, mem, pcfg, icfg, -0.1, 0.0, store)


def test_batch_validates_augmented_length():
    batch, mem, pcfg, icfg, store = make_toy()
    with pytest.raises(ShapeError):
        Batch(samples=batch.samples, augmented=batch.augmented[:-1])
