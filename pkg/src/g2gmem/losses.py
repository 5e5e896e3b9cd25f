"""Training objectives: prototype contrast, segment decoupling, view alignment.

All losses build one reverse-mode tape per call and, unless ``with_grad`` is
off, accumulate gradients into the store (callers zero grads beforehand).
Frozen prototypes participate in the forward pass but never receive gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import TapeParams, Var, backward
from .errors import ProtocolError, ShapeError
from .interactors import InteractorConfig, forward_var, interact_var
from .memory import ExplicitMemory, proto_key
from .pipeline import PipelineConfig, RawFeature, graph_var, zeta_var


@dataclass
class Batch:
    samples: list[tuple[RawFeature, int]]
    augmented: list[RawFeature] | None = None

    def __post_init__(self):
        if self.augmented is not None and len(self.augmented) != len(self.samples):
            raise ShapeError(
                f"augmented list length {len(self.augmented)} != "
                f"batch size {len(self.samples)}")

    @property
    def labels(self) -> list[int]:
        return [y for _, y in self.samples]

    @property
    def classes(self) -> list[int]:
        return sorted(set(self.labels))


@dataclass
class LossReport:
    total: float
    l_g: float
    l_d: float
    l_c: float
    lam: float
    eta: float


def _check_labels(labels, memory: ExplicitMemory) -> None:
    missing = [y for y in set(labels) if y not in memory.prototypes]
    if missing:
        raise ProtocolError(f"labels without prototypes: {sorted(missing)}")


def _mean(terms: list[Var]) -> Var:
    return ad.cmul(ad.sum_all(ad.concat_rows(terms)), 1.0 / len(terms))


def _proto_graphs(ctx: TapeParams, memory: ExplicitMemory,
                  classes) -> dict[int, tuple[Var, Var]]:
    out = {}
    seg_w = memory.width // memory.S
    for y in classes:
        m = ctx.var(proto_key(y))
        nodes = ad.reshape(m, memory.S, seg_w)
        out[y] = (m, ad.exp(ad.neg(ad.pairwise_euclidean(nodes))))
    return out


def _r_var(xi: Var, axi: Var, m: Var, am: Var) -> Var:
    return ad.add(ad.fro_norm(ad.sub(xi, m)), ad.fro_norm(ad.sub(axi, am)))


def _lg_var(ctx, feats, labels, protos, pcfg, icfg, zetas) -> Var:
    classes = sorted({y for y in labels})
    terms = []
    for h, y, zeta in zip(feats, labels, zetas):
        xi, axi = interact_var(h, pcfg, icfg, ctx, zeta=zeta)
        rs = {c: _r_var(xi, axi, *protos[c]) for c in classes}
        lse = ad.logsumexp_col(ad.concat_rows([ad.neg(rs[c]) for c in classes]))
        terms.append(ad.add(rs[y], lse))
    return _mean(terms)


def _ld_var(ctx, labels, memory: ExplicitMemory) -> Var:
    seg_w = memory.width // memory.S
    eye = ad.constant(np.eye(memory.S))
    per_class: dict[int, Var] = {}
    terms = []
    for y in labels:
        if y not in per_class:
            nodes = ad.reshape(ctx.var(proto_key(y)), memory.S, seg_w)
            cos = ad.cosine_matrix(nodes)
            per_class[y] = ad.sub(ad.sum_all(cos),
                                  ad.sum_all(ad.hadamard(cos, eye)))
        terms.append(per_class[y])
    return _mean(terms)


def _lc_var(ctx, batch: Batch, memory, protos, pcfg, icfg,
            zetas_clean, zetas_aug) -> Var:
    lg_aug = _lg_var(ctx, [a.h for a in batch.augmented], batch.labels,
                     protos, pcfg, icfg, zetas_aug)
    aligns = []
    for zc, za in zip(zetas_clean, zetas_aug):
        cat = ad.concat_rows([zc, za])
        nodes, adj = graph_var(cat, 2 * pcfg.S)
        out = forward_var(nodes, adj, ctx, icfg)
        top = ad.slice_rows(out, 0, pcfg.S)
        bot = ad.slice_rows(out, pcfg.S, 2 * pcfg.S)
        a_top = ad.exp(ad.neg(ad.pairwise_euclidean(top)))
        a_bot = ad.exp(ad.neg(ad.pairwise_euclidean(bot)))
        aligns.append(ad.add(ad.sum_sq(ad.sub(top, bot)),
                             ad.sum_sq(ad.sub(a_top, a_bot))))
    return ad.add(lg_aug, _mean(aligns))


def _finish(v: Var, ctx: TapeParams, with_grad: bool) -> float:
    if with_grad:
        backward(v)
        ctx.flush()
    return float(v.value[0, 0])


def proto_contrastive(batch: Batch, memory: ExplicitMemory,
                      pcfg: PipelineConfig, icfg: InteractorConfig,
                      store, with_grad: bool = True) -> float:
    """Batch softmax over negated dissimilarities to the batch's classes."""
    _check_labels(batch.labels, memory)
    ctx = TapeParams(store)
    zetas = [zeta_var(h.h, pcfg, ctx) for h, _ in batch.samples]
    protos = _proto_graphs(ctx, memory, batch.classes)
    v = _lg_var(ctx, [h.h for h, _ in batch.samples], batch.labels,
                protos, pcfg, icfg, zetas)
    return _finish(v, ctx, with_grad)


def local_decoupling(batch: Batch, memory: ExplicitMemory, store,
                     with_grad: bool = True) -> float:
    """Sum of ordered-pair segment cosines of each sample's prototype."""
    _check_labels(batch.labels, memory)
    ctx = TapeParams(store)
    v = _ld_var(ctx, batch.labels, memory)
    return _finish(v, ctx, with_grad)


def slice_views(xi_cat) -> tuple[np.ndarray, np.ndarray]:
    """Split a stacked two-view feature back into (clean, augmented)."""
    v = np.asarray(xi_cat, dtype=np.float64).reshape(-1, 1)
    if v.shape[0] % 2 != 0:
        raise ShapeError(f"two-view feature has odd length {v.shape[0]}")
    half = v.shape[0] // 2
    return v[:half].copy(), v[half:].copy()


def local_graph_contrastive(batch: Batch, memory: ExplicitMemory,
                            pcfg: PipelineConfig, icfg: InteractorConfig,
                            store, with_grad: bool = True) -> float:
    """Augmented-view contrast plus two-view alignment via one 2S-node pass."""
    if batch.augmented is None:
        raise ShapeError(
            "contrastive loss needs augmented views: supply them, enable "
            "synthetic augmentation, or set eta=0")
    _check_labels(batch.labels, memory)
    ctx = TapeParams(store)
    zetas_clean = [zeta_var(h.h, pcfg, ctx) for h, _ in batch.samples]
    zetas_aug = [zeta_var(a.h, pcfg, ctx) for a in batch.augmented]
    protos = _proto_graphs(ctx, memory, batch.classes)
    v = _lc_var(ctx, batch, memory, protos, pcfg, icfg, zetas_clean, zetas_aug)
    return _finish(v, ctx, with_grad)


def total_loss(batch: Batch, memory: ExplicitMemory, pcfg: PipelineConfig,
               icfg: InteractorConfig, lam: float, eta: float, store,
               with_grad: bool = True) -> LossReport:
    """Weighted sum of the three objectives on a single shared tape.

    The alignment term is only built when ``eta > 0``; batches without
    augmented views are fine otherwise.
    """
    if lam < 0 or eta < 0:
        raise ShapeError("loss weights must be non-negative")
    _check_labels(batch.labels, memory)
    ctx = TapeParams(store)
    zetas_clean = [zeta_var(h.h, pcfg, ctx) for h, _ in batch.samples]
    protos = _proto_graphs(ctx, memory, batch.classes)
    lg = _lg_var(ctx, [h.h for h, _ in batch.samples], batch.labels,
                 protos, pcfg, icfg, zetas_clean)
    total = lg
    ld_val = 0.0
    lc_val = 0.0
    if lam > 0:
        ld = _ld_var(ctx, batch.labels, memory)
        ld_val = float(ld.value[0, 0])
        total = ad.add(total, ad.cmul(ld, lam))
    if eta > 0:
        if batch.augmented is None:
            raise ShapeError(
                "eta > 0 needs augmented views: supply them, enable "
                "synthetic augmentation, or set eta=0")
        zetas_aug = [zeta_var(a.h, pcfg, ctx) for a in batch.augmented]
        lc = _lc_var(ctx, batch, memory, protos, pcfg, icfg,
                     zetas_clean, zetas_aug)
        lc_val = float(lc.value[0, 0])
        total = ad.add(total, ad.cmul(lc, eta))
    total_val = _finish(total, ctx, with_grad)
    return LossReport(total=total_val, l_g=float(lg.value[0, 0]), l_d=ld_val,
                      l_c=lc_val, lam=lam, eta=eta)
