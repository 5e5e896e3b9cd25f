"""Raw backbone features -> local segments -> weighted graph.

A raw feature ``h`` is a (d_h, L) matrix (feature dim x token length).  It is
adjusted by a learned square matrix, chopped into S row segments, each segment
run through its own small MLP per token column, averaged over tokens, and the
S averaged segments become the nodes of a complete weighted graph whose edge
weights decay exponentially with segment distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, ShapeError
from .numeric import as_col, as_matrix, pairwise_euclidean, relu
from .params import ParamStore, init_uniform

AUGMENT_SIGMA_SCALE = 0.05


@dataclass
class RawFeature:
    h: np.ndarray                 # (d_h, L)
    label: int | None = None

    def __post_init__(self):
        self.h = as_matrix(self.h, "raw feature")


@dataclass
class PipelineConfig:
    d_h: int
    L: int
    S: int
    d_zeta: int
    mlp_hidden: int = 0           # total hidden width, split evenly over segments

    def __post_init__(self):
        if self.mlp_hidden == 0:
            self.mlp_hidden = self.d_zeta
        if self.S < 2:
            raise ConfigError(f"segment count S must be >= 2, got {self.S}")
        for name, dim in (("d_h", self.d_h), ("d_zeta", self.d_zeta),
                          ("mlp_hidden", self.mlp_hidden)):
            if dim % self.S != 0:
                raise ConfigError(
                    f"{name}={dim} not divisible by S={self.S}")

    @property
    def seg_in(self) -> int:
        return self.d_h // self.S

    @property
    def seg_hidden(self) -> int:
        return self.mlp_hidden // self.S

    @property
    def seg_out(self) -> int:
        return self.d_zeta // self.S


@dataclass
class LocalGraph:
    nodes: np.ndarray             # (S, width)
    adjacency: np.ndarray         # (S, S), symmetric, unit diagonal


def init_pipeline_params(store: ParamStore, cfg: PipelineConfig,
                         rng: np.random.Generator) -> None:
    store.add("pipeline.adjust.W",
              init_uniform(rng, cfg.d_h, cfg.d_h, fan_in=cfg.d_h))
    for s in range(cfg.S):
        store.add(f"pipeline.seg{s}.W1",
                  init_uniform(rng, cfg.seg_hidden, cfg.seg_in, fan_in=cfg.seg_in))
        store.add(f"pipeline.seg{s}.b1",
                  init_uniform(rng, cfg.seg_hidden, 1, fan_in=cfg.seg_in))
        store.add(f"pipeline.seg{s}.W2",
                  init_uniform(rng, cfg.seg_out, cfg.seg_hidden, fan_in=cfg.seg_hidden))
        store.add(f"pipeline.seg{s}.b2",
                  init_uniform(rng, cfg.seg_out, 1, fan_in=cfg.seg_hidden))


def pipeline_param_count(cfg: PipelineConfig, include_adjust: bool = False) -> int:
    per_seg = (cfg.seg_hidden * cfg.seg_in + cfg.seg_hidden
               + cfg.seg_out * cfg.seg_hidden + cfg.seg_out)
    total = cfg.S * per_seg
    if include_adjust:
        total += cfg.d_h * cfg.d_h
    return total


# -- plain-array operations ----------------------------------------------------

def adjust(h, store: ParamStore) -> np.ndarray:
    """Learned square adjustment of the raw feature."""
    hm = h.h if isinstance(h, RawFeature) else as_matrix(h, "adjust input")
    W = store["pipeline.adjust.W"].value
    if W.shape[1] != hm.shape[0]:
        raise ShapeError(
            f"adjust: feature dim {hm.shape[0]} != W width {W.shape[1]}")
    return W @ hm


def segment_transform(hbar, store: ParamStore, cfg: PipelineConfig) -> np.ndarray:
    """Apply each segment's 2-layer MLP per token column and restack."""
    hb = as_matrix(hbar, "segment_transform input")
    if hb.shape[0] != cfg.d_h:
        raise ShapeError(
            f"segment_transform: expected {cfg.d_h} rows, got {hb.shape[0]}")
    parts = []
    for s in range(cfg.S):
        x = hb[s * cfg.seg_in:(s + 1) * cfg.seg_in, :]
        W1 = store[f"pipeline.seg{s}.W1"].value
        b1 = store[f"pipeline.seg{s}.b1"].value
        W2 = store[f"pipeline.seg{s}.W2"].value
        b2 = store[f"pipeline.seg{s}.b2"].value
        parts.append(W2 @ relu(W1 @ x + b1) + b2)
    return np.vstack(parts)


def token_average(zeta) -> np.ndarray:
    """Mean over the token dimension; (d, L) -> (d, 1)."""
    z = as_matrix(zeta, "token_average input")
    return z.mean(axis=1, keepdims=True)


def build_local_graph(zbar, S: int) -> LocalGraph:
    """Reshape a pooled feature into S nodes with exp(-distance) adjacency."""
    z = as_col(zbar, "build_local_graph input")
    if z.shape[0] % S != 0:
        raise ShapeError(f"feature length {z.shape[0]} not divisible by S={S}")
    nodes = z.reshape(S, -1)
    adjacency = np.exp(-pairwise_euclidean(nodes))
    return LocalGraph(nodes=nodes, adjacency=adjacency)


def concat_views(zeta_x, zeta_aug) -> np.ndarray:
    """Stack clean and augmented token features; downstream sees 2S nodes."""
    if zeta_aug is None:
        raise ShapeError(
            "augmented view missing: supply one, enable synthetic "
            "augmentation, or run without the contrastive term (eta=0)")
    a = as_matrix(zeta_x, "clean view")
    b = as_matrix(zeta_aug, "augmented view")
    if a.shape != b.shape:
        raise ShapeError(f"view shapes differ: {a.shape} vs {b.shape}")
    return np.vstack([a, b])


def synth_augment(h: np.ndarray, rng: np.random.Generator,
                  sigma_scale: float = AUGMENT_SIGMA_SCALE) -> np.ndarray:
    """Embedding-level stand-in for an augmented view: additive Gaussian noise
    scaled to the feature's RMS."""
    rms = float(np.sqrt(np.mean(h * h)))
    sigma = sigma_scale * (rms if rms > 0 else 1.0)
    return h + rng.normal(0.0, sigma, size=h.shape)


# -- tape builder ---------------------------------------------------------------

def zeta_var(h: np.ndarray, cfg: PipelineConfig, ctx) -> ad.Var:
    """Adjust + per-segment MLPs on the tape; returns the (d_zeta, L) node."""
    hv = ad.constant(h)
    L = h.shape[1]
    onesL = ad.ones(1, L)
    hbar = ad.matmul(ctx.var("pipeline.adjust.W"), hv)
    parts = []
    for s in range(cfg.S):
        x = ad.slice_rows(hbar, s * cfg.seg_in, (s + 1) * cfg.seg_in)
        a1 = ad.relu(ad.add(ad.matmul(ctx.var(f"pipeline.seg{s}.W1"), x),
                            ad.matmul(ctx.var(f"pipeline.seg{s}.b1"), onesL)))
        y = ad.add(ad.matmul(ctx.var(f"pipeline.seg{s}.W2"), a1),
                   ad.matmul(ctx.var(f"pipeline.seg{s}.b2"), onesL))
        parts.append(y)
    return ad.concat_rows(parts)


def graph_var(zeta: ad.Var, n_nodes: int) -> tuple[ad.Var, ad.Var]:
    """Token-average, reshape to nodes, exponential-decay adjacency."""
    zbar = ad.mean_cols(zeta)
    d = zbar.shape[0]
    if d % n_nodes != 0:
        raise ShapeError(f"feature length {d} not divisible by {n_nodes} nodes")
    nodes = ad.reshape(zbar, n_nodes, d // n_nodes)
    adj = ad.exp(ad.neg(ad.pairwise_euclidean(nodes)))
    return nodes, adj
