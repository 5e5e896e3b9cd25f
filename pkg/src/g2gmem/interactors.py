"""Seven graph-neural interactors behind one forward interface.

Each variant maps S node vectors plus their weighted adjacency to S output
vectors of width ``d_out_total / S``; flattened row-major they form the
interactive feature used to query the prototype memory.  All variants share
node weights, so they are node-count agnostic (the contrastive path runs the
same parameters over 2S nodes).

Weight orientation convention: parameters for formulas written as vector maps
(``W z``) are stored (out, in) and applied as ``X @ W.T``; parameters for
right-multiplications (``Z W``) are stored (in, out).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import TapeParams, Var
from .errors import ConfigError, StageError
from .params import ParamStore, init_uniform
from .pipeline import (LocalGraph, PipelineConfig, RawFeature, adjust,
                       build_local_graph, graph_var, segment_transform,
                       token_average, zeta_var)

VARIANTS = ("gcn", "gat", "pairnorm", "gcnii", "ggcn", "graphsage", "gatv2")

DEFAULT_LAYERS = {
    "gcn": 2, "gat": 1, "pairnorm": 2, "gcnii": 16,
    "ggcn": 6, "graphsage": 2, "gatv2": 1,
}

_ACTIVATIONS = {"elu": ad.elu, "relu": ad.relu, "leaky_relu": ad.leaky_relu}


@dataclass
class InteractorConfig:
    variant: str
    S: int
    d_in: int                    # per-node input width (d_zeta / S)
    d_out_total: int             # width of the interactive feature
    heads: int = 4               # attention variants only
    layers: int = 0              # 0 -> variant default; overridable for gcnii/ggcn
    hidden: int = 0              # internal width; 0 -> d_out
    gcnii_gamma: tuple[float, ...] | None = None
    gcnii_eta: tuple[float, ...] | None = None
    activation: str = "elu"      # sigma of the attention aggregation

    def __post_init__(self):
        self.variant = self.variant.lower()
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"unknown interactor variant {self.variant!r}; "
                f"choose one of {', '.join(VARIANTS)}")
        if self.d_out_total % self.S != 0:
            raise ConfigError(
                f"d_out_total={self.d_out_total} not divisible by S={self.S}")
        if self.layers == 0:
            self.layers = DEFAULT_LAYERS[self.variant]
        elif self.variant not in ("gcnii", "ggcn") and \
                self.layers != DEFAULT_LAYERS[self.variant]:
            raise ConfigError(
                f"layer count is fixed for {self.variant}; only gcnii/ggcn "
                f"accept overrides")
        if self.hidden == 0:
            self.hidden = self.d_out
        if self.variant in ("gat", "gatv2"):
            if self.heads < 1:
                raise ConfigError("heads must be >= 1")
            if self.d_out % self.heads != 0:
                raise ConfigError(
                    f"per-node output width {self.d_out} not divisible by "
                    f"heads={self.heads}")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.variant == "gcnii":
            if self.gcnii_gamma is None:
                self.gcnii_gamma = (0.1,) * self.layers
            if self.gcnii_eta is None:
                self.gcnii_eta = (0.1,) * self.layers
            for name, sched in (("gcnii_gamma", self.gcnii_gamma),
                                ("gcnii_eta", self.gcnii_eta)):
                if len(sched) != self.layers:
                    raise ConfigError(
                        f"{name} has {len(sched)} entries for "
                        f"{self.layers} layers")

    @property
    def d_out(self) -> int:
        return self.d_out_total // self.S

    @property
    def head_width(self) -> int:
        return self.d_out // self.heads


@dataclass
class InteractiveFeature:
    xi: np.ndarray               # (d_out_total, 1)
    local_graph: LocalGraph      # graph over xi's S segments


# -- parameter initialization ---------------------------------------------------

def init_interactor_params(store: ParamStore, cfg: InteractorConfig,
                           rng: np.random.Generator,
                           prefix: str = "interactor.") -> None:
    v, d_in, d_out, hid = cfg.variant, cfg.d_in, cfg.d_out, cfg.hidden
    if v in ("gcn", "pairnorm"):
        store.add(prefix + "W0", init_uniform(rng, d_in, hid, fan_in=d_in))
        store.add(prefix + "W1", init_uniform(rng, hid, d_out, fan_in=hid))
    elif v in ("gat", "gatv2"):
        hw = cfg.head_width
        in_w = d_in if v == "gat" else 2 * d_in
        for k in range(cfg.heads):
            store.add(f"{prefix}h{k}.W", init_uniform(rng, hw, in_w, fan_in=in_w))
            store.add(f"{prefix}h{k}.a",
                      init_uniform(rng, 2 * hw if v == "gat" else hw, 1, fan_in=hw))
        store.add(prefix + "Ao",
                  init_uniform(rng, d_out, cfg.heads * hw, fan_in=cfg.heads * hw))
    elif v == "gcnii":
        store.add(prefix + "Win", init_uniform(rng, d_in, hid, fan_in=d_in))
        for i in range(cfg.layers):
            store.add(f"{prefix}W{i}", init_uniform(rng, hid, hid, fan_in=hid))
        store.add(prefix + "Wout", init_uniform(rng, hid, d_out, fan_in=hid))
    elif v == "ggcn":
        for i in range(cfg.layers):
            store.add(f"{prefix}l{i}.kappa", np.array([[1.0]]))
            store.add(f"{prefix}l{i}.mu0", np.array([[1.0]]))
            store.add(f"{prefix}l{i}.mu1", np.array([[0.5]]))
            store.add(f"{prefix}l{i}.mu2", np.array([[0.5]]))
        store.add(prefix + "Wout", init_uniform(rng, d_in, d_out, fan_in=d_in))
    elif v == "graphsage":
        for k in range(cfg.layers):
            store.add(f"{prefix}l{k}.Wagg",
                      init_uniform(rng, d_in, d_in, fan_in=d_in))
            store.add(f"{prefix}l{k}.bagg",
                      init_uniform(rng, d_in, 1, fan_in=d_in))
            store.add(f"{prefix}l{k}.W",
                      init_uniform(rng, d_in, 2 * d_in, fan_in=2 * d_in))
        store.add(prefix + "Wout", init_uniform(rng, d_in, d_out, fan_in=d_in))


# -- tape forwards ----------------------------------------------------------------

def _gcn_var(nodes: Var, adj: Var, ctx: TapeParams, p: str) -> Var:
    h = ad.relu(ad.matmul(ad.matmul(adj, nodes), ctx.var(p + "W0")))
    return ad.softmax_rows(ad.matmul(ad.matmul(adj, h), ctx.var(p + "W1")))


def _attention_scores_gat(z: Var, a: Var, n: int) -> Var:
    hw = z.shape[1]
    u = ad.matmul(z, ad.slice_rows(a, 0, hw))
    v = ad.matmul(z, ad.slice_rows(a, hw, 2 * hw))
    e = ad.add(ad.matmul(u, ad.ones(1, n)), ad.matmul(ad.ones(n, 1), ad.transpose(v)))
    return ad.leaky_relu(e)


def _gat_var(nodes: Var, adj: Var, ctx: TapeParams, cfg: InteractorConfig,
             p: str) -> Var:
    n = nodes.shape[0]
    act = _ACTIVATIONS[cfg.activation]
    heads = []
    for k in range(cfg.heads):
        z = ad.matmul(nodes, ad.transpose(ctx.var(f"{p}h{k}.W")))
        e = _attention_scores_gat(z, ctx.var(f"{p}h{k}.a"), n)
        alpha = ad.hadamard(adj, ad.softmax_rows(e))
        heads.append(act(ad.matmul(alpha, z)))
    return ad.matmul(ad.concat_cols(heads), ad.transpose(ctx.var(p + "Ao")))


def _gatv2_var(nodes: Var, adj: Var, ctx: TapeParams, cfg: InteractorConfig,
               p: str) -> Var:
    n = nodes.shape[0]
    d_in = nodes.shape[1]
    act = _ACTIVATIONS[cfg.activation]
    heads = []
    for k in range(cfg.heads):
        w = ctx.var(f"{p}h{k}.W")
        a = ctx.var(f"{p}h{k}.a")
        left = ad.matmul(nodes, ad.transpose(ad.slice_cols(w, 0, d_in)))
        right = ad.matmul(nodes, ad.transpose(ad.slice_cols(w, d_in, 2 * d_in)))
        rows = []
        for i in range(n):
            pi = ad.slice_rows(left, i, i + 1)
            m = ad.add(ad.matmul(ad.ones(n, 1), pi), right)
            rows.append(ad.transpose(ad.matmul(ad.leaky_relu(m), a)))
        alpha = ad.hadamard(adj, ad.softmax_rows(ad.concat_rows(rows)))
        heads.append(act(ad.matmul(alpha, right)))
    return ad.matmul(ad.concat_cols(heads), ad.transpose(ctx.var(p + "Ao")))


def _pairnorm_normalize(x: Var) -> Var:
    n = x.shape[0]
    centered = ad.sub(x, ad.matmul(ad.cmul(ad.ones(n, n), 1.0 / n), x))
    mean_sq = ad.cmul(ad.sum_sq(centered), 1.0 / n)
    return ad.smul(centered, ad.rsqrt_guarded(mean_sq))


def _pairnorm_var(nodes: Var, adj: Var, ctx: TapeParams, p: str) -> Var:
    h = _pairnorm_normalize(
        ad.relu(ad.matmul(ad.matmul(adj, nodes), ctx.var(p + "W0"))))
    return _pairnorm_normalize(
        ad.matmul(ad.matmul(adj, h), ctx.var(p + "W1")))


def _gcnii_var(nodes: Var, adj: Var, ctx: TapeParams, cfg: InteractorConfig,
               p: str) -> Var:
    # degree-normalize the propagation matrix: 16 unnormalized hops would
    # amplify features by rowsum(adj)^layers and swamp everything downstream
    n = nodes.shape[0]
    dinv = ad.rsqrt_guarded(ad.matmul(adj, ad.ones(n, 1)))
    prop = ad.hadamard(adj, ad.matmul(dinv, ad.transpose(dinv)))
    h0 = ad.matmul(nodes, ctx.var(p + "Win"))
    h = h0
    for i in range(cfg.layers):
        gamma = cfg.gcnii_gamma[i]
        eta = cfg.gcnii_eta[i]
        mixed = ad.add(ad.cmul(ad.matmul(prop, h), 1.0 - gamma),
                       ad.cmul(h0, gamma))
        h = ad.relu(ad.add(ad.cmul(mixed, 1.0 - eta),
                           ad.cmul(ad.matmul(mixed, ctx.var(f"{p}W{i}")), eta)))
    return ad.matmul(h, ctx.var(p + "Wout"))


def _ggcn_var(nodes: Var, adj: Var, ctx: TapeParams, cfg: InteractorConfig,
              p: str) -> Var:
    h = nodes
    for i in range(cfg.layers):
        cos = ad.cosine_matrix(h)
        s_pos = ad.relu(cos)
        s_neg = ad.neg(ad.relu(ad.neg(cos)))
        mix = ad.add(
            ad.smul(h, ctx.var(f"{p}l{i}.mu0")),
            ad.add(ad.smul(ad.matmul(ad.hadamard(s_pos, adj), h),
                           ctx.var(f"{p}l{i}.mu1")),
                   ad.smul(ad.matmul(ad.hadamard(s_neg, adj), h),
                           ctx.var(f"{p}l{i}.mu2"))))
        h = ad.elu(ad.smul(mix, ctx.var(f"{p}l{i}.kappa")))
    return ad.matmul(h, ctx.var(p + "Wout"))


def _graphsage_var(nodes: Var, adj: Var, ctx: TapeParams,
                   cfg: InteractorConfig, p: str) -> Var:
    # this variant's update rule consumes node features only; adj plays no role
    n = nodes.shape[0]
    h = nodes
    for k in range(cfg.layers):
        wagg = ctx.var(f"{p}l{k}.Wagg")
        bagg = ctx.var(f"{p}l{k}.bagg")
        transformed = ad.relu(ad.add(
            ad.matmul(h, ad.transpose(wagg)),
            ad.matmul(ad.ones(n, 1), ad.transpose(bagg))))
        if n == 1:
            agg = ad.zeros(1, transformed.shape[1])
        else:
            agg = ad.cmul(ad.sub(ad.matmul(ad.ones(n, n), transformed),
                                 transformed), 1.0 / (n - 1))
        h = ad.relu(ad.matmul(ad.concat_cols([h, agg]),
                              ad.transpose(ctx.var(f"{p}l{k}.W"))))
    return ad.matmul(h, ctx.var(p + "Wout"))


def forward_var(nodes: Var, adj: Var, ctx: TapeParams, cfg: InteractorConfig,
                prefix: str = "interactor.") -> Var:
    v = cfg.variant
    if v == "gcn":
        return _gcn_var(nodes, adj, ctx, prefix)
    if v == "gat":
        return _gat_var(nodes, adj, ctx, cfg, prefix)
    if v == "gatv2":
        return _gatv2_var(nodes, adj, ctx, cfg, prefix)
    if v == "pairnorm":
        return _pairnorm_var(nodes, adj, ctx, prefix)
    if v == "gcnii":
        return _gcnii_var(nodes, adj, ctx, cfg, prefix)
    if v == "ggcn":
        return _ggcn_var(nodes, adj, ctx, cfg, prefix)
    if v == "graphsage":
        return _graphsage_var(nodes, adj, ctx, cfg, prefix)
    raise ConfigError(f"unknown variant {v!r}")


def forward(graph: LocalGraph, store: ParamStore, cfg: InteractorConfig,
            prefix: str = "interactor.") -> np.ndarray:
    """Run the configured variant on a local graph; returns (S, d_out)."""
    ctx = TapeParams(store)
    out = forward_var(ad.constant(graph.nodes), ad.constant(graph.adjacency),
                      ctx, cfg, prefix)
    return out.value


# -- full composition --------------------------------------------------------------

def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as e:
        raise StageError(f"stage {name!r} failed: {e}") from e


def interact(h, pcfg: PipelineConfig, icfg: InteractorConfig,
             store: ParamStore) -> InteractiveFeature:
    """adjust -> segment MLPs -> token average -> local graph -> interactor."""
    hm = h.h if isinstance(h, RawFeature) else h
    hbar = _stage("adjust", adjust, hm, store)
    zeta = _stage("segment_transform", segment_transform, hbar, store, pcfg)
    zbar = _stage("token_average", token_average, zeta)
    graph = _stage("build_local_graph", build_local_graph, zbar, pcfg.S)
    out = _stage("interactor", forward, graph, store, icfg)
    xi = out.reshape(-1, 1)
    xi_graph = build_local_graph(xi, icfg.S)
    return InteractiveFeature(xi=xi, local_graph=xi_graph)


def interact_var(h: np.ndarray, pcfg: PipelineConfig, icfg: InteractorConfig,
                 ctx: TapeParams,
                 zeta: Var | None = None) -> tuple[Var, Var]:
    """Tape version of :func:`interact`; returns (xi, adjacency-of-xi)."""
    if zeta is None:
        zeta = zeta_var(h, pcfg, ctx)
    nodes, adj = graph_var(zeta, pcfg.S)
    out = forward_var(nodes, adj, ctx, icfg)
    xi = ad.reshape(out, icfg.d_out_total, 1)
    axi = ad.exp(ad.neg(ad.pairwise_euclidean(out)))
    return xi, axi
