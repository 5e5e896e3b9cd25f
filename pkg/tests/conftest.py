import numpy as np
import pytest

from g2gmem.interactors import InteractorConfig, init_interactor_params
from g2gmem.losses import Batch
from g2gmem.memory import ExplicitMemory
from g2gmem.params import ParamStore
from g2gmem.pipeline import PipelineConfig, RawFeature, init_pipeline_params

TOY = dict(d_h=8, L=2, S=4, d_zeta=16, d_xi=16)


def make_toy(variant="gcn", seed=0, n_classes=2, batch_size=4, heads=4,
             layers=0, with_aug=True, **dims):
    """Small random instance: pipeline + interactor params, memory with
    prototypes, and a labeled batch."""
    d = dict(TOY)
    d.update(dims)
    rng = np.random.default_rng(seed)
    pcfg = PipelineConfig(d_h=d["d_h"], L=d["L"], S=d["S"], d_zeta=d["d_zeta"])
    icfg = InteractorConfig(variant=variant, S=d["S"], d_in=pcfg.seg_out,
                            d_out_total=d["d_xi"], heads=heads, layers=layers)
    store = ParamStore()
    init_pipeline_params(store, pcfg, rng)
    init_interactor_params(store, icfg, rng)
    memory = ExplicitMemory(store, S=d["S"], width=d["d_xi"])
    for y in range(n_classes):
        memory.add_class(y, rng.normal(0.0, 0.5, (d["d_xi"], 1)))
    samples, augs = [], []
    for i in range(batch_size):
        h = rng.normal(0.0, 1.0, (d["d_h"], d["L"]))
        samples.append((RawFeature(h=h), i % n_classes))
        augs.append(RawFeature(h=h + rng.normal(0.0, 0.05, h.shape)))
    batch = Batch(samples=samples, augmented=augs if with_aug else None)
    return batch, memory, pcfg, icfg, store


@pytest.fixture
def toy():
    return make_toy()
