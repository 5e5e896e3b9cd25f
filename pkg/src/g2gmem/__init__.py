"""Graph-to-graph prototype memory engine for few-shot class-incremental
learning: local-feature graphs, seven graph interactors, contrastive
prototype alignment, and the full session/rehearsal/evaluation protocol."""

from .config import Config, load_config, parse_config_text
from .data import (EmbeddingDataset, load_embeddings, nearest_center_accuracy,
                   save_embeddings, synth_generate)
from .gradcheck import check_gradient
from .interactors import (InteractiveFeature, InteractorConfig, VARIANTS,
                          forward, init_interactor_params, interact)
from .losses import (Batch, LossReport, local_decoupling,
                     local_graph_contrastive, proto_contrastive, slice_views,
                     total_loss)
from .memory import (ExplicitMemory, Prototype, dissimilarity, load_memory,
                     retrieve, retrieve_v2v, save_memory)
from .numeric import pairwise_euclidean, softmax_rows
from .optim import Adam
from .params import Param, ParamStore
from .pipeline import (LocalGraph, PipelineConfig, RawFeature, adjust,
                       build_local_graph, concat_views, init_pipeline_params,
                       segment_transform, token_average)
from .protocol import (ExperimentResult, Metrics, RehearsalBuffer,
                       SessionSpec, TrainSchedule, build_sessions,
                       compute_metrics, evaluate, make_state, probe_centers,
                       run_experiment, run_session, sweep)

__version__ = "0.1.0"
