"""Explicit memory of per-class prototypes and graph-aware retrieval.

A prototype is a trainable vector the same width as the interactive feature.
Retrieval compares a query against every stored class with a dissimilarity
that sums the vector distance and the Frobenius distance between the two
segment graphs, so two queries at equal vector distance can still be told
apart by their local structure.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ProtocolError, ShapeError
from .interactors import InteractiveFeature
from .numeric import as_col
from .params import ParamStore
from .pipeline import build_local_graph

MEMORY_MAGIC = b"G2GMEM1"
MEMORY_VERSION = 1

PROTO_INIT_SIGMA = 0.02


@dataclass
class Prototype:
    class_id: int
    frozen: bool = False
    session_of_origin: int = 0


def proto_key(class_id: int) -> str:
    return f"proto.{class_id}"


class ExplicitMemory:
    """class id -> trainable prototype, with permanent per-session freezing.

    Prototype values live in the shared ParamStore (key ``proto.<id>``) so the
    optimizer and loss tape see them like any other parameter.
    """

    def __init__(self, store: ParamStore, S: int, width: int):
        if width % S != 0:
            raise ShapeError(f"prototype width {width} not divisible by S={S}")
        self.store = store
        self.S = S
        self.width = width
        self.prototypes: dict[int, Prototype] = {}

    @property
    def seen(self) -> list[int]:
        return sorted(self.prototypes)

    def __len__(self) -> int:
        return len(self.prototypes)

    def value(self, class_id: int) -> np.ndarray:
        return self.store[proto_key(class_id)].value

    def add_class(self, class_id: int, init_hint=None, session: int = 0,
                  rng: np.random.Generator | None = None) -> Prototype:
        if class_id in self.prototypes:
            raise ProtocolError(f"class {class_id} already has a prototype")
        if init_hint is not None:
            value = as_col(init_hint, "prototype init").copy()
            if value.shape[0] != self.width:
                raise ShapeError(
                    f"init hint width {value.shape[0]} != {self.width}")
        else:
            gen = rng if rng is not None else np.random.default_rng(class_id)
            value = gen.normal(0.0, PROTO_INIT_SIGMA, size=(self.width, 1))
        self.store.add(proto_key(class_id), value, trainable=True)
        proto = Prototype(class_id=class_id, session_of_origin=session)
        self.prototypes[class_id] = proto
        return proto

    def freeze_session(self, class_ids) -> None:
        for y in class_ids:
            if y not in self.prototypes:
                raise ProtocolError(f"cannot freeze unknown class {y}")
        for y in class_ids:
            self.prototypes[y].frozen = True
            self.store.set_trainable(proto_key(y), False)

    def set_phase_trainable(self, class_ids, flag: bool) -> None:
        """Toggle optimizer updates for unfrozen prototypes (I-iteration phase)."""
        for y in class_ids:
            if not self.prototypes[y].frozen:
                self.store.set_trainable(proto_key(y), flag)

    def prototype_graph(self, class_id: int):
        return build_local_graph(self.value(class_id), self.S)


# -- dissimilarity and retrieval -------------------------------------------------

def dissimilarity(xi: InteractiveFeature, memory: ExplicitMemory,
                  class_id: int) -> tuple[float, float, float]:
    """(total, vector term, structure term) between a query and one class."""
    m = memory.value(class_id)
    q = as_col(xi.xi, "query feature")
    if q.shape != m.shape:
        raise ShapeError(f"query width {q.shape} != prototype {m.shape}")
    feature_term = float(np.linalg.norm(q - m))
    a_m = memory.prototype_graph(class_id).adjacency
    structure_term = float(np.linalg.norm(xi.local_graph.adjacency - a_m))
    return feature_term + structure_term, feature_term, structure_term


def retrieve(xi: InteractiveFeature, memory: ExplicitMemory) -> int:
    """Graph-to-graph retrieval: argmin of the dissimilarity over seen classes.

    Ties break toward the smallest class id.
    """
    if not memory.prototypes:
        raise ProtocolError("retrieval from empty memory")
    best_y, best_r = -1, np.inf
    for y in memory.seen:
        r, _, _ = dissimilarity(xi, memory, y)
        if r < best_r:
            best_y, best_r = y, r
    return best_y


def retrieve_v2v(xi, memory: ExplicitMemory, metric: str = "euclidean") -> int:
    """Baseline vector-to-vector retrieval under a plain distance metric."""
    if not memory.prototypes:
        raise ProtocolError("retrieval from empty memory")
    if metric not in ("euclidean", "cosine"):
        raise ShapeError(f"unknown metric {metric!r}")
    q = as_col(xi.xi if isinstance(xi, InteractiveFeature) else xi, "query")
    best_y, best_d = -1, np.inf
    for y in memory.seen:
        m = memory.value(y)
        if metric == "euclidean":
            d = float(np.linalg.norm(q - m))
        else:
            nq = float(np.linalg.norm(q))
            nm = float(np.linalg.norm(m))
            if nq == 0.0 or nm == 0.0:
                d = 1.0
            else:
                d = 1.0 - float(q[:, 0] @ m[:, 0]) / (nq * nm)
        if d < best_d:
            best_y, best_d = y, d
    return best_y


# -- persistence -------------------------------------------------------------------

def save_memory(memory: ExplicitMemory, path) -> None:
    with open(path, "wb") as f:
        f.write(MEMORY_MAGIC)
        f.write(struct.pack("<HHII", MEMORY_VERSION, memory.S, memory.width,
                            len(memory.prototypes)))
        for y in memory.seen:
            p = memory.prototypes[y]
            f.write(struct.pack("<IHB", y, p.session_of_origin, int(p.frozen)))
            f.write(memory.value(y).astype("<f8").tobytes())


def load_memory(path, store: ParamStore | None = None) -> ExplicitMemory:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:7] != MEMORY_MAGIC:
        raise FormatError(f"bad magic {blob[:7]!r}, expected {MEMORY_MAGIC!r}")
    if len(blob) < 7 + 12:
        raise FormatError("truncated header")
    version, S, width, count = struct.unpack_from("<HHII", blob, 7)
    if version != MEMORY_VERSION:
        raise FormatError(
            f"unsupported version {version}, expected {MEMORY_VERSION}")
    memory = ExplicitMemory(store if store is not None else ParamStore(),
                            S=S, width=width)
    off = 7 + 12
    rec = 7 + width * 8
    for _ in range(count):
        if off + rec > len(blob):
            raise FormatError("truncated record")
        y, session, frozen = struct.unpack_from("<IHB", blob, off)
        off += 7
        value = np.frombuffer(blob, dtype="<f8", count=width, offset=off)
        off += width * 8
        memory.add_class(y, init_hint=value.reshape(-1, 1), session=session)
        if frozen:
            memory.freeze_session([y])
    if off != len(blob):
        raise FormatError(f"{len(blob) - off} trailing bytes")
    return memory
