"""Embedding datasets: binary file format and synthetic cluster generation.

File layout (all integers little-endian):
  magic  8 bytes  b"G2GEMB1\\0"
  u32    version (1)
  u32    d_h
  u32    L
  u64    record count
  per record:
    u32  label
    u8   has_aug
    f32[d_h*L]  base feature, row-major (d_h, L)
    f32[d_h*L]  augmented feature, only when has_aug = 1

The engine runs double precision; features are stored single and widened on
load.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError
from .pipeline import AUGMENT_SIGMA_SCALE, RawFeature

EMBED_MAGIC = b"G2GEMB1\0"
EMBED_VERSION = 1


@dataclass
class EmbeddingDataset:
    d_h: int
    L: int
    labels: list[int]
    feats: list[np.ndarray]                 # (d_h, L) float64 each
    augs: list[np.ndarray | None]
    split: str = "train"

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def has_augmented(self) -> bool:
        return any(a is not None for a in self.augs)

    def record(self, i: int) -> tuple[RawFeature, RawFeature | None]:
        base = RawFeature(h=self.feats[i], label=self.labels[i])
        aug = self.augs[i]
        return base, (RawFeature(h=aug, label=self.labels[i])
                      if aug is not None else None)

    def classes(self) -> list[int]:
        return sorted(set(self.labels))

    def by_class(self, y: int) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == y]


def save_embeddings(ds: EmbeddingDataset, path) -> None:
    with open(path, "wb") as f:
        f.write(EMBED_MAGIC)
        f.write(struct.pack("<IIIQ", EMBED_VERSION, ds.d_h, ds.L, len(ds)))
        for label, feat, aug in zip(ds.labels, ds.feats, ds.augs):
            has_aug = aug is not None
            f.write(struct.pack("<IB", label, int(has_aug)))
            f.write(np.ascontiguousarray(feat, dtype="<f4").tobytes())
            if has_aug:
                f.write(np.ascontiguousarray(aug, dtype="<f4").tobytes())


def load_embeddings(path, expected_segments: int | None = None,
                    split: str = "train") -> EmbeddingDataset:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != EMBED_MAGIC:
        raise FormatError(f"bad magic {blob[:8]!r}, expected {EMBED_MAGIC!r}")
    header_end = 8 + struct.calcsize("<IIIQ")
    if len(blob) < header_end:
        raise FormatError("truncated header")
    version, d_h, L, count = struct.unpack_from("<IIIQ", blob, 8)
    if version != EMBED_VERSION:
        raise FormatError(
            f"unsupported version {version}, expected {EMBED_VERSION}")
    if expected_segments is not None and d_h % expected_segments != 0:
        raise ConfigError(
            f"d_h={d_h} not divisible by configured S={expected_segments}")
    feat_bytes = d_h * L * 4
    labels: list[int] = []
    feats: list[np.ndarray] = []
    augs: list[np.ndarray | None] = []
    off = header_end
    for _ in range(count):
        if off + 5 > len(blob):
            raise FormatError("truncated record header")
        label, has_aug = struct.unpack_from("<IB", blob, off)
        off += 5
        need = feat_bytes * (2 if has_aug else 1)
        if off + need > len(blob):
            raise FormatError("truncated record payload")
        base = np.frombuffer(blob, dtype="<f4", count=d_h * L, offset=off)
        off += feat_bytes
        feats.append(base.astype(np.float64).reshape(d_h, L))
        if has_aug:
            aug = np.frombuffer(blob, dtype="<f4", count=d_h * L, offset=off)
            off += feat_bytes
            augs.append(aug.astype(np.float64).reshape(d_h, L))
        else:
            augs.append(None)
        labels.append(label)
    if off != len(blob):
        raise FormatError(f"{len(blob) - off} trailing bytes")
    return EmbeddingDataset(d_h=d_h, L=L, labels=labels, feats=feats,
                            augs=augs, split=split)


def synth_generate(n_classes: int, per_class: int, d_h: int, L: int,
                   cluster_sigma: float, seed: int,
                   test_per_class: int | None = None,
                   ) -> tuple[EmbeddingDataset, EmbeddingDataset]:
    """Gaussian class clouds around seeded random centers, with a noisy
    augmented view per sample.  Returns (train, test)."""
    if cluster_sigma <= 0:
        raise ConfigError("cluster_sigma must be positive")
    if test_per_class is None:
        test_per_class = per_class
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 1.0, size=(n_classes, d_h, L))

    def draw(count: int, split: str) -> EmbeddingDataset:
        labels, feats, augs = [], [], []
        for y in range(n_classes):
            for _ in range(count):
                base = centers[y] + rng.normal(0.0, cluster_sigma,
                                               size=(d_h, L))
                rms = float(np.sqrt(np.mean(base * base)))
                aug = base + rng.normal(
                    0.0, AUGMENT_SIGMA_SCALE * (rms if rms > 0 else 1.0),
                    size=(d_h, L))
                labels.append(y)
                feats.append(base)
                augs.append(aug)
        return EmbeddingDataset(d_h=d_h, L=L, labels=labels, feats=feats,
                                augs=augs, split=split)

    return draw(per_class, "train"), draw(test_per_class, "test")


def nearest_center_accuracy(train: EmbeddingDataset,
                            test: EmbeddingDataset) -> float:
    """Oracle: classify test features by the nearest class-mean raw feature."""
    classes = train.classes()
    centers = {y: np.mean([train.feats[i] for i in train.by_class(y)], axis=0)
               for y in classes}
    hits = 0
    for feat, label in zip(test.feats, test.labels):
        best_y = min(classes, key=lambda y: float(np.linalg.norm(feat - centers[y])))
        hits += int(best_y == label)
    return hits / len(test)
