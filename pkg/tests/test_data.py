import numpy as np
import pytest

from g2gmem.data import (EmbeddingDataset, load_embeddings,
                         nearest_center_accuracy, save_embeddings,
                         synth_generate)
from g2gmem.errors import ConfigError, FormatError


def tiny_dataset(with_aug=True, d_h=6, L=2, n=5, seed=0):
    rng = np.random.default_rng(seed)
    feats = [rng.normal(size=(d_h, L)) for _ in range(n)]
    augs = [f + rng.normal(scale=0.1, size=(d_h, L)) for f in feats] \
        if with_aug else [None] * n
    return EmbeddingDataset(d_h=d_h, L=L, labels=list(range(n)),
                            feats=feats, augs=augs)


class TestFileFormat:
    def test_round_trip_single_precision_exact(self, tmp_path):
        ds = tiny_dataset()
        path = tmp_path / "d.g2gemb"
        save_embeddings(ds, path)
        back = load_embeddings(path)
        assert back.d_h == 6 and back.L == 2 and len(back) == 5
        assert back.labels == ds.labels
        for a, b in zip(back.feats, ds.feats):
            assert np.array_equal(a, b.astype(np.float32).astype(np.float64))

    def test_augmented_views_attached(self, tmp_path):
        ds = tiny_dataset(with_aug=True)
        path = tmp_path / "d.g2gemb"
        save_embeddings(ds, path)
        back = load_embeddings(path)
        assert back.has_augmented
        for a, b in zip(back.augs, ds.augs):
            assert np.array_equal(a, b.astype(np.float32).astype(np.float64))

    def test_mixed_and_absent_views(self, tmp_path):
        ds = tiny_dataset(with_aug=True)
        ds.augs[2] = None
        path = tmp_path / "d.g2gemb"
        save_embeddings(ds, path)
        back = load_embeddings(path)
        assert back.augs[2] is None and back.augs[1] is not None

    def test_segment_divisibility_validation(self, tmp_path):
        ok = tiny_dataset(d_h=768, L=3, n=2)
        path = tmp_path / "ok.g2gemb"
        save_embeddings(ok, path)
        load_embeddings(path, expected_segments=8)       # 768 % 8 == 0
        bad = tiny_dataset(d_h=770, L=3, n=2)
        path2 = tmp_path / "bad.g2gemb"
        save_embeddings(bad, path2)
        with pytest.raises(ConfigError, match="770"):
            load_embeddings(path2, expected_segments=8)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.g2gemb"
        p.write_bytes(b"WRONGMAG" + b"\0" * 24)
        with pytest.raises(FormatError, match="magic"):
            load_embeddings(p)

    def test_unknown_version(self, tmp_path):
        ds = tiny_dataset()
        p = tmp_path / "d.g2gemb"
        save_embeddings(ds, p)
        blob = bytearray(p.read_bytes())
        blob[8] = 7
        q = tmp_path / "v7.g2gemb"
        q.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="7.*expected.*1"):
            load_embeddings(q)

    def test_truncated_record(self, tmp_path):
        ds = tiny_dataset()
        p = tmp_path / "d.g2gemb"
        save_embeddings(ds, p)
        blob = p.read_bytes()
        q = tmp_path / "cut.g2gemb"
        q.write_bytes(blob[:len(blob) - 7])
        with pytest.raises(FormatError, match="truncated"):
            load_embeddings(q)


class TestSynthetic:
    def test_same_seed_byte_identical(self, tmp_path):
        a_train, a_test = synth_generate(3, 4, 6, 2, 0.1, seed=42)
        b_train, b_test = synth_generate(3, 4, 6, 2, 0.1, seed=42)
        for a, b in ((a_train, b_train), (a_test, b_test)):
            assert a.labels == b.labels
            for fa, fb in zip(a.feats, b.feats):
                assert fa.tobytes() == fb.tobytes()
            for ga, gb in zip(a.augs, b.augs):
                assert ga.tobytes() == gb.tobytes()
        p1, p2 = tmp_path / "a.g2gemb", tmp_path / "b.g2gemb"
        save_embeddings(a_train, p1)
        save_embeddings(b_train, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_vanishing_spread_collapses_classes(self):
        train, _ = synth_generate(2, 3, 4, 2, cluster_sigma=1e-300, seed=1)
        for y in train.classes():
            idxs = train.by_class(y)
            first = train.feats[idxs[0]]
            for i in idxs[1:]:
                assert np.array_equal(train.feats[i], first)

    def test_sigma_must_be_positive(self):
        with pytest.raises(ConfigError):
            synth_generate(2, 3, 4, 2, cluster_sigma=0.0, seed=1)

    def test_augmented_views_present_and_distinct(self):
        train, test = synth_generate(2, 3, 4, 2, 0.05, seed=2)
        for ds in (train, test):
            assert ds.has_augmented
            for f, a in zip(ds.feats, ds.augs):
                assert not np.array_equal(f, a)

    def test_nearest_center_oracle_saturates_when_separated(self):
        train, test = synth_generate(10, 10, 16, 2, cluster_sigma=0.05, seed=3)
        assert nearest_center_accuracy(train, test) == 1.0
