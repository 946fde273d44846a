import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triplegak.core import KernelConfig
from triplegak.errors import (
    BadMagic,
    ChecksumMismatch,
    DimMismatch,
    DuplicateDocId,
    EmptyIndex,
    MalformedExample,
    MissingGoldId,
    UserInputError,
    VersionMismatch,
)
from triplegak.retrieval import (
    EvalCase,
    RetrievalIndex,
    build_index,
    index_from_bytes,
    index_to_bytes,
    load_index,
    query_topk,
    recall_at_k,
    save_index,
    winoground_scores,
)

from conftest import unit


def small_index(cfg=None):
    entries = [
        ("alpha", unit([1.0, 0.0, 0.0]), "first"),
        ("beta", unit([0.0, 1.0, 0.0]), "second"),
        ("gamma", unit([0.0, 0.0, 1.0]), ""),
    ]
    return build_index(entries, cfg or KernelConfig())


class TestBuildAndQuery:
    def test_build_counts(self):
        assert len(small_index()) == 3

    def test_duplicate_id(self):
        with pytest.raises(DuplicateDocId):
            build_index([("a", unit([1, 0]), ""), ("a", unit([0, 1]), "")])

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            build_index([("a", unit([1, 0]), ""), ("b", unit([0, 1, 0]), "")])

    def test_empty_build(self):
        with pytest.raises(EmptyIndex):
            build_index([])

    def test_self_hit_rank_one(self):
        index = small_index()
        results = query_topk(index, index.entries[1].rep, 1)
        assert results[0][0] == "beta"
        assert results[0][1] == pytest.approx(1.0, abs=1e-6)

    def test_k_saturation_returns_full_ranking(self):
        index = small_index()
        assert len(query_topk(index, unit([1.0, 1.0, 1.0]), 99)) == 3

    def test_tie_broken_by_doc_id(self):
        index = build_index([
            ("zeta", unit([1.0, 0.0]), ""),
            ("eta", unit([1.0, 0.0]), ""),
        ])
        results = query_topk(index, unit([1.0, 0.0]), 2)
        assert [r[0] for r in results] == ["eta", "zeta"]

    def test_query_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            query_topk(small_index(), unit([1.0, 0.0]), 1)

    def test_deterministic_ranking(self, rng):
        entries = [(f"d{i}", rng.standard_normal(8), "") for i in range(20)]
        index = build_index(entries)
        q = rng.standard_normal(8)
        assert query_topk(index, q, 10) == query_topk(index, q, 10)


class TestRecall:
    def test_identity_queries(self):
        index = small_index()
        cases = [EvalCase(e.rep, frozenset({e.doc_id})) for e in index.entries]
        report = recall_at_k(cases, index, [1])
        assert report.recalls[1] == 1.0
        assert report.ranks == (1, 1, 1)

    def test_gold_at_rank_three(self):
        # gold is deliberately the worst match
        index = small_index()
        q = unit([1.0, 0.5, 0.0])
        cases = [EvalCase(q, frozenset({"gamma"}))]
        report = recall_at_k(cases, index, [1, 5])
        assert report.recalls[1] == 0.0
        assert report.recalls[5] == 1.0
        assert report.ranks == (3,)

    def test_monotone_in_k(self, rng):
        entries = [(f"d{i}", rng.standard_normal(6), "") for i in range(30)]
        index = build_index(entries)
        cases = [EvalCase(rng.standard_normal(6), frozenset({f"d{int(rng.integers(30))}"}))
                 for _ in range(12)]
        report = recall_at_k(cases, index, [1, 2, 5, 10, 30])
        values = [report.recalls[k] for k in sorted(report.recalls)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_interleaved_sequence_query_pools_slices(self, rng):
        # index docs by their pooled slice vectors, then query with the
        # raw interleaved sequence; the self-doc must rank first
        from triplegak.core import PoolPolicy, pool_representation
        from triplegak.synth import random_sequence

        docs = [random_sequence(rng, f"d{i}", 3) for i in range(8)]
        entries = [
            (doc.doc_id,
             pool_representation([s.concat() for s in doc.slices], PoolPolicy.AVERAGE_POOL),
             "")
            for doc in docs
        ]
        index = build_index(entries)
        cases = [EvalCase(doc, frozenset({doc.doc_id})) for doc in docs]
        report = recall_at_k(cases, index, [1], PoolPolicy.AVERAGE_POOL)
        assert report.recalls[1] == 1.0

    def test_missing_gold(self):
        with pytest.raises(MissingGoldId):
            recall_at_k([EvalCase(unit([1, 0, 0]), frozenset({"nope"}))], small_index(), [1])

    def test_empty_cases(self):
        with pytest.raises(UserInputError):
            recall_at_k([], small_index(), [1])


class TestWinoground:
    def test_perfect_diagonal(self):
        assert winoground_scores([[[1.0, 0.0], [0.0, 1.0]]]) == (1.0, 1.0, 1.0)

    def test_anti_diagonal(self):
        assert winoground_scores([[[0.0, 1.0], [1.0, 0.0]]]) == (0.0, 0.0, 0.0)

    def test_hand_checked_mixed_example(self):
        # text: 0.9 > 0.8 and 0.85 > 0.2; image: 0.9 > 0.2 and 0.85 > 0.8
        assert winoground_scores([[[0.9, 0.2], [0.8, 0.85]]]) == (1.0, 1.0, 1.0)

    def test_ties_count_as_failures(self):
        assert winoground_scores([[[0.5, 0.5], [0.5, 0.5]]]) == (0.0, 0.0, 0.0)

    def test_text_without_image(self):
        # caption 0 beats caption 1 on both images' correct side, but
        # image ordering fails for image 0
        s = [[0.6, 0.7], [0.5, 0.9]]
        text, image, group = winoground_scores([s])
        assert (text, image, group) == (1.0, 0.0, 0.0)

    def test_malformed(self):
        with pytest.raises(MalformedExample):
            winoground_scores([[[1.0, 0.0]]])

    # 1/64 grid keeps every sum exactly representable, so the strict
    # inequalities survive the shift verbatim
    grid = st.integers(-128, 128).map(lambda k: k / 64.0)

    @settings(max_examples=40, deadline=None)
    @given(grid, grid, grid, grid, st.integers(-256, 256).map(lambda k: k / 64.0))
    def test_shift_invariance(self, a, b, c, d, shift):
        base = winoground_scores([[[a, b], [c, d]]])
        shifted = winoground_scores([[[a + shift, b + shift], [c + shift, d + shift]]])
        assert base == shifted


class TestPersistence:
    def test_round_trip_bytes_and_value(self, tmp_path, rng):
        entries = [(f"doc{i:03d}", rng.standard_normal(12), f"meta {i}") for i in range(100)]
        cfg = KernelConfig(delta=2.0)
        index = build_index(entries, cfg)
        path = tmp_path / "i.sgix"
        save_index(index, path)
        first = path.read_bytes()
        loaded = load_index(path, cfg)
        assert loaded == index
        save_index(loaded, path)
        assert path.read_bytes() == first

    def test_fingerprint_follows_config(self, tmp_path, rng):
        entries = [("a", rng.standard_normal(4), "")]
        index = build_index(entries, KernelConfig(delta=2.0))
        path = tmp_path / "i.sgix"
        save_index(index, path)
        assert load_index(path, KernelConfig(delta=2.0)).config_fingerprint == index.config_fingerprint
        assert load_index(path, KernelConfig(delta=3.0)).config_fingerprint != index.config_fingerprint

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "i.sgix"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(BadMagic):
            load_index(path)

    def test_truncation_detected(self, tmp_path, rng):
        index = build_index([(f"d{i}", rng.standard_normal(6), "") for i in range(5)])
        blob = index_to_bytes(index)
        with pytest.raises(ChecksumMismatch):
            index_from_bytes(blob[:-9])

    def test_single_bit_flips_detected(self, rng):
        index = build_index([(f"d{i}", rng.standard_normal(6), "m") for i in range(4)])
        blob = bytearray(index_to_bytes(index))
        rng2 = np.random.default_rng(5)
        for _ in range(40):
            pos = int(rng2.integers(0, len(blob)))
            bit = 1 << int(rng2.integers(0, 8))
            corrupted = bytearray(blob)
            corrupted[pos] ^= bit
            with pytest.raises((ChecksumMismatch, BadMagic)):
                index_from_bytes(bytes(corrupted))

    def test_version_mismatch(self, rng):
        import struct
        import zlib

        index = build_index([("a", rng.standard_normal(3), "")])
        blob = bytearray(index_to_bytes(index))[:-4]
        blob[4:8] = struct.pack("<I", 2)
        blob += struct.pack("<I", zlib.crc32(bytes(blob)))
        with pytest.raises(VersionMismatch):
            index_from_bytes(bytes(blob))

    def test_golden_file(self, rng):
        # regenerating the committed golden index must reproduce it byte
        # for byte (layout freeze)
        from pathlib import Path

        golden = Path(__file__).parent / "fixtures" / "golden_index.sgix"
        index = golden_index()
        assert index_to_bytes(index) == golden.read_bytes()
        loaded = index_from_bytes(golden.read_bytes(), KernelConfig())
        assert loaded == index


def golden_index() -> RetrievalIndex:
    """The committed golden fixture, rebuilt deterministically."""
    rng = np.random.default_rng(20240811)
    entries = [(f"doc{i:02d}", rng.standard_normal(8), f"payload-{i}") for i in range(10)]
    return build_index(entries, KernelConfig())
