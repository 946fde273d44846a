"""Brute-force cosine retrieval with binary persistence and evaluation.

The index holds unit representation vectors (stored float32, scored in
float64) and answers exact top-k queries by full scan. The on-disk
layout is fixed: magic "SGIX", version u32, dim u32, count u64, then per
entry id length u32 + id bytes + dim float32 values + meta length u32 +
meta bytes, everything little-endian, closed by a CRC-32 of all
preceding bytes. created_at and the config fingerprint are in-memory
provenance: the byte layout has no field for them, so loading recomputes
the fingerprint from the supplied config and stamps created_at from the
file, and neither participates in value equality.
"""

from __future__ import annotations

import os
import struct
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from .core import DEGENERATE_NORM, InterleavedSequence, KernelConfig, PoolPolicy, RepresentationVector, pool_representation
from .errors import (
    BadMagic,
    ChecksumMismatch,
    DimMismatch,
    DuplicateDocId,
    EmptyIndex,
    IoFailure,
    MalformedExample,
    MissingGoldId,
    UserInputError,
    VersionMismatch,
    ZeroVector,
)

MAGIC = b"SGIX"
VERSION = 1


@dataclass(frozen=True)
class IndexEntry:
    doc_id: str
    rep: np.ndarray  # float32, unit within 1e-6
    meta: str = ""


@dataclass(frozen=True, eq=False)
class RetrievalIndex:
    dim: int
    entries: tuple[IndexEntry, ...]
    created_at: float
    config_fingerprint: str
    _matrix: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        mat = np.stack([e.rep for e in self.entries]).astype(np.float64)
        object.__setattr__(self, "_matrix", mat)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RetrievalIndex):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.config_fingerprint == other.config_fingerprint
            and len(self.entries) == len(other.entries)
            and all(
                a.doc_id == b.doc_id
                and a.meta == b.meta
                and np.array_equal(a.rep, b.rep)
                for a, b in zip(self.entries, other.entries)
            )
        )


def build_index(entries, cfg: KernelConfig | None = None, created_at: float | None = None) -> RetrievalIndex:
    """Build from (doc_id, rep, meta) triples; reps are normalized then
    stored as float32."""
    entries = list(entries)
    if not entries:
        raise EmptyIndex("cannot build an index from zero entries")
    cfg = cfg or KernelConfig()
    seen: set[str] = set()
    dim = None
    packed = []
    for doc_id, rep, meta in entries:
        doc_id = str(doc_id)
        if doc_id in seen:
            raise DuplicateDocId(f"doc_id {doc_id!r} occurs twice")
        seen.add(doc_id)
        vec = np.asarray(rep, dtype=np.float64).ravel()
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DimMismatch(f"entry {doc_id!r} has dim {len(vec)}, expected {dim}")
        norm = float(np.linalg.norm(vec))
        if not np.isfinite(norm) or norm < DEGENERATE_NORM:
            raise ZeroVector(f"entry {doc_id!r} is degenerate (norm {norm:.3g})")
        packed.append(IndexEntry(doc_id, np.asarray(vec / norm, dtype=np.float32), str(meta)))
    return RetrievalIndex(
        dim=dim,
        entries=tuple(packed),
        created_at=time.time() if created_at is None else created_at,
        config_fingerprint=cfg.fingerprint(),
    )


def _query_vector(q, dim: int) -> np.ndarray:
    vec = q.values if isinstance(q, RepresentationVector) else np.asarray(q, dtype=np.float64).ravel()
    if len(vec) != dim:
        raise DimMismatch(f"query dim {len(vec)} != index dim {dim}")
    norm = float(np.linalg.norm(vec))
    if norm < DEGENERATE_NORM:
        raise ZeroVector("degenerate query vector")
    return vec / norm


def rank_all(index: RetrievalIndex, q) -> list[tuple[str, float]]:
    """Full ranking by descending cosine, ties by ascending doc_id."""
    if len(index) == 0:
        raise EmptyIndex("index holds no entries")
    vec = _query_vector(q, index.dim)
    scores = np.clip(index._matrix @ vec, -1.0, 1.0)
    ids = np.array([e.doc_id for e in index.entries])
    order = np.lexsort((ids, -scores))
    return [(str(ids[i]), float(scores[i])) for i in order]


def query_topk(index: RetrievalIndex, q, k: int) -> list[tuple[str, float]]:
    if k < 1:
        raise UserInputError(f"k must be >= 1, got {k}")
    return rank_all(index, q)[:k]


@dataclass(frozen=True)
class EvalCase:
    """A query (sequence or vector) and the doc ids counted as correct."""

    query: InterleavedSequence | RepresentationVector | np.ndarray
    gold_doc_ids: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "gold_doc_ids", frozenset(self.gold_doc_ids))
        if not self.gold_doc_ids:
            raise UserInputError("EvalCase needs at least one gold doc id")


@dataclass(frozen=True)
class EvalReport:
    recalls: dict[int, float]
    ranks: tuple[int, ...]


def _case_vector(case: EvalCase, policy: PoolPolicy) -> np.ndarray:
    if isinstance(case.query, InterleavedSequence):
        return pool_representation([s.concat() for s in case.query.slices], policy)
    if isinstance(case.query, RepresentationVector):
        return case.query.values
    return np.asarray(case.query, dtype=np.float64)


def recall_at_k(cases, index: RetrievalIndex, ks, policy: PoolPolicy = PoolPolicy.AVERAGE_POOL) -> EvalReport:
    """Fraction of cases whose top-k holds any gold id, for each k."""
    cases = list(cases)
    if not cases:
        raise UserInputError("no evaluation cases")
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1:
        raise UserInputError(f"bad k list {ks}")
    known = {e.doc_id for e in index.entries}
    ranks = []
    for i, case in enumerate(cases):
        missing = case.gold_doc_ids - known
        if missing:
            raise MissingGoldId(f"case {i}: gold ids not in index: {sorted(missing)}")
        ranking = rank_all(index, _case_vector(case, policy))
        rank = next(pos for pos, (doc_id, _) in enumerate(ranking, start=1) if doc_id in case.gold_doc_ids)
        ranks.append(rank)
    recalls = {k: sum(1 for r in ranks if r <= k) / len(ranks) for k in ks}
    return EvalReport(recalls, tuple(ranks))


def winoground_scores(examples) -> tuple[float, float, float]:
    """Text / image / group accuracies over 2x2 similarity matrices.

    S[c][i] is the similarity of caption c with image i. All
    inequalities are strict; exact ties count as failures.
    """
    examples = list(examples)
    if not examples:
        raise UserInputError("no examples")
    text_hits = image_hits = group_hits = 0
    for idx, s in enumerate(examples):
        mat = np.asarray(s, dtype=np.float64)
        if mat.shape != (2, 2) or not np.all(np.isfinite(mat)):
            raise MalformedExample(f"example {idx}: need a finite 2x2 matrix, got shape {mat.shape}")
        text_ok = mat[0, 0] > mat[1, 0] and mat[1, 1] > mat[0, 1]
        image_ok = mat[0, 0] > mat[0, 1] and mat[1, 1] > mat[1, 0]
        text_hits += text_ok
        image_hits += image_ok
        group_hits += text_ok and image_ok
    n = len(examples)
    return text_hits / n, image_hits / n, group_hits / n


def index_to_bytes(index: RetrievalIndex) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack("<I", index.dim)
    out += struct.pack("<Q", len(index.entries))
    for e in index.entries:
        id_bytes = e.doc_id.encode("utf-8")
        meta_bytes = e.meta.encode("utf-8")
        out += struct.pack("<I", len(id_bytes))
        out += id_bytes
        out += np.asarray(e.rep, dtype="<f4").tobytes()
        out += struct.pack("<I", len(meta_bytes))
        out += meta_bytes
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def save_index(index: RetrievalIndex, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(index_to_bytes(index))
    except OSError as exc:
        raise IoFailure(f"cannot write index to {path}: {exc}") from exc


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            # the trailing checksum cannot be where it should be
            raise ChecksumMismatch("file ends before the declared content")
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def index_from_bytes(blob: bytes, cfg: KernelConfig | None = None, created_at: float | None = None) -> RetrievalIndex:
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic("not an index file (bad magic)")
    if len(blob) < 4 + 4 + 4 + 8 + 4:
        raise ChecksumMismatch("file too short to hold a header and checksum")
    stored_crc = struct.unpack("<I", blob[-4:])[0]
    if zlib.crc32(blob[:-4]) != stored_crc:
        raise ChecksumMismatch("CRC-32 does not match file contents")
    cur = _Cursor(blob[:-4])
    cur.take(4)  # magic
    version = cur.u32()
    if version != VERSION:
        raise VersionMismatch(f"index version {version}, expected {VERSION}")
    dim = cur.u32()
    count = cur.u64()
    entries = []
    for _ in range(count):
        doc_id = cur.take(cur.u32()).decode("utf-8")
        rep = np.frombuffer(cur.take(4 * dim), dtype="<f4")
        meta = cur.take(cur.u32()).decode("utf-8")
        entries.append(IndexEntry(doc_id, rep, meta))
    if cur.pos != len(cur.blob):
        raise ChecksumMismatch(f"{len(cur.blob) - cur.pos} unexpected trailing bytes")
    if not entries:
        raise EmptyIndex("index file holds no entries")
    cfg = cfg or KernelConfig()
    return RetrievalIndex(
        dim=dim,
        entries=tuple(entries),
        created_at=time.time() if created_at is None else created_at,
        config_fingerprint=cfg.fingerprint(),
    )


def load_index(path, cfg: KernelConfig | None = None) -> RetrievalIndex:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
        mtime = os.stat(path).st_mtime
    except OSError as exc:
        raise IoFailure(f"cannot read index from {path}: {exc}") from exc
    return index_from_bytes(blob, cfg=cfg, created_at=mtime)
