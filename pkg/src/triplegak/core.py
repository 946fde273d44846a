"""Domain types, validation, prefix views, and pooling policies.

Slices are single images or sentences represented as unit-normalized
embedding vectors. A composite slice concatenates a modality-specialist
sub-vector with a shared cross-modal sub-vector, each unit-normalized on
its own; an atomic slice is one whole unit vector. All types are frozen
and their arrays are made read-only, so every operation here is safe to
call from concurrent workers.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateCut, EmptyTokenList, OutOfRangeCut, ZeroVector

log = logging.getLogger(__name__)

NORM_TOL = 1e-6
DEGENERATE_NORM = 1e-9


class Modality(enum.Enum):
    IMAGE = "image"
    TEXT = "text"


class Form(enum.Enum):
    ATOMIC = "atomic"
    COMPOSITE = "composite"


class KernelMode(enum.Enum):
    TRIPLE = "triple"
    SHARED_ONLY = "shared_only"


class SingleSliceMode(enum.Enum):
    COSINE = "cosine"
    CLOSED_FORM = "closed_form"


class PoolPolicy(enum.Enum):
    LAST_TOKEN = "last"
    AVERAGE_POOL = "avg"


def _freeze(v) -> np.ndarray:
    arr = np.ascontiguousarray(v, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SliceEmbedding:
    """One image or sentence as an embedding, atomic or composite."""

    modality: Modality
    form: Form
    specialist: np.ndarray | None = None
    shared: np.ndarray | None = None
    whole: np.ndarray | None = None

    @classmethod
    def composite(cls, modality: Modality, specialist, shared) -> "SliceEmbedding":
        return cls(modality, Form.COMPOSITE, _freeze(specialist), _freeze(shared), None)

    @classmethod
    def atomic(cls, modality: Modality, whole) -> "SliceEmbedding":
        return cls(modality, Form.ATOMIC, None, None, _freeze(whole))

    @property
    def dim(self) -> int:
        if self.form is Form.COMPOSITE:
            return len(self.specialist) + len(self.shared)
        return len(self.whole)

    def concat(self) -> np.ndarray:
        """Full vector: specialist|shared for composite, whole for atomic."""
        if self.form is Form.COMPOSITE:
            return np.concatenate([self.specialist, self.shared])
        return self.whole


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok


def _check_vector(name: str, v: np.ndarray | None, problems: list[str]) -> None:
    if v is None:
        problems.append(f"{name}: missing vector")
        return
    if v.ndim != 1:
        problems.append(f"{name}: expected 1-d vector, got shape {v.shape}")
        return
    bad = np.flatnonzero(~np.isfinite(v))
    if bad.size:
        problems.append(f"{name}: non-finite value at index {int(bad[0])}")
        return
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > NORM_TOL:
        problems.append(f"{name}: norm deviation {abs(norm - 1.0):.6g}")


def validate_slice(s: SliceEmbedding) -> ValidationReport:
    """Report every violated invariant; never raises."""
    problems: list[str] = []
    if s.form is Form.COMPOSITE:
        _check_vector("specialist", s.specialist, problems)
        _check_vector("shared", s.shared, problems)
        if s.whole is not None:
            problems.append("whole: present on a composite slice")
    else:
        _check_vector("whole", s.whole, problems)
        if s.specialist is not None or s.shared is not None:
            problems.append("sub-vectors present on an atomic slice")
    return ValidationReport(tuple(problems))


@dataclass(frozen=True)
class InterleavedSequence:
    """Ordered slices of one document."""

    doc_id: str
    slices: tuple[SliceEmbedding, ...]

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))

    def __len__(self) -> int:
        return len(self.slices)


@dataclass(frozen=True)
class PrefixView:
    """The first ``cut`` slices of a source sequence, by value."""

    source_doc_id: str
    cut: int
    slices: tuple[SliceEmbedding, ...]

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))

    def __len__(self) -> int:
        return len(self.slices)


@dataclass(frozen=True)
class RepresentationVector:
    source_doc_id: str
    cut: int
    values: np.ndarray

    @classmethod
    def normalized(cls, source_doc_id: str, cut: int, values) -> "RepresentationVector":
        v = np.asarray(values, dtype=np.float64)
        norm = float(np.linalg.norm(v))
        if not np.isfinite(norm) or norm < DEGENERATE_NORM:
            raise ZeroVector(f"degenerate representation for {source_doc_id!r} (norm {norm:.3g})")
        return cls(source_doc_id, cut, _freeze(v / norm))


@dataclass(frozen=True)
class KernelConfig:
    """Knobs shared by every kernel computation.

    ``delta`` scales the bandwidth sigma = delta * sqrt((n+m)/2).
    ``normalize_gak`` divides sequence similarities by the geometric mean
    of the self-similarities, restoring the (0, 1] range; it defaults on
    so label matrices are scale-matched to cosine representation
    matrices. ``cell_cap`` bounds the DP table size (runtime guard).
    """

    delta: float = 1.0
    normalize_gak: bool = True
    label_single_slice_mode: SingleSliceMode = SingleSliceMode.COSINE
    kernel_mode: KernelMode = KernelMode.TRIPLE
    cell_cap: int = 16384

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.cell_cap < 1:
            raise ValueError(f"cell_cap must be >= 1, got {self.cell_cap}")

    def fingerprint(self) -> str:
        import hashlib

        text = "\n".join(
            [
                f"delta={self.delta!r}",
                f"normalize_gak={self.normalize_gak}",
                f"label_single_slice_mode={self.label_single_slice_mode.value}",
                f"kernel_mode={self.kernel_mode.value}",
                f"cell_cap={self.cell_cap}",
            ]
        )
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def make_prefix_views(seq: InterleavedSequence, cuts: list[int]) -> list[PrefixView]:
    """One prefix view per cut, in input cut order. Pure read; the source
    sequence is never mutated."""
    n = len(seq)
    seen: set[int] = set()
    views = []
    for k in cuts:
        if not 1 <= k <= n:
            raise OutOfRangeCut(f"cut {k} outside 1..{n} for doc {seq.doc_id!r}")
        if k in seen:
            raise DuplicateCut(f"cut {k} repeated for doc {seq.doc_id!r}")
        seen.add(k)
        views.append(PrefixView(seq.doc_id, k, seq.slices[:k]))
    return views


def sample_cuts(n: int, count: int, seed: int) -> list[int]:
    """Draw ``count`` distinct cut points uniformly from 1..n, ascending."""
    if not 1 <= count <= n:
        raise OutOfRangeCut(f"cannot draw {count} distinct cuts from 1..{n}")
    rng = np.random.default_rng(seed)
    return sorted(int(c) + 1 for c in rng.choice(n, size=count, replace=False))


def pool_representation(tokens, policy: PoolPolicy) -> np.ndarray:
    """Collapse a token stream to one unit vector.

    LAST_TOKEN keeps the final vector; AVERAGE_POOL takes the element-wise
    mean. Either result is unit-normalized.
    """
    if len(tokens) == 0:
        raise EmptyTokenList("cannot pool an empty token list")
    mat = np.asarray(tokens, dtype=np.float64)
    if mat.ndim != 2:
        raise ZeroVector(f"tokens must share one dimension, got shape {mat.shape}")
    if policy is PoolPolicy.AVERAGE_POOL:
        pooled = mat.mean(axis=0)
    else:
        pooled = mat[-1]
    norm = float(np.linalg.norm(pooled))
    if not np.isfinite(norm) or norm < DEGENERATE_NORM:
        raise ZeroVector(f"pooled vector is degenerate (norm {norm:.3g})")
    return pooled / norm
