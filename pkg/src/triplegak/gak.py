"""Sequence similarity by summing per-step kernels over all alignments.

``gak_forward`` evaluates the sum in quadratic time with the sum-product
recursion M[i,j] = (M[i,j-1] + M[i-1,j-1] + M[i-1,j]) * k(x_i, y_j),
M[0,0] = 1 and zero borders. ``gak_bruteforce`` evaluates the same sum
literally by enumerating every alignment, and exists as the correctness
oracle for the recursion. The single-slice closed form and the
mean-pairwise baseline round out the module.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .core import InterleavedSequence, KernelConfig, KernelMode
from .errors import (
    CosineOutOfRange,
    EmptySequence,
    InvalidAlignmentPath,
    NonPositiveDelta,
    PathShapeMismatch,
    SequenceTooLong,
    TooLargeForEnumeration,
)
from .kernel import distance_matrix, local_kernel_from_distance, sigma, triple_distance

log = logging.getLogger(__name__)

ENUMERATION_LIMIT = 7

_range_noted = False


def _note_raw_above_one(value: float, x_id: str, y_id: str) -> None:
    # expected for near-duplicate multi-slice pairs; first sighting warns,
    # the rest go to debug so batch jobs stay quiet
    global _range_noted
    level = logging.DEBUG if _range_noted else logging.WARNING
    _range_noted = True
    log.log(level, "raw similarity %.6g above 1 for (%r, %r); not clamped", value, x_id, y_id)


@dataclass(frozen=True)
class AlignmentPath:
    """A pair of increasing index tuples stored as 1-based (i, j) pairs."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def validate(self, n: int, m: int) -> None:
        """Raise unless the path is a valid alignment of an (n, m) pair."""
        p = self.pairs
        if not p:
            raise InvalidAlignmentPath("empty path")
        if p[0] != (1, 1):
            raise InvalidAlignmentPath(f"path starts at {p[0]}, not (1, 1)")
        if p[-1] != (n, m):
            raise PathShapeMismatch(f"path ends at {p[-1]}, expected ({n}, {m})")
        for (i0, j0), (i1, j1) in zip(p, p[1:]):
            if i1 < i0 or j1 < j0:
                raise InvalidAlignmentPath(f"indices decrease at {(i0, j0)} -> {(i1, j1)}")
            if i1 > i0 + 1 or j1 > j0 + 1:
                raise InvalidAlignmentPath(f"increment above 1 at {(i0, j0)} -> {(i1, j1)}")
            if (i1 - i0) + (j1 - j0) < 1:
                raise InvalidAlignmentPath(f"simultaneous repetition at {(i0, j0)}")


def enumerate_alignments(n: int, m: int) -> list[AlignmentPath]:
    """Every alignment of an (n, m) pair, each exactly once.

    Exponential (Delannoy growth), so lengths are capped at 7.
    """
    if n < 1 or m < 1:
        raise EmptySequence(f"lengths must be >= 1, got ({n}, {m})")
    if n > ENUMERATION_LIMIT or m > ENUMERATION_LIMIT:
        raise TooLargeForEnumeration(f"({n}, {m}) exceeds the enumeration limit {ENUMERATION_LIMIT}")
    paths: list[AlignmentPath] = []
    stack: list[tuple[int, int]] = [(1, 1)]

    def walk(i: int, j: int) -> None:
        if i == n and j == m:
            paths.append(AlignmentPath(tuple(stack)))
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni <= n and nj <= m:
                stack.append((ni, nj))
                walk(ni, nj)
                stack.pop()

    walk(1, 1)
    return paths


def alignment_score(path: AlignmentPath, x: InterleavedSequence, y: InterleavedSequence,
                    mode: KernelMode = KernelMode.TRIPLE) -> float:
    """Sum of slice distances along an alignment path."""
    path.validate(len(x), len(y))
    return float(sum(triple_distance(x.slices[i - 1], y.slices[j - 1], mode) for i, j in path.pairs))


def _check_pair(x: InterleavedSequence, y: InterleavedSequence, cfg: KernelConfig) -> None:
    if len(x) == 0 or len(y) == 0:
        raise EmptySequence(f"empty sequence in pair ({x.doc_id!r}, {y.doc_id!r})")
    if len(x) * len(y) > cfg.cell_cap:
        raise SequenceTooLong(
            f"{len(x)} x {len(y)} cells exceed the cap {cfg.cell_cap}; raise cell_cap to force"
        )


def _kernel_matrix(x, y, sig: float, cfg: KernelConfig) -> np.ndarray:
    phi = distance_matrix(x.slices, y.slices, cfg.kernel_mode)
    return np.ascontiguousarray(local_kernel_from_distance(phi, sig))


def gak_forward_raw(x: InterleavedSequence, y: InterleavedSequence, cfg: KernelConfig) -> float:
    """Unnormalized alignment sum; always positive."""
    _check_pair(x, y, cfg)
    sig = sigma(len(x), len(y), cfg.delta)
    value = backend.dp_forward(_kernel_matrix(x, y, sig, cfg))
    if value > 1.0:
        _note_raw_above_one(value, x.doc_id, y.doc_id)
    return value


def gak_forward(x: InterleavedSequence, y: InterleavedSequence, cfg: KernelConfig) -> float:
    """Sequence similarity; normalized to (0, 1] when cfg.normalize_gak.

    Normalization divides by sqrt(K(x,x) K(y,y)) with all three kernels
    evaluated at the sigma of the (x, y) pair, which is what makes the
    Cauchy-Schwarz bound (and exact self-similarity 1) hold.
    """
    _check_pair(x, y, cfg)
    if not cfg.normalize_gak:
        return gak_forward_raw(x, y, cfg)
    sig = sigma(len(x), len(y), cfg.delta)
    kxy = backend.dp_forward(_kernel_matrix(x, y, sig, cfg))
    kxx = backend.dp_forward(_kernel_matrix(x, x, sig, cfg))
    kyy = backend.dp_forward(_kernel_matrix(y, y, sig, cfg))
    if kxy == kxx == kyy:
        return 1.0
    return kxy / math.sqrt(kxx * kyy)


def gak_bruteforce(x: InterleavedSequence, y: InterleavedSequence, cfg: KernelConfig) -> float:
    """Literal alignment sum: enumerate every path, multiply local kernels.

    The oracle counterpart of gak_forward_raw; only viable for short
    sequences.
    """
    _check_pair(x, y, cfg)
    n, m = len(x), len(y)
    if n > ENUMERATION_LIMIT or m > ENUMERATION_LIMIT:
        raise TooLargeForEnumeration(f"({n}, {m}) exceeds the enumeration limit {ENUMERATION_LIMIT}")
    sig = sigma(n, m, cfg.delta)
    kmat = _kernel_matrix(x, y, sig, cfg)
    total = 0.0
    for path in enumerate_alignments(n, m):
        prod = 1.0
        for i, j in path.pairs:
            prod *= kmat[i - 1, j - 1]
        total += prod
    return total


def single_slice_gak(cos: float, delta: float) -> float:
    """Closed form for one-slice sequences: s / (2 - s), s = exp(-(1-cos)/delta^2).

    Strictly increasing in the cosine; equals 1 exactly at cos = 1.
    """
    if not delta > 0:
        raise NonPositiveDelta(f"delta must be positive, got {delta}")
    if not -1.0 <= cos <= 1.0:
        raise CosineOutOfRange(f"cosine {cos} outside [-1, 1]")
    s = math.exp(-(1.0 - cos) / (delta * delta))
    return s / (2.0 - s)


def mean_pairwise_similarity(x: InterleavedSequence, y: InterleavedSequence, cfg: KernelConfig) -> float:
    """Ablation baseline: plain mean of the local-kernel matrix."""
    _check_pair(x, y, cfg)
    sig = sigma(len(x), len(y), cfg.delta)
    return float(_kernel_matrix(x, y, sig, cfg).mean())


def best_alignment_path(x: InterleavedSequence, y: InterleavedSequence, cfg: KernelConfig) -> AlignmentPath:
    """Max-product path for display. Ties prefer diagonal, then the step
    consuming x, then the step consuming y. Scoring never uses this."""
    _check_pair(x, y, cfg)
    n, m = len(x), len(y)
    sig = sigma(n, m, cfg.delta)
    kmat = _kernel_matrix(x, y, sig, cfg)
    best = np.zeros((n + 1, m + 1))
    best[0, 0] = 1.0
    # 0 = diagonal, 1 = from (i-1, j), 2 = from (i, j-1)
    step = np.zeros((n + 1, m + 1), dtype=np.int8)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cands = (best[i - 1, j - 1], best[i - 1, j], best[i, j - 1])
            k = int(np.argmax(cands))
            best[i, j] = cands[k] * kmat[i - 1, j - 1]
            step[i, j] = k
    pairs = []
    i, j = n, m
    while i >= 1 and j >= 1:
        pairs.append((i, j))
        k = step[i, j]
        if k == 0:
            i, j = i - 1, j - 1
        elif k == 1:
            i -= 1
        else:
            j -= 1
    return AlignmentPath(tuple(reversed(pairs)))
