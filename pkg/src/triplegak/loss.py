"""Similarity-matrix MSE loss, analytic gradients, and a projector trainer.

The label matrix pins same-source pairs to 1, uses cosine (or the
single-slice closed form) when both views hold one slice, and the
alignment kernel otherwise. The representation matrix is plain cosine
over projected vectors. The loss is (1/n) * sum of squared entrywise
differences; note the 1/n scaling, kept as defined, not 1/n^2. The
diagonal participates in the sum (it contributes zero under the
same-source rule, so including it is observationally neutral).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    InterleavedSequence,
    KernelConfig,
    PrefixView,
    RepresentationVector,
    SingleSliceMode,
)
from .errors import (
    BadTrainerConfig,
    DimensionMismatch,
    DivergenceDetected,
    SizeMismatch,
    ZeroVector,
)
from .gak import gak_forward, single_slice_gak

SYMMETRY_TOL = 1e-9


class MatrixKind(enum.Enum):
    LABEL = "label"
    REPRESENTATION = "representation"


@dataclass(frozen=True)
class SimilarityMatrix:
    n: int
    entries: np.ndarray
    kind: MatrixKind

    @classmethod
    def build(cls, entries: np.ndarray, kind: MatrixKind) -> "SimilarityMatrix":
        mat = np.asarray(entries, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise SizeMismatch(f"expected a square matrix, got shape {mat.shape}")
        if mat.size and np.abs(mat - mat.T).max() > SYMMETRY_TOL:
            raise SizeMismatch("matrix is not symmetric within 1e-9")
        mat = np.ascontiguousarray(mat)
        mat.flags.writeable = False
        return cls(mat.shape[0], mat, kind)


@dataclass(frozen=True)
class BatchSpec:
    """Views and their projected representations, aligned by index."""

    views: tuple[PrefixView, ...]
    reps: tuple[RepresentationVector, ...]

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        object.__setattr__(self, "reps", tuple(self.reps))
        if len(self.views) != len(self.reps):
            raise SizeMismatch(f"{len(self.views)} views vs {len(self.reps)} reps")
        for i, (v, r) in enumerate(zip(self.views, self.reps)):
            if v.source_doc_id != r.source_doc_id or v.cut != r.cut:
                raise SizeMismatch(
                    f"views[{i}] is ({v.source_doc_id!r}, cut {v.cut}) but reps[{i}] is "
                    f"({r.source_doc_id!r}, cut {r.cut})"
                )


@dataclass(frozen=True)
class TrainerConfig:
    learning_rate: float
    steps: int
    seed: int
    projector_dims: tuple[int, int]
    # weight of the generative term in the joint objective; documented
    # for config compatibility, never used here.
    alpha: float = 1.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise BadTrainerConfig(f"learning_rate must be positive, got {self.learning_rate}")
        if self.steps < 1:
            raise BadTrainerConfig(f"steps must be >= 1, got {self.steps}")
        if len(self.projector_dims) != 2 or min(self.projector_dims) < 1:
            raise BadTrainerConfig(f"bad projector_dims {self.projector_dims}")


def _view_sequence(view: PrefixView) -> InterleavedSequence:
    return InterleavedSequence(view.source_doc_id, view.slices)


def _single_slice_entry(a: PrefixView, b: PrefixView, cfg: KernelConfig) -> float:
    va, vb = a.slices[0].concat(), b.slices[0].concat()
    cos = float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))
    cos = min(1.0, max(-1.0, cos))
    if cfg.label_single_slice_mode is SingleSliceMode.CLOSED_FORM:
        return single_slice_gak(cos, cfg.delta)
    return cos


def label_matrix(views: list[PrefixView], cfg: KernelConfig) -> SimilarityMatrix:
    """Pairwise view similarities used as the training target.

    Same-source pairs are set to 1 exactly, before any kernel runs.
    """
    if not views:
        raise SizeMismatch("no views")
    n = len(views)
    mat = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            a, b = views[i], views[j]
            if a.source_doc_id == b.source_doc_id:
                value = 1.0
            elif len(a) == 1 and len(b) == 1:
                value = _single_slice_entry(a, b, cfg)
            else:
                value = gak_forward(_view_sequence(a), _view_sequence(b), cfg)
            mat[i, j] = mat[j, i] = value
    return SimilarityMatrix.build(mat, MatrixKind.LABEL)


def _rep_rows(reps: list[RepresentationVector]) -> np.ndarray:
    if not reps:
        raise SizeMismatch("no representation vectors")
    dims = {len(r.values) for r in reps}
    if len(dims) > 1:
        raise DimensionMismatch(f"representation dims differ: {sorted(dims)}")
    rows = np.stack([r.values for r in reps]).astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms < 1e-9):
        raise ZeroVector("zero representation vector in batch")
    return rows / norms[:, None]


def _cosine_matrix(rows: np.ndarray) -> np.ndarray:
    g = rows @ rows.T
    g = (g + g.T) / 2.0
    np.clip(g, -1.0, 1.0, out=g)
    np.fill_diagonal(g, 1.0)
    return g


def representation_matrix(reps: list[RepresentationVector]) -> SimilarityMatrix:
    """Cosine similarities of projected representations; diagonal is exactly 1."""
    return SimilarityMatrix.build(_cosine_matrix(_rep_rows(reps)), MatrixKind.REPRESENTATION)


def mse_loss(mr: SimilarityMatrix, ml: SimilarityMatrix) -> float:
    """(1/n) * sum_ij (mr_ij - ml_ij)^2."""
    if mr.n != ml.n:
        raise SizeMismatch(f"matrix sizes differ: {mr.n} vs {ml.n}")
    if mr.kind is not MatrixKind.REPRESENTATION or ml.kind is not MatrixKind.LABEL:
        raise ValueError("mse_loss expects (representation, label) matrices")
    diff = mr.entries - ml.entries
    return float((diff * diff).sum() / mr.n)


def _loss_and_gradient_rows(rows: np.ndarray, label: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and d(loss)/d(row_i) for unit rows; rows must be normalized.

    d cos(u, v)/du = (v - cos(u, v) u) / ||u|| collapses on the unit
    sphere to v - cos * u; each unordered pair appears twice in the sum,
    hence the factor 4/n.
    """
    n = rows.shape[0]
    c = _cosine_matrix(rows)
    e = c - label
    loss = float((e * e).sum() / n)
    grads = (4.0 / n) * (e @ rows - ((e * c).sum(axis=1))[:, None] * rows)
    return loss, grads


def loss_gradient(reps: list[RepresentationVector], ml: SimilarityMatrix) -> list[np.ndarray]:
    """Analytic d(loss)/d(r_i); already tangent to the unit sphere at r_i."""
    rows = _rep_rows(reps)
    if rows.shape[0] != ml.n:
        raise SizeMismatch(f"{rows.shape[0]} reps vs {ml.n} label rows")
    _, grads = _loss_and_gradient_rows(rows, ml.entries)
    return [grads[i].copy() for i in range(grads.shape[0])]


@dataclass(frozen=True)
class TrainResult:
    projector: np.ndarray
    trace: tuple[float, ...]

    @property
    def initial_loss(self) -> float:
        return self.trace[0]

    @property
    def final_loss(self) -> float:
        return self.trace[-1]


MAX_HALVINGS = 30


def project_representations(hidden, projector: np.ndarray, views: list[PrefixView]) -> list[RepresentationVector]:
    """Apply a trained projector and re-normalize, one rep per view."""
    h = np.asarray(hidden, dtype=np.float64)
    out = h @ projector
    return [
        RepresentationVector.normalized(v.source_doc_id, v.cut, out[i])
        for i, v in enumerate(views)
    ]


def train_projector(hidden, views: list[PrefixView], cfg: KernelConfig, tcfg: TrainerConfig) -> TrainResult:
    """Full-batch gradient descent of the loss over a linear projector.

    Representations are r_i = normalize(P^T h_i) with P of shape
    (input, output). A backtracking halving rule (at most 30 halvings,
    falling back to no step) makes the loss trace non-increasing;
    everything is driven by numpy with a seeded generator, so a fixed
    seed reproduces the run bit for bit on one platform.
    """
    h = np.asarray(hidden, dtype=np.float64)
    if h.ndim != 2:
        raise DimensionMismatch(f"hidden must be (n, dim), got shape {h.shape}")
    if h.shape[0] != len(views):
        raise SizeMismatch(f"{h.shape[0]} hidden vectors vs {len(views)} views")
    d_in, d_out = tcfg.projector_dims
    if h.shape[1] != d_in:
        raise DimensionMismatch(f"hidden dim {h.shape[1]} != projector input {d_in}")

    label = label_matrix(views, cfg).entries
    rng = np.random.default_rng(tcfg.seed)
    proj = rng.standard_normal((d_in, d_out)) / np.sqrt(d_in)

    def evaluate(p: np.ndarray) -> tuple[float, np.ndarray]:
        u = h @ p
        norms = np.linalg.norm(u, axis=1)
        if np.any(norms < 1e-12):
            return float("nan"), u
        rows = u / norms[:, None]
        loss, g_rows = _loss_and_gradient_rows(rows, label)
        # pull back through the normalization: (I - r r^T) g / ||u||
        g_u = (g_rows - (g_rows * rows).sum(axis=1)[:, None] * rows) / norms[:, None]
        return loss, h.T @ g_u

    loss, grad = evaluate(proj)
    if not np.isfinite(loss):
        raise DivergenceDetected("non-finite loss at initialization", [loss])
    trace = [loss]
    for _ in range(tcfg.steps):
        step = tcfg.learning_rate
        accepted = False
        for _ in range(MAX_HALVINGS):
            cand = proj - step * grad
            cand_loss, cand_grad = evaluate(cand)
            if np.isfinite(cand_loss) and cand_loss <= loss:
                proj, loss, grad = cand, cand_loss, cand_grad
                accepted = True
                break
            step /= 2.0
        if not accepted:
            # no productive step at any tried size; hold position
            pass
        if not np.isfinite(loss):
            raise DivergenceDetected("loss became non-finite", trace + [loss])
        trace.append(loss)
    return TrainResult(proj, tuple(trace))


def write_loss_trace(path, trace) -> None:
    """One line per step: step<TAB>loss."""
    with open(path, "w", encoding="utf-8") as fh:
        for step, value in enumerate(trace):
            fh.write(f"{step}\t{value!r}\n")
