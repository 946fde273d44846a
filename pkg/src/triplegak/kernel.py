"""Per-slice distances and the local kernel entering the alignment sum.

The slice distance is piecewise over composite pairs: same-modality pairs
compare specialist sub-vectors, cross-modality pairs compare the shared
sub-vectors, and atomic pairs compare whole vectors; all as squared
Euclidean distances. The local kernel maps a distance phi to
u / (2 - u) with u = exp(-phi / (2 sigma^2)), which lives in (0, 1] and
equals 1 exactly when phi = 0.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Form, KernelMode, SliceEmbedding
from .errors import MixedFormPair, NonPositiveDelta, ShapeMismatch


def triple_distance(a: SliceEmbedding, b: SliceEmbedding, mode: KernelMode = KernelMode.TRIPLE) -> float:
    """Squared-distance between two slices under the modality-aware rule.

    TRIPLE mode follows the piecewise definition above. SHARED_ONLY is the
    ablation that always compares shared sub-vectors for composite pairs.
    Result is in [0, 4] for unit-norm inputs.
    """
    if a.form is not b.form:
        raise MixedFormPair(f"cannot compare {a.form.value} slice with {b.form.value} slice")
    if a.form is Form.COMPOSITE:
        if a.specialist.shape != b.specialist.shape or a.shared.shape != b.shared.shape:
            raise ShapeMismatch(
                f"composite shapes differ: ({len(a.specialist)},{len(a.shared)}) vs "
                f"({len(b.specialist)},{len(b.shared)})"
            )
        if mode is KernelMode.SHARED_ONLY or a.modality is not b.modality:
            d = a.shared - b.shared
        else:
            d = a.specialist - b.specialist
    else:
        if a.whole.shape != b.whole.shape:
            raise ShapeMismatch(f"atomic dims differ: {len(a.whole)} vs {len(b.whole)}")
        d = a.whole - b.whole
    return float(d @ d)


def sigma(n: int, m: int, delta: float) -> float:
    """Bandwidth schedule: delta * sqrt((n + m) / 2) for sequence lengths n, m."""
    if not delta > 0:
        raise NonPositiveDelta(f"delta must be positive, got {delta}")
    if n < 1 or m < 1:
        raise ValueError(f"sequence lengths must be >= 1, got ({n}, {m})")
    return delta * math.sqrt((n + m) / 2.0)


def local_kernel_from_distance(phi, sig: float):
    """Map distance(s) phi to the local kernel value u/(2-u), u = exp(-phi/(2 sigma^2)).

    Accepts scalars or arrays. Values are in (0, 1]; 1 iff phi = 0.
    """
    if not sig > 0:
        raise NonPositiveDelta(f"sigma must be positive, got {sig}")
    u = np.exp(-np.asarray(phi, dtype=np.float64) / (2.0 * sig * sig))
    out = u / (2.0 - u)
    if np.ndim(phi) == 0:
        return float(out)
    return out


def local_kernel(a: SliceEmbedding, b: SliceEmbedding, sig: float, mode: KernelMode = KernelMode.TRIPLE) -> float:
    return local_kernel_from_distance(triple_distance(a, b, mode), sig)


def _sqdist_matrix(xa: np.ndarray, ya: np.ndarray) -> np.ndarray:
    # ||a-b||^2 via the diff to keep exact symmetry and non-negativity
    diff = xa[:, None, :] - ya[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _stack(slices, attr: str) -> np.ndarray:
    return np.stack([getattr(s, attr) for s in slices])


def distance_matrix(x_slices, y_slices, mode: KernelMode = KernelMode.TRIPLE) -> np.ndarray:
    """Pairwise slice distances, shape (len(x), len(y)).

    Precomputing this once before the DP keeps the whole kernel at
    O(n m d) instead of redoing vector work per cell.
    """
    forms = {s.form for s in x_slices} | {s.form for s in y_slices}
    if len(forms) > 1:
        raise MixedFormPair("sequences mix atomic and composite slices")
    if forms == {Form.COMPOSITE}:
        spec_x, spec_y = _stack(x_slices, "specialist"), _stack(y_slices, "specialist")
        shr_x, shr_y = _stack(x_slices, "shared"), _stack(y_slices, "shared")
        if spec_x.shape[1] != spec_y.shape[1] or shr_x.shape[1] != shr_y.shape[1]:
            raise ShapeMismatch(
                f"composite shapes differ: ({spec_x.shape[1]},{shr_x.shape[1]}) vs "
                f"({spec_y.shape[1]},{shr_y.shape[1]})"
            )
        phi_shared = _sqdist_matrix(shr_x, shr_y)
        if mode is KernelMode.SHARED_ONLY:
            return phi_shared
        phi_spec = _sqdist_matrix(spec_x, spec_y)
        mod_x = np.array([s.modality for s in x_slices], dtype=object)
        mod_y = np.array([s.modality for s in y_slices], dtype=object)
        same = mod_x[:, None] == mod_y[None, :]
        return np.where(same, phi_spec, phi_shared)
    whole_x, whole_y = _stack(x_slices, "whole"), _stack(y_slices, "whole")
    if whole_x.shape[1] != whole_y.shape[1]:
        raise ShapeMismatch(f"atomic dims differ: {whole_x.shape[1]} vs {whole_y.shape[1]}")
    return _sqdist_matrix(whole_x, whole_y)
