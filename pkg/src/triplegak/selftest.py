"""Built-in oracle suites behind the selftest command.

Each suite checks one implementation against an independent route:
the quadratic recursion against literal alignment enumeration, the
single-slice closed form against the recursion, analytic gradients
against central finite differences, and local-kernel Gram spectra
against the positive-definiteness expectation. Output formatting is
fixed so a fixed seed reproduces the bytes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import KernelConfig, RepresentationVector
from .gak import enumerate_alignments, gak_bruteforce, gak_forward_raw, single_slice_gak
from .kernel import local_kernel_from_distance, sigma
from .loss import MatrixKind, SimilarityMatrix, loss_gradient, mse_loss, representation_matrix
from .synth import random_sequence, unit

DP_TOL = 1e-10
CLOSED_FORM_TOL = 1e-12
GRAM_FLOOR = -1e-8
GRAD_TOL = 1e-5


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.worst = float(self.worst)


def _faulted_dp(kmat: np.ndarray) -> float:
    # deliberately corrupt one boundary cell (test hook for fault injection)
    n, m = kmat.shape
    table = np.zeros((n + 1, m + 1))
    table[0, 0] = 1.0
    if m >= 1:
        table[0, 1] = 1.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i, j] = (table[i, j - 1] + table[i - 1, j - 1] + table[i - 1, j]) * kmat[i - 1, j - 1]
    return float(table[n, m])


def suite_dp_vs_enumeration(seed: int, instances_per_cell: int = 10, fault: str | None = None) -> SuiteResult:
    rng = np.random.default_rng(seed)
    cfg = KernelConfig(normalize_gak=False)
    worst = 0.0
    for n in range(1, 6):
        for m in range(1, 6):
            for _ in range(instances_per_cell):
                x = random_sequence(rng, "x", n)
                y = random_sequence(rng, "y", m)
                if fault == "dp-boundary":
                    from .kernel import distance_matrix

                    sig = sigma(n, m, cfg.delta)
                    kmat = local_kernel_from_distance(distance_matrix(x.slices, y.slices), sig)
                    forward = _faulted_dp(np.atleast_2d(kmat))
                else:
                    forward = gak_forward_raw(x, y, cfg)
                oracle = gak_bruteforce(x, y, cfg)
                worst = max(worst, abs(forward - oracle) / abs(oracle))
    return SuiteResult("dp-vs-enumeration", worst <= DP_TOL, worst)


def delannoy(a: int, b: int) -> int:
    table = [[0] * (b + 1) for _ in range(a + 1)]
    for i in range(a + 1):
        for j in range(b + 1):
            if i == 0 or j == 0:
                table[i][j] = 1
            else:
                table[i][j] = table[i - 1][j] + table[i][j - 1] + table[i - 1][j - 1]
    return table[a][b]


def suite_alignment_counts(seed: int) -> SuiteResult:
    worst = 0.0
    for n in range(1, 7):
        for m in range(1, 7):
            got = len(enumerate_alignments(n, m))
            want = delannoy(n - 1, m - 1)
            worst = max(worst, abs(got - want))
    return SuiteResult("alignment-counts", worst == 0, worst)


def suite_single_slice_sweep(seed: int) -> SuiteResult:
    from .core import InterleavedSequence, Modality, SliceEmbedding

    worst = 0.0
    monotone = True
    exact_top = True
    for delta in (0.5, 1.0, 2.0):
        cfg = KernelConfig(delta=delta, normalize_gak=False)
        prev = None
        for cos in np.linspace(-1.0, 1.0, 201):
            cos = float(cos)
            closed = single_slice_gak(cos, delta)
            if prev is not None and closed <= prev:
                monotone = False
            prev = closed
            # realize the cosine with planar unit vectors and run the DP
            a = SliceEmbedding.atomic(Modality.TEXT, np.array([1.0, 0.0]))
            b = SliceEmbedding.atomic(Modality.TEXT, np.array([cos, float(np.sqrt(max(0.0, 1.0 - cos * cos)))]))
            forward = gak_forward_raw(
                InterleavedSequence("a", (a,)), InterleavedSequence("b", (b,)), cfg
            )
            worst = max(worst, abs(closed - forward))
        if single_slice_gak(1.0, delta) != 1.0:
            exact_top = False
    passed = monotone and exact_top and worst <= CLOSED_FORM_TOL
    return SuiteResult("single-slice-sweep", passed, worst)


def suite_gram_pd(seed: int, n_sets: int = 200, set_size: int = 8) -> SuiteResult:
    from .kernel import distance_matrix
    from .synth import random_composite_slice

    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_sets):
        slices = [random_composite_slice(rng, 16, 16) for _ in range(set_size)]
        phi = distance_matrix(slices, slices)
        gram = local_kernel_from_distance(phi, 1.0)
        worst = min(worst, float(np.linalg.eigvalsh(gram).min()))
    return SuiteResult("gram-pd", worst >= GRAM_FLOOR, worst)


def fd_gradient(rows: np.ndarray, label: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the loss through raw (unnormalized)
    perturbations; the loss re-normalizes internally via cosine."""

    def loss_of(raw: np.ndarray) -> float:
        unit_rows = raw / np.linalg.norm(raw, axis=1)[:, None]
        g = unit_rows @ unit_rows.T
        g = (g + g.T) / 2.0
        np.fill_diagonal(g, 1.0)
        diff = g - label
        return float((diff * diff).sum() / raw.shape[0])

    grads = np.zeros_like(rows)
    for i in range(rows.shape[0]):
        for d in range(rows.shape[1]):
            up = rows.copy()
            dn = rows.copy()
            up[i, d] += h
            dn[i, d] -= h
            grads[i, d] = (loss_of(up) - loss_of(dn)) / (2 * h)
    return grads


def suite_gradient_fd(seed: int, instances: int = 10) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    zero_ok = True
    for _ in range(instances):
        n = int(rng.integers(2, 9))
        dim = int(rng.integers(3, 17))
        rows = np.stack([unit(rng, dim) for _ in range(n)])
        label = np.clip((rows @ rows.T + rng.normal(0, 0.1, (n, n))), -1, 1)
        label = (label + label.T) / 2.0
        np.fill_diagonal(label, 1.0)
        reps = [RepresentationVector.normalized(f"r{i}", 1, rows[i]) for i in range(n)]
        ml = SimilarityMatrix.build(label, MatrixKind.LABEL)
        analytic = np.stack(loss_gradient(reps, ml))
        numeric = fd_gradient(rows, label)
        scale = max(1e-12, float(np.abs(numeric).max()))
        worst = max(worst, float(np.abs(analytic - numeric).max()) / scale)
        # at the optimum the gradient vanishes
        ml_self = SimilarityMatrix.build(representation_matrix(reps).entries, MatrixKind.LABEL)
        at_min = np.stack(loss_gradient(reps, ml_self))
        if np.abs(at_min).max() > 1e-12:
            zero_ok = False
    # zero loss at identical matrices
    mr = representation_matrix(reps)
    ml_same = SimilarityMatrix.build(mr.entries, MatrixKind.LABEL)
    zero_ok = zero_ok and mse_loss(mr, ml_same) == 0.0
    return SuiteResult("gradient-fd", zero_ok and worst <= GRAD_TOL, worst)


SUITES = {
    "dp-vs-enumeration": suite_dp_vs_enumeration,
    "alignment-counts": suite_alignment_counts,
    "single-slice-sweep": suite_single_slice_sweep,
    "gram-pd": suite_gram_pd,
    "gradient-fd": suite_gradient_fd,
}


def run_all(seed: int, fault: str | None = None) -> list[SuiteResult]:
    results = []
    for name, fn in SUITES.items():
        if name == "dp-vs-enumeration":
            results.append(fn(seed, fault=fault))
        else:
            results.append(fn(seed))
    return results
