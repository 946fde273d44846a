"""The compiled DP core and the pure fallback must agree bit for bit."""

import numpy as np
import pytest

from triplegak import _dppy, backend


def kernel_matrices(rng, count=40):
    for _ in range(count):
        n = int(rng.integers(1, 12))
        m = int(rng.integers(1, 12))
        yield np.ascontiguousarray(rng.uniform(0.05, 1.0, (n, m)))


def test_python_backend_matches_reference_defs(rng):
    # the fallback against a fresh literal re-statement of the recursion
    for kmat in kernel_matrices(rng, 20):
        n, m = kmat.shape
        table = np.zeros((n + 1, m + 1))
        table[0, 0] = 1.0
        for i in range(1, n + 1):
            for j in range(1, m + 1):
                table[i, j] = (table[i, j - 1] + table[i - 1, j - 1] + table[i - 1, j]) * kmat[i - 1, j - 1]
        assert _dppy.dp_forward(kmat) == table[n, m]


@pytest.mark.skipif("c" not in backend.available_backends(), reason="compiled core not built")
def test_backends_bit_identical(rng):
    from triplegak import _dpcore

    for kmat in kernel_matrices(rng, 60):
        assert _dpcore.dp_forward(kmat) == _dppy.dp_forward(kmat)


def test_active_backend_exposed():
    assert backend.BACKEND in backend.available_backends()
