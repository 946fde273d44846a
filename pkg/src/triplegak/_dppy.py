"""Pure-Python fallback for the sum-product recursion.

Kept deliberately plain: the addition order matches ``_dpcore.pyx``
exactly so the two backends agree bit for bit. Table sizes are bounded
by KernelConfig.cell_cap upstream, so the interpreted loop stays cheap.
"""

from __future__ import annotations

import numpy as np


def dp_forward(kmat: np.ndarray) -> float:
    n, m = kmat.shape
    prev = np.zeros(m + 1)
    cur = np.zeros(m + 1)
    prev[0] = 1.0
    for i in range(1, n + 1):
        cur[0] = 0.0
        row = kmat[i - 1]
        for j in range(1, m + 1):
            cur[j] = (cur[j - 1] + prev[j - 1] + prev[j]) * row[j - 1]
        prev, cur = cur, prev
    return float(prev[m])
