# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sum-product recursion over a local-kernel matrix.

Semantics are identical to the pure-Python fallback in ``_dppy``; the
addition order (left + diagonal + up) is kept the same so both backends
produce bit-identical doubles.
"""

from cython.view cimport array as cvarray


def dp_forward(double[:, ::1] kmat):
    """Alignment-sum value from the (n, m) local-kernel matrix.

    Two rolling rows hold the running table; boundaries are M[0, 0] = 1
    and zero elsewhere on the border.
    """
    cdef Py_ssize_t n = kmat.shape[0]
    cdef Py_ssize_t m = kmat.shape[1]
    cdef Py_ssize_t i, j
    cdef double up, diag, left
    cdef double[::1] prev = cvarray(shape=(m + 1,), itemsize=sizeof(double), format="d")
    cdef double[::1] cur = cvarray(shape=(m + 1,), itemsize=sizeof(double), format="d")
    cdef double[::1] tmp

    prev[0] = 1.0
    for j in range(1, m + 1):
        prev[j] = 0.0
    for i in range(1, n + 1):
        cur[0] = 0.0
        for j in range(1, m + 1):
            left = cur[j - 1]
            diag = prev[j - 1]
            up = prev[j]
            cur[j] = (left + diag + up) * kmat[i - 1, j - 1]
        tmp = prev
        prev = cur
        cur = tmp
    return prev[m]
