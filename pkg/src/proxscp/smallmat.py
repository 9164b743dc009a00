"""Dense kernels for the small, fixed-size blocks used throughout the solver.

The ``*_acc`` kernels are numba-compiled and accumulate into caller-owned
buffers, so the PIPG inner loop performs no allocation. The public
``mat_vec`` / ``mat_mat`` / ``norms`` wrappers check shapes and allocate
their result; they are convenient outside hot loops.

Summation order is fixed: every output element accumulates its terms in
increasing index order. This keeps results reproducible and makes the
transposed product bit-identical to the product with an explicit transpose.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


@njit(cache=True)
def gemv_acc(A, x, scale, out):
    """out += scale * A @ x"""
    m, n = A.shape
    for i in range(m):
        acc = 0.0
        for j in range(n):
            acc += A[i, j] * x[j]
        out[i] += scale * acc


@njit(cache=True)
def gemv_t_acc(A, x, scale, out):
    """out += scale * A.T @ x"""
    m, n = A.shape
    for j in range(n):
        acc = 0.0
        for i in range(m):
            acc += A[i, j] * x[i]
        out[j] += scale * acc


@njit(cache=True)
def gemm_into(A, B, out):
    m, k = A.shape
    n = B.shape[1]
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for p in range(k):
                acc += A[i, p] * B[p, j]
            out[i, j] = acc


def _as_matrix(A, name):
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    return A


def _as_vector(x, name):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {x.shape}")
    return x


def mat_vec(A, x, transpose=False):
    """Return ``A @ x`` (or ``A.T @ x`` when *transpose* is set)."""
    A = _as_matrix(A, "A")
    x = _as_vector(x, "x")
    rows, cols = A.shape
    inner = rows if transpose else cols
    if inner != x.shape[0]:
        op = "A^T" if transpose else "A"
        eff = (cols, rows) if transpose else (rows, cols)
        raise DimensionError(f"cannot apply {op} with shape {eff} to x with shape {x.shape}")
    if transpose:
        out = np.zeros(cols)
        gemv_t_acc(A, x, 1.0, out)
    else:
        out = np.zeros(rows)
        gemv_acc(A, x, 1.0, out)
    return out


def mat_mat(A, B):
    """Return ``A @ B``."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply shapes {A.shape} and {B.shape}")
    out = np.empty((A.shape[0], B.shape[1]))
    gemm_into(A, B, out)
    return out


def norms(x):
    """Return ``(two_norm, inf_norm, one_norm)`` of a non-empty vector."""
    x = _as_vector(x, "x")
    if x.shape[0] < 1:
        raise DimensionError("norms of an empty vector are undefined")
    sq = 0.0
    inf = 0.0
    one = 0.0
    for v in x.tolist():
        a = abs(v)
        sq += a * a
        one += a
        if a > inf:
            inf = a
    return math.sqrt(sq), inf, one
