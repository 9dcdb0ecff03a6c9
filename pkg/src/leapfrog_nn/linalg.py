"""Dense float64 kernels with a fixed scalar operation order.

Vectors are 1-D and matrices 2-D C-contiguous ``numpy.float64`` arrays. The
loops are compiled with numba (no fastmath, so no reassociation or FMA
contraction) and release the GIL, which lets worker threads run them in
parallel while producing bit-identical results to a single-threaded call.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


class ShapeError(ValueError):
    """Operand dimensions do not agree."""


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Validate user input as a finite, non-empty float64 vector (copied)."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ShapeError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Validate user input as a finite, non-empty float64 matrix (copied)."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


# ---------------------------------------------------------------------------
# compiled loops
# ---------------------------------------------------------------------------


@njit(nogil=True, cache=True)
def _matvec_into(W, v, out):
    rows, cols = W.shape
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += W[i, j] * v[j]
        out[i] = acc


@njit(nogil=True, cache=True)
def _matvec_transpose_into(W, v, out):
    # Row-outer loop keeps W access sequential; every out[j] still accumulates
    # in ascending i, so the result matches matvec on an explicit transpose.
    rows, cols = W.shape
    for j in range(cols):
        out[j] = 0.0
    for i in range(rows):
        vi = v[i]
        for j in range(cols):
            out[j] += W[i, j] * vi


@njit(nogil=True, cache=True)
def _hadamard_into(u, v, out):
    for i in range(u.shape[0]):
        out[i] = u[i] * v[i]


@njit(nogil=True, cache=True)
def _outer_into(u, v, out):
    for j in range(u.shape[0]):
        uj = u[j]
        for k in range(v.shape[0]):
            out[j, k] = uj * v[k]


@njit(nogil=True, cache=True)
def _sigmoid_scalar(x):
    # Branch on sign so exp never overflows; both branches equal 1/(1+e^-x).
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(nogil=True, cache=True)
def _sigmoid_into(v, out):
    for i in range(v.shape[0]):
        out[i] = _sigmoid_scalar(v[i])


@njit(nogil=True, cache=True)
def _sigmoid_prime_into(v, out):
    for i in range(v.shape[0]):
        s = _sigmoid_scalar(v[i])
        out[i] = s * (1.0 - s)


# ---------------------------------------------------------------------------
# public kernels
# ---------------------------------------------------------------------------


def matvec(W: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``W @ v`` with each row summed in ascending column order."""
    if W.shape[1] != v.shape[0]:
        raise ShapeError(
            f"matvec: matrix has {W.shape[1]} columns but vector has length {v.shape[0]}"
        )
    out = np.empty(W.shape[0])
    _matvec_into(W, v, out)
    return out


def matvec_transpose(W: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``W.T @ v`` with each output summed in ascending row order."""
    if W.shape[0] != v.shape[0]:
        raise ShapeError(
            f"matvec_transpose: matrix has {W.shape[0]} rows but vector has length {v.shape[0]}"
        )
    out = np.empty(W.shape[1])
    _matvec_transpose_into(W, v, out)
    return out


def hadamard(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if u.shape[0] != v.shape[0]:
        raise ShapeError(f"hadamard: lengths {u.shape[0]} and {v.shape[0]} differ")
    out = np.empty(u.shape[0])
    _hadamard_into(u, v, out)
    return out


def outer(u: np.ndarray, v: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Rank-one matrix ``out[j, k] = u[j] * v[k]``, optionally into ``out``."""
    if out is None:
        out = np.empty((u.shape[0], v.shape[0]))
    elif out.shape != (u.shape[0], v.shape[0]):
        raise ShapeError(f"outer: out has shape {out.shape}, expected {(u.shape[0], v.shape[0])}")
    _outer_into(u, v, out)
    return out


def sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty(v.shape[0])
    _sigmoid_into(v, out)
    return out


def sigmoid_prime(v: np.ndarray) -> np.ndarray:
    """Derivative of the sigmoid, evaluated as ``s * (1 - s)``."""
    out = np.empty(v.shape[0])
    _sigmoid_prime_into(v, out)
    return out
