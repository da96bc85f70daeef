"""Dense complex operator algebra.

Every operator is a plain square ``numpy.ndarray`` of complex dtype.
Superoperators use the column-stacking convention throughout::

    vec(A @ X @ B) == kron(B.T, A) @ vec(X)

Composite system/ancilla indices are system-major: row ``i*m + k`` of an
operator on ``C^d (x) C^m`` carries system index ``i`` and ancilla index ``k``.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg

#: default tolerance for the hermiticity / unitarity predicates
TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_+ raises |1> -> |0> (sigma_z eigenvalue -1 -> +1)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


def as_operator(a, dim: int | None = None) -> np.ndarray:
    """Coerce ``a`` to a square complex matrix, optionally of a given dimension."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {m.shape[0]}")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def max_abs(a) -> float:
    """Entrywise max norm, 0 for empty input."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a, tol: float = TOL) -> bool:
    a = as_operator(a)
    return max_abs(a - dag(a)) <= tol


def is_unitary(u, tol: float = TOL) -> bool:
    u = as_operator(u)
    return max_abs(dag(u) @ u - np.eye(u.shape[0])) <= tol


def matrix_unit(i: int, j: int, dim: int) -> np.ndarray:
    e = np.zeros((dim, dim), dtype=complex)
    e[i, j] = 1.0
    return e


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``(A (x) B)[i*dB + k, j*dB + l] = A[i, j] B[k, l]``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def vectorize(x) -> np.ndarray:
    """Column-stack a square matrix into a 1-d vector of length d**2."""
    return as_operator(x).reshape(-1, order="F")


def unvectorize(v, d: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`.

    Raises ``ValueError`` when the length is not ``d**2`` (or, without ``d``,
    not a perfect square).
    """
    v = np.asarray(v, dtype=complex).reshape(-1)
    if d is None:
        d = math.isqrt(v.size)
    if d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized {d}x{d} matrix")
    return v.reshape((d, d), order="F")


def expm(m) -> np.ndarray:
    """Matrix exponential (scaling and squaring with a Pade core)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("expm input has non-finite entries")
    return scipy.linalg.expm(m)


def partial_trace_ancilla(m, d: int, anc: int) -> np.ndarray:
    """Trace out the ancilla factor of an operator on ``C^d (x) C^anc``."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (d * anc, d * anc):
        raise ValueError(f"operator of shape {m.shape} does not act on a {d}x{anc} composite space")
    return np.einsum("ikjk->ij", m.reshape(d, anc, d, anc))


def to_pairs(m) -> list:
    """Row-major nested list with every complex entry as ``[re, im]``."""
    m = np.asarray(m, dtype=complex)
    if m.ndim == 0:
        return [float(m.real), float(m.imag)]
    return [to_pairs(row) for row in m]


def from_pairs(data, dim: int | None = None) -> np.ndarray:
    """Rebuild a square complex matrix from :func:`to_pairs` output."""
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix data: {exc}") from None
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("matrix must be a list of rows of [re, im] pairs")
    return as_operator(arr[..., 0] + 1j * arr[..., 1], dim)
