"""Dense graph linear algebra shared by the solvers and unrolled models.

All matrix functions accept a single ``(N, N)`` array or a stack ``(..., N, N)``.
Edge vectors list the strict upper triangle in row-major order::

    (0,1), (0,2), ..., (0,N-1), (1,2), ..., (N-2,N-1)
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ContractError, DimensionError, NumericError, ParameterError


def _check_square(m: np.ndarray) -> None:
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionError(f"expected square matrix, got shape {m.shape}")


def laplacian(a: np.ndarray) -> np.ndarray:
    """Combinatorial Laplacian ``diag(A 1) - A``."""
    a = np.asarray(a, dtype=float)
    _check_square(a)
    lap = -a.copy()
    idx = np.arange(a.shape[-1])
    lap[..., idx, idx] += a.sum(axis=-1)
    return lap


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def project_constraints(m: np.ndarray) -> np.ndarray:
    """Euclidean projection onto symmetric, nonnegative, hollow matrices.

    The three projections commute here, so symmetrize -> clamp -> zero diagonal
    is exact.
    """
    m = np.asarray(m, dtype=float)
    _check_square(m)
    out = np.maximum(symmetrize(m), 0.0)
    idx = np.arange(m.shape[-1])
    out[..., idx, idx] = 0.0
    return out


def soft_threshold(m, tau):
    """Elementwise ``sign(x) * max(|x| - tau, 0)``; the prox of ``tau * ||.||_1``."""
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise ParameterError(f"threshold must be nonnegative, got {tau}")
    m = np.asarray(m, dtype=float)
    return np.sign(m) * np.maximum(np.abs(m) - tau_arr, 0.0)


def num_edges(n: int) -> int:
    return n * (n - 1) // 2


def nodes_from_edges(e: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * e)) / 2))
    if num_edges(n) != e:
        raise DimensionError(f"edge vector length {e} is not N(N-1)/2 for any N")
    return n


@lru_cache(maxsize=64)
def upper_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(n, k=1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


def vec_upper(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    _check_square(a)
    iu, ju = upper_indices(a.shape[-1])
    return a[..., iu, ju]


def devec_upper(w: np.ndarray, n: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    e = w.shape[-1]
    if n is None:
        n = nodes_from_edges(e)
    elif num_edges(n) != e:
        raise DimensionError(f"edge vector length {e} does not match N={n}")
    iu, ju = upper_indices(n)
    out = np.zeros(w.shape[:-1] + (n, n))
    out[..., iu, ju] = w
    out[..., ju, iu] = w
    return out


def degree_map(v: np.ndarray, mode: str = "forward", n: int | None = None) -> np.ndarray:
    """Node degrees of an edge vector (``forward``) or its adjoint.

    forward: ``d_i = sum_{j != i} w_ij`` (length N).
    adjoint: ``(K^T v)_ij = v_i + v_j`` (length N(N-1)/2).
    """
    v = np.asarray(v, dtype=float)
    if mode == "forward":
        if n is not None and num_edges(n) != v.shape[-1]:
            raise DimensionError(f"edge vector length {v.shape[-1]} does not match N={n}")
        return devec_upper(v).sum(axis=-1)
    if mode == "adjoint":
        if n is not None and v.shape[-1] != n:
            raise DimensionError(f"node vector length {v.shape[-1]} does not match N={n}")
        iu, ju = upper_indices(v.shape[-1])
        return v[..., iu] + v[..., ju]
    raise ParameterError(f"unknown degree_map mode {mode!r}")


def degree_map_norm(n: int) -> float:
    """Spectral norm of the degree map, ``sqrt(2(N-1))``."""
    return float(np.sqrt(2.0 * (n - 1)))


def matrix_powers(a: np.ndarray, k: int) -> list[np.ndarray]:
    """``[I, A, A^2, ..., A^k]`` (broadcast over leading axes)."""
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape).copy()
    powers = [eye]
    if k >= 1:
        powers.append(a.copy())
    for _ in range(k - 1):
        powers.append(powers[-1] @ a)
    return powers


def matrix_polynomial(a: np.ndarray, alpha) -> np.ndarray:
    """``sum_i alpha[i] * A^i`` with ``A^0 = I``."""
    a = np.asarray(a, dtype=float)
    _check_square(a)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.size == 0:
        raise ParameterError("polynomial needs at least one coefficient")
    powers = matrix_powers(a, alpha.size - 1)
    out = np.zeros_like(a)
    for c, p in zip(alpha, powers):
        out = out + c * p
    return symmetrize(out)


class EigenDecomposition(NamedTuple):
    u: np.ndarray
    lam: np.ndarray


def fix_signs(u: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the largest-magnitude entry is positive."""
    rows = np.argmax(np.abs(u), axis=-2)
    lead = np.take_along_axis(u, rows[..., None, :], axis=-2)
    signs = np.where(lead < 0, -1.0, 1.0)
    return u * signs


def sym_eig(m: np.ndarray, tol: float = 1e-9) -> EigenDecomposition:
    """Symmetric eigendecomposition with ascending eigenvalues and fixed signs."""
    m = np.asarray(m, dtype=float)
    _check_square(m)
    if not np.all(np.isfinite(m)):
        raise NumericError("eigendecomposition input has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    asym = float(np.max(np.abs(m - np.swapaxes(m, -1, -2)))) if m.size else 0.0
    if asym > tol * scale:
        raise ContractError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    lam, u = np.linalg.eigh(symmetrize(m))
    return EigenDecomposition(fix_signs(u), lam)


def is_adjacency(a: np.ndarray) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.array_equal(a, a.T) and np.all(a >= 0) and np.all(np.diag(a) == 0))
