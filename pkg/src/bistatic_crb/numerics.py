"""Numeric kernels shared by the channel, clutter and FIM code.

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import DomainError, SingularityError

# |x| below this uses the power series, above it the Hankel expansion.
_J0_SERIES_LIMIT = 12.0


def _j0_series(x: float) -> float:
    q = -0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if abs(term) < 1e-17 * max(1.0, abs(total)):
            return total


def _j0_asymptotic(x: float) -> float:
    # Hankel expansion: J0 = sqrt(2/(pi x)) (P cos chi - Q sin chi), chi = x - pi/4
    p_sum, q_sum = 0.0, 0.0
    coeff = 1.0  # a_k(0) / x^k, built recursively
    prev = math.inf
    for k in range(60):
        if k > 0:
            coeff *= -((2 * k - 1) ** 2) / (k * 8.0 * x)
        size = abs(coeff)
        if size > prev:  # asymptotic series started diverging
            break
        if k % 2 == 0:
            p_sum += coeff * (-1) ** (k // 2)
        else:
            q_sum += coeff * (-1) ** (k // 2)
        if size < 1e-17:
            break
        prev = size
    chi = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind.

    Accepts a scalar or an array. Absolute error is below 1e-10 on |x| <= 100.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("bessel_j0 requires finite input")
    flat = np.abs(arr).ravel()
    out = np.array(
        [_j0_series(v) if v < _J0_SERIES_LIMIT else _j0_asymptotic(v) for v in flat]
    ).reshape(arr.shape)
    if out.ndim == 0:
        return float(out)
    return out


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; block (i, j) of the result is ``a[i, j] * b``."""
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def toeplitz_hermitian(first_row) -> np.ndarray:
    """Hermitian Toeplitz matrix whose first row is ``first_row``."""
    row = np.asarray(first_row)
    if row.ndim != 1 or row.size == 0:
        raise DomainError("toeplitz_hermitian needs a non-empty vector")
    if abs(np.imag(row[0])) > 1e-12 * max(1.0, abs(row[0])):
        raise DomainError("first entry of a Hermitian Toeplitz row must be real")
    if np.iscomplexobj(row):
        row = row.copy()
        row[0] = row[0].real
        return scipy.linalg.toeplitz(np.conj(row), row)
    return scipy.linalg.toeplitz(row.astype(float))


def whitener(r: np.ndarray) -> np.ndarray:
    """Inverse of the lower Cholesky factor of a positive-definite ``r``.

    The returned ``W`` satisfies ``W @ r @ W.conj().T == I``.
    """
    r = np.asarray(r)
    n = r.shape[0]
    scale = float(np.real(np.trace(r)))
    if not scale > 0:
        raise SingularityError("covariance has non-positive trace")
    try:
        lower = scipy.linalg.cholesky(r, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("covariance is not positive-definite") from exc
    pivots = np.abs(np.diag(lower)) ** 2
    if np.min(pivots) < 1e-14 * scale:
        raise SingularityError(
            f"Cholesky pivot {np.min(pivots):.3e} below 1e-14 x trace"
        )
    eye = np.eye(n, dtype=lower.dtype)
    return scipy.linalg.solve_triangular(lower, eye, lower=True)


def psd_sqrt(cov: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Factor ``L`` with ``L @ L^H == cov`` for a (possibly singular) PSD matrix.

    Raises DomainError when an eigenvalue is below ``-tol * max_eigenvalue``.
    """
    vals, vecs = np.linalg.eigh(cov)
    top = max(float(vals[-1]), 0.0)
    if vals[0] < -tol * max(top, 1e-300):
        raise DomainError(f"matrix is not PSD (min eigenvalue {vals[0]:.3e})")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def finite_difference_jacobian(
    f: Callable[[np.ndarray], np.ndarray], x0, step: float = 1e-6
) -> np.ndarray:
    """Central-difference Jacobian of a real-to-complex map, one column per input."""
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(f(x0))
    jac = np.zeros((f0.size, x0.size), dtype=complex)
    for col in range(x0.size):
        dx = np.zeros_like(x0)
        dx[col] = step
        jac[:, col] = (np.asarray(f(x0 + dx)).ravel() - np.asarray(f(x0 - dx)).ravel()) / (
            2.0 * step
        )
    return jac
