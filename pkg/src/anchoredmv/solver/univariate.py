"""Roots of univariate polynomials via companion-matrix eigenvalues."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import ZeroPolynomial

TRIM_RTOL = 1e-14


def _coefficients(p) -> np.ndarray:
    """Ascending coefficients of a univariate ``Poly`` or sequence."""
    c = p.coef if hasattr(p, "coef") else p
    return np.asarray(c, dtype=complex).ravel()


def trim(coeffs, rtol: float = TRIM_RTOL) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0:
        raise ZeroPolynomial("polynomial is identically zero")
    keep = np.flatnonzero(np.abs(c) > rtol * scale)
    return c[: keep[-1] + 1]


def companion(coeffs) -> np.ndarray:
    """Companion matrix of a polynomial given by ascending coefficients."""
    c = trim(coeffs)
    d = c.size - 1
    M = np.zeros((d, d), dtype=complex)
    M[1:, :-1] = np.eye(d - 1)
    M[:, -1] = -c[:-1] / c[-1]
    return M


def _polish(c, r, iters: int = 4):
    dc = c[1:] * np.arange(1, c.size)
    for _ in range(iters):
        f = np.polynomial.polynomial.polyval(r, c)
        df = np.polynomial.polynomial.polyval(r, dc)
        ok = np.abs(df) > 0
        step = np.where(ok, f / np.where(ok, df, 1), 0)
        cand = r - step
        better = np.abs(np.polynomial.polynomial.polyval(cand, c)) < np.abs(f)
        r = np.where(better, cand, r)
    return r


def relative_residual(coeffs, r) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    num = np.abs(np.polynomial.polynomial.polyval(r, c))
    den = np.polynomial.polynomial.polyval(np.abs(r), np.abs(c))
    return num / np.where(den > 0, den, 1.0)


def solve_univariate(p) -> np.ndarray:
    """All complex roots, Newton-polished.

    Leading coefficients below ``1e-14`` of the largest are trimmed first.
    ``scipy.linalg.eigvals`` (LAPACK geev) balances the companion matrix.
    """
    c = trim(_coefficients(p))
    if c.size == 1:
        return np.zeros(0, dtype=complex)
    roots = scipy.linalg.eigvals(companion(c))
    return _polish(c, roots)
