"""Local least-squares refinement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


@dataclass
class RefineResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def central_jacobian(fun, step: float = 1e-6):
    """Jacobian of ``fun`` by central differences, relative step ``step``."""

    def jac(x):
        x = np.asarray(x, dtype=float)
        cols = []
        for i in range(x.size):
            h = step * max(1.0, abs(x[i]))
            e = np.zeros_like(x)
            e[i] = h
            cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
        return np.column_stack(cols)

    return jac


def gauss_newton_refine(residuals, x0, jacobian=None, max_iter: int = 100, tol: float = 1e-15) -> RefineResult:
    """Damped Gauss-Newton (Levenberg-Marquardt) on ``sum(residuals(x)**2)``.

    Thin wrapper over ``scipy.optimize.least_squares``; the objective never
    increases from ``x0``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    f0 = np.asarray(residuals(x0), dtype=float)
    if f0.size < x0.size:
        # MINPACK's lm needs at least as many residuals as unknowns
        method = "trf"
    else:
        method = "lm"
    sol = least_squares(
        residuals,
        x0,
        jac=jacobian if jacobian is not None else central_jacobian(residuals),
        method=method,
        xtol=tol,
        ftol=tol,
        gtol=tol,
        max_nfev=max_iter * (x0.size + 1),
    )
    value = float(np.sum(sol.fun**2))
    start = float(np.sum(f0**2))
    x = sol.x
    if not np.isfinite(value) or value > start:
        x, value = x0, start
    return RefineResult(x=x, value=value, iterations=int(sol.njev or sol.nfev), converged=sol.status > 0)


def multistart_refine(residuals, starts, jacobian=None, **kw) -> RefineResult:
    """Best of ``gauss_newton_refine`` over several starting points."""
    best = None
    for x0 in starts:
        r = gauss_newton_refine(residuals, x0, jacobian, **kw)
        if best is None or r.value < best.value:
            best = r
    return best
