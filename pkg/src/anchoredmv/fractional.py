"""Least-squares objectives built from ratios of linear forms.

Every fitting problem in this package has the shape

    f(w) = sum_j sum_r (N_jr . w / q_j . w - d_jr)^2 + const,

where ``w`` is a homogeneous parameter vector (a point on an anchor line,
a line through an anchor point, or a point in space) and each view
contributes one denominator.  ``w`` is restricted to an affine chart
``w = base + dirs @ x`` chosen so that view 0 has constant denominator,
which puts every finite-objective configuration inside the chart.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projective import nullspace


@dataclass(frozen=True, eq=False)
class FractionalView:
    numer: np.ndarray  # (r, k)
    denom: np.ndarray  # (k,)
    data: np.ndarray  # (r,)
    offset_sq: complex = 0.0

    def residuals(self, w):
        w = np.asarray(w)
        return (w @ self.numer.T) / (w @ self.denom)[..., None] - self.data


@dataclass(frozen=True, eq=False)
class ParamChart:
    """Affine chart ``w = base + dirs @ x`` on homogeneous parameters."""

    base: np.ndarray  # (k,)
    dirs: np.ndarray  # (k, n)

    @property
    def nvars(self) -> int:
        return self.dirs.shape[1]

    def __call__(self, x):
        return self.base + np.asarray(x) @ self.dirs.T

    def coordinates(self, w, g):
        """Chart coordinates of a homogeneous ``w`` (``g`` constant on the chart)."""
        g = np.asarray(g)
        w = np.asarray(w) * ((g @ self.base) / (g @ w))
        return np.linalg.lstsq(self.dirs, w - self.base, rcond=None)[0]

    @classmethod
    def normalizing(cls, g) -> "ParamChart":
        """Chart on which the linear form ``g`` is constant.

        Base and directions are unit vectors so that chart coordinates of
        typical points are of order one.
        """
        g = np.real_if_close(np.asarray(g))
        return cls(base=g / np.linalg.norm(g), dirs=nullspace(g[None, :]))

    @classmethod
    def two_forms(cls, g1, g2, last) -> "ParamChart":
        """Chart with ``g1`` constant and ``g2`` proportional to the last coordinate.

        ``last`` must satisfy ``g1 . last == 0``.  The remaining directions
        span ker g1 ∩ ker g2 and the base lies in ker g2.
        """
        G = np.vstack([g1, g2])
        base = np.linalg.pinv(G) @ np.array([1.0, 0.0])
        common = nullspace(G)
        last = np.asarray(last) / np.linalg.norm(last)
        return cls(base=base / np.linalg.norm(base), dirs=np.column_stack([common, last]))


@dataclass(frozen=True, eq=False)
class FractionalObjective:
    views: tuple
    chart: ParamChart

    @property
    def nvars(self) -> int:
        return self.chart.nvars

    @property
    def constant(self):
        return sum(v.offset_sq for v in self.views)

    def denominators(self, x):
        w = self.chart(x)
        return np.stack([w @ v.denom for v in self.views], axis=-1)

    def residuals(self, x):
        w = self.chart(x)
        return np.concatenate([v.residuals(w) for v in self.views], axis=-1)

    def jacobian(self, x):
        """d residuals / d x, shape (..., R, n)."""
        w = self.chart(x)
        blocks = []
        for v in self.views:
            N = v.numer @ self.chart.dirs  # (r, n)
            q = v.denom @ self.chart.dirs  # (n,)
            num = w @ v.numer.T  # (..., r)
            den = (w @ v.denom)[..., None, None]
            blocks.append(N / den - num[..., :, None] * q / den**2)
        return np.concatenate(blocks, axis=-2)

    def value(self, x):
        r = self.residuals(x)
        return np.sum(r * r, axis=-1) + self.constant

    def gradient(self, x):
        r = self.residuals(x)
        J = self.jacobian(x)
        return 2 * np.einsum("...r,...rn->...n", r, J)

    def hessian(self, x):
        """Exact Hessian of ``value``, shape (..., n, n)."""
        w = self.chart(x)
        r = self.residuals(x)
        J = self.jacobian(x)
        Hm = 2 * np.einsum("...rn,...rk->...nk", J, J)
        k = 0
        for v in self.views:
            qd = v.denom @ self.chart.dirs
            Q = (w @ v.denom)[..., None, None]
            for row in v.numer:
                nd = row @ self.chart.dirs
                N = (w @ row)[..., None, None]
                second = -(np.outer(nd, qd) + np.outer(qd, nd)) / Q**2 + 2 * N * np.outer(qd, qd) / Q**3
                Hm = Hm + 2 * r[..., k, None, None] * second
                k += 1
        return Hm

    def gradient_scale(self, x):
        """Sum of absolute contributions to the gradient, per coordinate."""
        r = self.residuals(x)
        J = self.jacobian(x)
        return 2 * np.einsum("...r,...rn->...n", np.abs(r), np.abs(J))

