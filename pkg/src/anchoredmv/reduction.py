"""Isometric reduction of anchored fitting problems.

A point constrained to a known line ``L`` has images confined to the image
lines ``C_j L``; a line constrained through a known point ``X`` has image
lines confined to the pencil through ``C_j X``.  In both cases each view's
image ranges over a fixed 2-dimensional subspace of R^3, so every
measurement splits into a part along the admissible image set and a
constant orthogonal offset.  Only the along part needs fitting.

Image measurements live in an affine chart per view (``ViewChart``):
``z = E^T v / h^T v`` for an orthonormal frame ``[E h]``.  Points use the
standard chart ``h = e3``; noisy image lines use the chart tangent at the
measured line, which places the measurement at the chart origin and turns
the squared chart distance into the squared tangent of the angle between
lines.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ArityMismatch,
    CenterCoincidence,
    LineThroughCenter,
    PatchInfinity,
    RankDeficiency,
)
from .fractional import FractionalObjective, FractionalView, ParamChart
from .projective import (
    DEGENERACY_TOL,
    HomPoint3,
    SpatialLine,
    cross_matrix,
    normalize,
    nullspace,
    orthonormal_columns,
)


@dataclass(frozen=True, eq=False)
class CrossMatrix:
    """The skew form ``[a]_x`` of a 3-vector."""

    vector: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return cross_matrix(self.vector)

    def __matmul__(self, other):
        return self.matrix @ other


@dataclass(frozen=True, eq=False)
class ViewChart:
    frame: np.ndarray  # orthonormal 3x3, columns [E1 E2 h]

    @property
    def E(self) -> np.ndarray:
        return self.frame[:, :2]

    @property
    def h(self) -> np.ndarray:
        return self.frame[:, 2]

    @classmethod
    def standard(cls) -> "ViewChart":
        return cls(np.eye(3))

    @classmethod
    def tangent(cls, u) -> "ViewChart":
        """Chart centred on the unit vector ``u``."""
        h = normalize(np.real(u))
        E = nullspace(h[None, :])
        E = np.column_stack([normalize(E[:, 0]), np.cross(h, normalize(E[:, 0]))])
        return cls(np.column_stack([E, h]))

    def coords(self, v):
        v = np.asarray(v)
        return (v @ self.E) / (v @ self.h)[..., None]

    def lift(self, z):
        return np.asarray(z) @ self.E.T + self.h


@dataclass(frozen=True, eq=False)
class AnchoredAxis:
    """Orthonormal coordinates on a 2-dimensional image subspace ``S``.

    ``direction`` spans ``S ∩ h^⊥`` and ``base`` is the point of ``S`` with
    ``h . base = 1`` closest to the chart origin.  The rows of ``A`` are
    ``direction`` and ``base / |base|``.
    """

    A: np.ndarray  # (2, 3)
    direction: np.ndarray
    base: np.ndarray

    @property
    def scale(self) -> float:
        return float(np.linalg.norm(self.base))

    @classmethod
    def from_normal(cls, n, chart: ViewChart) -> "AnchoredAxis":
        n = np.asarray(n, dtype=float)
        d = np.cross(n, chart.h)
        if np.linalg.norm(d) <= DEGENERACY_TOL * np.linalg.norm(n):
            raise PatchInfinity("admissible image set lies at infinity in this chart")
        d = normalize(d)
        b = np.cross(n, d)
        b = b / (chart.h @ b)
        return cls(A=np.vstack([d, b / np.linalg.norm(b)]), direction=d, base=b)

    def split(self, z, chart: ViewChart):
        """Chart data ``z`` -> (along coordinate, squared orthogonal offset)."""
        t = chart.E.T @ self.direction
        nrm = np.array([-t[1], t[0]])
        z = np.asarray(z)
        along = z @ t
        off = (z - chart.E.T @ self.base) @ nrm
        return along, off * off

    def reduced_view(self, M, along, offset_sq) -> FractionalView:
        s = self.scale
        R = np.diag([1.0, 1.0 / s]) @ self.A @ M
        return FractionalView(numer=R[:1], denom=R[1], data=np.array([along]), offset_sq=offset_sq)


def _full_views(maps, charts, data):
    return tuple(
        FractionalView(numer=ch.E.T @ M, denom=ch.h @ M, data=np.asarray(d))
        for M, ch, d in zip(maps, charts, data)
    )


@dataclass(frozen=True, eq=False)
class _AnchoredProblem:
    maps: tuple  # per-view linear maps from homogeneous parameters to image vectors
    charts: tuple
    data: np.ndarray  # (m, 2) chart data
    axes: tuple
    along: np.ndarray
    offset_sq: np.ndarray
    chart: ParamChart

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def isometries(self) -> np.ndarray:
        return np.stack([a.A for a in self.axes])

    @property
    def reduced_cameras(self) -> np.ndarray:
        return np.stack([a.A @ M for a, M in zip(self.axes, self.maps)])

    @property
    def reduced_data(self) -> np.ndarray:
        """Homogeneous reduced measurements ``(along, |base|)`` per view."""
        return np.column_stack([self.along, [a.scale for a in self.axes]])

    def views(self, reduced: bool = True) -> tuple:
        if reduced:
            return tuple(
                a.reduced_view(M, al, off)
                for a, M, al, off in zip(self.axes, self.maps, self.along, self.offset_sq)
            )
        return _full_views(self.maps, self.charts, self.data)

    def objective(self, reduced: bool = True) -> FractionalObjective:
        return FractionalObjective(self.views(reduced), self.chart)


def _build(maps, charts, data, normals, error):
    data = np.asarray(data)
    if data.shape != (len(maps), 2):
        raise ArityMismatch("one 2-vector of chart data per view is required")
    axes = []
    for M, ch, n in zip(maps, charts, normals):
        if np.linalg.matrix_rank(M, tol=1e-10 * np.linalg.norm(M)) < 2:
            raise error("a view maps the parameter space to fewer than two dimensions")
        axes.append(AnchoredAxis.from_normal(n, ch))
    parts = [a.split(d, ch) for a, d, ch in zip(axes, data, charts)]
    along = np.array([p[0] for p in parts])
    off = np.array([p[1] for p in parts])
    chart = ParamChart.normalizing(charts[0].h @ maps[0])
    return tuple(axes), along, off, chart


@dataclass(frozen=True, eq=False)
class ReducedPointProblem(_AnchoredProblem):
    span_basis: np.ndarray = None  # orthonormal 4x2 basis of the anchor line


@dataclass(frozen=True, eq=False)
class ReducedLineProblem(_AnchoredProblem):
    anchor: np.ndarray = None  # unit 4-vector X
    patch_map: np.ndarray = None  # 4x3 orthonormal basis of X^⊥


def _as_matrices(cams):
    return [c.matrix if hasattr(c, "matrix") else np.asarray(c, dtype=float) for c in cams]


def anchored_point_problem(cams, L: SpatialLine, data, charts=None) -> ReducedPointProblem:
    mats = _as_matrices(cams)
    charts = tuple(charts) if charts is not None else (ViewChart.standard(),) * len(mats)
    B = np.real(L.span)
    maps = tuple(C @ B for C in mats)
    normals = []
    for M in maps:
        n = np.cross(M[:, 0], M[:, 1])
        if np.linalg.norm(n) <= DEGENERACY_TOL * np.linalg.norm(M) ** 2:
            raise LineThroughCenter("anchor line passes through a camera center")
        normals.append(n)
    axes, along, off, chart = _build(maps, charts, data, normals, RankDeficiency)
    return ReducedPointProblem(maps, charts, np.asarray(data), axes, along, off, chart, span_basis=B)


def reduce_anchored_point(cams, L: SpatialLine, track) -> ReducedPointProblem:
    """Reduce fitting a point on ``L`` to an affine point track."""
    pts = np.asarray(getattr(track, "views", track), dtype=float)
    if len(pts) != len(cams):
        raise ArityMismatch("track length differs from the number of cameras")
    return anchored_point_problem(cams, L, pts)


def patch_map(X) -> np.ndarray:
    """Orthonormal 4x3 basis of the orthogonal complement of ``X``."""
    F = nullspace(np.asarray(X)[None, :])
    return orthonormal_columns(F)


def anchored_line_problem(cams, X, data, charts) -> ReducedLineProblem:
    mats = _as_matrices(cams)
    Xc = X.coords if isinstance(X, HomPoint3) else normalize(X)
    Xc = np.real(Xc)
    F = patch_map(Xc)
    maps, normals = [], []
    for C in mats:
        x = C @ Xc
        if np.linalg.norm(x) <= DEGENERACY_TOL * np.linalg.norm(C):
            raise CenterCoincidence("anchor point coincides with a camera center")
        maps.append(CrossMatrix(x) @ C @ F)
        normals.append(x)
    axes, along, off, chart = _build(tuple(maps), tuple(charts), data, normals, CenterCoincidence)
    return ReducedLineProblem(
        tuple(maps), tuple(charts), np.asarray(data), axes, along, off, chart, anchor=Xc, patch_map=F
    )


def reduce_anchored_line(cams, X, track) -> ReducedLineProblem:
    """Reduce fitting a line through ``X`` to measured image lines.

    Each measured line gets the chart tangent at it, so its chart data is
    the origin.
    """
    lines = [getattr(l, "coeffs", l) for l in getattr(track, "views", track)]
    if len(lines) != len(cams):
        raise ArityMismatch("track length differs from the number of cameras")
    charts = tuple(ViewChart.tangent(u) for u in lines)
    return anchored_line_problem(cams, X, np.zeros((len(lines), 2)), charts)


def _params(problem, t, n):
    t = np.atleast_1d(np.asarray(t))
    if t.shape != (n,) or not np.all(np.isfinite(t)):
        raise PatchInfinity("reduced solution is not a finite chart point")
    return problem.chart(np.real_if_close(t))


def lift_point(problem: ReducedPointProblem, t) -> HomPoint3:
    return HomPoint3(problem.span_basis @ _params(problem, t, 1))


def lift_line(problem: ReducedLineProblem, st) -> SpatialLine:
    y = _params(problem, st, 2)
    return SpatialLine.through(problem.anchor, problem.patch_map @ y)
