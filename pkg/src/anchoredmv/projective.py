"""Projective geometry kernel: points, lines, planes and pinhole cameras.

Homogeneous vectors are stored in a canonical form (unit norm, first
non-negligible coordinate real and positive) so that equal projective
objects compare equal coordinate-wise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    CenterProjection,
    CoincidentCenters,
    CoincidentPlanes,
    GeometryError,
    LineInPlane,
    LineThroughCenter,
    ProportionalPoints,
    RankDeficiency,
)

RANK_RTOL = 1e-10
DEGENERACY_TOL = 1e-12


def normalize(v, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """Return the canonical representative of the projective class of ``v``."""
    v = np.asarray(v)
    if not np.iscomplexobj(v):
        v = v.astype(float)
    n = np.linalg.norm(v)
    if n == 0 or not np.isfinite(n):
        raise GeometryError("zero or non-finite homogeneous vector")
    v = v / n
    idx = np.flatnonzero(np.abs(v) > tol)[0]
    pivot = v[idx]
    return v * (np.conj(pivot) / abs(pivot))


def nullspace(A, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the right kernel of ``A``."""
    A = np.atleast_2d(A)
    _, s, vh = np.linalg.svd(A)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    return vh[rank:].conj().T


def orthonormal_columns(A, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column space with deterministic signs."""
    u, s, _ = np.linalg.svd(np.atleast_2d(A), full_matrices=False)
    rank = int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0
    u = u[:, :rank]
    for k in range(rank):
        idx = np.flatnonzero(np.abs(u[:, k]) > DEGENERACY_TOL)[0]
        if u[idx, k].real < 0:
            u[:, k] = -u[:, k]
    return u


def cross_matrix(a) -> np.ndarray:
    """Skew matrix ``[a]_x`` with ``cross_matrix(a) @ b == cross(a, b)``."""
    a1, a2, a3 = a
    return np.array([[0, -a3, a2], [a3, 0, -a1], [-a2, a1, 0]], dtype=np.result_type(a, float))


def _close_projectively(a, b, tol: float) -> bool:
    a = normalize(a)
    b = normalize(b)
    return bool(np.linalg.norm(a - b) <= tol)


@dataclass(frozen=True, eq=False)
class HomPoint3:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords)
        if c.shape != (4,):
            raise ValueError("HomPoint3 needs 4 coordinates")
        object.__setattr__(self, "coords", normalize(c))

    @classmethod
    def from_affine(cls, x) -> "HomPoint3":
        return cls(np.append(np.asarray(x, dtype=float), 1.0))

    def affine(self) -> np.ndarray:
        w = self.coords[3]
        if abs(w) <= DEGENERACY_TOL:
            raise GeometryError("point at infinity has no affine representative")
        return self.coords[:3] / w

    def same_as(self, other: "HomPoint3", tol: float = 1e-10) -> bool:
        return _close_projectively(self.coords, other.coords, tol)


@dataclass(frozen=True, eq=False)
class HomPoint2:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords)
        if c.shape != (3,):
            raise ValueError("HomPoint2 needs 3 coordinates")
        object.__setattr__(self, "coords", normalize(c))

    @classmethod
    def from_affine(cls, x) -> "HomPoint2":
        return cls(np.append(np.asarray(x, dtype=float), 1.0))

    def affine(self) -> np.ndarray:
        w = self.coords[2]
        if abs(w) <= DEGENERACY_TOL:
            raise GeometryError("image point at infinity")
        return self.coords[:2] / w

    def same_as(self, other: "HomPoint2", tol: float = 1e-10) -> bool:
        return _close_projectively(self.coords, other.coords, tol)


@dataclass(frozen=True, eq=False)
class ImageLine:
    """Line ``{x : coeffs . x = 0}`` in the projective plane."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != (3,):
            raise ValueError("ImageLine needs 3 coefficients")
        object.__setattr__(self, "coeffs", normalize(c))

    def contains(self, x: HomPoint2, tol: float = 1e-10) -> bool:
        return abs(self.coeffs @ x.coords) <= tol

    def same_as(self, other: "ImageLine", tol: float = 1e-10) -> bool:
        return _close_projectively(self.coeffs, other.coeffs, tol)


@dataclass(frozen=True, eq=False)
class SpatialPlane:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != (4,):
            raise ValueError("SpatialPlane needs 4 coefficients")
        object.__setattr__(self, "coeffs", normalize(c))

    def contains(self, X: HomPoint3, tol: float = 1e-10) -> bool:
        return abs(self.coeffs @ X.coords) <= tol


def plucker(u, v) -> np.ndarray:
    """Plücker coordinates (p01, p02, p03, p23, p31, p12) of span{u, v}."""

    def p(i, j):
        return u[i] * v[j] - u[j] * v[i]

    return np.array([p(0, 1), p(0, 2), p(0, 3), p(2, 3), p(3, 1), p(1, 2)])


def plucker_quadric(p) -> complex:
    return p[0] * p[3] + p[1] * p[4] + p[2] * p[5]


@dataclass(frozen=True, eq=False)
class SpatialLine:
    """Line in projective 3-space stored as an orthonormal 4x2 span."""

    span: np.ndarray
    plucker: np.ndarray = field(init=False)

    def __post_init__(self):
        S = np.asarray(self.span)
        if S.shape != (4, 2):
            raise ValueError("span must be a 4x2 matrix")
        if not np.iscomplexobj(S):
            S = S.astype(float)
        basis = orthonormal_columns(S)
        if basis.shape[1] != 2:
            raise ProportionalPoints("spanning vectors are proportional")
        object.__setattr__(self, "span", basis)
        object.__setattr__(self, "plucker", normalize(plucker(basis[:, 0], basis[:, 1])))

    @classmethod
    def through(cls, u, v) -> "SpatialLine":
        return cls(np.column_stack([u, v]))

    def point(self, w) -> HomPoint3:
        return HomPoint3(self.span @ np.asarray(w))

    def contains(self, X: HomPoint3, tol: float = 1e-10) -> bool:
        return incidence(X, self) <= tol

    def same_as(self, other: "SpatialLine", tol: float = 1e-10) -> bool:
        return _close_projectively(self.plucker, other.plucker, tol)

    def affine_points(self) -> tuple[np.ndarray, np.ndarray]:
        """An affine point on the line and a unit direction."""
        S = self.span
        w_row = S[3]
        if np.linalg.norm(w_row) <= DEGENERACY_TOL:
            raise GeometryError("line lies in the plane at infinity")
        direction = S[:3] @ np.array([w_row[1], -w_row[0]])
        point = S @ (np.conj(w_row) / np.vdot(w_row, w_row))
        return point[:3] / point[3], direction / np.linalg.norm(direction)

    def distance_to(self, Y) -> float:
        """Euclidean distance from the affine point ``Y`` to this line."""
        p0, d = self.affine_points()
        r = np.asarray(Y) - p0
        return float(np.linalg.norm(r - (r @ d) * d))


@dataclass(frozen=True, eq=False)
class Camera:
    matrix: np.ndarray
    center: HomPoint3 = field(init=False)

    def __post_init__(self):
        P = np.asarray(self.matrix)
        if P.shape != (3, 4):
            raise ValueError("camera matrix must be 3x4")
        if not np.iscomplexobj(P):
            P = P.astype(float)
        s = np.linalg.svd(P, compute_uv=False)
        if s[-1] <= RANK_RTOL * s[0]:
            raise RankDeficiency("camera matrix must have rank 3")
        object.__setattr__(self, "matrix", P)
        object.__setattr__(self, "center", HomPoint3(nullspace(P)[:, 0]))


@dataclass(frozen=True, eq=False)
class CameraArrangement:
    cameras: tuple

    def __post_init__(self):
        cams = tuple(c if isinstance(c, Camera) else Camera(c) for c in self.cameras)
        if len(cams) < 2:
            raise ValueError("an arrangement needs at least two cameras")
        for a, b in combinations(cams, 2):
            if a.center.same_as(b.center, tol=1e-9):
                raise CoincidentCenters("camera centers must be pairwise distinct")
        object.__setattr__(self, "cameras", cams)

    def __len__(self):
        return len(self.cameras)

    def __iter__(self):
        return iter(self.cameras)

    def __getitem__(self, i):
        return self.cameras[i]

    @property
    def matrices(self) -> list[np.ndarray]:
        return [c.matrix for c in self.cameras]


def _cmat(C) -> np.ndarray:
    return C.matrix if isinstance(C, Camera) else np.asarray(C)


def project_point(C, X) -> HomPoint2:
    P = _cmat(C)
    Xc = X.coords if isinstance(X, HomPoint3) else normalize(X)
    x = P @ Xc
    if np.linalg.norm(x) < DEGENERACY_TOL * np.linalg.norm(P):
        raise CenterProjection("point coincides with the camera center")
    return HomPoint2(x)


def project_line(C, L: SpatialLine) -> ImageLine:
    P = _cmat(C)
    Pu = P @ L.span[:, 0]
    Pv = P @ L.span[:, 1]
    ell = np.cross(Pu, Pv)
    if np.linalg.norm(ell) < DEGENERACY_TOL * np.linalg.norm(P) ** 2:
        raise LineThroughCenter("line passes through the camera center")
    return ImageLine(ell)


def back_project_point(C, x) -> SpatialLine:
    """All points projecting onto ``x``: span of the center and one preimage."""
    P = _cmat(C)
    xc = x.coords if isinstance(x, HomPoint2) else normalize(x)
    center = nullspace(P)[:, 0]
    pre = np.linalg.lstsq(P, xc, rcond=None)[0]
    return SpatialLine.through(center, pre)


def back_project_line(C, ell) -> SpatialPlane:
    P = _cmat(C)
    lc = ell.coeffs if isinstance(ell, ImageLine) else normalize(ell)
    return SpatialPlane(P.T @ lc)


def fundamental_matrix(Ci, Cj) -> np.ndarray:
    """Bilinear form ``F`` with ``(Ci X)^T F (Cj X) = 0`` for every ``X``.

    Entries are the signed 4x4 minors built from two rows of each camera,
    normalized to unit Frobenius norm with the first nonzero entry positive.
    """
    A = _cmat(Ci)
    B = _cmat(Cj)
    if HomPoint3(nullspace(A)[:, 0]).same_as(HomPoint3(nullspace(B)[:, 0]), tol=1e-9):
        raise CoincidentCenters("fundamental matrix needs distinct centers")
    F = np.empty((3, 3), dtype=np.result_type(A, B, float))
    for a in range(3):
        ra = [r for r in range(3) if r != a]
        for b in range(3):
            rb = [r for r in range(3) if r != b]
            F[a, b] = (-1) ** (a + b) * np.linalg.det(np.vstack([A[ra], B[rb]]))
    return normalize(F.ravel()).reshape(3, 3)


def line_from_two_planes(H1, H2) -> SpatialLine:
    a = H1.coeffs if isinstance(H1, SpatialPlane) else normalize(H1)
    b = H2.coeffs if isinstance(H2, SpatialPlane) else normalize(H2)
    K = nullspace(np.vstack([a, b]))
    if K.shape[1] != 2:
        raise CoincidentPlanes("planes are proportional")
    return SpatialLine(K)


def line_from_two_points(Z1, Z2) -> SpatialLine:
    a = Z1.coords if isinstance(Z1, HomPoint3) else normalize(Z1)
    b = Z2.coords if isinstance(Z2, HomPoint3) else normalize(Z2)
    return SpatialLine.through(a, b)


def meet_line_plane(L: SpatialLine, H) -> HomPoint3:
    h = H.coeffs if isinstance(H, SpatialPlane) else normalize(H)
    coef = h @ L.span
    if np.linalg.norm(coef) <= RANK_RTOL:
        raise LineInPlane("line lies in the plane")
    return HomPoint3(L.span @ np.array([coef[1], -coef[0]]))


def incidence(a, b) -> float:
    """Unit-normalized incidence residual of a point/line/plane pair.

    Supported pairs (either order): point-plane, point-line, line-plane,
    image point-image line.  Zero means incident.
    """
    if isinstance(b, HomPoint3) or (isinstance(b, HomPoint2) and not isinstance(a, HomPoint2)):
        a, b = b, a
    if isinstance(a, HomPoint3) and isinstance(b, SpatialPlane):
        return float(abs(b.coeffs @ a.coords))
    if isinstance(a, HomPoint3) and isinstance(b, SpatialLine):
        # sine of the angle between X and the span: distance to the subspace
        r = a.coords - b.span @ (b.span.conj().T @ a.coords)
        return float(np.linalg.norm(r))
    if isinstance(a, SpatialLine) and isinstance(b, SpatialPlane):
        return float(np.linalg.norm(b.coeffs @ a.span))
    if isinstance(a, SpatialPlane) and isinstance(b, SpatialLine):
        return incidence(b, a)
    if isinstance(a, HomPoint2) and isinstance(b, ImageLine):
        return float(abs(b.coeffs @ a.coords))
    raise TypeError(f"unsupported incidence pair {type(a).__name__}, {type(b).__name__}")
