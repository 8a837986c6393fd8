"""Membership residuals for multiview varieties, and multidegree counts."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ArityMismatch, BadSlicePattern, GeometryError
from .projective import (
    Camera,
    HomPoint2,
    HomPoint3,
    ImageLine,
    SpatialLine,
    cross_matrix,
    fundamental_matrix,
    normalize,
    nullspace,
    project_line,
)
from .reduction import patch_map
from .solver.homotopy import PathStatus, TrackerConfig, track_paths
from .solver.polynomial import Poly

MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PointTrack:
    """Affine image coordinates of one point in each of ``m`` views."""

    views: np.ndarray  # (m, 2)

    def __post_init__(self):
        v = np.asarray(self.views, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("point track needs an (m, 2) array")
        object.__setattr__(self, "views", v)

    def __len__(self):
        return len(self.views)

    def homogeneous(self) -> np.ndarray:
        return np.column_stack([self.views, np.ones(len(self.views))])


@dataclass(frozen=True, eq=False)
class LineTrack:
    views: tuple  # of ImageLine

    def __post_init__(self):
        lines = tuple(l if isinstance(l, ImageLine) else ImageLine(np.asarray(l, dtype=float)) for l in self.views)
        for l in lines:
            if np.linalg.norm(l.coeffs[:2]) <= 1e-12:
                raise GeometryError("the line at infinity is not a valid image line")
        object.__setattr__(self, "views", lines)

    def __len__(self):
        return len(self.views)

    def coeffs(self) -> np.ndarray:
        return np.stack([l.coeffs for l in self.views])


@dataclass
class ResidualReport:
    names: list
    values: np.ndarray
    tol: float = MEMBERSHIP_TOL
    details: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.values)) if len(self.values) else 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def as_dict(self) -> dict:
        return dict(zip(self.names, map(float, self.values)))


def _mats(cams) -> list:
    return [c.matrix if isinstance(c, Camera) else np.asarray(c, dtype=float) for c in cams]


def _unit(v):
    return np.asarray(v) / np.linalg.norm(v)


def _check_arity(cams, track):
    if len(cams) != len(track):
        raise ArityMismatch(f"{len(track)} views for {len(cams)} cameras")


def _epipolar(mats, xs):
    names, vals = [], []
    for j in range(1, len(mats)):
        F = fundamental_matrix(mats[0], mats[j])
        names.append(f"epipolar_1_{j + 1}")
        vals.append(abs(_unit(xs[0]) @ F @ _unit(xs[j])))
    return names, vals


def point_mv_residuals(cams, x: PointTrack, tol: float = MEMBERSHIP_TOL) -> ResidualReport:
    """Epipolar residuals ``x_1^T F^{1j} x_j`` for ``j = 2..m``."""
    x = x if isinstance(x, PointTrack) else PointTrack(x)
    _check_arity(cams, x)
    names, vals = _epipolar(_mats(cams), x.homogeneous())
    return ResidualReport(names, np.array(vals), tol)


def anchored_point_residuals(cams, L: SpatialLine, x: PointTrack, tol: float = MEMBERSHIP_TOL) -> ResidualReport:
    """Epipolar residuals plus incidence of each image point with the image of ``L``."""
    x = x if isinstance(x, PointTrack) else PointTrack(x)
    _check_arity(cams, x)
    mats = _mats(cams)
    xs = x.homogeneous()
    names, vals = _epipolar(mats, xs)
    for i, (C, xi) in enumerate(zip(mats, xs)):
        ell = project_line(C, L)
        names.append(f"incidence_{i + 1}")
        vals.append(abs(ell.coeffs @ _unit(xi)))
    return ResidualReport(names, np.array(vals), tol)


def plane_triple_residual(planes) -> float:
    """How far three planes are from sharing a line.

    Norm of the 3x3 minors of the 4x3 matrix of unit plane vectors; zero
    exactly when its rank is at most two.
    """
    P = np.column_stack([_unit(p) for p in planes])
    minors = [np.linalg.det(np.delete(P, r, axis=0)) for r in range(4)]
    return float(np.linalg.norm(minors))


def _triples(m):
    out = []
    for i in range(3, m + 1):
        out.append((1, 2, i))
        out.append((1, 3, i))
    return out


def line_mv_residuals(cams, ell: LineTrack, tol: float = MEMBERSHIP_TOL) -> ResidualReport:
    """Back-projected planes of views (1,2,i) and (1,3,i) must share a line."""
    ell = ell if isinstance(ell, LineTrack) else LineTrack(ell)
    _check_arity(cams, ell)
    mats = _mats(cams)
    planes = [C.T @ l for C, l in zip(mats, ell.coeffs())]
    names, vals = [], []
    for t in _triples(len(mats)):
        names.append("planes_" + "_".join(map(str, t)))
        vals.append(plane_triple_residual([planes[k - 1] for k in t]))
    return ResidualReport(names, np.array(vals), tol)


def anchored_line_residuals(cams, X: HomPoint3, ell: LineTrack, tol: float = MEMBERSHIP_TOL) -> ResidualReport:
    """Plane-triple residuals plus incidence of each image line with ``C_i X``."""
    ell = ell if isinstance(ell, LineTrack) else LineTrack(ell)
    rep = line_mv_residuals(cams, ell, tol)
    Xc = X.coords if isinstance(X, HomPoint3) else normalize(X)
    names, vals = list(rep.names), list(rep.values)
    for i, (C, l) in enumerate(zip(_mats(cams), ell.coeffs())):
        names.append(f"incidence_{i + 1}")
        vals.append(abs(l @ _unit(C @ Xc)))
    return ResidualReport(names, np.array(vals), tol)


# multidegrees ---------------------------------------------------------------

VARIETY_DIMS = {"anchored-point": 1, "anchored-line": 2}


@dataclass
class MultidegreeStats:
    variety: str
    pattern: tuple
    counts: list
    modal: int
    agreement: float


def _view_maps(mats, variety, anchor):
    """Linear maps from homogeneous parameters to image points or lines."""
    if variety == "anchored-point":
        B = anchor.span if isinstance(anchor, SpatialLine) else SpatialLine(anchor).span
        return [C @ B for C in mats]
    Xc = anchor.coords if isinstance(anchor, HomPoint3) else normalize(anchor)
    F = patch_map(Xc)
    return [cross_matrix(C @ Xc) @ C @ F for C in mats]


def count_slice_points(maps, slices, rng, cfg: TrackerConfig | None = None) -> int:
    """Points of the variety parameterized by ``maps`` inside the given slices.

    ``slices[i]`` is a ``(d_i, 3)`` matrix of linear forms on view ``i``.  The
    slice equations are linear in the parameters; they are solved on a
    random affine chart with the homotopy tracker, and solutions whose image
    is undefined in some view (the parameterization's base locus) are
    discarded.
    """
    k = maps[0].shape[1]
    rows = np.vstack([S @ M for S, M in zip(slices, maps) if len(S)])
    a = normalize(rng.normal(size=k))
    dirs = nullspace(a[None, :])
    polys = [Poly.affine(r @ a, r @ dirs) for r in rows]
    if any(p.is_zero() or p.degree < 1 for p in polys):
        return 0
    sols = track_paths(polys, cfg or TrackerConfig(seed=int(rng.integers(2**32))))
    count = 0
    for x in sols.solutions[sols.mask(PathStatus.FINITE)]:
        w = a + dirs @ x
        defined = all(np.linalg.norm(M @ w) > 1e-8 * np.linalg.norm(M) * np.linalg.norm(w) for M in maps)
        count += defined
    return count


def multidegree_check(cams, variety: str, pattern, trials: int = 50, seed=None, anchor=None) -> MultidegreeStats:
    """Modal number of points in random linear slices of an anchored variety.

    ``pattern[i]`` is the codimension of the random slice in view ``i``.  The
    anchor (a line or a point) is random unless given.
    """
    if variety not in VARIETY_DIMS:
        raise ValueError(f"unknown variety {variety!r}")
    mats = _mats(cams)
    pattern = tuple(int(d) for d in pattern)
    if len(pattern) != len(mats) or any(d < 0 or d > 2 for d in pattern):
        raise BadSlicePattern("one codimension in 0..2 per view is required")
    if sum(pattern) != VARIETY_DIMS[variety]:
        raise BadSlicePattern(f"codimensions must sum to {VARIETY_DIMS[variety]} for {variety}")
    rng = np.random.default_rng(seed)
    counts = []
    for _ in range(trials):
        if anchor is not None:
            anc = anchor
        elif variety == "anchored-point":
            anc = SpatialLine(rng.normal(size=(4, 2)))
        else:
            anc = HomPoint3(rng.normal(size=4))
        maps = _view_maps(mats, variety, anc)
        slices = [rng.normal(size=(d, 3)) for d in pattern]
        counts.append(count_slice_points(maps, slices, rng))
    modal, hits = Counter(counts).most_common(1)[0]
    return MultidegreeStats(variety, pattern, counts, modal, hits / trials)
