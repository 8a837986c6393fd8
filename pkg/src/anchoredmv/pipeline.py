"""Synthetic scenes and the five triangulation approaches for points on a line.

Method ids:

* ``L1.0``: each point triangulated on its own;
* ``L1.1`` / ``L1.1-std``: line from the back-projected planes of views 1
  and 2, then every point fitted onto it (reduced or full objective);
* ``L1.2``: line through the first two triangulated points;
* ``L1.3`` / ``L1.3-std``: first point triangulated, then the best line
  through it fitted to all line measurements;
* ``L1.4``: line fitted to all line measurements.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import GeometryError
from .projective import (
    Camera,
    CameraArrangement,
    HomPoint3,
    SpatialLine,
    line_from_two_planes,
    line_from_two_points,
    normalize,
    nullspace,
    project_line,
)
from .reduction import anchored_point_problem, lift_line, lift_point, reduce_anchored_line
from .solver.homotopy import TrackerConfig
from .solver.refine import gauss_newton_refine
from .solver.systems import (
    build_anchored_line_system,
    build_anchored_point_system,
    real_minimizer,
    solve_critical,
)

METHODS = ("L1.0", "L1.1", "L1.1-std", "L1.2", "L1.3", "L1.3-std", "L1.4")
ERROR_FLOOR = -16.0
INCIDENCE_RTOL = 1e-9
LINE_STARTS = 16

# the line fits only need the real global minimizer, which a single
# homotopy run plus a linear start and local polish delivers reliably
PIPELINE_TRACKER = TrackerConfig(reruns=0)


@dataclass(frozen=True, eq=False)
class Scene:
    arrangement: CameraArrangement
    line: SpatialLine
    points: np.ndarray  # (p, 3) affine points on the line
    seed: int | None = None

    @property
    def m(self) -> int:
        return len(self.arrangement)

    @property
    def p(self) -> int:
        return len(self.points)

    @property
    def scale(self) -> float:
        """Largest affine point norm, at least one."""
        return float(max(1.0, np.max(np.linalg.norm(self.points, axis=1))))


@dataclass(frozen=True, eq=False)
class NoisyObservation:
    points: np.ndarray  # (p, m, 2) affine image points
    lines: np.ndarray  # (m, 3) unit image lines
    epsilon: float

    def track(self, i: int) -> np.ndarray:
        return self.points[i]


@dataclass
class MethodResult:
    method: str
    points: np.ndarray  # (p, 3) affine reconstructions
    line: SpatialLine | None
    error: float
    seconds: float
    residuals: np.ndarray  # per-point squared reprojection error
    incidence_ok: bool
    notes: list = field(default_factory=list)

    @property
    def residual(self) -> float:
        return float(np.sum(self.residuals))


@dataclass
class RunStats:
    method: str
    n: int
    error_median: float
    error_mean: float
    error_sigma: float
    time_median: float
    time_mean: float
    time_sigma: float


# scenes and observations ----------------------------------------------------


def _on_line(a, b, t):
    return a + np.outer(t, b - a)


def generate_scene(m: int, p: int, seed: int | None = None, max_tries: int = 100) -> Scene:
    """Random cameras, a random line and ``p`` points on it.

    Camera entries and the two points defining the line are standard
    normal; the points sit at uniform parameters on the segment between
    them extended to twice its length.  Degenerate draws are redrawn.
    """
    if m < 2 or p < 1:
        raise ValueError("need m >= 2 cameras and p >= 1 points")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        try:
            arr = CameraArrangement(tuple(Camera(rng.normal(size=(3, 4))) for _ in range(m)))
            a, b = rng.normal(size=3), rng.normal(size=3)
            line = line_from_two_points(HomPoint3.from_affine(a), HomPoint3.from_affine(b))
            pts = _on_line(a, b, rng.uniform(-0.5, 1.5, size=p))
            for C in arr.matrices:
                project_line(C, line)
                depth = C[2, :3] @ pts.T + C[2, 3]
                if np.any(np.abs(depth) < 1e-6 * np.linalg.norm(C)):
                    raise GeometryError("point projects to infinity")
            return Scene(arr, line, pts, seed)
        except GeometryError:
            continue
    raise GeometryError("could not draw a generic scene")


def project_affine(C, Y) -> np.ndarray:
    """Affine image coordinates of affine 3D points ``Y`` (shape (..., 3))."""
    v = np.asarray(Y) @ C[:, :3].T + C[:, 3]
    return v[..., :2] / v[..., 2:3]


def _unit_directions(rng, n, dim):
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def observe(scene: Scene, epsilon: float, seed=None) -> NoisyObservation:
    """Exact projections perturbed by random vectors of length ``epsilon``.

    Image points are perturbed in affine coordinates; image lines are
    perturbed as unit coefficient vectors and normalized again.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    rng = np.random.default_rng(seed if seed is not None else [scene.seed or 0, 1])
    mats = scene.arrangement.matrices
    q = np.stack([project_affine(C, scene.points) for C in mats], axis=1)
    q = q + epsilon * _unit_directions(rng, q.shape[0] * q.shape[1], 2).reshape(q.shape)
    lines = np.stack([project_line(C, scene.line).coeffs for C in mats])
    lines = lines + epsilon * _unit_directions(rng, len(mats), 3)
    lines = lines / np.linalg.norm(lines, axis=1, keepdims=True)
    return NoisyObservation(q, lines, float(epsilon))


# measures -------------------------------------------------------------------


def error_metric(Y, X, epsilon: float) -> float:
    """``log10(sum |Y_i - X_i| / (p * epsilon))``, floored at -16.

    The floor also applies when the sum or ``epsilon`` is zero.
    """
    Y, X = np.atleast_2d(Y), np.atleast_2d(X)
    total = float(np.sum(np.linalg.norm(Y - X, axis=1)))
    if epsilon == 0 or total == 0:
        return ERROR_FLOOR
    return max(ERROR_FLOOR, float(np.log10(total / (len(X) * epsilon))))


def reprojection_residuals(mats, Y, q) -> np.ndarray:
    """Per-point sum over views of squared affine reprojection error."""
    Y = np.atleast_2d(Y)
    return np.array([sum(np.sum((project_affine(C, y) - qi[j]) ** 2) for j, C in enumerate(mats)) for y, qi in zip(Y, q)])


def fitted_line(Y) -> SpatialLine:
    """Least-squares line through affine points."""
    c = Y.mean(axis=0)
    d = np.linalg.svd(Y - c)[2][0]
    return SpatialLine.through(np.append(c, 1.0), np.append(d, 0.0))


def max_line_distance(line: SpatialLine, Y) -> float:
    return max(line.distance_to(y) for y in Y)


def aggregate(results) -> dict:
    """Per-method median (lower middle for even counts), mean and sample sigma."""
    by = {}
    for r in results:
        by.setdefault(r.method, []).append(r)

    def stats(v):
        v = np.sort(np.asarray(v, dtype=float))
        sigma = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
        return float(v[(len(v) - 1) // 2]), float(np.mean(v)), sigma

    out = {}
    for method, rs in by.items():
        e = stats([r.error for r in rs])
        t = stats([r.seconds for r in rs])
        out[method] = RunStats(method, len(rs), *e, *t)
    return out


# building blocks --------------------------------------------------------------


def _mats(cams):
    if isinstance(cams, CameraArrangement):
        return cams.matrices
    return [c.matrix if isinstance(c, Camera) else np.asarray(c, dtype=float) for c in cams]


def _point_residual_fn(mats, q):
    def res(Y):
        return np.concatenate([project_affine(C, Y) - qj for C, qj in zip(mats, q)])

    def jac(Y):
        blocks = []
        for C in mats:
            v = C[:, :3] @ Y + C[:, 3]
            pi = v[:2] / v[2]
            blocks.append((C[:2, :3] - np.outer(pi, C[2, :3])) / v[2])
        return np.vstack(blocks)

    return res, jac


def triangulate_point(cams, q) -> np.ndarray:
    """Affine 3D point minimizing squared reprojection error.

    Linear (DLT) estimate, then damped Gauss-Newton from it.
    """
    mats = _mats(cams)
    q = np.asarray(q, dtype=float)
    rows = []
    for C, (x, y) in zip(mats, q):
        rows.append(x * C[2] - C[0])
        rows.append(y * C[2] - C[1])
    X = np.linalg.svd(np.array(rows))[2][-1]
    if abs(X[3]) <= 1e-12 * np.linalg.norm(X):
        raise GeometryError("linear triangulation lies at infinity")
    res, jac = _point_residual_fn(mats, q)
    return gauss_newton_refine(res, X[:3] / X[3], jac).x


def fit_point_on_line(cams, L: SpatialLine, q, reduced: bool = True) -> np.ndarray:
    """Affine point of ``L`` minimizing squared reprojection error (global)."""
    mats = _mats(cams)
    prob = anchored_point_problem(mats, L, np.asarray(q, dtype=float))
    system = build_anchored_point_system(prob, reduced)
    cps = solve_critical(system)
    t = real_minimizer(system, cps)
    if t is None:
        raise GeometryError("no real critical point on the anchor line")
    return lift_point(prob, t).affine()


def _pencil_projection(u, x):
    """Image line through ``x`` closest in angle to ``u``."""
    xh = x / np.linalg.norm(x)
    return u - (u @ xh) * xh


def line_through_point_two_views(cams, Z, lines, views=(0, 1)) -> SpatialLine:
    """Exact fit of two views: planes of the pencil lines nearest to the data."""
    mats = _mats(cams)
    Zc = Z.coords if isinstance(Z, HomPoint3) else normalize(Z)
    planes = [mats[j].T @ _pencil_projection(lines[j], mats[j] @ Zc) for j in views]
    return line_from_two_planes(planes[0], planes[1])


def _line_params(prob, L: SpatialLine):
    """Chart coordinates of a line through the anchor."""
    X = prob.anchor
    S = L.span
    p = S @ (nullspace((X @ S)[None, :])[:, 0])  # point of L orthogonal to X
    y = prob.patch_map.T @ p
    g = prob.charts[0].h @ prob.maps[0]
    return np.real(prob.chart.coordinates(y, g))


def fit_line_through_point(cams, Z, lines, reduced: bool = True, cfg: TrackerConfig | None = None) -> SpatialLine:
    """Line through ``Z`` best matching the measured image lines (angle-tangent metric)."""
    mats = _mats(cams)
    lines = np.asarray(lines, dtype=float)
    if len(mats) == 2:
        return line_through_point_two_views(mats, Z, lines)
    prob = reduce_anchored_line(mats, Z, lines)
    system = build_anchored_line_system(prob, reduced)
    cps = solve_critical(system, cfg or PIPELINE_TRACKER)
    extra = []
    try:
        extra.append(_line_params(prob, line_through_point_two_views(mats, Z, lines)))
    except GeometryError:
        pass
    st = real_minimizer(system, cps, extra=extra)
    if st is None:
        raise GeometryError("no real critical line through the anchor point")
    obj = system.objective

    def res(x):
        return np.real(obj.residuals(x))

    def jac(x):
        return np.real(obj.jacobian(x))

    st = gauss_newton_refine(res, st, jac).x
    return lift_line(prob, st)


def _orth_complete(S):
    """Orthonormal 4x4 basis whose first two columns span ``S``."""
    Q, _ = np.linalg.qr(np.column_stack([S, np.eye(4)]))
    return Q[:, :4]


def _line_residual_fn(mats, lines, Q):
    charts = []
    for u in lines:
        E = nullspace(u[None, :])
        charts.append((E, u))

    def basis(a):
        return Q @ np.vstack([np.eye(2), a.reshape(2, 2)])

    def res(a):
        B = basis(a)
        out = []
        for C, (E, u) in zip(mats, charts):
            ell = np.cross(C @ B[:, 0], C @ B[:, 1])
            out.append(E.T @ ell / (u @ ell))
        return np.concatenate(out)

    return res, basis


def fit_line_to_tracks(cams, lines, starts=(), n_starts: int = LINE_STARTS, seed=0) -> SpatialLine:
    """Line minimizing the summed squared angle tangents to the measured image lines.

    Local Gauss-Newton over a 4-parameter chart of lines, from the
    two-view plane intersections of every view pair plus random
    perturbations of the first, keeping the best of ``n_starts`` runs.
    """
    mats = _mats(cams)
    lines = np.asarray(lines, dtype=float)
    cands = list(starts)
    for i, j in combinations(range(len(mats)), 2):
        try:
            cands.append(line_from_two_planes(mats[i].T @ lines[i], mats[j].T @ lines[j]).span)
        except GeometryError:
            pass
    rng = np.random.default_rng(seed)
    base = cands[0]
    while len(cands) < n_starts:
        cands.append(np.linalg.qr(base + 0.1 * rng.normal(size=base.shape))[0])
    best, best_val = None, np.inf
    for S in cands[:n_starts]:
        Q = _orth_complete(np.asarray(S))
        res, basis = _line_residual_fn(mats, lines, Q)
        with np.errstate(all="ignore"):
            r = gauss_newton_refine(res, np.zeros(4))
        if np.isfinite(r.value) and r.value < best_val:
            best, best_val = basis(r.x), r.value
    if best is None:
        raise GeometryError("line fit failed from every start")
    return SpatialLine(best)


# methods --------------------------------------------------------------------


def _finish(method, mats, obs, Y, line, t0, truth):
    seconds = time.perf_counter() - t0
    Y = np.asarray(Y, dtype=float)
    res = reprojection_residuals(mats, Y, obs.points)
    scale = truth.scale if truth is not None else float(max(1.0, np.max(np.linalg.norm(Y, axis=1))))
    ref = line if line is not None else (fitted_line(Y) if len(Y) > 1 else None)
    dist = max_line_distance(ref, Y) if ref is not None else 0.0
    err = error_metric(Y, truth.points, obs.epsilon) if truth is not None else float("nan")
    return MethodResult(method, Y, line, err, seconds, res, bool(dist <= INCIDENCE_RTOL * scale))


def run_L1_0(cams, obs: NoisyObservation, truth: Scene | None = None) -> MethodResult:
    mats = _mats(cams)
    t0 = time.perf_counter()
    Y = [triangulate_point(mats, q) for q in obs.points]
    return _finish("L1.0", mats, obs, Y, None, t0, truth)


def _fit_all(mats, L, obs, reduced):
    return [fit_point_on_line(mats, L, q, reduced) for q in obs.points]


def run_L1_1(cams, obs: NoisyObservation, variant: str = "reduced", truth: Scene | None = None) -> MethodResult:
    mats = _mats(cams)
    reduced = _variant(variant)
    t0 = time.perf_counter()
    L = line_from_two_planes(mats[0].T @ obs.lines[0], mats[1].T @ obs.lines[1])
    Y = _fit_all(mats, L, obs, reduced)
    return _finish("L1.1" if reduced else "L1.1-std", mats, obs, Y, L, t0, truth)


def run_L1_2(cams, obs: NoisyObservation, truth: Scene | None = None) -> MethodResult:
    mats = _mats(cams)
    if len(obs.points) < 2:
        raise ValueError("L1.2 needs at least two points")
    t0 = time.perf_counter()
    Z1 = triangulate_point(mats, obs.points[0])
    Z2 = triangulate_point(mats, obs.points[1])
    L = line_from_two_points(HomPoint3.from_affine(Z1), HomPoint3.from_affine(Z2))
    Y = [Z1, Z2] + [fit_point_on_line(mats, L, q) for q in obs.points[2:]]
    return _finish("L1.2", mats, obs, Y, L, t0, truth)


def run_L1_3(cams, obs: NoisyObservation, variant: str = "reduced", truth: Scene | None = None,
             cfg: TrackerConfig | None = None) -> MethodResult:
    mats = _mats(cams)
    reduced = _variant(variant)
    t0 = time.perf_counter()
    Z = HomPoint3.from_affine(triangulate_point(mats, obs.points[0]))
    L = fit_line_through_point(mats, Z, obs.lines, reduced, cfg)
    Y = _fit_all(mats, L, obs, reduced)
    return _finish("L1.3" if reduced else "L1.3-std", mats, obs, Y, L, t0, truth)


def run_L1_4(cams, obs: NoisyObservation, truth: Scene | None = None, seed=0) -> MethodResult:
    mats = _mats(cams)
    t0 = time.perf_counter()
    L = fit_line_to_tracks(mats, obs.lines, seed=seed)
    Y = _fit_all(mats, L, obs, True)
    return _finish("L1.4", mats, obs, Y, L, t0, truth)


def _variant(v: str) -> bool:
    if v not in ("reduced", "std"):
        raise ValueError("variant must be 'reduced' or 'std'")
    return v == "reduced"


def run_method(method: str, scene: Scene, obs: NoisyObservation, seed=0) -> MethodResult:
    cams = scene.arrangement
    if method == "L1.0":
        return run_L1_0(cams, obs, scene)
    if method in ("L1.1", "L1.1-std"):
        return run_L1_1(cams, obs, "std" if method.endswith("std") else "reduced", scene)
    if method == "L1.2":
        return run_L1_2(cams, obs, scene)
    if method in ("L1.3", "L1.3-std"):
        cfg = PIPELINE_TRACKER.with_overrides(seed=seed)
        return run_L1_3(cams, obs, "std" if method.endswith("std") else "reduced", scene, cfg)
    if method == "L1.4":
        return run_L1_4(cams, obs, scene, seed)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


# benchmark --------------------------------------------------------------------


def iteration_seed(master: int | None, i: int) -> int:
    """Seed of iteration ``i``, derived from the master seed."""
    return int(np.random.SeedSequence([master or 0, i]).generate_state(1)[0])


@dataclass
class Record:
    method: str
    iteration: int
    seed: int
    m: int
    p: int
    epsilon: float
    error_e: float
    time_seconds: float
    incidence_ok: bool
    residual: float
    failed: str = ""


def run_iteration(args) -> list:
    """One scene, one observation, every requested method."""
    m, p, epsilon, methods, master, i = args
    s = iteration_seed(master, i)
    scene = generate_scene(m, p, s)
    obs = observe(scene, epsilon, s)
    out = []
    for method in methods:
        try:
            r = run_method(method, scene, obs, seed=s)
            out.append(Record(method, i, s, m, p, epsilon, r.error, r.seconds, r.incidence_ok, r.residual))
        except (GeometryError, np.linalg.LinAlgError) as exc:
            out.append(Record(method, i, s, m, p, epsilon, float("nan"), float("nan"), False, float("nan"), type(exc).__name__))
    return out


def benchmark(m: int, p: int, epsilon: float, iterations: int, methods=METHODS, seed: int | None = 0,
              threads: int = 1) -> list:
    """Records for every (iteration, method); iterations run in a process pool if ``threads > 1``."""
    for meth in methods:
        if meth not in METHODS:
            raise ValueError(f"unknown method {meth!r}")
    jobs = [(m, p, epsilon, tuple(methods), seed, i) for i in range(iterations)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run_iteration, jobs))
    else:
        chunks = [run_iteration(j) for j in jobs]
    return [r for c in chunks for r in c]


def record_stats(records) -> dict:
    """``aggregate`` over benchmark records, skipping failed runs."""
    ok = [r for r in records if not r.failed]
    return aggregate([_RecordView(r) for r in ok])


@dataclass
class _RecordView:
    record: Record

    @property
    def method(self):
        return self.record.method

    @property
    def error(self):
        return self.record.error_e

    @property
    def seconds(self):
        return self.record.time_seconds
