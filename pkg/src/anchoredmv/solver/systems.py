"""Critical equations of fractional least-squares objectives.

For views ``f = sum_j sum_r (N_jr / Q_j - d_jr)^2`` with affine ``N``, ``Q``
in the chart variables, the i-th partial derivative is cleared of
denominators view by view:

* ``Q_j`` constant: the view term is already polynomial;
* ``dQ_j/dx_i == 0``: the term has ``Q_j^2`` in its denominator;
* otherwise: ``Q_j^3``.

Multiplying through by the product of these powers gives one polynomial
per variable.  Roots where some ``Q_j`` vanishes are artefacts of the
clearing and are filtered out afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DegenerateDenominator
from ..fractional import FractionalObjective, FractionalView, ParamChart
from .homotopy import CriticalPointSet, PathStatus, TrackerConfig, system_residual, track_paths
from .polynomial import CompiledSystem, Poly, substitute_projective
from .univariate import relative_residual, solve_univariate

COEF_RTOL = 1e-13


def _affine_poly(row, chart: ParamChart) -> Poly:
    const = row @ chart.base
    lin = row @ chart.dirs
    scale = max(abs(const), np.max(np.abs(lin)))
    if scale == 0:
        return Poly.affine(0.0, np.zeros_like(lin))
    const = 0.0 if abs(const) <= COEF_RTOL * scale else const
    lin = np.where(np.abs(lin) <= COEF_RTOL * scale, 0.0, lin)
    return Poly.affine(const, lin)


@dataclass
class CriticalSystem:
    polys: list
    objective: FractionalObjective
    tag: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def nvars(self) -> int:
        return self.objective.nvars

    @property
    def degrees(self) -> list:
        return [p.degree for p in self.polys]

    def value(self, x):
        return self.objective.value(x)

    def gradient(self, x):
        return self.objective.gradient(x)

    def valid(self, x, rtol: float = 1e-8):
        """Mask of chart points where no view denominator vanishes."""
        x = np.atleast_2d(x)
        dens = np.abs(self.objective.denominators(x))
        w = np.linalg.norm(self.objective.chart(x), axis=-1)
        scale = np.array([np.linalg.norm(v.denom) for v in self.objective.views])
        return np.all(dens > rtol * w[:, None] * scale, axis=1)

    def lift(self, x):
        return self.objective.chart(x)


def critical_polys(objective: FractionalObjective) -> list:
    n = objective.nvars
    chart = objective.chart
    views = []
    for v in objective.views:
        N = [_affine_poly(row, chart) for row in v.numer]
        Q = _affine_poly(v.denom, chart)
        if Q.is_zero():
            raise DegenerateDenominator("a view denominator vanishes on the whole chart")
        views.append((N, Q, np.asarray(v.data)))

    polys = []
    for i in range(n):
        terms, powers = [], []
        for N, Q, d in views:
            Qi = Q.diff(i)
            resid = [Nr - Q * dr for Nr, dr in zip(N, d)]
            if Q.degree == 0:
                q0 = Q.coef.flat[0]
                t = sum((r * Nr.diff(i) for r, Nr in zip(resid, N)), Poly.constant(0.0, n))
                terms.append(t * (1.0 / q0**2))
                powers.append(0)
            elif Qi.is_zero():
                t = sum((r * Nr.diff(i) for r, Nr in zip(resid, N)), Poly.constant(0.0, n))
                terms.append(t)
                powers.append(2)
            else:
                t = sum(
                    (r * (Nr.diff(i) * Q - Nr * Qi) for r, Nr in zip(resid, N)),
                    Poly.constant(0.0, n),
                )
                terms.append(t)
                powers.append(3)
        eq = Poly.constant(0.0, n)
        for j, t in enumerate(terms):
            for k, (_, Qk, _) in enumerate(views):
                if k != j and powers[k]:
                    t = t * Qk ** powers[k]
            eq = eq + t
        polys.append(eq.trimmed())
    return polys


def critical_system(objective: FractionalObjective, tag: str = "") -> CriticalSystem:
    return CriticalSystem(critical_polys(objective), objective, tag)


def build_anchored_point_system(problem, reduced: bool = True) -> CriticalSystem:
    """Univariate critical polynomial of fitting a point on an anchor line."""
    return critical_system(problem.objective(reduced), "anchored-point" + ("" if reduced else "-std"))


def build_anchored_line_system(problem, reduced: bool = True) -> CriticalSystem:
    """Bivariate critical system of fitting a line through an anchor point."""
    return critical_system(problem.objective(reduced), "anchored-line" + ("" if reduced else "-std"))


def point_mv_objective(cams, data, charts=None) -> FractionalObjective:
    """Reprojection objective for one point seen by all cameras.

    The chart keeps view 0's denominator at one and makes view 1's
    denominator the last coordinate, moving along the first camera's
    centre so view 0 does not depend on it.
    """
    from ..reduction import ViewChart, _full_views, _as_matrices

    mats = _as_matrices(cams)
    charts = tuple(charts) if charts is not None else (ViewChart.standard(),) * len(mats)
    g1 = charts[0].h @ mats[0]
    g2 = charts[1].h @ mats[1]
    center = np.linalg.svd(mats[0])[2][-1]
    chart = ParamChart.two_forms(g1, g2, center)
    return FractionalObjective(_full_views(mats, charts, data), chart)


def build_point_mv_system(cams, track, charts=None) -> CriticalSystem:
    data = np.asarray(getattr(track, "views", track))
    return critical_system(point_mv_objective(cams, data, charts), "point-mv")


def polish_critical(objective: FractionalObjective, x, iters: int = 8):
    """Newton on the uncleared gradient.

    Returns the points, a relative stationarity measure (the smaller of the
    relative gradient and the relative Newton step) and the Hessian condition.
    """
    x = np.array(np.atleast_2d(x), dtype=complex)
    best = x.copy()
    best_rel = np.full(len(x), np.inf)
    with np.errstate(all="ignore"):
        for k in range(iters + 1):
            g = objective.gradient(x)
            scale = np.linalg.norm(objective.gradient_scale(x), axis=-1)
            rel = np.linalg.norm(g, axis=-1) / np.where(scale > 0, scale, 1.0)
            rel = np.where(np.isfinite(rel), rel, np.inf)
            better = rel < best_rel
            best[better], best_rel[better] = x[better], rel[better]
            if k == iters:
                break
            Hm = objective.hessian(x)
            dx = np.zeros_like(x)
            good = np.all(np.isfinite(Hm), axis=(-2, -1)) & np.isfinite(rel)
            if good.any():
                dx[good] = _solve_rows(Hm[good], -g[good])
            x = x + dx
        Hb = objective.hessian(best)
        fin = np.all(np.isfinite(Hb), axis=(-2, -1)) & np.all(np.isfinite(best), axis=-1)
        cond = np.full(len(best), np.inf)
        if fin.any():
            cond[fin] = np.linalg.cond(Hb[fin])
            # at an exact fit the residuals vanish and so does the gradient
            # scale; a negligible Newton step certifies those points instead
            step = np.linalg.norm(_solve_rows(Hb[fin], -objective.gradient(best[fin])), axis=-1)
            size = np.maximum(1.0, np.linalg.norm(best[fin], axis=-1))
            best_rel[fin] = np.minimum(best_rel[fin], np.where(np.isfinite(step), step / size, np.inf))
    return best, best_rel, np.where(np.isfinite(cond), cond, np.inf)


def _solve_rows(A, b):
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.stack([np.linalg.lstsq(a, c, rcond=None)[0] for a, c in zip(A, b)])


GRADIENT_RTOL = 1e-9
HESSIAN_COND = 1e12


def _validate(system: CriticalSystem, raw: CriticalPointSet, residual_tol: float):
    """Polish every endpoint on the rational gradient; mark survivors finite.

    The reported residual is the relative residual of the cleared
    polynomial system at the polished point.
    """
    status = list(raw.status)
    sols = raw.solutions.copy()
    rel = np.full(len(status), np.inf)
    cond = raw.condition.copy()
    cand = np.flatnonzero(
        np.array([st != PathStatus.INFINITY for st in status], dtype=bool)
        & np.all(np.isfinite(sols), axis=1)
    )
    if cand.size:
        x, r, c = polish_critical(system.objective, sols[cand])
        with np.errstate(all="ignore"):
            pres = system_residual(CompiledSystem(system.polys), x)
        pres = np.where(np.isfinite(pres), pres, np.inf)
        ok = (r <= GRADIENT_RTOL) & (pres <= residual_tol) & (c <= HESSIAN_COND) & system.valid(x)
        sols[cand], rel[cand], cond[cand] = x, pres, c
        for k, good in zip(cand, ok):
            if good:
                status[k] = PathStatus.FINITE
            elif status[k] == PathStatus.FINITE:
                status[k] = PathStatus.SINGULAR
    return sols, status, rel, cond


def _is_new(x, pts, radius):
    return all(np.linalg.norm(x - p) > radius * max(1.0, np.linalg.norm(p)) for p in pts)


def balancing_scale(polys) -> float:
    """Variable scale ``x = sigma * y`` that flattens coefficient size across degrees.

    Fitted as the slope of log max-coefficient against total degree; clipped
    to ``[1e-3, 1e3]``.
    """
    degs, logs = [], []
    for p in polys:
        exps, coeffs = p.terms()
        tot = exps.sum(axis=1)
        for d in np.unique(tot):
            degs.append(d)
            logs.append(np.log10(np.max(np.abs(coeffs[tot == d]))))
    if len(set(degs)) < 2:
        return 1.0
    slope = np.polyfit(degs, logs, 1)[0]
    return float(np.clip(10.0 ** (-slope), 1e-3, 1e3))


def _random_unitary(rng, k):
    A = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    Qm, R = np.linalg.qr(A)
    return Qm * (np.diag(R) / np.abs(np.diag(R)))


def _track_transformed(system: CriticalSystem, M, cfg: TrackerConfig) -> CriticalPointSet:
    """Track in coordinates ``z = M y`` and map endpoints back to the chart."""
    polys = [substitute_projective(p, M) for p in system.polys]
    raw = track_paths(polys, cfg)
    y = raw.solutions
    Z = np.column_stack([np.ones(len(y)), y]) @ M.T
    with np.errstate(all="ignore"):
        raw.solutions = Z[:, 1:] / Z[:, :1]
    return raw


def solve_critical(system: CriticalSystem, cfg: TrackerConfig | None = None) -> CriticalPointSet:
    """All valid complex critical points with their objective values.

    Candidates come from the companion matrix (one variable) or the path
    tracker.  Each is re-solved by Newton on the rational gradient, which
    is undefined on the spurious roots introduced by clearing
    denominators; a candidate counts only if that Newton iteration
    converges to a nondegenerate critical point with nonzero denominators.

    Several variables: the spurious roots form large clusters and paths
    near them occasionally jump or stall.  The first run tracks in
    coordinates scaled by ``balancing_scale``; up to ``cfg.reruns`` more
    runs follow, each after a random unitary change of projective
    coordinates, until ``cfg.patience`` consecutive runs add no new point.
    """
    cfg = cfg or TrackerConfig()
    n = system.nvars
    if n == 1:
        p = system.polys[0]
        sigma = balancing_scale([p])
        roots = solve_univariate(substitute_projective(p, np.diag([1.0, sigma]))) * sigma
        runs = [CriticalPointSet(
            solutions=roots[:, None],
            status=[PathStatus.FINITE] * len(roots),
            residual=relative_residual(p.coef, roots),
            condition=np.ones(len(roots)),
            paths=p.degree,
        )]
    else:
        seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.reruns + 1)
        scale = np.diag([1.0] + [balancing_scale(system.polys)] * n)
        runs = [_track_transformed(system, scale, replace(cfg, seed=seeds[0]))]

    found, rows, errors = [], [], []
    k = idle = 0
    while True:
        raw = runs[k]
        sols, status, rel, cond = _validate(system, raw, cfg.residual_tol)
        errors += raw.errors
        added = 0
        for i, st in enumerate(status):
            if st == PathStatus.FINITE:
                if _is_new(sols[i], found, cfg.dedup_radius):
                    found.append(sols[i])
                    rows.append((sols[i], st, rel[i], cond[i]))
                    added += 1
            elif k == 0:
                rows.append((sols[i], st, rel[i], cond[i]))
        k += 1
        idle = 0 if added else idle + 1
        if n == 1 or k > cfg.reruns or (k > 1 and idle >= cfg.patience):
            break
        rng = np.random.default_rng(seeds[k])
        runs.append(_track_transformed(system, scale @ _random_unitary(rng, n + 1), replace(cfg, seed=seeds[k])))

    out = CriticalPointSet(
        solutions=np.array([r[0] for r in rows], dtype=complex).reshape(-1, n),
        status=[r[1] for r in rows],
        residual=np.array([r[2] for r in rows], dtype=float),
        condition=np.array([r[3] for r in rows], dtype=float),
        paths=sum(r.paths for r in runs),
        merged=sum(r.merged for r in runs),
        errors=errors,
    )
    obj = np.full(len(rows), np.nan + 0j)
    f = out.mask(PathStatus.FINITE)
    if f.any():
        obj[f] = system.value(out.solutions[f])
    out.objective = obj
    return out


def real_candidates(cps: CriticalPointSet, tol: float = 1e-8) -> np.ndarray:
    return np.real(cps.solutions[cps.real_mask(tol)])


def real_minimizer(system: CriticalSystem, cps: CriticalPointSet, tol: float = 1e-8, extra=()):
    """Real critical point of least objective value, or None."""
    cands = [c for c in real_candidates(cps, tol)] + [np.asarray(e, dtype=float) for e in extra]
    if not cands:
        return None
    cands = np.array(cands)
    cands = cands[system.valid(cands)]
    if not len(cands):
        return None
    vals = np.real(system.value(cands))
    return cands[int(np.argmin(vals))]
