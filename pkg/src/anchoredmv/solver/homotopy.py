"""Total-degree homotopy continuation for small square polynomial systems.

Paths are tracked in projective space on a random affine chart, so paths
whose endpoints lie at infinity stay bounded.  All paths advance together
as numpy batches, each with its own step size.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from ..errors import PathBudgetExceeded
from .polynomial import CompiledSystem, Poly


_EPS = np.finfo(float).eps
LIMIT_FACTOR = 100.0


class PathStatus(str, Enum):
    FINITE = "finite-nonsingular"
    SINGULAR = "near-singular"
    INFINITY = "at-infinity"
    FAILED = "path-failure"


@dataclass(frozen=True)
class TrackerConfig:
    initial_step: float = 0.1
    min_step: float = 1e-7
    max_step: float = 0.5
    newton_tol: float = 1e-11
    max_corrector_iters: int = 3
    infinity_threshold: float = 1e8
    dedup_radius: float = 1e-8
    gamma: complex | None = None
    seed: int | None = None
    max_steps: int = 3000
    refine_iters: int = 12
    residual_tol: float = 1e-10
    singular_cond: float = 1e10
    end_gap: float = 1e-14
    reruns: int = 5
    patience: int = 2

    def __post_init__(self):
        for name in ("initial_step", "min_step", "max_step", "newton_tol",
                     "infinity_threshold", "dedup_radius", "residual_tol", "singular_cond", "end_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.reruns < 0 or self.patience < 1:
            raise ValueError("reruns must be non-negative and patience positive")
        if self.max_corrector_iters < 1 or self.max_steps < 1:
            raise ValueError("iteration limits must be positive")

    def with_overrides(self, **kw) -> "TrackerConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class CriticalPointSet:
    """Endpoints of a solve, one row per distinct solution or failed path."""

    solutions: np.ndarray
    status: list
    residual: np.ndarray
    condition: np.ndarray
    objective: np.ndarray = None
    paths: int = 0
    merged: int = 0
    errors: list = field(default_factory=list)

    def mask(self, status: PathStatus) -> np.ndarray:
        return np.array([s == status for s in self.status], dtype=bool)

    @property
    def finite(self) -> np.ndarray:
        return self.solutions[self.mask(PathStatus.FINITE)]

    @property
    def count(self) -> int:
        return int(self.mask(PathStatus.FINITE).sum())

    def counts(self) -> dict:
        return {s.value: int(self.mask(s).sum()) for s in PathStatus}

    def real_mask(self, tol: float = 1e-8) -> np.ndarray:
        fin = self.mask(PathStatus.FINITE)
        scale = np.maximum(1.0, np.linalg.norm(self.solutions, axis=1))
        small_imag = np.linalg.norm(self.solutions.imag, axis=1) <= tol * scale
        return fin & small_imag


def start_solutions(degrees) -> np.ndarray:
    roots = [np.exp(2j * np.pi * np.arange(d) / d) for d in degrees]
    return np.array(list(itertools.product(*roots)), dtype=complex)


def system_residual(cs: CompiledSystem, x):
    vals, _ = cs.eval_affine(x, jac=False)
    mag = cs.magnitude_affine(x)
    return np.max(np.abs(vals) / np.where(mag > 0, mag, 1.0), axis=1)


def newton_refine(cs: CompiledSystem, x, iters: int = 12, tol: float = 1e-14):
    """Batched affine Newton iteration; keeps the best iterate per row."""
    x = np.array(x, dtype=complex, copy=True)
    best = x.copy()
    best_res = system_residual(cs, x)
    for _ in range(iters):
        vals, J = cs.eval_affine(x)
        try:
            dx = np.linalg.solve(J, -vals[..., None])[..., 0]
        except np.linalg.LinAlgError:
            dx = np.stack([np.linalg.lstsq(Jk, -vk, rcond=None)[0] for Jk, vk in zip(J, vals)])
        x = x + dx
        x[~np.isfinite(x).all(axis=1)] = best[~np.isfinite(x).all(axis=1)]
        res = system_residual(cs, x)
        better = res < best_res
        best[better] = x[better]
        best_res[better] = res[better]
        if np.all(np.linalg.norm(dx, axis=1) <= tol * (1 + np.linalg.norm(x, axis=1))):
            break
    return best, best_res


def _scaled_condition(cs: CompiledSystem, x):
    _, J = cs.eval_affine(x)
    mag = cs.magnitude_affine(x)
    J = J / np.where(mag > 0, mag, 1.0)[:, :, None]
    J = J * np.maximum(1.0, np.abs(x))[:, None, :]
    with np.errstate(all="ignore"):
        c = np.linalg.cond(J)
    return np.where(np.isfinite(c), c, np.inf)


class _Homotopy:
    """H(z, s) = u * gamma * G(z) + (1 - u) * F(z) with u = exp(-s), on a.z = 1.

    The log-time ``s = -ln(1 - tau)`` equals ``tau`` to first order at the
    start and stretches the end zone, where paths to singular endpoints
    and nearby nonsingular ones need fine resolution.
    """

    def __init__(self, cs: CompiledSystem, gamma: complex, chart: np.ndarray):
        self.cs = cs
        self.d = np.array(cs.degrees)
        self.gamma = gamma
        self.a = chart

    def start_eval(self, z):
        z0 = z[:, :1]
        zi = z[:, 1:]
        G = zi ** self.d - z0 ** self.d
        P, n = zi.shape
        JG = np.zeros((P, n, n + 1), dtype=complex)
        JG[:, :, 0] = -self.d * z0 ** (self.d - 1)
        JG[:, np.arange(n), np.arange(1, n + 1)] = self.d * zi ** (self.d - 1)
        return G, JG

    def eval(self, z, s):
        """Residual, Jacobian and d/ds of the augmented homotopy."""
        F, JF = self.cs.eval_hom(z)
        G, JG = self.start_eval(z)
        u = np.exp(-s)[:, None]
        H = u * self.gamma * G + (1 - u) * F
        JH = u[:, :, None] * self.gamma * JG + (1 - u)[:, :, None] * JF
        Hs = u * (F - self.gamma * G)
        P = z.shape[0]
        Jaug = np.concatenate([JH, np.broadcast_to(self.a, (P, 1, self.a.size))], axis=1)
        Haug = np.concatenate([H, (z @ self.a - 1)[:, None]], axis=1)
        Hsaug = np.concatenate([Hs, np.zeros((P, 1))], axis=1)
        return Haug, Jaug, Hsaug


def _safe_solve(J, b):
    try:
        return np.linalg.solve(J, b[..., None])[..., 0], np.ones(len(b), dtype=bool)
    except np.linalg.LinAlgError:
        out = np.zeros_like(b)
        ok = np.ones(len(b), dtype=bool)
        for k in range(len(b)):
            try:
                out[k] = np.linalg.solve(J[k], b[k])
            except np.linalg.LinAlgError:
                ok[k] = False
        return out, ok


def _tangent(hom: _Homotopy, z, s):
    _, J, Hs = hom.eval(z, s)
    return _safe_solve(J, -Hs)


def _predict(hom: _Homotopy, z, s, h):
    """Classical Runge-Kutta step along the solution path."""
    hc = h[:, None]
    k1, ok1 = _tangent(hom, z, s)
    k2, ok2 = _tangent(hom, z + 0.5 * hc * k1, s + 0.5 * h)
    k3, ok3 = _tangent(hom, z + 0.5 * hc * k2, s + 0.5 * h)
    k4, ok4 = _tangent(hom, z + hc * k3, s + h)
    zp = z + hc / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    ok = ok1 & ok2 & ok3 & ok4 & np.all(np.isfinite(zp), axis=1)
    return np.where(ok[:, None], zp, z), ok


def _noise_floor(J):
    """Relative Newton step that rounding alone produces, about cond * eps."""
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(J)
    return LIMIT_FACTOR * _EPS * np.nan_to_num(cond, nan=np.inf)


def _correct(hom: _Homotopy, z, t, cfg: TrackerConfig):
    ok = np.zeros(len(z), dtype=bool)
    alive = np.ones(len(z), dtype=bool)
    prev = np.full(len(z), np.inf)
    tol = np.full(len(z), cfg.newton_tol)
    z = z.copy()
    for k in range(cfg.max_corrector_iters):
        idx = np.flatnonzero(alive & ~ok)
        if not idx.size:
            break
        H, J, _ = hom.eval(z[idx], t[idx])
        if k == 0:
            tol[idx] = np.maximum(cfg.newton_tol, _noise_floor(J))
        dz, solved = _safe_solve(J, -H)
        z[idx] = z[idx] + dz
        step = np.linalg.norm(dz, axis=1)
        scale = np.linalg.norm(z[idx], axis=1)
        conv = solved & (step <= tol[idx] * scale)
        diverging = ~solved | (np.isfinite(prev[idx]) & (step > 0.5 * prev[idx])) | ~np.isfinite(step)
        ok[idx[conv]] = True
        alive[idx[diverging & ~conv]] = False
        prev[idx] = step
    return ok, z


def track_paths(system, cfg: TrackerConfig | None = None) -> CriticalPointSet:
    """Solve a square system by total-degree homotopy continuation.

    ``system`` is a list of ``Poly`` or any object with a ``polys``
    attribute.  Each path is classified as finite-nonsingular,
    near-singular, at-infinity or path-failure; finite solutions are
    Newton-refined and merged within the dedup radius.
    """
    cfg = cfg or TrackerConfig()
    polys = list(system.polys if hasattr(system, "polys") else system)
    n = polys[0].nvars
    if len(polys) != n:
        raise ValueError("track_paths needs a square system")
    polys = [p * (1.0 / max(np.max(np.abs(p.coef)), 1e-300)) for p in polys]
    cs = CompiledSystem(polys)
    if any(d < 1 for d in cs.degrees):
        raise ValueError("every equation needs positive degree")
    rng = np.random.default_rng(cfg.seed)
    gamma = cfg.gamma if cfg.gamma is not None else np.exp(2j * np.pi * rng.random())
    chart = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    chart /= np.linalg.norm(chart)
    hom = _Homotopy(cs, gamma, chart)

    S = start_solutions(cs.degrees)
    P = len(S)
    Z = np.column_stack([np.ones(P, dtype=complex), S])
    Z = Z / (Z @ chart)[:, None]
    s_end = -np.log(cfg.end_gap)
    sv = np.zeros(P)
    h = np.full(P, cfg.initial_step)
    streak = np.zeros(P, dtype=int)
    steps = np.zeros(P, dtype=int)
    active = np.ones(P, dtype=bool)
    failed = np.zeros(P, dtype=bool)
    budget = np.zeros(P, dtype=bool)

    while active.any():
        idx = np.flatnonzero(active)
        z, t = Z[idx], sv[idx]
        hh = np.minimum(h[idx], s_end - t)
        zp, solved = _predict(hom, z, t, hh)
        tp = np.where(hh >= s_end - t, s_end, t + hh)
        ok, zc = _correct(hom, zp, tp, cfg)
        ok &= solved
        acc = idx[ok]
        Z[acc] = zc[ok]
        sv[acc] = tp[ok]
        streak[acc] += 1
        grow = acc[streak[acc] >= 3]
        h[grow] = np.minimum(2 * h[grow], cfg.max_step)
        streak[grow] = 0
        rej = idx[~ok]
        h[rej] /= 2
        streak[rej] = 0
        steps[idx] += 1
        done = sv >= s_end
        small = h < cfg.min_step
        over = steps >= cfg.max_steps
        failed |= active & ~done & (small | over)
        budget |= active & ~done & over
        active &= ~(done | failed)

    tau = -np.expm1(-sv)
    return _classify(cs, Z, tau, failed, budget, cfg, P)


def _projective_distance(Z, x):
    W = np.column_stack([np.ones(len(x), dtype=complex), x])
    Zn = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    Wn = W / np.linalg.norm(W, axis=1, keepdims=True)
    overlap = np.abs(np.sum(Zn.conj() * Wn, axis=1))
    return np.sqrt(np.maximum(0.0, 1.0 - np.minimum(overlap, 1.0) ** 2))


def _classify(cs, Z, tau, failed, budget, cfg, P) -> CriticalPointSet:
    n = cs.n
    z0 = Z[:, 0]
    znorm = np.linalg.norm(Z, axis=1)
    FIN, SING, INF, FAIL = range(4)
    code = np.full(len(Z), FAIL)
    x = np.full((len(Z), n), np.nan + 0j)
    res = np.full(len(Z), np.inf)
    cond = np.full(len(Z), np.inf)

    # failed paths still get a Newton rescue attempt from where they stopped
    candidate = np.all(np.isfinite(Z), axis=1)
    at_inf = np.abs(z0) * cfg.infinity_threshold <= znorm
    code[candidate & at_inf] = INF
    ref = np.flatnonzero(candidate & ~at_inf)
    if ref.size:
        xr, rr = newton_refine(cs, Z[ref, 1:] / Z[ref, :1], iters=cfg.refine_iters)
        cr = _scaled_condition(cs, xr)
        x[ref], res[ref], cond[ref] = xr, rr, cr
        big = np.linalg.norm(xr, axis=1) > cfg.infinity_threshold
        # Newton must stay near the endpoint; otherwise it jumped to another root
        near = _projective_distance(Z[ref], xr) <= 1e-4
        good = (rr <= cfg.residual_tol) & ~big & near
        code[ref[good & (cr <= cfg.singular_cond)]] = FIN
        code[ref[good & (cr > cfg.singular_cond)]] = SING
        code[ref[big]] = INF
        # a reached path that Newton cannot certify is reported as singular
        weak = ref[~good & ~big & ~failed[ref]]
        code[weak] = SING
    # failed paths that were clearly heading to infinity
    heading = failed & (code == FAIL) & (np.abs(z0) <= 1e-2 * znorm)
    code[heading] = INF

    errors = [f"path {k}: {PathBudgetExceeded.__name__}" for k in np.flatnonzero(budget)]
    fin = np.flatnonzero(code == FIN)
    keep = np.ones(len(Z), dtype=bool)
    merged = 0
    for a_i, a in enumerate(fin):
        if not keep[a]:
            continue
        for b in fin[a_i + 1:]:
            if keep[b] and np.linalg.norm(x[a] - x[b]) <= cfg.dedup_radius * max(1.0, np.linalg.norm(x[a])):
                keep[b] = False
                merged += 1
    sel = np.flatnonzero(keep)
    return CriticalPointSet(
        solutions=x[sel],
        status=[list(PathStatus)[c] for c in code[sel]],
        residual=res[sel],
        condition=cond[sel],
        paths=P,
        merged=merged,
        errors=errors,
    )


def solve_polynomials(polys: list[Poly], cfg: TrackerConfig | None = None) -> CriticalPointSet:
    return track_paths(polys, cfg)
