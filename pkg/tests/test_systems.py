import numpy as np
import pytest

from anchoredmv.projective import HomPoint3, SpatialLine
from anchoredmv.reduction import anchored_point_problem
from anchoredmv.solver.homotopy import TrackerConfig
from anchoredmv.solver.systems import (
    build_anchored_point_system,
    build_point_mv_system,
    polish_critical,
    real_minimizer,
    solve_critical,
)

from conftest import random_cameras


def _anchored(rng, m=3, reduced=True):
    cams = random_cameras(rng, m)
    L = SpatialLine(rng.normal(size=(4, 2)))
    prob = anchored_point_problem(cams, L, rng.normal(size=(m, 2)))
    return build_anchored_point_system(prob, reduced)


def test_critical_points_are_stationary(rng):
    system = _anchored(rng)
    cps = solve_critical(system)
    g = system.objective.gradient(cps.finite)
    scale = np.linalg.norm(system.objective.gradient_scale(cps.finite), axis=1)
    assert np.all(np.linalg.norm(g, axis=1) <= 1e-8 * scale)


def test_real_minimizer_beats_random_perturbations(rng):
    # local-optimality sampling oracle
    system = _anchored(rng, 4)
    t = real_minimizer(system, solve_critical(system))
    f = system.objective.value(t)
    pert = t + rng.normal(scale=0.1, size=(1000, 1))
    assert np.all(system.objective.value(pert).real >= f.real - 1e-12 * abs(f))


def test_point_mv_noiseless_recovery(rng):
    cams = random_cameras(rng, 2)
    X = rng.normal(size=4)
    track = np.array([(C @ X)[:2] / (C @ X)[2] for C in cams])
    system = build_point_mv_system(cams, track)
    cps = solve_critical(system, TrackerConfig(seed=1))
    x = real_minimizer(system, cps)
    Y = HomPoint3(system.lift(x))
    assert Y.same_as(HomPoint3(X), tol=1e-9)


def test_polish_rejects_non_critical_points(rng):
    system = _anchored(rng)
    _, rel, _ = polish_critical(system.objective, np.array([[0.3]]), iters=0)
    assert rel[0] > 1e-6


def test_univariate_system_is_solved_exactly(rng):
    system = _anchored(rng, 2)
    cps = solve_critical(system)
    assert cps.count == 4
