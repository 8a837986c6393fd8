import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchoredmv.constraints import (
    LineTrack,
    PointTrack,
    anchored_line_residuals,
    anchored_point_residuals,
    line_mv_residuals,
    multidegree_check,
    plane_triple_residual,
    point_mv_residuals,
)
from anchoredmv.errors import ArityMismatch, BadSlicePattern, GeometryError
from anchoredmv.projective import HomPoint3, SpatialLine, project_line

from conftest import random_cameras

seeds = st.integers(0, 2**32 - 1)


def _track(cams, X):
    return PointTrack(np.array([(C @ X)[:2] / (C @ X)[2] for C in cams]))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 5))
def test_exact_tracks_satisfy_constraints(seed, m):
    rng = np.random.default_rng(seed)
    cams = random_cameras(rng, m)
    L = SpatialLine(rng.normal(size=(4, 2)))
    X = L.point(rng.normal(size=2)).coords
    assert point_mv_residuals(cams, _track(cams, X)).passed
    assert anchored_point_residuals(cams, L, _track(cams, X)).passed
    ell = LineTrack([project_line(C, L) for C in cams])
    assert line_mv_residuals(cams, ell).passed
    assert anchored_line_residuals(cams, HomPoint3(X), ell).passed


def test_small_noise_keeps_residuals_small(rng):
    cams = random_cameras(rng, 3)
    X = rng.normal(size=4)
    t = _track(cams, X)
    noisy = PointTrack(t.views + 1e-12 * rng.normal(size=t.views.shape))
    assert point_mv_residuals(cams, noisy).max_residual <= 1e-9


def test_perturbed_track_fails(rng):
    cams = random_cameras(rng, 3)
    t = _track(cams, rng.normal(size=4))
    noisy = PointTrack(t.views + 1e-6 * rng.normal(size=t.views.shape))
    assert not point_mv_residuals(cams, noisy).passed


def test_plane_triple_detects_common_line(rng):
    L = SpatialLine(rng.normal(size=(4, 2)))
    K = np.linalg.svd(L.span.T)[2][2:]  # planes containing L
    coplanar = [K.T @ rng.normal(size=2) for _ in range(3)]
    assert plane_triple_residual(coplanar) < 1e-12
    assert plane_triple_residual([rng.normal(size=4) for _ in range(3)]) > 1e-3


def test_arity_and_line_at_infinity(rng):
    cams = random_cameras(rng, 3)
    with pytest.raises(ArityMismatch):
        point_mv_residuals(cams, PointTrack(np.zeros((2, 2))))
    with pytest.raises(GeometryError):
        LineTrack([np.array([0.0, 0.0, 1.0])])


@pytest.mark.parametrize(
    "variety,pattern,expected",
    [("anchored-point", (1, 0, 0), 1), ("anchored-line", (2, 0, 0), 0), ("anchored-line", (1, 1, 0), 1)],
)
def test_multidegrees(rng, variety, pattern, expected):
    stats = multidegree_check(random_cameras(rng, 3), variety, pattern, trials=5, seed=4)
    assert stats.modal == expected


def test_bad_slice_pattern(rng):
    with pytest.raises(BadSlicePattern):
        multidegree_check(random_cameras(rng, 3), "anchored-point", (1, 1, 0))
    with pytest.raises(BadSlicePattern):
        multidegree_check(random_cameras(rng, 3), "anchored-line", (3, 0, 0))
