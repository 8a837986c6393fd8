import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchoredmv.errors import (
    CenterProjection,
    CoincidentCenters,
    CoincidentPlanes,
    LineInPlane,
    LineThroughCenter,
    ProportionalPoints,
    RankDeficiency,
)
from anchoredmv.projective import (
    Camera,
    CameraArrangement,
    HomPoint3,
    SpatialLine,
    back_project_line,
    back_project_point,
    fundamental_matrix,
    incidence,
    line_from_two_planes,
    line_from_two_points,
    meet_line_plane,
    plucker_quadric,
    project_line,
    project_point,
)

seeds = st.integers(0, 2**32 - 1)


def test_affine_round_trip():
    X = HomPoint3.from_affine([1.0, -2.0, 3.0])
    assert np.allclose(X.affine(), [1.0, -2.0, 3.0])
    assert X.same_as(HomPoint3(-7 * X.coords))


def test_camera_center_is_kernel(rng):
    C = Camera(rng.normal(size=(3, 4)))
    assert np.linalg.norm(C.matrix @ C.center.coords) < 1e-12
    with pytest.raises(CenterProjection):
        project_point(C, C.center)


def test_rank_deficient_camera_rejected():
    P = np.zeros((3, 4))
    P[0, 0] = P[1, 1] = 1
    with pytest.raises(RankDeficiency):
        Camera(P)


def test_coincident_centers_rejected(rng):
    A = rng.normal(size=(3, 4))
    B = rng.normal(size=(3, 3)) @ A
    with pytest.raises(CoincidentCenters):
        CameraArrangement((A, B))
    with pytest.raises(CoincidentCenters):
        fundamental_matrix(A, B)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_epipolar_constraint_vanishes(seed):
    rng = np.random.default_rng(seed)
    A, B = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    F = fundamental_matrix(A, B)
    X = rng.normal(size=4)
    x, y = A @ X, B @ X
    assert abs(x @ F @ y) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)
    assert np.linalg.matrix_rank(F, tol=1e-10) == 2


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_line_plucker_relation_and_projection(seed):
    rng = np.random.default_rng(seed)
    L = SpatialLine(rng.normal(size=(4, 2)))
    assert abs(plucker_quadric(L.plucker)) < 1e-12
    C = rng.normal(size=(3, 4))
    ell = project_line(C, L)
    X = L.point(rng.normal(size=2))
    assert abs(ell.coeffs @ project_point(C, X).coords) < 1e-10


def test_line_through_center_rejected(rng):
    C = Camera(rng.normal(size=(3, 4)))
    L = SpatialLine.through(C.center.coords, rng.normal(size=4))
    with pytest.raises(LineThroughCenter):
        project_line(C, L)


def test_back_projections_contain_preimages(rng):
    C = rng.normal(size=(3, 4))
    X = HomPoint3(rng.normal(size=4))
    ray = back_project_point(C, project_point(C, X))
    assert ray.contains(X)
    L = SpatialLine(rng.normal(size=(4, 2)))
    H = back_project_line(C, project_line(C, L))
    assert incidence(L, H) < 1e-10


def test_two_planes_meet_in_line(rng):
    L = SpatialLine(rng.normal(size=(4, 2)))
    A, B = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    L2 = line_from_two_planes(A.T @ project_line(A, L).coeffs, B.T @ project_line(B, L).coeffs)
    assert L2.same_as(L)
    h = rng.normal(size=4)
    with pytest.raises(CoincidentPlanes):
        line_from_two_planes(h, 3 * h)


def test_line_from_points_and_meet(rng):
    a, b = rng.normal(size=4), rng.normal(size=4)
    L = line_from_two_points(HomPoint3(a), HomPoint3(b))
    assert L.contains(HomPoint3(a)) and L.contains(HomPoint3(b))
    H = rng.normal(size=4)
    P = meet_line_plane(L, H)
    assert L.contains(P) and abs(H @ P.coords) < 1e-10 * np.linalg.norm(H)
    with pytest.raises(ProportionalPoints):
        line_from_two_points(HomPoint3(a), HomPoint3(-2 * a))
    plane_with_L = np.linalg.svd(L.span.T)[2][-1]
    with pytest.raises(LineInPlane):
        meet_line_plane(L, plane_with_L)


def test_affine_distance():
    L = SpatialLine.through([0, 0, 0, 1.0], [1.0, 0, 0, 0])
    assert L.distance_to([5.0, 3.0, 4.0]) == pytest.approx(5.0)
