from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from billiards import (
    BoundaryMismatchError,
    Box,
    Cylinder,
    Domain,
    DomainConstructionError,
    GrazingSingularityError,
    Halfspace,
    Sphere,
    Torus,
    build_hardball_gas,
    build_sinai,
    curvature_at,
    hardball_pairs,
    normal_at,
    project_to_boundary,
    reduce_pair_to_sinai,
    reflect_operator,
    tangent_projection,
    transverse_projection,
)

SQ2 = math.sqrt(2.0)


def unit_vectors(d: int):
    return st.lists(st.floats(-1.0, 1.0), min_size=d, max_size=d).map(np.array).filter(
        lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: v / np.linalg.norm(v))


def vectors(d: int):
    return st.lists(st.floats(-5.0, 5.0), min_size=d, max_size=d).map(np.array)


# ---------------------------------------------------------------------------
# normals
# ---------------------------------------------------------------------------

def test_sphere_normal_is_radial(sinai2d):
    nu = normal_at(sinai2d, 0, np.array([0.75, 0.5]))
    np.testing.assert_allclose(nu, [1.0, 0.0], atol=1e-12)


def test_halfspace_normal_is_constant():
    dom = Domain(2, Box((1.0, 1.0)),
                 [Halfspace(np.array([0.0, 0.0]), np.array([0.0, 1.0]))])
    nu = normal_at(dom, 0, np.array([0.3, 0.0]))
    np.testing.assert_allclose(nu, [0.0, 1.0], atol=0)


def test_cylinder_normal_is_transverse_radial(cylinder3d):
    nu = normal_at(cylinder3d, 0, np.array([0.7, 0.5, 0.9]))
    np.testing.assert_allclose(nu, [1.0, 0.0, 0.0], atol=1e-12)


def test_normal_off_boundary_rejected(sinai2d):
    with pytest.raises(BoundaryMismatchError):
        normal_at(sinai2d, 0, np.array([0.9, 0.5]))


def test_normal_unit_norm_random_boundary_points(sinai2d, cylinder3d):
    rng = np.random.default_rng(3)
    for dom in (sinai2d, cylinder3d):
        ref = np.full(dom.d, 0.5)
        for _ in range(50):
            q = project_to_boundary(dom, 0, ref + 0.3 * rng.standard_normal(dom.d))
            nu = normal_at(dom, 0, q)
            assert abs(np.linalg.norm(nu) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def test_sphere_curvature_is_inverse_radius_projector(sinai2d):
    K = curvature_at(sinai2d, 0, np.array([0.75, 0.5]))
    np.testing.assert_allclose(K.matrix, [[0.0, 0.0], [0.0, 4.0]], atol=1e-12)


def test_halfspace_curvature_is_zero():
    dom = Domain(2, Box((1.0, 1.0)),
                 [Halfspace(np.array([0.0, 0.0]), np.array([0.0, 1.0]))])
    K = curvature_at(dom, 0, np.array([0.4, 0.0]))
    assert np.all(K.matrix == 0.0)


def test_cylinder_curvature_eigenvalues(cylinder3d):
    K = curvature_at(cylinder3d, 0, np.array([0.7, 0.5, 0.3]))
    eig = np.sort(np.linalg.eigvalsh(K.matrix))
    np.testing.assert_allclose(eig, [0.0, 0.0, 5.0], atol=1e-12)


def test_curvature_symmetric_psd_annihilates_normal(sinai3d, cylinder3d, hardball32):
    rng = np.random.default_rng(11)
    for dom in (sinai3d, cylinder3d, hardball32):
        for idx in range(len(dom.scatterers)):
            q = project_to_boundary(dom, idx, rng.uniform(0, 1, dom.d))
            nu = normal_at(dom, idx, q)
            K = curvature_at(dom, idx, q).matrix
            assert np.allclose(K, K.T, atol=1e-12)
            assert np.min(np.linalg.eigvalsh(K)) >= -1e-12
            assert np.linalg.norm(K @ nu) < 1e-12


@pytest.mark.parametrize("domain_name,index", [
    ("sinai2d", 0), ("sinai3d", 0), ("cylinder3d", 0), ("hardball32", 1),
])
def test_curvature_matches_normal_variation(domain_name, index, request):
    # oracle: nu(q + dq) - nu(q) - K dq is second order in |dq|; halving the
    # step must shrink the squared residual by about 16
    dom = request.getfixturevalue(domain_name)
    rng = np.random.default_rng(17)
    q = project_to_boundary(dom, index, rng.uniform(0.2, 0.8, dom.d))
    nu = normal_at(dom, index, q)
    K = curvature_at(dom, index, q)
    tang = rng.standard_normal(dom.d)
    tang -= (tang @ nu) * nu
    tang /= np.linalg.norm(tang)

    def residual(h: float) -> float:
        q2 = project_to_boundary(dom, index, q + h * tang)
        dq = dom.min_image(q2 - q)
        return float(np.linalg.norm(normal_at(dom, index, q2) - nu - K.apply(dq)))

    r1, r2 = residual(1e-3), residual(5e-4)
    assert r1 < 1e-4                      # second order: about h^2 / (2 r^2)
    ratio = (r1 / r2) ** 2
    assert 10.0 < ratio < 22.0


# ---------------------------------------------------------------------------
# reflection and projections
# ---------------------------------------------------------------------------

def test_reflect_operator_examples():
    R = reflect_operator(np.array([1.0, 0.0]))
    np.testing.assert_allclose(R @ [1.0, 0.0], [-1.0, 0.0], atol=0)
    np.testing.assert_allclose(R @ [0.0, 1.0], [0.0, 1.0], atol=0)
    np.testing.assert_allclose(R @ [3.0, 4.0], [-3.0, 4.0], atol=0)


@settings(max_examples=200, deadline=None)
@given(nu=unit_vectors(3), x=vectors(3))
def test_reflect_operator_involution_isometry(nu, x):
    R = reflect_operator(nu)
    np.testing.assert_allclose(R @ (R @ x), x, atol=1e-12 * (1 + np.linalg.norm(x)))
    assert abs(np.linalg.norm(R @ x) - np.linalg.norm(x)) < 1e-12 * (1 + np.linalg.norm(x))
    np.testing.assert_allclose(R @ nu, -nu, atol=1e-12)


def test_tangent_projection_head_on_identity():
    V = tangent_projection(np.array([0.0, -1.0]), np.array([0.0, 1.0]))
    np.testing.assert_allclose(V @ [1.0, 0.0], [1.0, 0.0], atol=0)


def test_tangent_projection_oblique_value():
    v = np.array([-SQ2 / 2, -SQ2 / 2])
    nu = np.array([0.0, 1.0])
    x = np.array([SQ2 / 2, -SQ2 / 2])
    assert abs(x @ v) < 1e-15
    out = tangent_projection(v, nu) @ x
    np.testing.assert_allclose(out, [SQ2, 0.0], atol=1e-14)
    assert abs(out @ nu) < 1e-14


def test_transverse_projection_oblique_value():
    v = np.array([-SQ2 / 2, -SQ2 / 2])
    nu = np.array([0.0, 1.0])
    y = np.array([1.0, 0.0])
    out = transverse_projection(v, nu) @ y
    np.testing.assert_allclose(out, [1.0, -1.0], atol=1e-14)
    assert abs(out @ v) < 1e-14
    # adjoint pairing against the tangent projection
    x = np.array([SQ2 / 2, -SQ2 / 2])
    lhs = (tangent_projection(v, nu) @ x) @ y
    rhs = x @ out
    assert abs(lhs - rhs) < 1e-14


def test_projection_fixes_already_projected():
    v = np.array([0.0, -1.0, 0.0])
    nu = np.array([0.0, 1.0, 0.0])
    x = np.array([0.3, 0.0, -0.7])        # already tangent
    np.testing.assert_allclose(tangent_projection(v, nu) @ x, x, atol=0)
    y = np.array([1.0, 0.0, 2.0])          # already orthogonal to v
    np.testing.assert_allclose(transverse_projection(v, nu) @ y, y, atol=0)


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_projections_adjoint_and_ranges(data):
    rng_seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(rng_seed)
    d = data.draw(st.sampled_from([2, 3, 4]))
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    nu = rng.standard_normal(d)
    nu /= np.linalg.norm(nu)
    if abs(v @ nu) < 0.05:
        return
    x = rng.standard_normal(d)
    x -= (x @ v) * v                       # x in v-perp
    y = rng.standard_normal(d)
    y -= (y @ nu) * nu                     # y tangent to the boundary
    V = tangent_projection(v, nu)
    Vs = transverse_projection(v, nu)
    sx, sy = np.linalg.norm(x), np.linalg.norm(y)
    assert abs((V @ x) @ nu) < 1e-10 * max(sx, 1.0)
    assert abs((Vs @ y) @ v) < 1e-10 * max(sy, 1.0)
    assert abs((V @ x) @ y - x @ (Vs @ y)) < 1e-10 * max(sx * sy, 1.0)


def test_projection_grazing_rejected():
    with pytest.raises(GrazingSingularityError):
        tangent_projection(np.array([1.0, 0.0]), np.array([0.0, 1.0]))


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def test_build_sinai_valid():
    dom = build_sinai(2, 0.25, 1.0, [[0.5, 0.5]])
    assert dom.d == 2 and len(dom.scatterers) == 1
    dom3 = build_sinai(3, 0.3, 1.0, [[0.5, 0.5, 0.5]])
    assert dom3.d == 3


def test_build_sinai_wraparound_rejected():
    with pytest.raises(DomainConstructionError):
        build_sinai(2, 0.6, 1.0, [[0.5, 0.5]])


def test_build_sinai_overlap_rejected():
    with pytest.raises(DomainConstructionError):
        build_sinai(2, 0.25, 1.0, [[0.3, 0.5], [0.7, 0.5]])


def test_hardball_layout():
    dom = build_hardball_gas(2, 2, 0.1, 1.0)
    assert dom.d == 4 and len(dom.scatterers) == 1
    cyl = dom.scatterers[0]
    assert cyl.axis_directions.shape == (2, 4)
    dom3 = build_hardball_gas(3, 2, 0.1, 1.0)
    assert dom3.d == 6 and len(dom3.scatterers) == 3
    assert hardball_pairs(3) == [(0, 1), (0, 2), (1, 2)]


def test_hardball_contact_at_pair_distance():
    # the solid part is exactly {dist(q_i, q_j) <= 2r}
    dom = build_hardball_gas(2, 2, 0.1, 1.0)
    touching = np.array([0.3, 0.5, 0.5, 0.5])       # pair distance exactly 0.2
    assert abs(dom.signed_distance(0, touching)) < 1e-12
    apart = np.array([0.3, 0.5, 0.55, 0.5])
    assert dom.signed_distance(0, apart) > 0.0
    overlapping = np.array([0.3, 0.5, 0.45, 0.5])
    assert dom.signed_distance(0, overlapping) < 0.0


def test_hardball_pair_distance_uses_torus_metric():
    dom = build_hardball_gas(2, 2, 0.1, 1.0)
    # balls at x = 0.05 and 0.95 are 0.1 apart through the seam: inside the solid
    through_seam = np.array([0.05, 0.5, 0.95, 0.5])
    assert dom.signed_distance(0, through_seam) < 0.0


def test_hardball_preconditions():
    with pytest.raises(DomainConstructionError):
        build_hardball_gas(2, 2, 0.3, 1.0)
    with pytest.raises(DomainConstructionError):
        build_hardball_gas(1, 2, 0.1, 1.0)


def test_reduce_pair_to_sinai():
    dom = reduce_pair_to_sinai(2, 0.1, 1.0)
    assert dom.d == 2
    assert isinstance(dom.scatterers[0], Sphere)
    assert dom.scatterers[0].radius == pytest.approx(0.2)
    dom3 = reduce_pair_to_sinai(3, 0.1, 1.0)
    assert dom3.d == 3
    with pytest.raises(DomainConstructionError):
        reduce_pair_to_sinai(2, 0.3, 1.0)


def test_halfspace_on_torus_rejected():
    with pytest.raises(DomainConstructionError):
        Domain(2, Torus(1.0), [Halfspace(np.zeros(2), np.array([0.0, 1.0]))])


def test_cylinder_axis_count_bounds():
    with pytest.raises(DomainConstructionError):
        Cylinder(np.zeros(2), np.array([[1.0, 0.0]]), 0.1)  # d=2 has no room
    with pytest.raises(DomainConstructionError):
        Cylinder(np.zeros(3), np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), 0.1)


def test_parallel_cylinder_overlap_rejected():
    a = Cylinder(np.array([0.25, 0.5, 0.0]), np.array([[0.0, 0.0, 1.0]]), 0.2)
    b = Cylinder(np.array([0.45, 0.5, 0.0]), np.array([[0.0, 0.0, 1.0]]), 0.2)
    with pytest.raises(DomainConstructionError):
        Domain(3, Torus(1.0), [a, b])
