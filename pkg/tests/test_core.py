import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyvol.core import (
    AffineDeformation,
    OrientedPlane,
    PointKind,
    ProjectivePoint,
    Separation,
    apply_deformation,
    apply_lorentz,
    boost_to_origin,
    classify_point,
    dihedral_angle,
    distance_plane_plane,
    distance_point_plane,
    distance_point_point,
    hyperbolic_distance,
    in_tangent_cone,
    lift,
    mdot,
    polar_plane,
    pole_of,
    poles_separated,
    random_isometry,
)
from polyvol.errors import (
    DegenerateDeformation,
    OutsideModel,
    PlanesDisjointInBall,
    PlanesEqual,
    PoleNotHyperideal,
)

finite_coords = st.floats(min_value=-3.0, max_value=3.0,
                          allow_nan=False, allow_infinity=False)


# --- classification -----------------------------------------------------------

def test_classify_examples():
    assert classify_point([0, 0, 0]) == PointKind.REAL
    assert classify_point([1, 0, 0]) == PointKind.IDEAL
    assert classify_point([2, 0, 0]) == PointKind.HYPERIDEAL


def test_classify_rotation_stable(rng):
    p = np.array([0.3, -0.7, 0.2])
    for _ in range(20):
        q = rng.normal(size=(3, 3))
        Q, _ = np.linalg.qr(q)
        assert classify_point(Q @ p) == classify_point(p)


@given(st.tuples(finite_coords, finite_coords, finite_coords))
@settings(max_examples=200, deadline=None)
def test_classify_matches_minkowski_sign(coords):
    p = np.array(coords)
    sq = float(mdot(lift(p), lift(p)))
    if abs(np.linalg.norm(p) - 1.0) <= 1e-6:
        return  # skip the ideal band
    kind = classify_point(p)
    if sq < 0:
        assert kind == PointKind.REAL
    else:
        assert kind == PointKind.HYPERIDEAL


def test_point_at_infinity_rejected():
    p = ProjectivePoint(lift=np.array([0.0, 1.0, 0.0, 0.0]))
    assert p.at_infinity
    with pytest.raises(OutsideModel):
        _ = p.chart


# --- polar planes --------------------------------------------------------------

def test_polar_plane_examples():
    pl = polar_plane([2, 0, 0])
    d, c = pl.chart_equation()
    np.testing.assert_allclose(d / np.linalg.norm(d), [1, 0, 0], atol=1e-12)
    assert abs(c / np.linalg.norm(d) - 0.5) < 1e-12
    # half-space x <= 1/2 contains the origin
    assert pl.contains([0, 0, 0])
    assert not pl.contains([0.6, 0, 0])

    pl_z = polar_plane([0, 0, 2])
    d, c = pl_z.chart_equation()
    np.testing.assert_allclose(d / np.linalg.norm(d), [0, 0, 1], atol=1e-12)
    assert abs(c / np.linalg.norm(d) - 0.5) < 1e-12

    far = polar_plane([10, 0, 0])
    d, c = far.chart_equation()
    assert abs(c / np.linalg.norm(d) - 0.1) < 1e-12
    # the farther the pole, the closer the plane to the origin
    assert abs(np.linalg.norm(far.closest_chart_point())) < \
        abs(np.linalg.norm(pl.closest_chart_point()))


def test_polar_plane_rejects_non_hyperideal():
    with pytest.raises(PoleNotHyperideal):
        polar_plane([0.5, 0, 0])
    with pytest.raises(PoleNotHyperideal):
        polar_plane([1.0, 0, 0])


def _line_orthogonal_to_plane_at_crossing(p, direction, plane):
    """Oracle: Minkowski-orthogonality of a line and plane at their crossing.

    Solves for the crossing point x, builds the line's unit tangent in
    the tangent space at x, and checks it is (anti)parallel to the plane
    normal there, i.e. |<u, n>| = 1.
    """
    d, c = plane.chart_equation()
    denom = float(d @ direction)
    t = (c - float(d @ p)) / denom
    x = p + t * direction
    assert np.linalg.norm(x) < 1.0  # crossing inside the ball
    xhat = lift(x) / math.sqrt(-mdot(lift(x), lift(x)))
    u = np.concatenate([[0.0], direction])
    u = u + mdot(u, xhat) * xhat  # project onto the tangent space at x
    u = u / math.sqrt(mdot(u, u))
    return abs(float(mdot(u, plane.normal)))


def test_polar_plane_orthogonality_oracle(rng):
    for pole in ([2.0, 0, 0], [10.0, 0, 0], [1.5, -0.8, 0.4]):
        pole = np.array(pole)
        plane = polar_plane(pole)
        hits = 0
        while hits < 10:
            target = rng.uniform(-0.5, 0.5, size=3)
            direction = target - pole
            direction /= np.linalg.norm(direction)
            val = _line_orthogonal_to_plane_at_crossing(pole, direction, plane)
            assert abs(val - 1.0) < 1e-9
            hits += 1


@given(st.tuples(finite_coords, finite_coords, finite_coords))
@settings(max_examples=200, deadline=None)
def test_polar_involution(coords):
    p = np.array(coords)
    if np.linalg.norm(p) <= 1.2:
        return
    pl = polar_plane(p)
    back = pole_of(pl)
    np.testing.assert_allclose(back.chart, p, atol=1e-10)


def test_plane_complement_involution():
    pl = polar_plane([2, 0, 0])
    assert np.allclose(pl.complement().complement().normal, pl.normal)
    assert pl.complement().contains([0.6, 0, 0])
    assert not pl.complement().contains([0, 0, 0])


# --- pole separation ------------------------------------------------------------

def test_poles_separated_examples(rng):
    assert poles_separated([-2, 0, 0], [2, 0, 0]) == Separation.SEGMENT_THROUGH
    assert poles_separated([4, 0, 0], [2, 0, 0]) == Separation.HALF_LINE_THROUGH
    assert poles_separated([2, 0, 0], [0, 2.5, 0]) == Separation.NEITHER

    # SegmentThrough forces mutual polar containment, sampled.
    p, q = np.array([-2.0, 0, 0]), np.array([2.0, 0, 0])
    Pp, Pq = polar_plane(p), polar_plane(q)
    for plane, other in ((Pp, Pq), (Pq, Pp)):
        x0 = plane.closest_chart_point()
        e1, e2 = plane.basis()
        for _ in range(1000):
            s, t = rng.uniform(-1, 1, size=2)
            pt = x0 + s * e1 + t * e2
            if np.linalg.norm(pt) < 1.0:
                assert other.contains(pt, slack=1e-12)

    # HalfLineThrough forces H_p inside H_q ({x <= 1/4} inside {x <= 1/2}).
    p, q = np.array([4.0, 0, 0]), np.array([2.0, 0, 0])
    Hq = polar_plane(q)
    for _ in range(1000):
        pt = rng.uniform(-1, 1, size=3)
        if np.linalg.norm(pt) < 1.0 and polar_plane(p).contains(pt):
            assert Hq.contains(pt, slack=1e-12)


def test_poles_separated_symmetry(rng):
    for _ in range(50):
        p = rng.uniform(-3, 3, size=3)
        q = rng.uniform(-3, 3, size=3)
        if min(np.linalg.norm(p), np.linalg.norm(q)) < 1.2:
            continue
        if poles_separated(p, q) == Separation.SEGMENT_THROUGH:
            assert poles_separated(q, p) == Separation.SEGMENT_THROUGH


# --- dihedral angles -------------------------------------------------------------

def test_dihedral_angle_orthogonal_planes():
    a = OrientedPlane.from_chart([-1, 0, 0], 0.0)  # keep x >= 0
    b = OrientedPlane.from_chart([0, -1, 0], 0.0)  # keep y >= 0
    assert abs(dihedral_angle(a, b) - math.pi / 2) < 1e-12


def test_dihedral_angle_tangent_line_is_zero():
    # Planes x+z = 1 and x-z = 1 meet in the line {(1, t, 0)} tangent at (1,0,0).
    a = OrientedPlane.from_chart([1, 0, 1], 1.0)
    b = OrientedPlane.from_chart([1, 0, -1], 1.0)
    assert abs(dihedral_angle(a, b)) < 1e-9


def test_dihedral_angle_errors():
    a = OrientedPlane.from_chart([1, 0, 0], 0.0)
    with pytest.raises(PlanesEqual):
        dihedral_angle(a, OrientedPlane.from_chart([1, 0, 0], 0.0))
    far = OrientedPlane.from_chart([1, 0, 0], 0.5)
    far2 = OrientedPlane.from_chart([-1, 0, 0], 0.5)
    with pytest.raises(PlanesDisjointInBall):
        dihedral_angle(far, far2)


def _geodesic_angle_oracle(a, b):
    """Independent dihedral angle from in-plane directions at a crossing point.

    Finds a point x on the intersection line inside the ball, builds the
    tangent vector of each plane orthogonal to the line and oriented into
    the other half-space, and measures the Minkowski angle between them.
    """
    da, ca = a.chart_equation()
    db, cb = b.chart_equation()
    line_dir = np.cross(da, db)
    line_dir /= np.linalg.norm(line_dir)
    A = np.array([da, db, line_dir])
    x = np.linalg.solve(A, [ca, cb, 0.0])
    # walk along the line into the ball if needed
    if np.linalg.norm(x) >= 1.0:
        ts = np.linspace(-2, 2, 4001)
        pts = x[None, :] + ts[:, None] * line_dir[None, :]
        k = int(np.argmin(np.sum(pts * pts, axis=1)))
        x = pts[k]
    assert np.linalg.norm(x) < 1.0
    xhat = lift(x) / math.sqrt(-mdot(lift(x), lift(x)))
    ell = np.concatenate([[0.0], line_dir])
    ell = ell + mdot(ell, xhat) * xhat
    ell /= math.sqrt(mdot(ell, ell))

    def in_plane_dir(plane, other):
        n = plane.normal
        u = None
        for cand in np.eye(4):
            u = cand + mdot(cand, xhat) * xhat
            u = u - mdot(u, n) * n
            u = u - mdot(u, ell) * ell
            if mdot(u, u) > 1e-6:
                break
        u /= math.sqrt(mdot(u, u))
        if mdot(u, other.normal) > 0:
            u = -u
        return u

    u1 = in_plane_dir(a, b)
    u2 = in_plane_dir(b, a)
    return math.acos(np.clip(mdot(u1, u2), -1, 1))


def test_dihedral_angle_geodesic_oracle(rng):
    made = 0
    while made < 12:
        n1 = rng.normal(size=3)
        n1 /= np.linalg.norm(n1)
        n2 = rng.normal(size=3)
        n2 /= np.linalg.norm(n2)
        c1, c2 = rng.uniform(-0.5, 0.5, size=2)
        try:
            a = OrientedPlane.from_chart(n1, c1)
            b = OrientedPlane.from_chart(n2, c2)
            theta = dihedral_angle(a, b)
        except (PlanesDisjointInBall, PlanesEqual):
            continue
        oracle = _geodesic_angle_oracle(a, b)
        assert abs(theta - oracle) < 1e-8
        made += 1


def test_dihedral_angle_symmetric_and_isometry_invariant(rng):
    a = OrientedPlane.from_chart([1, 0.2, 0], 0.3)
    b = OrientedPlane.from_chart([0, 1, -0.1], -0.2)
    assert abs(dihedral_angle(a, b) - dihedral_angle(b, a)) < 1e-15
    for _ in range(10):
        L = random_isometry(rng)
        a2 = apply_lorentz(L, a)
        b2 = apply_lorentz(L, b)
        assert abs(dihedral_angle(a2, b2) - dihedral_angle(a, b)) < 1e-10


# --- distances --------------------------------------------------------------------

def _klein_length_oracle(x, y, samples=20001):
    """Arc length of the chart segment under the Klein metric, by quadrature."""
    ts = np.linspace(0.0, 1.0, samples)
    pts = x[None, :] + ts[:, None] * (y - x)[None, :]
    d = (y - x)
    r2 = np.sum(pts * pts, axis=1)
    xd = pts @ d
    integrand = np.sqrt(np.maximum(
        (d @ d) / (1 - r2) + xd * xd / (1 - r2) ** 2, 0.0))
    return float(np.trapezoid(integrand, ts))


def test_distance_examples():
    assert distance_point_point([0, 0, 0], [0, 0, 0]) == 0.0
    p = np.array([math.tanh(1.0), 0, 0])
    assert abs(distance_point_point(p, [0, 0, 0]) - 1.0) < 1e-12
    assert abs(_klein_length_oracle(np.zeros(3), p) - 1.0) < 1e-6
    plane = OrientedPlane.from_chart([1, 0, 0], 0.0)
    assert abs(distance_point_plane(p, plane) - 1.0) < 1e-12
    assert abs(hyperbolic_distance(plane, p) - 1.0) < 1e-12


def test_distance_point_point_matches_metric_integral(rng):
    for _ in range(5):
        x = rng.uniform(-0.5, 0.5, size=3)
        y = rng.uniform(-0.5, 0.5, size=3)
        d = distance_point_point(x, y)
        assert abs(d - _klein_length_oracle(x, y)) < 1e-6


def test_plane_plane_distance():
    a = OrientedPlane.from_chart([1, 0, 0], 0.3)
    b = OrientedPlane.from_chart([1, 0, 0], 0.7)
    assert distance_plane_plane(a, b) > 0
    c = OrientedPlane.from_chart([0, 1, 0], 0.0)
    assert distance_plane_plane(a, c) == 0.0


def test_distance_rejects_outside_points():
    with pytest.raises(OutsideModel):
        distance_point_point([2, 0, 0], [0, 0, 0])


# --- deformations -----------------------------------------------------------------

def test_deformation_identity_and_homothety():
    ident = AffineDeformation.identity()
    p = np.array([0.3, 0.0, 0.0])
    np.testing.assert_allclose(ident.apply_point(p), p)
    h = AffineDeformation.homothety([0, 0, 0], 2.0)
    np.testing.assert_allclose(h.apply_point([0.3, 0, 0]), [0.6, 0, 0])


def test_deformation_rejects_bad_factor():
    with pytest.raises(DegenerateDeformation):
        AffineDeformation.homothety([0, 0, 0], 0.0)


def test_deformation_composition_same_kind():
    h1 = AffineDeformation.homothety([0, 0, 0], 2.0)
    h2 = AffineDeformation.homothety([0, 0, 0], 3.0)
    assert h1.compose(h2).kind == "homothety"
    t1 = AffineDeformation.translation([1, 0, 0])
    t2 = AffineDeformation.translation([0, 1, 0])
    comp = t1.compose(t2)
    assert comp.kind == "translation"
    np.testing.assert_allclose(comp.apply_point([0, 0, 0]), [1, 1, 0])


def test_deformation_plane_through_images_of_points(rng):
    plane = OrientedPlane.from_chart([1, 1, 0], 0.4)
    d, c = plane.chart_equation()
    x0 = plane.closest_chart_point()
    e1, e2 = plane.basis()
    pts = [x0, x0 + 0.3 * e1, x0 - 0.2 * e1 + 0.4 * e2]
    t = AffineDeformation.translation([0.05, -0.1, 0.2])
    img_plane = t.apply_plane(plane)
    for p in pts:
        assert abs(img_plane.side_of(t.apply_point(p))) < 1e-12
    # side carried along
    inside = x0 - 0.1 * d / np.linalg.norm(d)
    assert plane.contains(inside) == img_plane.contains(t.apply_point(inside))


def test_unproper_lemma_instance():
    # v=(2,0,0), w just inside the polar half-space; translating toward the
    # ball keeps the image of w strictly inside the image half-space.
    v = np.array([2.0, 0, 0])
    w = np.array([0.49, 0, 0])
    assert polar_plane(v).contains(w)
    t = AffineDeformation.translation([-0.05, 0, 0])
    v2 = t.apply_point(v)
    assert in_tangent_cone(v, v2)
    w2 = t.apply_point(w)
    pl2 = polar_plane(v2)
    assert pl2.side_of(w2) < -1e-12


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_unproper_lemma_property(seed):
    rng = np.random.default_rng(seed)
    v = rng.uniform(-2.5, 2.5, size=3)
    if np.linalg.norm(v) < 1.3:
        return
    w = rng.uniform(-0.9, 0.9, size=3)
    if np.linalg.norm(w) >= 1.0 or not polar_plane(v).contains(w):
        return
    lam = rng.uniform(0.7, 0.999)
    d = AffineDeformation.homothety([0, 0, 0], lam)  # contraction: stays in cone
    v2 = d.apply_point(v)
    if np.linalg.norm(v2) <= 1.0 + 1e-9 or not in_tangent_cone(v, v2, tol=1e-12):
        return
    w2 = d.apply_point(w)
    if np.linalg.norm(w2) < 1.0:
        assert polar_plane(v2).side_of(w2) < 1e-12


def test_deformation_commutes_with_skeleton(hyperideal_tetra):
    from polyvol.polyhedron import build_polyhedron

    P = hyperideal_tetra
    t = AffineDeformation.translation([0.02, -0.03, 0.01])
    planes2 = tuple(t.apply_plane(pl) for pl in P.planes)
    Q = build_polyhedron(planes2, P.skeleton)
    expect = np.array([t.apply_point(x) for x in P.vertex_charts])
    np.testing.assert_allclose(Q.vertex_charts, expect, atol=1e-9)


def test_isometry_invariance_of_measurements(rng):
    a = OrientedPlane.from_chart([1, 0.1, -0.2], 0.1)
    b = OrientedPlane.from_chart([-0.3, 1, 0.2], -0.2)
    x = np.array([0.2, -0.1, 0.3])
    y = np.array([-0.4, 0.2, 0.1])
    for _ in range(10):
        L = random_isometry(rng)
        a2, b2 = apply_lorentz(L, a), apply_lorentz(L, b)
        x2 = apply_lorentz(L, lift(x))
        y2 = apply_lorentz(L, lift(y))
        x2 = x2[1:] / x2[0]
        y2 = y2[1:] / y2[0]
        assert abs(dihedral_angle(a, b) - dihedral_angle(a2, b2)) < 1e-9
        assert abs(distance_point_point(x, y) - distance_point_point(x2, y2)) < 1e-9
        assert abs(distance_point_plane(x, a) - distance_point_plane(x2, a2)) < 1e-9
