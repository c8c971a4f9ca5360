import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from polyvol.core import MINKOWSKI_SIGNS, OrientedPlane, apply_lorentz, lift, random_isometry
from polyvol.errors import ImproperInput, NotIdeal, PathDiscontinuous
from polyvol.graphs import PlanarGraph, tetrahedron_graph
from polyvol.polyhedron import build_polyhedron, dihedral_angles, truncate
from polyvol.shapes import planes_from_vertices, regular_tetrahedron
from polyvol.volume import (
    VolumeMethod,
    _ideal_decomposition,
    ideal_tetrahedron_angles,
    ideal_tetrahedron_volume,
    integrate_klein_tets,
    lobachevsky,
    polyhedron_volume,
    schlafli_residual,
)

CATALAN = 0.9159655941772190
V8 = 4 * CATALAN  # 8 * L(pi/4) = 3.663862376708876


def lob_quadrature_oracle(x):
    val, _ = quad(lambda t: -math.log(abs(2 * math.sin(t))) if t else 0.0, 0, x,
                  limit=300)
    return val


# --- Lobachevsky function -------------------------------------------------------

def test_lobachevsky_frozen_values():
    assert lobachevsky(0.0) == 0.0
    assert abs(lobachevsky(math.pi / 2)) < 1e-15
    assert abs(lobachevsky(math.pi / 4) - CATALAN / 2) < 1e-15
    assert abs(8 * lobachevsky(math.pi / 4) - 3.663862376708876) < 1e-14
    assert abs(3 * lobachevsky(math.pi / 3) - 1.0149416064096535) < 1e-14


@pytest.mark.parametrize("x", [0.05, 0.3, math.pi / 4, 1.0, math.pi / 3, 1.5])
def test_lobachevsky_matches_integral_oracle(x):
    assert abs(lobachevsky(x) - lob_quadrature_oracle(x)) < 1e-12


def test_lobachevsky_identities_grid():
    xs = np.linspace(-4.0, 4.0, 161)
    assert np.max(np.abs(lobachevsky(-xs) + lobachevsky(xs))) < 1e-12
    assert np.max(np.abs(lobachevsky(xs + math.pi) - lobachevsky(xs))) < 1e-12
    dup = lobachevsky(2 * xs) - 2 * lobachevsky(xs) - 2 * lobachevsky(xs + math.pi / 2)
    assert np.max(np.abs(dup)) < 1e-12


@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
@settings(max_examples=300, deadline=None)
def test_lobachevsky_identities_random(x):
    assert abs(lobachevsky(-x) + lobachevsky(x)) < 1e-12
    assert abs(lobachevsky(x + math.pi) - lobachevsky(x)) < 1e-12


# --- ideal tetrahedra ------------------------------------------------------------

REGULAR_IDEAL = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
                         dtype=float) / math.sqrt(3)


def test_regular_ideal_tetrahedron():
    angles = ideal_tetrahedron_angles(REGULAR_IDEAL)
    for a in angles:
        assert abs(a - math.pi / 3) < 1e-12
    v = ideal_tetrahedron_volume(REGULAR_IDEAL)
    assert abs(v - 3 * lobachevsky(math.pi / 3)) < 1e-13


def test_regular_ideal_against_quadrature_oracle():
    v_exact = ideal_tetrahedron_volume(REGULAR_IDEAL)
    v_quad, err, _, _ = integrate_klein_tets(REGULAR_IDEAL[None], tol=1e-4,
                                             budget=3_000_000)
    assert abs(v_quad - v_exact) < 1e-4


def test_half_octahedron_tetrahedra_tile():
    # angles (pi/2, pi/4, pi/4); four copies tile the ideal octahedron
    T = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, 0, 1]], dtype=float)
    angles = sorted(ideal_tetrahedron_angles(T))
    assert abs(angles[0] - math.pi / 4) < 1e-12
    assert abs(angles[2] - math.pi / 2) < 1e-12
    v = ideal_tetrahedron_volume(T)
    assert abs(v - 2 * lobachevsky(math.pi / 4)) < 1e-13
    total = 0.0
    for d in ([0, 0, 1], [0, 0, -1]):
        for pair in ([[1, 0, 0], [0, 1, 0]], [[-1, 0, 0], [0, -1, 0]]):
            pts = np.array([pair[0], pair[1],
                            [-pair[0][0], -pair[0][1], 0], d], dtype=float)
            total += ideal_tetrahedron_volume(pts)
    assert abs(total - V8) < 1e-12


def test_flat_configuration_is_zero():
    C = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], dtype=float)
    assert ideal_tetrahedron_volume(C) == 0.0


def test_not_ideal_rejected():
    pts = REGULAR_IDEAL.copy()
    pts[0] *= 1.01
    with pytest.raises(NotIdeal):
        ideal_tetrahedron_volume(pts)


# --- polyhedron volume --------------------------------------------------------------

def test_rectified_tetrahedron_volume_exact():
    P = regular_tetrahedron(math.sqrt(3), rectified=True)
    res = polyhedron_volume(P)
    assert res.method == VolumeMethod.IDEAL_DECOMPOSITION
    assert abs(res.value - V8) < 1e-4
    assert abs(res.value - V8) < 1e-10  # the decomposition path is exact


def test_decomposition_independent_of_cone_vertex():
    P = regular_tetrahedron(math.sqrt(3), rectified=True)
    T = truncate(P)
    v0, _ = _ideal_decomposition(T, 1e-7, apex_id=0)
    v3, _ = _ideal_decomposition(T, 1e-7, apex_id=3)
    assert abs(v0 - v3) < 1e-8


def test_compact_volume_against_monte_carlo(rng, compact_tetra):
    res = polyhedron_volume(compact_tetra, tol=1e-5)
    pts = rng.uniform(-0.6, 0.6, size=(1_500_000, 3))
    normals = np.array([p.normal for p in compact_tetra.planes])
    margins = lift(pts) @ (normals * MINKOWSKI_SIGNS).T
    inside = np.all(margins <= 0, axis=1)
    r2 = np.sum(pts * pts, axis=1)
    f = np.where(inside, 1.0 / (1.0 - r2) ** 2, 0.0)
    mc = f.mean() * 1.2 ** 3
    mc_err = 3 * f.std() / math.sqrt(len(f)) * 1.2 ** 3
    assert abs(mc - res.value) < mc_err + res.error_estimate


def test_hyperideal_volume_positive(hyperideal_tetra):
    res = polyhedron_volume(hyperideal_tetra, tol=1e-4)
    assert res.method == VolumeMethod.KLEIN_QUADRATURE
    assert 0 < res.value < V8


def test_volume_zero_truncation(rng):
    # A tetrahedron whose three real vertices all lie exactly on the polar
    # plane of its hyperideal vertex: the truncation is the flat triangle
    # inside that plane, so the volume vanishes.  (A genuinely empty
    # truncation is unreachable for tetrahedra: the deepest point of every
    # edge survives its own endpoints' polar cuts.)
    g = tetrahedron_graph()
    pts = np.array([[2.0, 0.0, 0.0], [0.5, 0.5, 0.0],
                    [0.5, -0.4, 0.4], [0.5, -0.1, -0.5]])
    P = build_polyhedron(planes_from_vertices(pts, g), g)
    res = polyhedron_volume(P)
    assert res.value == 0.0
    # Monte-Carlo: the truncated region inside the ball has no volume.
    box = rng.uniform(-1.0, 1.0, size=(400_000, 3))
    normals = np.array([p.normal for p in P.planes])
    margins = lift(box) @ (normals * MINKOWSKI_SIGNS).T
    in_poly = np.all(margins <= 1e-9, axis=1)
    in_polars = box @ pts[0] <= 1.0 - 1e-9
    in_ball = np.sum(box * box, axis=1) < 1.0
    assert not np.any(in_poly & in_polars & in_ball)


def test_volume_monotone_under_inclusion(compact_tetra):
    # Slice a corner off the compact tetrahedron: more half-spaces, less volume.
    g5 = PlanarGraph(6, ((0, 1, 2), (0, 2, 5, 3), (0, 3, 4, 1), (1, 4, 5, 2),
                         (3, 4, 5)))
    slicer = OrientedPlane.from_chart(np.array([-1.0, -1.0, 1.0]) / math.sqrt(3),
                                      0.45)
    Q = build_polyhedron(compact_tetra.planes + (slicer,), g5)
    v_p = polyhedron_volume(compact_tetra, tol=1e-5)
    v_q = polyhedron_volume(Q, tol=1e-5)
    assert v_q.value <= v_p.value + v_p.error_estimate + v_q.error_estimate
    assert v_q.value < v_p.value


def test_volume_isometry_invariant(rng, hyperideal_tetra):
    res = polyhedron_volume(hyperideal_tetra, tol=1e-5)
    for _ in range(3):
        L = random_isometry(rng)
        planes2 = tuple(apply_lorentz(L, pl) for pl in hyperideal_tetra.planes)
        Q = build_polyhedron(planes2, hyperideal_tetra.skeleton)
        res2 = polyhedron_volume(Q, tol=1e-5)
        assert abs(res.value - res2.value) < 1e-4


def test_improper_volume_rejected():
    g = tetrahedron_graph()
    v = np.array([2.0, 0.0, 0.0])
    w = np.array([0.6, 0.3, 0.0])
    u = np.array([0.2, -0.5, 0.3])
    x = np.array([0.0, 0.0, -0.4])
    P = build_polyhedron(planes_from_vertices(np.array([v, w, u, x]), g), g)
    with pytest.raises(ImproperInput):
        polyhedron_volume(P)


def test_budget_flag():
    P = regular_tetrahedron(1.3)
    res = polyhedron_volume(P, tol=1e-12, budget=5000)
    assert res.budget_exceeded
    assert res.value > 0


# --- Schlafli residual ----------------------------------------------------------------

def test_schlafli_constant_path(compact_tetra):
    res = schlafli_residual(lambda t: compact_tetra, 0.5, 1e-4)
    assert res < 1e-9


def _angle_family(base, factor_a, factor_b):
    from polyvol.flow import realize_from_angles

    g = base.skeleton
    th0 = dihedral_angles(base)
    th_a = {e: a * factor_a for e, a in th0.items()}
    th_b = {e: a * factor_b for e, a in th0.items()}
    mid = realize_from_angles(g, {e: 0.5 * (th_a[e] + th_b[e]) for e in g.edges},
                              base)

    def path(t):
        th = {e: (1 - t) * th_a[e] + t * th_b[e] for e in g.edges}
        return realize_from_angles(g, th, mid)

    return path


def test_schlafli_compact_family(compact_tetra):
    path = _angle_family(compact_tetra, 1.02, 0.98)
    assert schlafli_residual(path, 0.5, 1e-4) < 1e-3


def test_schlafli_hyperideal_family(hyperideal_tetra):
    path = _angle_family(hyperideal_tetra, 1.05, 0.95)
    assert schlafli_residual(path, 0.5, 1e-4) < 1e-3


def test_schlafli_detects_discontinuity():
    def path(t):
        return regular_tetrahedron(1.0 + (t - 0.5))  # ideal at t = 0.5

    with pytest.raises(PathDiscontinuous):
        schlafli_residual(path, 0.5, 1e-4)

    from polyvol.shapes import compact_realization
    from polyvol.graphs import pyramid_graph

    P1 = regular_tetrahedron(0.5)
    P2 = compact_realization(pyramid_graph(4), 0.5)

    def path2(t):
        return P1 if t < 0.5001 else P2

    with pytest.raises(PathDiscontinuous):
        schlafli_residual(path2, 0.5, 1e-3)
