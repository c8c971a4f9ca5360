import math

import numpy as np
import pytest

from polyvol.core import (
    OrientedPlane,
    PointKind,
    apply_lorentz,
    dihedral_angle,
    distance_plane_plane,
    polar_plane,
    random_isometry,
)
from polyvol.errors import (
    EdgeMissesBall,
    ImproperInput,
    NonConvex,
    SkeletonMismatch,
    TooFewAngles,
)
from polyvol.graphs import tetrahedron_graph, pyramid_graph
from polyvol.polyhedron import (
    VertexStatus,
    build_polyhedron,
    classify_vertex_by_angles,
    classify_vertices,
    dihedral_angles,
    edge_lengths,
    format_polyhedron,
    parse_polyhedron,
    strip_truncation,
    truncate,
)
from polyvol.shapes import planes_from_vertices, regular_tetrahedron


# --- construction ------------------------------------------------------------

def test_build_compact_regular_tetrahedron(compact_tetra):
    P = compact_tetra
    assert len(P.planes) == 4
    np.testing.assert_allclose(np.linalg.norm(P.vertex_charts, axis=1), 0.55,
                               atol=1e-10)
    rep = classify_vertices(P)
    assert all(k == PointKind.REAL for k in rep.kinds)
    assert rep.overall == VertexStatus.PROPER


def test_build_hyperideal_regular_tetrahedron(hyperideal_tetra):
    rep = classify_vertices(hyperideal_tetra)
    assert all(k == PointKind.HYPERIDEAL for k in rep.kinds)
    assert rep.overall == VertexStatus.PROPER


def test_regular_tetrahedron_edge_condition():
    # Edges of the radius-R regular tetrahedron meet the ball iff R < sqrt(3);
    # the nominal "radius 2" hyperideal example violates the definition.
    with pytest.raises(EdgeMissesBall):
        regular_tetrahedron(2.0)


def test_build_plane_count_mismatch(compact_tetra):
    with pytest.raises(SkeletonMismatch):
        build_polyhedron(compact_tetra.planes[:3], compact_tetra.skeleton)


def test_build_detects_nonconvex(compact_tetra):
    planes = list(compact_tetra.planes)
    planes[0] = planes[0].complement()
    with pytest.raises((NonConvex, SkeletonMismatch)):
        build_polyhedron(tuple(planes), compact_tetra.skeleton)


def test_build_detects_extra_intersections():
    # A 5-plane tuple whose fifth plane slices through the tetrahedron makes
    # the K4-with-extra-face skeleton unrealizable.
    P = regular_tetrahedron(0.6)
    g5 = pyramid_graph(4)
    planes = P.planes + (OrientedPlane.from_chart([0, 0, 1], 0.05),)
    with pytest.raises(SkeletonMismatch):
        build_polyhedron(planes, g5)


# --- classification ------------------------------------------------------------

def test_classify_vertex_by_angles_examples():
    assert classify_vertex_by_angles([math.pi / 2] * 3) == PointKind.REAL
    assert classify_vertex_by_angles([math.pi / 3] * 3) == PointKind.IDEAL
    assert classify_vertex_by_angles([math.pi / 6] * 3) == PointKind.HYPERIDEAL
    with pytest.raises(TooFewAngles):
        classify_vertex_by_angles([1.0, 1.0])


def almost_proper_tetrahedron():
    g = tetrahedron_graph()
    v = np.array([2.0, 0.0, 0.0])
    w = np.array([0.5, 0.3, 0.0])      # exactly on the polar plane {x = 1/2}
    u = np.array([0.45, -0.3, 0.3])
    x = np.array([0.4, 0.0, -0.3])
    return build_polyhedron(planes_from_vertices(np.array([v, w, u, x]), g), g)


def test_almost_proper_witness():
    P = almost_proper_tetrahedron()
    rep = classify_vertices(P)
    assert rep.kinds[0] == PointKind.HYPERIDEAL
    assert rep.statuses[1] == VertexStatus.ALMOST_PROPER
    assert rep.witnesses[1] == 0
    assert rep.overall == VertexStatus.ALMOST_PROPER


def test_improper_detected():
    g = tetrahedron_graph()
    v = np.array([2.0, 0.0, 0.0])
    w = np.array([0.6, 0.3, 0.0])      # beyond the polar plane
    u = np.array([0.2, -0.5, 0.3])
    x = np.array([0.0, 0.0, -0.4])
    P = build_polyhedron(planes_from_vertices(np.array([v, w, u, x]), g), g)
    rep = classify_vertices(P)
    assert rep.overall == VertexStatus.IMPROPER
    with pytest.raises(ImproperInput):
        truncate(P)
    with pytest.raises(ImproperInput):
        edge_lengths(P)


def test_angle_geometry_consistency(compact_tetra, hyperideal_tetra):
    for P in (compact_tetra, hyperideal_tetra, almost_proper_tetrahedron()):
        th = dihedral_angles(P)
        rep = classify_vertices(P, tol=1e-6)
        for v in range(P.skeleton.n_vertices):
            inc = [th[e] for e in P.skeleton.vertex_edges[v]]
            assert classify_vertex_by_angles(inc, tol=1e-6) == rep.kinds[v]


# --- angles and lengths -----------------------------------------------------------

def test_dihedral_angles_symmetry(compact_tetra):
    th = dihedral_angles(compact_tetra)
    vals = list(th.values())
    assert max(vals) - min(vals) < 1e-10
    # compact regular tetrahedra approach the Euclidean arccos(1/3) ~ 1.23
    small = dihedral_angles(regular_tetrahedron(0.05))
    assert abs(list(small.values())[0] - math.acos(1 / 3)) < 1e-3


def test_ideal_tetrahedron_angles():
    P = regular_tetrahedron(1.0)
    th = dihedral_angles(P)
    for a in th.values():
        assert abs(a - math.pi / 3) < 1e-9


def test_edge_lengths_compact(compact_tetra):
    lens = edge_lengths(compact_tetra)
    vals = list(lens.values())
    assert max(vals) - min(vals) < 1e-10
    assert vals[0] > 0


def test_edge_lengths_hyperideal_match_polar_distance(hyperideal_tetra):
    P = hyperideal_tetra
    lens = edge_lengths(P)
    for (u, v), length in lens.items():
        d = distance_plane_plane(polar_plane(P.vertex_charts[u]),
                                 polar_plane(P.vertex_charts[v]))
        assert abs(length - d) < 1e-9


def test_almost_proper_edge_has_zero_length():
    P = almost_proper_tetrahedron()
    lens = edge_lengths(P)
    assert lens[(0, 1)] == 0.0
    assert lens[(2, 3)] > 0


# --- truncation --------------------------------------------------------------------

def test_truncate_compact_is_identity(compact_tetra):
    T = truncate(compact_tetra)
    assert T.planes == compact_tetra.planes
    assert not any(T.truncation_flags)


def test_truncate_hyperideal_tetrahedron(hyperideal_tetra):
    T = truncate(hyperideal_tetra)
    assert len(T.planes) == 8
    assert sum(T.truncation_flags) == 4
    assert (T.skeleton.n_vertices, len(T.skeleton.edges), len(T.skeleton.faces)) \
        == (12, 18, 8)
    for e in T.skeleton.edges:
        f1, f2 = T.skeleton.edge_faces[e]
        if T.face_sources[f1][0] != T.face_sources[f2][0]:
            a = dihedral_angle(T.planes[f1], T.planes[f2])
            assert abs(a - math.pi / 2) < 1e-9
    # distinct truncation faces are disjoint (their planes are)
    flags = [i for i, t in enumerate(T.truncation_flags) if t]
    for i in flags:
        for j in flags:
            if i < j:
                assert distance_plane_plane(T.planes[i], T.planes[j]) > 0


def test_truncation_idempotent_on_compact(compact_tetra):
    T = truncate(compact_tetra)
    P2 = build_polyhedron(T.planes, T.skeleton)
    T2 = truncate(P2)
    assert T2.planes == T.planes


def test_roundtrip_bit_identical(hyperideal_tetra):
    T = truncate(hyperideal_tetra)
    Q = strip_truncation(T)
    assert len(Q.planes) == len(hyperideal_tetra.planes)
    for a, b in zip(Q.planes, hyperideal_tetra.planes):
        assert np.array_equal(a.normal, b.normal)


def test_isometry_invariance_of_polyhedron_measurements(rng, hyperideal_tetra):
    P = hyperideal_tetra
    th = dihedral_angles(P)
    lens = edge_lengths(P)
    for _ in range(5):
        L = random_isometry(rng)
        planes2 = tuple(apply_lorentz(L, pl) for pl in P.planes)
        Q = build_polyhedron(planes2, P.skeleton)
        th2 = dihedral_angles(Q)
        lens2 = edge_lengths(Q)
        for e in P.skeleton.edges:
            assert abs(th[e] - th2[e]) < 1e-9
            assert abs(lens[e] - lens2[e]) < 1e-9


# --- text format ---------------------------------------------------------------------

def test_polyhedron_format_roundtrip(hyperideal_tetra):
    text = format_polyhedron(hyperideal_tetra)
    Q = parse_polyhedron(text)
    np.testing.assert_allclose(Q.vertex_lifts, hyperideal_tetra.vertex_lifts,
                               atol=1e-9)


def test_almost_proper_edge_in_truncation_plane():
    from polyvol.polyhedron import almost_proper_edges

    # three real vertices on the polar plane of the hyperideal one: every
    # edge among them lies inside the truncation plane
    g = tetrahedron_graph()
    pts = np.array([[2.0, 0.0, 0.0], [0.5, 0.5, 0.0],
                    [0.5, -0.4, 0.4], [0.5, -0.1, -0.5]])
    P = build_polyhedron(planes_from_vertices(pts, g), g)
    flagged = almost_proper_edges(P)
    edges = {e for e, _ in flagged}
    assert edges == {(1, 2), (1, 3), (2, 3)}
    assert all(poles == (0,) for _, poles in flagged)
    # a generic almost-proper polyhedron has no such edge
    assert almost_proper_edges(almost_proper_tetrahedron()) == []
