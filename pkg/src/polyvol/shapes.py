"""Concrete polyhedron constructions used as flow seeds and test fixtures."""

from __future__ import annotations

import math

import numpy as np

from ._steinitz import convex_realization
from .core import OrientedPlane, apply_lorentz, random_isometry
from .graphs import PlanarGraph, tetrahedron_graph
from .polyhedron import Polyhedron, build_polyhedron

_TETRA_DIRS = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
                       dtype=float) / math.sqrt(3)


def regular_tetrahedron(radius: float, rectified: bool = False) -> Polyhedron:
    """Regular tetrahedron with vertices at the given chart radius.

    Edges meet the open ball iff radius < sqrt(3); radius sqrt(3) is the
    rectification of the tetrahedral graph.
    """
    g = tetrahedron_graph()
    opp = [next(v for v in range(4) if v not in cyc) for cyc in g.faces]
    planes = tuple(OrientedPlane.from_chart(-_TETRA_DIRS[o], radius / 3.0) for o in opp)
    return build_polyhedron(planes, g, rectified=rectified)


def planes_from_vertices(points: np.ndarray, g: PlanarGraph):
    """Outward face planes of a convex vertex realization of g."""
    center = points.mean(axis=0)
    planes = []
    for cyc in g.faces:
        P = points[list(cyc)]
        centroid = P.mean(axis=0)
        _, _, Vt = np.linalg.svd(P - centroid)
        n = Vt[-1]
        if float(n @ (centroid - center)) < 0:
            n = -n
        planes.append(OrientedPlane.from_chart(n, float(n @ centroid)))
    return tuple(planes)


def compact_realization(g: PlanarGraph, scale: float = 0.6) -> Polyhedron:
    """A compact (hence proper) polyhedron with skeleton g inside the ball."""
    pts = convex_realization(g)
    pts = pts - pts.mean(axis=0)
    pts = pts / np.linalg.norm(pts, axis=1).max() * scale
    return build_polyhedron(planes_from_vertices(pts, g), g)


def jittered_compact(g: PlanarGraph, rng, scale_range=(0.35, 0.75)) -> Polyhedron:
    """Random proper seed: a compact realization, randomly scaled and moved."""
    scale = float(rng.uniform(*scale_range))
    P = compact_realization(g, scale=scale)
    L = random_isometry(rng)
    planes = tuple(apply_lorentz(L, pl) for pl in P.planes)
    return build_polyhedron(planes, g)


def realize_continuation(g: PlanarGraph, target: dict, P: Polyhedron,
                         min_step: float = 1e-3) -> Polyhedron:
    """Realize ``target`` angles by adaptive continuation from P's angles."""
    from .flow import realize_from_angles
    from .polyhedron import dihedral_angles
    from .errors import NewtonDiverged, SkeletonChanged

    start = dihedral_angles(P)
    lam, dlam = 0.0, 0.5
    while lam < 1.0:
        lam2 = min(1.0, lam + dlam)
        th = {e: (1 - lam2) * start[e] + lam2 * target[e] for e in g.edges}
        try:
            P = realize_from_angles(g, th, P)
        except (NewtonDiverged, SkeletonChanged):
            dlam *= 0.5
            if dlam < min_step:
                raise
            continue
        lam = lam2
        dlam = min(dlam * 1.6, 0.5)
    return P


def equiangular_hyperideal(g: PlanarGraph, angle: float) -> Polyhedron:
    """Hyperideal polyhedron with every dihedral angle equal.

    Exists for any angle below pi / max-degree; realized from the
    rectification (the zero-angle limit) by continuation.
    """
    from .rectify import rectification

    seed = rectification(g)
    return realize_continuation(g, {e: angle for e in g.edges}, seed)


def random_hyperideal(g: PlanarGraph, rng, lo: float = 0.1, hi: float = 0.75,
                      tries: int = 200) -> Polyhedron:
    """Random proper seed with all vertices hyperideal.

    Samples angle vectors until one passes the admissibility check, then
    realizes it by continuation through the (convex) admissible region
    from a small-equal-angle polyhedron.
    """
    from .graphs import check_hyperideal_angles

    kmax = max(g.degree(v) for v in range(g.n_vertices))
    eps = min(0.3, 0.8 * math.pi / kmax)
    base = equiangular_hyperideal(g, eps)
    for _ in range(tries):
        th = {e: float(rng.uniform(lo, hi)) for e in g.edges}
        if check_hyperideal_angles(g, th).admissible:
            return realize_continuation(g, th, base)
    raise ValueError(f"no admissible angle vector found in {tries} draws")
