"""Klein-model primitives in Minkowski coordinates.

Hyperbolic space H^3 is the open unit ball of the fixed affine chart
R^3 inside RP^3.  A chart point p lifts to the Minkowski vector (1, p);
the signature is (-,+,+,+), so the lift's Minkowski square is |p|^2 - 1:
negative inside H^3, zero on the sphere at infinity, positive outside.

Planes are stored as unit spacelike 4-vectors ``n`` with the selected
closed half-space ``{x : <n, lift(x)> <= 0}``; the normal points away
from the half-space.  With outward normals on two faces of a polyhedron
the interior dihedral angle satisfies ``cos(theta) = -<n1, n2>``.

Isometries of H^3 are Lorentz transformations; both points and plane
normals transform by the same matrix.  Affine deformations of the chart
(homotheties and translations) act projectively and are used to restore
properness along degeneration flows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDeformation,
    OutsideModel,
    PlanesDisjointInBall,
    PlanesEqual,
    PoleNotHyperideal,
)

#: Half-width of the band around the unit sphere treated as "ideal".
TAU_IDEAL = 1e-9

#: Points whose lift has time component below this (relative) size are at infinity.
INFINITY_TOL = 1e-12

MINKOWSKI_SIGNS = np.array([-1.0, 1.0, 1.0, 1.0])


def mdot(a, b):
    """Minkowski inner product, vectorized over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a * b * MINKOWSKI_SIGNS, axis=-1)


def lift(chart):
    """Minkowski lift (1, x, y, z) of chart points; vectorized."""
    chart = np.asarray(chart, dtype=float)
    shape = chart.shape[:-1] + (4,)
    out = np.empty(shape)
    out[..., 0] = 1.0
    out[..., 1:] = chart
    return out


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class PointKind(enum.Enum):
    REAL = "Real"
    IDEAL = "Ideal"
    HYPERIDEAL = "Hyperideal"

    def __str__(self):
        return self.value


class Separation(enum.Enum):
    SEGMENT_THROUGH = "SegmentThrough"
    HALF_LINE_THROUGH = "HalfLineThrough"
    NEITHER = "Neither"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ProjectivePoint:
    """A point of RP^3 via a Minkowski lift, usually in the chart (lift[0] != 0)."""

    lift: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.lift, dtype=float)
        if arr.shape != (4,):
            raise ValueError("lift must be a 4-vector")
        norm = np.linalg.norm(arr)
        if norm == 0 or not np.all(np.isfinite(arr)):
            raise ValueError("degenerate lift")
        if abs(arr[0]) > INFINITY_TOL * norm:
            arr = arr / arr[0]
        object.__setattr__(self, "lift", _frozen(arr))

    @classmethod
    def from_chart(cls, coords) -> "ProjectivePoint":
        coords = np.asarray(coords, dtype=float)
        return cls(lift=np.concatenate([[1.0], coords]))

    @property
    def at_infinity(self) -> bool:
        return abs(self.lift[0]) <= INFINITY_TOL * np.linalg.norm(self.lift)

    @property
    def chart(self) -> np.ndarray:
        if self.at_infinity:
            raise OutsideModel("point at infinity has no chart coordinates")
        return self.lift[1:]

    def __repr__(self):
        if self.at_infinity:
            return f"ProjectivePoint(infinity, dir={self.lift[1:]!r})"
        return f"ProjectivePoint({self.lift[1:]!r})"


def classify_point(p, tol: float = TAU_IDEAL) -> PointKind:
    """Real / Ideal / Hyperideal classification of a chart point.

    The ideal band is ``| |p| - 1 | <= tol``.
    """
    if isinstance(p, ProjectivePoint):
        r = float(np.linalg.norm(p.chart))
    else:
        r = float(np.linalg.norm(np.asarray(p, dtype=float)))
    if r < 1.0 - tol:
        return PointKind.REAL
    if r > 1.0 + tol:
        return PointKind.HYPERIDEAL
    return PointKind.IDEAL


@dataclass(frozen=True)
class OrientedPlane:
    """A projective plane with a selected closed half-space.

    ``normal`` is the unit spacelike Minkowski normal; the half-space is
    ``{x : <normal, lift(x)> <= 0}``, i.e. the normal points away from it.
    """

    normal: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (4,):
            raise ValueError("normal must be a 4-vector")
        sq = mdot(n, n)
        if not np.isfinite(sq) or sq <= 0:
            raise ValueError("plane normal must be spacelike (plane must meet H^3)")
        object.__setattr__(self, "normal", _frozen(n / math.sqrt(sq)))

    @classmethod
    def from_chart(cls, direction, offset: float) -> "OrientedPlane":
        """Plane ``{direction . x = offset}`` with half-space ``direction . x <= offset``."""
        direction = np.asarray(direction, dtype=float)
        return cls(normal=np.concatenate([[float(offset)], direction]))

    def complement(self) -> "OrientedPlane":
        """The same plane with the other half-space selected."""
        return OrientedPlane(normal=-self.normal)

    def side_of(self, point) -> float:
        """Signed value of ``<normal, lift(point)>``; <= 0 inside the half-space."""
        if isinstance(point, ProjectivePoint):
            return float(mdot(self.normal, point.lift))
        return float(mdot(self.normal, lift(point)))

    def contains(self, point, slack: float = 0.0) -> bool:
        return self.side_of(point) <= slack

    def chart_equation(self):
        """Return (direction, offset) with the plane ``direction . x = offset``."""
        return self.normal[1:].copy(), float(self.normal[0])

    def closest_chart_point(self) -> np.ndarray:
        """Euclidean foot of the origin on the plane, in chart coordinates."""
        d, c = self.chart_equation()
        return d * (c / float(d @ d))

    def basis(self):
        """Two Euclidean-orthonormal chart directions spanning the plane."""
        d, _ = self.chart_equation()
        d = d / np.linalg.norm(d)
        a = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = np.cross(d, a)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(d, e1)
        return e1, e2

    def __repr__(self):
        return f"OrientedPlane({self.normal!r})"


def polar_plane(p, tol: float = TAU_IDEAL) -> OrientedPlane:
    """Polar plane of a hyperideal point, oriented so the half-space holds the origin.

    In the chart the plane is ``{p . x = 1}`` and the half-space is
    ``{p . x <= 1}``; every line through ``p`` meeting H^3 crosses it
    orthogonally.
    """
    if isinstance(p, ProjectivePoint):
        if p.at_infinity:
            # Pole at infinity: polar plane passes through the origin.
            n = p.lift.copy()
            return OrientedPlane(normal=n)
        coords = p.chart
    else:
        coords = np.asarray(p, dtype=float)
    if np.linalg.norm(coords) <= 1.0 + tol:
        raise PoleNotHyperideal(f"|p| = {np.linalg.norm(coords):.12g} <= 1 + tol")
    return OrientedPlane(normal=lift(coords))


def pole_of(plane: OrientedPlane) -> ProjectivePoint:
    """The hyperideal (possibly at-infinity) pole of a plane meeting H^3."""
    return ProjectivePoint(lift=plane.normal.copy())


def segment_min_norm2(a, b):
    """Minimum of |a + t (b - a)|^2 over the segment t in [0, 1].

    Returns ``(t_min, value)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    dd = float(d @ d)
    if dd == 0.0:
        return 0.0, float(a @ a)
    t = float(np.clip(-(a @ d) / dd, 0.0, 1.0))
    q = a + t * d
    return t, float(q @ q)


def ray_min_norm2(a, d):
    """Minimum of |a + t d|^2 over t >= 0."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    dd = float(d @ d)
    if dd == 0.0:
        return float(a @ a)
    t = max(0.0, -(a @ d) / dd)
    q = a + t * d
    return float(q @ q)


def poles_separated(p, q, tol: float = TAU_IDEAL) -> Separation:
    """How the polar half-spaces of two hyperideal points relate.

    SegmentThrough: the chart segment pq meets H^3 (then the polar planes
    lie in each other's half-spaces).  HalfLineThrough: only the half-line
    from p through q meets H^3 (then H_p is contained in H_q).
    """
    pc = p.chart if isinstance(p, ProjectivePoint) else np.asarray(p, dtype=float)
    qc = q.chart if isinstance(q, ProjectivePoint) else np.asarray(q, dtype=float)
    for c in (pc, qc):
        if np.linalg.norm(c) <= 1.0 + tol:
            raise PoleNotHyperideal("both points must be hyperideal")
    _, seg = segment_min_norm2(pc, qc)
    if seg < 1.0:
        return Separation.SEGMENT_THROUGH
    if ray_min_norm2(pc, qc - pc) < 1.0:
        return Separation.HALF_LINE_THROUGH
    return Separation.NEITHER


def dihedral_angle(a: OrientedPlane, b: OrientedPlane, tol: float = 1e-9) -> float:
    """Interior dihedral angle between two selected half-spaces, in [0, pi].

    0 exactly when the intersection line is tangent to the sphere at
    infinity (within tolerance).  Raises if the planes coincide or their
    intersection misses the closed ball.
    """
    g = float(mdot(a.normal, b.normal))
    if abs(g) > 1.0 + tol:
        d = np.linalg.norm(a.normal - b.normal)
        s = np.linalg.norm(a.normal + b.normal)
        if min(d, s) < tol:
            raise PlanesEqual("planes coincide")
        raise PlanesDisjointInBall(f"|<n1,n2>| = {abs(g):.12g} > 1")
    if min(np.linalg.norm(a.normal - b.normal), np.linalg.norm(a.normal + b.normal)) < tol:
        raise PlanesEqual("planes coincide")
    # Clamp guards the tangency limit where |g| grazes 1.
    return float(math.acos(np.clip(-g, -1.0, 1.0)))


def _time_normalized(point) -> np.ndarray:
    if isinstance(point, ProjectivePoint):
        chart = point.chart
    else:
        chart = np.asarray(point, dtype=float)
    sq = 1.0 - float(chart @ chart)
    if sq <= 0.0:
        raise OutsideModel(f"|p| = {np.linalg.norm(chart):.12g} >= 1")
    return lift(chart) / math.sqrt(sq)


def distance_point_point(p, q) -> float:
    """Hyperbolic distance between two real points."""
    u = _time_normalized(p)
    v = _time_normalized(q)
    return float(math.acosh(max(1.0, -mdot(u, v))))


def distance_point_plane(p, plane: OrientedPlane) -> float:
    """Hyperbolic distance from a real point to a plane."""
    u = _time_normalized(p)
    return float(math.asinh(abs(mdot(u, plane.normal))))


def distance_plane_plane(a: OrientedPlane, b: OrientedPlane) -> float:
    """Hyperbolic distance between two planes; 0 iff they meet in the closed ball."""
    g = abs(float(mdot(a.normal, b.normal)))
    if g <= 1.0:
        return 0.0
    return float(math.acosh(g))


def hyperbolic_distance(x, y) -> float:
    """Distance dispatcher over point/plane argument combinations."""
    x_plane = isinstance(x, OrientedPlane)
    y_plane = isinstance(y, OrientedPlane)
    if x_plane and y_plane:
        return distance_plane_plane(x, y)
    if x_plane:
        return distance_point_plane(y, x)
    if y_plane:
        return distance_point_plane(x, y)
    return distance_point_point(x, y)


# --- deformations and isometries -------------------------------------------


def _apply_matrix_plane(T: np.ndarray, plane: OrientedPlane) -> OrientedPlane:
    # <n', T x> = <n, x> for all x requires n' = eta T^{-T} eta n.
    eta = MINKOWSKI_SIGNS
    n = plane.normal
    m = np.linalg.solve(T.T, eta * n) * eta
    return OrientedPlane(normal=m)


def _apply_matrix_point(T: np.ndarray, point: ProjectivePoint) -> ProjectivePoint:
    return ProjectivePoint(lift=T @ point.lift)


@dataclass(frozen=True)
class AffineDeformation:
    """Homothety or translation of the chart, stored as a 4x4 projective matrix."""

    matrix: np.ndarray
    kind: str = "affine"

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @classmethod
    def identity(cls) -> "AffineDeformation":
        return cls(matrix=np.eye(4), kind="identity")

    @classmethod
    def homothety(cls, center, factor: float) -> "AffineDeformation":
        if factor <= 0:
            raise DegenerateDeformation(f"factor {factor} <= 0")
        c = center.chart if isinstance(center, ProjectivePoint) else np.asarray(center, dtype=float)
        T = np.eye(4)
        T[1:, 1:] *= factor
        T[1:, 0] = (1.0 - factor) * c
        return cls(matrix=T, kind="homothety")

    @classmethod
    def translation(cls, vector) -> "AffineDeformation":
        v = np.asarray(vector, dtype=float)
        T = np.eye(4)
        T[1:, 0] = v
        return cls(matrix=T, kind="translation")

    def compose(self, other: "AffineDeformation") -> "AffineDeformation":
        """self after other."""
        kind = self.kind if self.kind == other.kind else "affine"
        return AffineDeformation(matrix=self.matrix @ other.matrix, kind=kind)

    def apply_point(self, point):
        if isinstance(point, ProjectivePoint):
            return _apply_matrix_point(self.matrix, point)
        out = self.matrix @ lift(point)
        return out[1:] / out[0]

    def apply_plane(self, plane: OrientedPlane) -> OrientedPlane:
        return _apply_matrix_plane(self.matrix, plane)


def apply_deformation(deformation: AffineDeformation, obj):
    """Apply a deformation to a point, plane, or sequence thereof."""
    if isinstance(obj, (ProjectivePoint, OrientedPlane)):
        return (deformation.apply_plane(obj) if isinstance(obj, OrientedPlane)
                else deformation.apply_point(obj))
    if isinstance(obj, np.ndarray) and obj.ndim == 1:
        return deformation.apply_point(obj)
    return tuple(apply_deformation(deformation, item) for item in obj)


def in_tangent_cone(v, x, tol: float = 0.0) -> bool:
    """Whether chart point x lies in the tangent cone of hyperideal v to the sphere.

    The cone is the solid cone from apex v containing the closed unit ball.
    """
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(v)
    if r <= 1.0:
        raise PoleNotHyperideal("apex must be hyperideal")
    d = x - v
    nd = np.linalg.norm(d)
    if nd == 0.0:
        return True
    cos_half = math.sqrt(1.0 - 1.0 / (r * r))
    return float(d @ (-v)) / (nd * r) >= cos_half - tol


# --- Lorentz transformations ------------------------------------------------


def boost_to_origin(point) -> np.ndarray:
    """Lorentz boost sending a real chart point to the origin."""
    beta = point.chart if isinstance(point, ProjectivePoint) else np.asarray(point, dtype=float)
    b2 = float(beta @ beta)
    if b2 >= 1.0:
        raise OutsideModel("boost center must be inside the ball")
    gamma = 1.0 / math.sqrt(1.0 - b2)
    B = np.eye(4)
    B[0, 0] = gamma
    B[0, 1:] = -gamma * beta
    B[1:, 0] = -gamma * beta
    if b2 > 0:
        B[1:, 1:] += (gamma - 1.0) * np.outer(beta, beta) / b2
    return B


def rotation_to_z(direction) -> np.ndarray:
    """Lorentz rotation taking a spatial direction to +z."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    z = np.array([0.0, 0.0, 1.0])
    c = float(d @ z)
    if c < -1.0 + 1e-12:
        # Antiparallel: rotate by pi about any axis perpendicular to d.
        a = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        a = a - (a @ d) * d
        a /= np.linalg.norm(a)
        R3 = 2.0 * np.outer(a, a) - np.eye(3)
    elif c > 1.0 - 1e-15:
        R3 = np.eye(3)
    else:
        v = np.cross(d, z)
        vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
        R3 = np.eye(3) + vx + vx @ vx / (1.0 + c)
    T = np.eye(4)
    T[1:, 1:] = R3
    return T


def rotation_about_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    T = np.eye(4)
    T[1, 1] = c
    T[1, 2] = -s
    T[2, 1] = s
    T[2, 2] = c
    return T


def apply_lorentz(L: np.ndarray, obj):
    """Apply a Lorentz matrix to points, planes, or sequences."""
    if isinstance(obj, OrientedPlane):
        return OrientedPlane(normal=L @ obj.normal)
    if isinstance(obj, ProjectivePoint):
        return ProjectivePoint(lift=L @ obj.lift)
    if isinstance(obj, np.ndarray):
        return obj @ L.T
    return tuple(apply_lorentz(L, item) for item in obj)


def random_isometry(rng) -> np.ndarray:
    """Random sphere-preserving projective map (for invariance tests)."""
    q = rng.normal(size=(3, 3))
    Q, _ = np.linalg.qr(q)
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    R = np.eye(4)
    R[1:, 1:] = Q
    center = rng.uniform(-0.5, 0.5, size=3)
    B = boost_to_origin(center)
    return R @ B
