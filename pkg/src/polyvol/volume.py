"""Hyperbolic volume computations.

The Lobachevsky function is evaluated by its standard rapidly convergent
series after pi-periodic reduction; ideal tetrahedra get exact volumes
from the cross-ratio of their boundary points.  General truncations are
integrated in the Klein model, where the volume element is
``dx / (1 - |x|^2)^2``, over a cone-of-tetrahedra decomposition with a
collapsed Gauss product rule per tetrahedron (adaptive subdivision, or a
fixed subdivision depth when a smooth dependence on parameters matters,
as in Schlafli residuals).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import TAU_IDEAL
from .errors import ImproperInput, NotIdeal, PathDiscontinuous
from .polyhedron import (
    PointKind,
    Polyhedron,
    TruncatedPolyhedron,
    classify_vertices,
    dihedral_angles,
    edge_lengths,
    truncate,
)

# --- Lobachevsky function ----------------------------------------------------


def _zeta_even(k: int) -> float:
    exact = {1: math.pi**2 / 6, 2: math.pi**4 / 90, 3: math.pi**6 / 945}
    if k in exact:
        return exact[k]
    m = np.arange(1, 4000)
    s = float(np.sum(m ** (-2.0 * k)))
    # integral tail bound, negligible for k >= 4
    s += 4000.0 ** (1 - 2 * k) / (2 * k - 1)
    return s


_LOB_K = 30
_LOB_COEFS = np.array([_zeta_even(k) / (k * (2 * k + 1) * math.pi ** (2 * k))
                       for k in range(1, _LOB_K + 1)])


def lobachevsky(x):
    """Lobachevsky function  L(x) = -int_0^x log|2 sin t| dt.

    Odd and pi-periodic; vectorized over arrays.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    r = x - math.pi * np.round(x / math.pi)
    a = np.abs(r)
    sign = np.sign(r)
    out = np.zeros_like(a)
    nz = a > 0
    an = a[nz]
    acc = an - an * np.log(2.0 * an)
    pw = an.copy()
    for k in range(_LOB_K):
        pw = pw * an * an
        acc = acc + _LOB_COEFS[k] * pw
    out[nz] = sign[nz] * acc
    if scalar:
        return float(out[0])
    return out


# --- ideal tetrahedra ---------------------------------------------------------

_POLE_CANDIDATES = np.array([
    [0, 0, 1], [0, 0, -1], [0, 1, 0], [0, -1, 0], [1, 0, 0], [-1, 0, 0],
    [1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1],
    [-1, -1, -1], [-1, 1, 1], [1, -1, 1], [1, 1, -1],
], dtype=float)
_POLE_CANDIDATES /= np.linalg.norm(_POLE_CANDIDATES, axis=1, keepdims=True)


def _stereographic(points, pole):
    """Conformal coordinates of unit-sphere points, projecting from ``pole``."""
    s = pole / np.linalg.norm(pole)
    a = np.array([1.0, 0.0, 0.0]) if abs(s[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(s, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(s, e1)
    denom = 1.0 - points @ s
    return (points @ e1 + 1j * (points @ e2)) / denom


def ideal_tetrahedron_angles(points, tol: float = TAU_IDEAL):
    """Dihedral angles (a, b, c) with a+b+c = pi of an ideal tetrahedron.

    ``points`` are four boundary points; returns (0, 0, pi)-style flat
    triples degenerated to zeros for coplanar configurations.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape != (4, 3):
        raise NotIdeal("need exactly four boundary points")
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise NotIdeal(f"point norms {norms} leave the ideal band")
    pts = pts / norms[:, None]
    scores = _POLE_CANDIDATES @ pts.T
    pole = _POLE_CANDIDATES[np.argmin(np.max(scores, axis=1))]
    z = _stereographic(pts, pole)
    cross = (z[2] - z[0]) * (z[3] - z[1]) / ((z[2] - z[1]) * (z[3] - z[0]))
    if abs(cross.imag) < 1e-12 * (1.0 + abs(cross)):
        return 0.0, 0.0, 0.0
    if cross.imag < 0:
        cross = cross.conjugate()
    alpha = math.atan2(cross.imag, cross.real)
    one_minus = 1.0 - cross
    beta = -math.atan2(one_minus.imag, one_minus.real)
    gamma = math.pi - alpha - beta
    return alpha, beta, gamma


def ideal_tetrahedron_volume(points, tol: float = TAU_IDEAL) -> float:
    """Hyperbolic volume of the ideal tetrahedron spanned by four boundary points."""
    alpha, beta, gamma = ideal_tetrahedron_angles(points, tol)
    return float(lobachevsky(alpha) + lobachevsky(beta) + lobachevsky(gamma))


# --- Klein-model quadrature ---------------------------------------------------


def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _tet_rule(n: int):
    """Collapsed Gauss product rule on the reference tetrahedron.

    Returns (barycentric-like offsets (m, 3), weights (m,)) with the
    weights summing to 1/6 (the reference volume).
    """
    x, w = _gauss01(n)
    xi, eta, zeta = np.meshgrid(x, x, x, indexing="ij")
    wx, wy, wz = np.meshgrid(w, w, w, indexing="ij")
    u = xi
    v = eta * (1.0 - xi)
    t = zeta * (1.0 - xi) * (1.0 - eta)
    jac = (1.0 - xi) ** 2 * (1.0 - eta)
    pts = np.stack([u.ravel(), v.ravel(), t.ravel()], axis=1)
    wts = (wx * wy * wz * jac).ravel()
    return pts, wts


_RULES = {n: _tet_rule(n) for n in (2, 3, 4)}


def _klein_integrand(x):
    r2 = np.sum(x * x, axis=-1)
    denom = np.maximum(1.0 - r2, 1e-300)
    return 1.0 / (denom * denom)


def _integrate_batch(tets, n):
    """Rule-n integrals of the Klein element over a batch of tets (N,4,3)."""
    pts, wts = _RULES[n]
    a = tets[:, 0, :]
    edges = tets[:, 1:, :] - a[:, None, :]  # (N,3,3)
    dets = np.abs(np.linalg.det(edges))
    nodes = a[:, None, :] + np.einsum("mk,nkj->nmj", pts, edges)  # (N,m,3)
    vals = _klein_integrand(nodes)
    return dets * (vals @ wts), len(pts) * len(tets)


def _split8(tets):
    """Structural red refinement of each tet into 8 children."""
    a, b, c, d = tets[:, 0], tets[:, 1], tets[:, 2], tets[:, 3]
    ab, ac, ad = (a + b) / 2, (a + c) / 2, (a + d) / 2
    bc, bd, cd = (b + c) / 2, (b + d) / 2, (c + d) / 2
    kids = [
        (a, ab, ac, ad), (b, ab, bc, bd), (c, ac, bc, cd), (d, ad, bd, cd),
        (ab, ac, ad, cd), (ab, ac, bc, cd), (ab, ad, bd, cd), (ab, bc, bd, cd),
    ]
    return np.concatenate([np.stack(k, axis=1) for k in kids], axis=0)


class VolumeMethod(enum.Enum):
    IDEAL_DECOMPOSITION = "IdealDecomposition"
    KLEIN_QUADRATURE = "KleinQuadrature"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class VolumeResult:
    value: float
    method: VolumeMethod
    error_estimate: float
    budget_exceeded: bool = False
    evaluations: int = 0


def integrate_klein_tets(tets, *, tol=1e-5, budget=10_000_000, mode="adaptive",
                         depth=3, rule=3):
    """Integrate the Klein volume element over a union of tetrahedra.

    ``mode="fixed"`` uses uniform structural subdivision to ``depth`` (a
    smooth function of the vertex coordinates); ``mode="adaptive"``
    refines the worst cells until the error estimate drops below ``tol``
    or the evaluation budget runs out.
    """
    tets = np.asarray(tets, dtype=float)
    if len(tets) == 0:
        return 0.0, 0.0, False, 0
    evals = 0
    if mode == "fixed":
        work = tets
        for _ in range(depth):
            work = _split8(work)
        coarse, e1 = _integrate_batch(work, max(2, rule - 1))
        fine, e2 = _integrate_batch(work, rule)
        evals = e1 + e2
        return float(np.sum(fine)), float(np.sum(np.abs(fine - coarse))), False, evals

    lo, e1 = _integrate_batch(tets, 2)
    hi, e2 = _integrate_batch(tets, 3)
    evals += e1 + e2
    vals = hi
    errs = np.abs(hi - lo)
    cells = tets
    exceeded = False
    while float(np.sum(errs)) > tol:
        if evals >= budget:
            exceeded = True
            break
        order = np.argsort(errs)[::-1]
        n_split = max(1, min(len(order), 64, int(np.sum(errs > tol / max(1, len(errs)))) or 1))
        split_idx = order[:n_split]
        keep_idx = order[n_split:]
        children = _split8(cells[split_idx])
        clo, e1 = _integrate_batch(children, 2)
        chi, e2 = _integrate_batch(children, 3)
        evals += e1 + e2
        cells = np.concatenate([cells[keep_idx], children], axis=0)
        vals = np.concatenate([vals[keep_idx], chi])
        errs = np.concatenate([errs[keep_idx], np.abs(chi - clo)])
    return float(np.sum(vals)), float(np.sum(errs)), exceeded, evals


# --- truncation decompositions -------------------------------------------------


def _fan_tets(apex, polygons):
    """Cone from apex over fan-triangulated polygons; returns (N,4,3)."""
    tets = []
    for poly in polygons:
        for k in range(1, len(poly) - 1):
            tets.append([apex, poly[0], poly[k], poly[k + 1]])
    return np.array(tets) if tets else np.zeros((0, 4, 3))


def _truncation_polygons(T: TruncatedPolyhedron):
    return [T.face_polygon(f) for f in range(len(T.skeleton.faces))]


def _ideal_decomposition(T: TruncatedPolyhedron, tol, apex_id: int = 0):
    """Cone from one ideal vertex into ideal tetrahedra; exact volumes."""
    charts = T.vertex_charts
    apex = charts[apex_id] / np.linalg.norm(charts[apex_id])
    total = 0.0
    count = 0
    for f, cyc in enumerate(T.skeleton.faces):
        if apex_id in cyc:
            continue
        poly = charts[list(cyc)]
        poly = poly / np.linalg.norm(poly, axis=1, keepdims=True)
        for k in range(1, len(poly) - 1):
            total += ideal_tetrahedron_volume(
                np.array([apex, poly[0], poly[k], poly[k + 1]]), tol=tol)
            count += 1
    return total, count


def _region_tets(T: TruncatedPolyhedron):
    charts = T.vertex_charts
    apex = charts.mean(axis=0)
    return _fan_tets(apex, _truncation_polygons(T))


def _truncation_or_none(P: Polyhedron, tol):
    try:
        return truncate(P, tol)
    except ImproperInput as exc:
        if "degenerates" in str(exc):
            return None
        raise


def _halfspace_region_tets(P: Polyhedron, tol=1e-9):
    """Fallback: vertex-enumerate P cut by all polar half-spaces.

    Used when some face is swallowed whole by a polar plane, where the
    combinatorial truncation walk does not apply.  Returns the cone
    decomposition of the region, or an empty array if the region has no
    volume.
    """
    report = classify_vertices(P)
    charts = P.vertex_charts
    hyper = [v for v, k in enumerate(report.kinds) if k == PointKind.HYPERIDEAL]
    dirs = []
    offs = []
    for pl in P.planes:
        d, c = pl.chart_equation()
        dirs.append(d)
        offs.append(c)
    for v in hyper:
        dirs.append(charts[v])
        offs.append(1.0)
    D = np.array(dirs)
    c = np.array(offs)
    m = len(D)
    pts = []
    from itertools import combinations
    for i, j, k in combinations(range(m), 3):
        A = D[[i, j, k]]
        if abs(np.linalg.det(A)) < 1e-12 * max(1.0, np.prod(np.linalg.norm(A, axis=1))):
            continue
        x = np.linalg.solve(A, c[[i, j, k]])
        if np.all(D @ x <= c + 1e-9 * np.maximum(1.0, np.abs(c))):
            pts.append(x)
    if not pts:
        return np.zeros((0, 4, 3))
    pts = np.array(pts)
    keep = []
    for p in pts:
        if not any(np.linalg.norm(p - q) < 1e-8 for q in keep):
            keep.append(p)
    pts = np.array(keep)
    if len(pts) < 4:
        return np.zeros((0, 4, 3))
    center = pts.mean(axis=0)
    if np.linalg.norm(pts - center, axis=1).max() < 1e-8:
        return np.zeros((0, 4, 3))
    polygons = []
    for idx in range(m):
        on = [p for p in pts if abs(D[idx] @ p - c[idx]) < 1e-7 * max(1.0, abs(c[idx]))]
        if len(on) < 3:
            continue
        on = np.array(on)
        centroid = on.mean(axis=0)
        normal = D[idx] / np.linalg.norm(D[idx])
        ref = on[0] - centroid
        nref = np.linalg.norm(ref)
        if nref < 1e-12:
            continue
        ref /= nref
        other = np.cross(normal, ref)
        ang = np.arctan2((on - centroid) @ other, (on - centroid) @ ref)
        polygons.append(on[np.argsort(ang)])
    tets = _fan_tets(center, polygons)
    if len(tets) == 0:
        return tets
    vol = np.abs(np.linalg.det(tets[:, 1:, :] - tets[:, :1, :])).sum() / 6.0
    if vol < 1e-18:
        return np.zeros((0, 4, 3))
    return tets


def polyhedron_volume(P: Polyhedron, *, tol: float = 1e-5, budget: int = 10_000_000,
                      mode: str = "adaptive", depth: int = 3,
                      ideal_band: float = 1e-7) -> VolumeResult:
    """Hyperbolic volume of P, defined as the volume of its truncation.

    If every truncation vertex is ideal the volume is assembled exactly
    from ideal tetrahedra; otherwise the Klein volume element is
    integrated over the truncated region.  An empty truncation has
    volume 0.
    """
    report = classify_vertices(P)
    if report.is_improper():
        raise ImproperInput("volume needs a proper or almost proper polyhedron")
    T = _truncation_or_none(P, TAU_IDEAL)
    if T is None:
        tets = _halfspace_region_tets(P)
        if len(tets) == 0:
            return VolumeResult(0.0, VolumeMethod.KLEIN_QUADRATURE, 0.0)
        value, err, exceeded, evals = integrate_klein_tets(
            tets, tol=tol, budget=budget, mode=mode, depth=depth)
        return VolumeResult(value, VolumeMethod.KLEIN_QUADRATURE, err, exceeded, evals)
    radii = np.linalg.norm(T.vertex_charts, axis=1)
    if np.all(np.abs(radii - 1.0) <= ideal_band):
        value, count = _ideal_decomposition(T, tol=max(TAU_IDEAL, ideal_band))
        return VolumeResult(value, VolumeMethod.IDEAL_DECOMPOSITION,
                            1e-12 * max(1, count), False, 0)
    if np.any(radii >= 1.0 + TAU_IDEAL):
        raise ImproperInput("truncation has vertices outside the closed ball")
    tets = _region_tets(T)
    value, err, exceeded, evals = integrate_klein_tets(
        tets, tol=tol, budget=budget, mode=mode, depth=depth)
    return VolumeResult(value, VolumeMethod.KLEIN_QUADRATURE, err, exceeded, evals)


# --- Schlafli residual ---------------------------------------------------------


def schlafli_residual(path, t0: float, h: float = 1e-4, *, depth: int = 3) -> float:
    """Central-difference residual of the Schlafli identity at t0.

    For a smooth family with constant skeleton and constant almost-proper
    set, ``dVol/dt = -1/2 sum_e l_e dtheta_e/dt``; the returned value is
    the absolute defect of that identity computed from the artifact's own
    volumes, lengths, and angles.
    """
    Pm = path(t0 - h)
    P0 = path(t0)
    Pp = path(t0 + h)
    reps = [classify_vertices(Q) for Q in (Pm, P0, Pp)]
    for Q, rep in zip((Pm, P0, Pp), reps):
        if Q.skeleton.faces != P0.skeleton.faces:
            raise PathDiscontinuous("skeleton changes inside the difference window")
        if rep.is_improper():
            raise PathDiscontinuous("family leaves the proper/almost-proper regime")
        if any(k == PointKind.IDEAL for k in rep.kinds):
            raise PathDiscontinuous("ideal vertex inside the difference window")
    aps = [tuple(s for s in rep.statuses) for rep in reps]
    if not (aps[0] == aps[1] == aps[2]):
        raise PathDiscontinuous("almost-proper set changes inside the window")

    def fixed_volume(Q):
        T = truncate(Q)
        tets = _region_tets(T)
        value, _, _, _ = integrate_klein_tets(tets, mode="fixed", depth=depth)
        return value

    vol_rate = (fixed_volume(Pp) - fixed_volume(Pm)) / (2 * h)
    th_p = dihedral_angles(Pp)
    th_m = dihedral_angles(Pm)
    lens = edge_lengths(P0)
    angle_rate = sum(lens[e] * (th_p[e] - th_m[e]) / (2 * h) for e in P0.skeleton.edges)
    return abs(vol_rate + 0.5 * angle_rate)
