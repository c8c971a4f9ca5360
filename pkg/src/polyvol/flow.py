"""The volume-increasing deformation flow.

Starting from a proper polyhedron with no ideal vertices, scale all its
dihedral angles by t and follow the path t -> t * theta downward,
realizing each target through the local-coordinate property of dihedral
angles.  As t decreases the Schlafli identity makes the volume grow.
Degenerations are detected and handled: a real vertex reaching the
sphere at infinity is pushed out by a properness-preserving translation
(an escape deformation); a vertex landing on a truncation plane starts
an almost-proper stratum where the incidence is held; collapsing edges
or faces rewrite the skeleton by the corresponding combinatorial move.
Once every vertex is hyperideal the target path stays realizable all
the way down, and the supremum of the volume is estimated from the last
computed volume plus a Schlafli bound on the remaining gain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._realize import solve_plane_system
from .core import (
    OrientedPlane,
    PointKind,
    Separation,
    TAU_IDEAL,
    lift,
    poles_separated,
)
from .errors import (
    ImproperInput,
    MaxEventsExceeded,
    NewtonDiverged,
    NoIdealVertices,
    NoSeparatingPlane,
    PropernessLost,
    SkeletonChanged,
    SkeletonMismatch,
    NonConvex,
    EdgeMissesBall,
    StallDetected,
)
from .graphs import PlanarGraph, edge_collapse, face_collapse, _norm_edge
from .polyhedron import (
    Polyhedron,
    VertexStatus,
    build_polyhedron,
    classify_vertices,
    dihedral_angles,
    edge_lengths,
)
from .volume import VolumeResult, polyhedron_volume


# --- realization with prescribed angles --------------------------------------


def realize_from_angles(g: PlanarGraph, angles: dict, seed: Polyhedron, *,
                        held=(), tol: float = 1e-11, verify: str = "fast") -> Polyhedron:
    """Realize a polyhedron with skeleton g and the prescribed dihedral angles.

    ``seed`` must carry the same skeleton and no ideal vertices; the
    Newton solve starts there and returns the nearby solution (dihedral
    angles are local coordinates away from ideal vertices).  ``held``
    lists (vertex, pole-vertex) incidences kept on their polar planes;
    the angle at a held adjacent edge is not prescribed.
    """
    if seed.skeleton.faces != g.faces:
        raise SkeletonChanged("seed skeleton differs from target")
    targets = {}
    held_edges = {_norm_edge(w, u) for (w, u) in held if _norm_edge(w, u) in g.edge_index}
    for e in g.edges:
        if e in held_edges:
            targets[e] = None
            continue
        th = angles[e]
        if not (0.0 < th < math.pi):
            raise NewtonDiverged(f"target angle {th} at {e} outside (0, pi)")
        targets[e] = -math.cos(th)
    normals, verts, report = solve_plane_system(
        g, targets, seed.normal_matrix, seed.vertex_charts, held=tuple(held), tol=tol)
    if not report.ok:
        raise NewtonDiverged(f"residual {report.residual:.3g}: {report.message}")
    planes = tuple(OrientedPlane(normal=normals[f]) for f in range(len(g.faces)))
    try:
        return build_polyhedron(planes, g, verify=verify)
    except (SkeletonMismatch, NonConvex, EdgeMissesBall) as exc:
        raise SkeletonChanged(str(exc), witness=exc)


# --- deformations handling degenerations --------------------------------------


def _interior_point(P: Polyhedron):
    c = P.vertex_charts.mean(axis=0)
    n = np.linalg.norm(c)
    if n >= 0.99:
        c = c / n * 0.5
    return c


def nudge_ideal_vertices(P: Polyhedron, delta: float = 1e-3,
                         tol: float = TAU_IDEAL) -> Polyhedron:
    """Expand P slightly so its ideal vertices become hyperideal.

    A homothety with factor 1 + delta about an interior point; delta is
    halved adaptively until properness and the skeleton survive.
    """
    report = classify_vertices(P, tol)
    ideal = [v for v, k in enumerate(report.kinds) if k == PointKind.IDEAL]
    if not ideal:
        raise NoIdealVertices("no ideal vertices to remove")
    if report.is_improper():
        raise ImproperInput("nudge needs a proper polyhedron")
    center = _interior_point(P)
    d = delta
    for _ in range(20):
        factor = 1.0 + d
        T = np.eye(4)
        T[1:, 1:] *= factor
        T[1:, 0] = (1.0 - factor) * center
        from .core import _apply_matrix_plane
        planes = tuple(_apply_matrix_plane(T, pl) for pl in P.planes)
        try:
            Q = build_polyhedron(planes, P.skeleton, verify="fast")
        except Exception:
            d /= 2
            continue
        rep = classify_vertices(Q, tol)
        ok = (not rep.is_improper()
              and all(rep.kinds[v] == PointKind.HYPERIDEAL for v in ideal)
              and not any(k == PointKind.IDEAL for k in rep.kinds))
        if ok:
            return Q
        d /= 2
    raise PropernessLost(f"no admissible expansion found below delta={delta}")


def escape_deformation(P: Polyhedron, v: int, *, almost_pole: int | None = None,
                       delta: float = 1e-5, tol: float = TAU_IDEAL) -> Polyhedron:
    """Translate P so the near-ideal vertex v becomes just hyperideal.

    A hyperideal probe point near v supplies a separating polar plane;
    the translation along its normal keeps every hyperideal vertex
    inside its tangent cone, so properness survives.  With
    ``almost_pole`` set (the vertex whose polar plane contains v) the
    translation gains a component along that polar plane's inward
    normal, freeing the almost-proper incidence.
    """
    charts = P.vertex_charts
    x = charts[v]
    r = float(np.linalg.norm(x))
    if r > 1.0 + 10 * tol:
        raise NoSeparatingPlane(f"vertex {v} already hyperideal (|x| = {r:.9g})")
    u = x / r
    report = classify_vertices(P, tol)
    hyper = [w for w, k in enumerate(report.kinds) if k == PointKind.HYPERIDEAL and w != v]

    probe = (1.0 + max(delta, 2.0 * (1.0 - r) + delta)) * u
    for w in range(len(charts)):
        if w == v or w == almost_pole:
            continue
        if 1.0 - float(probe @ charts[w]) <= 10 * tol:
            raise NoSeparatingPlane(f"vertex {w} is not separated from {v}")
    for h in hyper:
        if h == almost_pole:
            continue
        if poles_separated(probe, charts[h], tol) != Separation.SEGMENT_THROUGH:
            raise NoSeparatingPlane(f"polar plane of vertex {h} is not separated")

    lam0 = (1.0 + delta) - r
    if lam0 <= 0:
        lam0 = delta
    from .core import _apply_matrix_plane

    def attempt(d):
        shift = d * u
        if almost_pole is not None:
            # Extra inward component along the polar plane's normal frees
            # the held incidence strictly.
            w = charts[almost_pole]
            nw = w / np.linalg.norm(w)
            shift = d * u - (max(0.0, d * float(u @ nw)) + 0.5 * d) * nw
        T = np.eye(4)
        T[1:, 0] = shift
        try:
            planes = tuple(_apply_matrix_plane(T, pl) for pl in P.planes)
            Q = build_polyhedron(planes, P.skeleton, verify="fast")
        except Exception:
            return None
        rep = classify_vertices(Q, tol)
        if rep.is_improper():
            return None
        if any(k == PointKind.IDEAL for w_, k in enumerate(rep.kinds) if w_ != v):
            return None
        if almost_pole is not None:
            m = 1.0 - float(Q.vertex_charts[almost_pole] @ Q.vertex_charts[v])
            if m <= tol:
                return None
        return Q, rep.kinds[v], float(np.linalg.norm(Q.vertex_charts[v]))

    # Prefer the translation landing v just hyperideal; where the edge
    # geometry forbids leaving the ball (a nearly tangent almost proper
    # edge), fall back to the valid translation pushing v farthest out.
    best = None
    d = lam0
    for _ in range(30):
        got = attempt(d)
        if got is not None:
            Q, kind, radius = got
            if kind == PointKind.HYPERIDEAL:
                return Q
            if best is None or radius > best[1]:
                best = (Q, radius)
        d *= 1.6
        if d > 1e4 * lam0:
            break
    if best is not None:
        return best[0]
    raise NoSeparatingPlane(f"no admissible escape translation for vertex {v}")


# --- flow events and traces ----------------------------------------------------


class FlowEventKind(enum.Enum):
    EDGE_COLLAPSED = "EdgeCollapsed"
    FACE_COLLAPSED = "FaceCollapsed"
    VERTEX_BECAME_IDEAL = "VertexBecameIdeal"
    ALMOST_PROPER_ONSET = "AlmostProperOnset"
    BECAME_HYPERIDEAL_ONLY = "BecameHyperidealOnly"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class FlowEvent:
    kind: FlowEventKind
    t_value: float
    volume_at_event: float
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FlowSample:
    t: float
    angles: dict
    polyhedron: Polyhedron
    volume: VolumeResult
    event: str = ""


@dataclass
class FlowTrace:
    samples: list
    events: list
    final_skeleton: PlanarGraph
    sup_estimate: float
    sup_error: float
    seed: int

    def volumes_nondecreasing(self, event_slack: float = 2e-3) -> bool:
        vals = [(s.volume.value, s.volume.error_estimate) for s in self.samples]
        for (v1, e1), (v2, e2) in zip(vals, vals[1:]):
            if v2 < v1 - (e1 + e2 + event_slack):
                return False
        return True


@dataclass
class FlowOptions:
    t_floor: float = 1e-3
    dt_init: float = 1e-2
    dt_min: float = 1e-7
    ideal_band: float = 1e-5
    almost_proper_band: float = 1e-6
    edge_collapse_tol: float = 1e-6
    face_collapse_tol: float = 1e-6
    vol_tol_path: float = 1e-3
    vol_tol_final: float = 1e-5
    endgame_rel: float = 0.002
    perturbation: float = 1e-6
    seed: int = 0
    max_events: int | None = None
    sample_every: int = 10
    max_steps: int = 20000


def _scan_signals(P: Polyhedron, prev_kinds, held, opts: FlowOptions):
    """Degeneration signals of a step landing at P, worst first.

    ``prev_kinds`` are the vertex kinds before the step; a previously
    real vertex entering the ideal band (or jumping past it) signals.
    """
    out = []
    rep = classify_vertices(P)
    charts = P.vertex_charts
    radii = np.linalg.norm(charts, axis=1)
    for v, k in enumerate(prev_kinds):
        if k == PointKind.REAL and radii[v] > 1.0 - opts.ideal_band:
            out.append(("vertex_ideal", v, abs(1.0 - radii[v])))
    hyper = [v for v, k in enumerate(rep.kinds) if k == PointKind.HYPERIDEAL]
    held_set = set(held)
    for v in hyper:
        if prev_kinds[v] != PointKind.HYPERIDEAL:
            continue  # fresh crossing handled as vertex_ideal
        for w, k in enumerate(rep.kinds):
            if w == v or k != PointKind.REAL or (w, v) in held_set:
                continue
            m = 1.0 - float(charts[v] @ charts[w])
            if m < opts.almost_proper_band:
                out.append(("almost_proper", (w, v), m))
    for (a, b) in P.skeleton.edges:
        d = float(np.linalg.norm(charts[a] - charts[b]))
        if d < opts.edge_collapse_tol:
            out.append(("edge_collapse", (a, b), d))
    for f, cyc in enumerate(P.skeleton.faces):
        pts = charts[list(cyc)]
        s = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
        if s[1] < opts.face_collapse_tol * max(1.0, s[0]):
            out.append(("face_collapse", f, s[1]))
    out.sort(key=lambda item: item[2])
    return out


_EVENT_NAMES = {
    "vertex_ideal": "VertexBecameIdeal",
    "almost_proper": "AlmostProperOnset",
    "edge_collapse": "EdgeCollapsed",
    "face_collapse": "FaceCollapsed",
    "hyperideal_only": "BecameHyperidealOnly",
}


def _scaled(angles_dir, t):
    return {e: t * a for e, a in angles_dir.items()}


def _rebase(P, t, rng, perturbation):
    th = dihedral_angles(P)
    return {e: (a + rng.uniform(-perturbation, perturbation)) / t for e, a in th.items()}


def _path_volume(P, opts, final=False):
    # Fixed-depth quadrature along the path: cheap, deterministic, and
    # smooth in the polyhedron; the final state gets a deeper grid.
    if final:
        return polyhedron_volume(P, tol=opts.vol_tol_final, budget=2_000_000)
    return polyhedron_volume(P, tol=opts.vol_tol_path, budget=1_000_000,
                             mode="fixed", depth=2)


def _face_collapse_split(g: PlanarGraph, f: int, charts, tol):
    """Infer the collapse anchors of a geometrically flattening face."""
    cyc = g.faces[f]
    m = len(cyc)
    for ha in range(2 * m):
        ok = True
        for s in range(1, m):
            pa = (ha + s) % (2 * m)
            pb = (ha - s) % (2 * m)
            if pa % 2 == 0:
                a, b = cyc[pa // 2], cyc[pb // 2]
                if a != b and np.linalg.norm(charts[a] - charts[b]) > tol:
                    ok = False
                    break
        if ok:
            kind = "edge" if ha % 2 else "vertex"
            pos = ha // 2
            hb = (ha + m) % (2 * m)
            kind_b = "edge" if hb % 2 else "vertex"
            return ((kind, pos), (kind_b, hb // 2))
    return None


def _collapse_rewrite(kind, data, g, P_state, rng, opts, t):
    """Apply an edge or face collapse move and rebuild on the new skeleton.

    Returns (new_g, new_P, new_theta_dir, event_kind, event_data) or
    raises StallDetected-style ValueError strings for the caller to wrap.
    """
    if kind == "edge_collapse":
        res = edge_collapse(g, data)
        ev_kind = FlowEventKind.EDGE_COLLAPSED
        ev_data = {"edge": data}
    else:
        split = _face_collapse_split(g, data, P_state.vertex_charts,
                                     1e3 * opts.face_collapse_tol)
        if split is None:
            raise ValueError(f"face {data} degenerates without a collapse pattern")
        res = face_collapse(g, data, split)
        ev_kind = FlowEventKind.FACE_COLLAPSED
        ev_data = {"face": data, "split": split}
    if not res.three_connected:
        raise ValueError("collapse leaves a non-3-connected skeleton")
    new_g = res.graph
    order = sorted((new_idx, old) for old, new_idx in res.face_map.items()
                   if new_idx is not None)
    planes = tuple(P_state.planes[old] for _, old in order)
    verts = np.zeros((new_g.n_vertices, 3))
    counts = np.zeros(new_g.n_vertices)
    for old, new in res.vertex_map.items():
        if new is not None:
            verts[new] += P_state.vertex_charts[old]
            counts[new] += 1
    verts /= np.maximum(counts, 1)[:, None]
    seed_poly = Polyhedron(planes=planes, skeleton=new_g, vertex_lifts=lift(verts))
    from .core import dihedral_angle as _da
    th_now = {}
    for e in new_g.edges:
        f1, f2 = new_g.edge_faces[e]
        th_now[e] = _da(planes[f1], planes[f2])
    P_new = realize_from_angles(new_g, th_now, seed_poly, held=())
    theta_dir = _rebase(P_new, t, rng, opts.perturbation)
    return new_g, P_new, theta_dir, ev_kind, ev_data


def run_flow(P0: Polyhedron, opts: FlowOptions | None = None) -> FlowTrace:
    """Follow the scaled-angle path t * theta downward from P0.

    P0 must be proper with no ideal vertices (apply
    :func:`nudge_ideal_vertices` first if needed).  Returns the trace of
    samples, events, the final skeleton, and the supremum estimate.
    """
    opts = opts or FlowOptions()
    rng = np.random.default_rng(opts.seed)
    report = classify_vertices(P0)
    if report.is_improper():
        raise ImproperInput("flow needs a proper starting polyhedron")
    if any(k == PointKind.IDEAL for k in report.kinds):
        raise ImproperInput("remove ideal vertices before flowing (nudge)")

    g = P0.skeleton
    max_events = opts.max_events if opts.max_events is not None else 10 * len(g.edges)
    held: list = [(w, report.witnesses[w]) for w, s in enumerate(report.statuses)
                  if s == VertexStatus.ALMOST_PROPER]
    t = 1.0
    theta_dir = _rebase(P0, t, rng, opts.perturbation)
    P = realize_from_angles(g, _scaled(theta_dir, t), P0, held=held)

    samples = []
    events = []

    def record(P_, t_, event=""):
        vol = _path_volume(P_, opts)
        samples.append(FlowSample(t_, dihedral_angles(P_), P_, vol, event))
        return vol

    def partial_trace():
        return FlowTrace(samples, events, g, math.nan, math.nan, opts.seed)

    def handle_event(kind, data, P_state, t_now):
        """Dispatch one localized degeneration; returns the continued state."""
        nonlocal g, held, theta_dir, events
        vol_ev = record(P_state, t_now, event=_EVENT_NAMES[kind])
        if kind == "vertex_ideal":
            v = data
            pole = next((u for (w, u) in held if w == v), None)
            P_new = escape_deformation(P_state, v, almost_pole=pole)
            if classify_vertices(P_new).kinds[v] != PointKind.HYPERIDEAL:
                raise StallDetected(
                    f"escape left vertex {v} inside the ball (tangent edge regime)",
                    trace=partial_trace())
            if pole is not None:
                held = [(w, u) for (w, u) in held if w != v]
            events.append(FlowEvent(FlowEventKind.VERTEX_BECAME_IDEAL, t_now,
                                    vol_ev.value, {"vertex": v}))
            theta_dir = _rebase(P_new, t_now, rng, opts.perturbation)
            return P_new
        if kind == "almost_proper":
            w, u = data
            if _norm_edge(w, u) not in P_state.skeleton.edge_index:
                raise StallDetected(
                    "non-adjacent almost-proper contact is out of scope",
                    trace=partial_trace())
            held.append((w, u))
            events.append(FlowEvent(FlowEventKind.ALMOST_PROPER_ONSET, t_now,
                                    vol_ev.value, {"vertex": w, "pole": u}))
            return realize_from_angles(g, _scaled(theta_dir, t_now), P_state, held=held)
        # edge or face collapse
        try:
            g_new, P_new, theta_new, ev_kind, ev_data = _collapse_rewrite(
                kind, data, g, P_state, rng, opts, t_now)
        except ValueError as exc:
            raise StallDetected(str(exc), trace=partial_trace())
        g = g_new
        theta_dir = theta_new
        held = []
        events.append(FlowEvent(ev_kind, t_now, vol_ev.value, ev_data))
        return P_new

    record(P, t)
    dt = opts.dt_init
    accepted = 0
    hyperideal_only = all(k == PointKind.HYPERIDEAL for k in classify_vertices(P).kinds)

    for _ in range(opts.max_steps):
        if len(events) > max_events:
            raise MaxEventsExceeded(f"more than {max_events} events",
                                    trace=partial_trace())
        if hyperideal_only:
            lens = edge_lengths(P)
            bound = 0.5 * t * sum(lens[e] * theta_dir[e] for e in g.edges)
            vol_here = samples[-1].volume.value if samples else 0.0
            if bound < opts.endgame_rel * max(vol_here, 1e-9) or t <= opts.t_floor:
                final_vol = _path_volume(P, opts, final=True)
                sup = final_vol.value + 0.5 * bound
                err = 0.5 * bound + final_vol.error_estimate
                samples.append(FlowSample(t, dihedral_angles(P), P, final_vol, ""))
                return FlowTrace(samples, events, g, sup, err, opts.seed)

        t_next = max(t - dt, 0.2 * t)
        prev_kinds = classify_vertices(P).kinds
        try:
            P_next = realize_from_angles(g, _scaled(theta_dir, t_next), P, held=held)
            signals = [] if hyperideal_only else _scan_signals(P_next, prev_kinds, held, opts)
        except (NewtonDiverged, SkeletonChanged):
            if dt > opts.dt_min:
                dt *= 0.5
                continue
            # Stalled against the realizability boundary: look for a
            # degeneration of the current state with relaxed thresholds
            # (the limit is approached but never reached numerically).
            relaxed = FlowOptions(**{**opts.__dict__,
                                     "edge_collapse_tol": 1e3 * opts.edge_collapse_tol,
                                     "face_collapse_tol": 1e3 * opts.face_collapse_tol,
                                     "ideal_band": 1e2 * opts.ideal_band})
            stale = [s for s in _scan_signals(P, prev_kinds, held, relaxed)
                     if s[0] in ("edge_collapse", "face_collapse", "vertex_ideal")]
            if not stale:
                raise StallDetected(f"no progress at t={t:.6g}", trace=partial_trace())
            kind, data, _ = stale[0]
            P = handle_event(kind, data, P, t)
            dt = opts.dt_init
            hyperideal_only = all(k == PointKind.HYPERIDEAL
                                  for k in classify_vertices(P).kinds)
            continue

        if signals and dt > opts.dt_min:
            dt *= 0.5
            continue
        if signals:
            kind, data, _ = signals[0]
            t = t_next
            P = handle_event(kind, data, P_next, t)
            rep = classify_vertices(P)
            if all(k == PointKind.HYPERIDEAL for k in rep.kinds):
                hyperideal_only = True
                events.append(FlowEvent(FlowEventKind.BECAME_HYPERIDEAL_ONLY, t,
                                        samples[-1].volume.value, {}))
            dt = opts.dt_init
            continue

        # Plain accepted step.
        P = P_next
        t = t_next
        accepted += 1
        if accepted % opts.sample_every == 0:
            record(P, t)
        dt = min(dt * 1.7, opts.dt_init)
        if not hyperideal_only:
            rep = classify_vertices(P)
            if all(k == PointKind.HYPERIDEAL for k in rep.kinds):
                hyperideal_only = True
                vol_ev = record(P, t, event=_EVENT_NAMES["hyperideal_only"])
                events.append(FlowEvent(FlowEventKind.BECAME_HYPERIDEAL_ONLY, t,
                                        vol_ev.value, {}))
    raise StallDetected("step limit reached", trace=partial_trace())


def sup_volume(g: PlanarGraph, seed: Polyhedron, opts: FlowOptions | None = None) -> float:
    """Flow estimate of sup Vol over proper polyhedra with skeleton g."""
    report = classify_vertices(seed)
    P = seed
    if any(k == PointKind.IDEAL for k in report.kinds):
        P = nudge_ideal_vertices(P)
    trace = run_flow(P, opts)
    return trace.sup_estimate


def trace_to_csv(trace: FlowTrace) -> str:
    """CSV rendering: t, volume, vol_error, event, skeleton_hash."""
    lines = ["t,volume,vol_error,event,skeleton_hash"]
    for s in trace.samples:
        lines.append(
            f"{s.t:.12g},{s.volume.value:.12g},{s.volume.error_estimate:.12g},"
            f"{s.event},{s.polyhedron.skeleton.canonical_hash()}")
    return "\n".join(lines) + "\n"
