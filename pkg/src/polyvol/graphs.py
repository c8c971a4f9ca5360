"""Combinatorics of 1-skeleta: embedded 3-connected planar graphs.

A :class:`PlanarGraph` stores a map on the sphere as a list of face
cycles with a coherent orientation (every directed edge appears in
exactly one face).  Duals, medial graphs, the collapse moves used by
degeneration flows, and the Bao-Bonahon angle admissibility check all
operate on this structure.

Graph text format (shared with the CLI): UTF-8, line oriented;
one ``V <count>`` line, then one ``F v0 v1 ... vk`` line per face with
vertex indices in cyclic order; edges are inferred; ``#`` starts a comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

from .errors import (
    AngleOutOfRange,
    BadFormat,
    CollapseMakesDegenerate,
    NotPolyhedral,
)

Edge = tuple[int, int]


def _norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def _orient_faces(n_vertices, faces):
    """Flip face cycles so every directed edge is used exactly once.

    Returns the oriented face list or raises BadFormat if impossible.
    """
    edge_faces = {}
    for i, cyc in enumerate(faces):
        for k in range(len(cyc)):
            e = _norm_edge(cyc[k], cyc[(k + 1) % len(cyc)])
            edge_faces.setdefault(e, []).append(i)
    for e, fs in edge_faces.items():
        if len(fs) != 2:
            raise BadFormat(f"edge {e} lies on {len(fs)} faces, expected 2")
    # BFS over face adjacency, flipping so shared edges are traversed oppositely.
    flip = [None] * len(faces)
    directed = lambda cyc: {(cyc[k], cyc[(k + 1) % len(cyc)]) for k in range(len(cyc))}
    for start in range(len(faces)):
        if flip[start] is not None:
            continue
        flip[start] = False
        queue = [start]
        while queue:
            i = queue.pop()
            di = directed(faces[i] if not flip[i] else faces[i][::-1])
            for e in {_norm_edge(a, b) for a, b in di}:
                for j in edge_faces[e]:
                    if j == i:
                        continue
                    dj = directed(faces[j])
                    want_flip = bool(di & dj)
                    if flip[j] is None:
                        flip[j] = want_flip
                        queue.append(j)
                    elif flip[j] != want_flip:
                        raise BadFormat("face cycles admit no coherent orientation")
    oriented = [tuple(cyc[::-1]) if flip[i] else tuple(cyc) for i, cyc in enumerate(faces)]
    used = set()
    for cyc in oriented:
        for k in range(len(cyc)):
            d = (cyc[k], cyc[(k + 1) % len(cyc)])
            if d in used:
                raise BadFormat(f"directed edge {d} used twice after orientation")
            used.add(d)
    return oriented


@dataclass(frozen=True)
class PlanarGraph:
    """An embedded graph on S^2 given by coherently oriented face cycles."""

    n_vertices: int
    faces: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        faces = _orient_faces(self.n_vertices, [tuple(f) for f in self.faces])
        object.__setattr__(self, "faces", tuple(faces))
        self._validate()

    def _validate(self):
        seen = set()
        for cyc in self.faces:
            if len(cyc) < 2:
                raise BadFormat("face cycle shorter than 2")
            if len(set(cyc)) != len(cyc):
                raise BadFormat(f"face cycle {cyc} repeats a vertex")
            for v in cyc:
                if not (0 <= v < self.n_vertices):
                    raise BadFormat(f"vertex {v} out of range")
                seen.add(v)
        if seen != set(range(self.n_vertices)):
            raise BadFormat("isolated vertices")
        V, E, F = self.n_vertices, len(self.edges), len(self.faces)
        if V - E + F != 2:
            raise BadFormat(f"Euler formula violated: V-E+F = {V - E + F}")

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        es = set()
        for cyc in self.faces:
            for k in range(len(cyc)):
                es.add(_norm_edge(cyc[k], cyc[(k + 1) % len(cyc)]))
        return tuple(sorted(es))

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def edge_faces(self) -> dict[Edge, tuple[int, int]]:
        """The two faces adjacent to each edge."""
        out = {}
        for i, cyc in enumerate(self.faces):
            for k in range(len(cyc)):
                e = _norm_edge(cyc[k], cyc[(k + 1) % len(cyc)])
                out.setdefault(e, []).append(i)
        return {e: tuple(fs) for e, fs in out.items()}

    @cached_property
    def vertex_faces(self) -> tuple[tuple[int, ...], ...]:
        """Faces around each vertex, in rotation order.

        Face f follows face g at v when they share the edge leaving v that
        g enters through; this walks the faces cyclically around v.
        """
        nxt = {}  # (v, face) -> next face around v
        for i, cyc in enumerate(self.faces):
            m = len(cyc)
            for k in range(m):
                v = cyc[k]
                w_prev = cyc[(k - 1) % m]
                e = _norm_edge(v, w_prev)
                a, b = self.edge_faces[e]
                nxt[(v, i)] = a if b == i else b
        out = []
        count = [sum(1 for cyc in self.faces if v in cyc) for v in range(self.n_vertices)]
        for v in range(self.n_vertices):
            start = next(i for i, cyc in enumerate(self.faces) if v in cyc)
            cycle = [start]
            cur = nxt[(v, start)]
            while cur != start:
                cycle.append(cur)
                cur = nxt[(v, cur)]
                if len(cycle) > count[v]:
                    raise BadFormat(f"vertex {v} link is not a single cycle")
            if len(cycle) != count[v]:
                raise BadFormat(f"vertex {v} link is not a single cycle")
            out.append(tuple(cycle))
        return tuple(out)

    @cached_property
    def vertex_edges(self) -> tuple[tuple[Edge, ...], ...]:
        """Edges at each vertex, in rotation order matching vertex_faces."""
        out = []
        for v in range(self.n_vertices):
            ring = []
            for f in self.vertex_faces[v]:
                cyc = self.faces[f]
                k = cyc.index(v)
                ring.append(_norm_edge(v, cyc[(k - 1) % len(cyc)]))
            out.append(tuple(ring))
        return tuple(out)

    def degree(self, v: int) -> int:
        return len(self.vertex_faces[v])

    @cached_property
    def adjacency(self) -> tuple[frozenset, ...]:
        adj = [set() for _ in range(self.n_vertices)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    def is_polyhedral(self) -> bool:
        """Every face >= 3, every degree >= 3, simple, and 3-connected."""
        if any(len(cyc) < 3 for cyc in self.faces):
            return False
        if any(self.degree(v) < 3 for v in range(self.n_vertices)):
            return False
        return is_3_connected(self)

    def canonical_hash(self) -> str:
        """Stable hex digest of the labelled face structure."""
        import hashlib

        parts = [f"V{self.n_vertices}"]
        for cyc in sorted(min(cyc[k:] + cyc[:k] for k in range(len(cyc))) for cyc in self.faces):
            parts.append("F" + ",".join(map(str, cyc)))
        return hashlib.sha1(";".join(parts).encode()).hexdigest()[:12]


def _connected_after_removal(adj, removed: set, n: int) -> bool:
    alive = [v for v in range(n) if v not in removed]
    if not alive:
        return True
    seen = {alive[0]}
    stack = [alive[0]]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in removed and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(alive)


def is_3_connected(g: PlanarGraph) -> bool:
    """Brute-force 3-connectivity test (desk scale)."""
    n = g.n_vertices
    if n < 4:
        return False
    adj = g.adjacency
    if not _connected_after_removal(adj, set(), n):
        return False
    for pair in combinations(range(n), 2):
        if not _connected_after_removal(adj, set(pair), n):
            return False
    for v in range(n):
        if not _connected_after_removal(adj, {v}, n):
            return False
    return True


def dual_graph(g: PlanarGraph) -> PlanarGraph:
    """Dual map: dual vertex i is face i of g; dual face j is vertex j of g."""
    if not g.is_polyhedral():
        raise NotPolyhedral("dual requires a 3-connected polyhedral graph")
    dual_faces = [g.vertex_faces[v] for v in range(g.n_vertices)]
    return PlanarGraph(n_vertices=len(g.faces), faces=tuple(dual_faces))


def medial_graph(g: PlanarGraph) -> PlanarGraph:
    """Medial map: one vertex per edge of g, joined when edges share an angle.

    Medial vertex i corresponds to ``g.edges[i]``; the faces of the output
    are the vertex rings and the face rings of g.
    """
    if not g.is_polyhedral():
        raise NotPolyhedral("medial requires a 3-connected polyhedral graph")
    idx = g.edge_index
    faces = []
    for cyc in g.faces:
        m = len(cyc)
        faces.append(tuple(idx[_norm_edge(cyc[k], cyc[(k + 1) % m])] for k in range(m)))
    for v in range(g.n_vertices):
        ring = tuple(idx[e] for e in g.vertex_edges[v])
        faces.append(ring[::-1])
    return PlanarGraph(n_vertices=len(g.edges), faces=tuple(faces))


# --- collapse moves ---------------------------------------------------------


@dataclass(frozen=True)
class CollapseResult:
    """Outcome of a collapse move.

    ``vertex_map`` sends old vertex ids to new ones (None if smoothed
    away); ``face_map`` does the same for faces (None if the face
    disappeared); ``three_connected`` reports, without repairing,
    whether the result is still polyhedral.
    """

    graph: PlanarGraph
    vertex_map: dict
    face_map: dict
    three_connected: bool


def _cleanup(n_vertices, labelled_faces):
    """Merge 2-gons (parallel edges) and smooth degree-2 vertices.

    ``labelled_faces`` is a list of (label, cycle).  Returns
    (graph, vertex_map, face_map) after relabelling; raises
    CollapseMakesDegenerate if the result is no longer a map with all
    faces >= 3 and degrees >= 3 on >= 4 vertices.
    """
    faces = [(lab, list(c)) for lab, c in labelled_faces]
    changed = True
    while changed:
        changed = False
        for _, cyc in faces:
            k = 0
            while k < len(cyc) and len(cyc) > 1:
                if cyc[k] == cyc[(k + 1) % len(cyc)]:
                    del cyc[k]
                    changed = True
                else:
                    k += 1
        faces = [(lab, c) for lab, c in faces if len(c) >= 1]
        two = next((i for i, (_, c) in enumerate(faces) if len(c) == 2), None)
        if two is not None:
            del faces[two]
            changed = True
            continue
        # Smooth degree-2 vertices.
        vdeg = {}
        deg = {}
        for _, cyc in faces:
            for k in range(len(cyc)):
                e = _norm_edge(cyc[k], cyc[(k + 1) % len(cyc)])
                deg[e] = deg.get(e, 0) + 1
        for (u, v) in deg:
            vdeg[u] = vdeg.get(u, 0) + 1
            vdeg[v] = vdeg.get(v, 0) + 1
        sm = next((v for v, d in vdeg.items() if d == 2), None)
        if sm is not None:
            for _, cyc in faces:
                while sm in cyc:
                    cyc.remove(sm)
            changed = True
    used = sorted({v for _, cyc in faces for v in cyc})
    vmap = {v: i for i, v in enumerate(used)}
    out_faces = [tuple(vmap[v] for v in cyc) for _, cyc in faces]
    fmap = {lab: i for i, (lab, _) in enumerate(faces)}
    if len(used) < 4 or any(len(c) < 3 for c in out_faces):
        raise CollapseMakesDegenerate(
            f"result degenerates to {len(used)} vertices", partial=(len(used), out_faces))
    try:
        g = PlanarGraph(n_vertices=len(used), faces=tuple(out_faces))
    except BadFormat as exc:
        raise CollapseMakesDegenerate(str(exc), partial=(len(used), out_faces))
    return g, vmap, fmap


def edge_collapse(g: PlanarGraph, e: Edge) -> CollapseResult:
    """Collapse edge e to a vertex; the two incident faces each lose an edge.

    Parallel edges created by the identification are merged; degree-2
    vertices are smoothed away when possible.  Raises
    CollapseMakesDegenerate when no polyhedral map at all remains; loss
    of 3-connectivity is reported, not repaired.
    """
    u, v = _norm_edge(*e)
    if (u, v) not in g.edge_index:
        raise KeyError(f"no edge {e}")
    faces = [(i, [u if w == v else w for w in cyc]) for i, cyc in enumerate(g.faces)]
    out, vmap, fmap = _cleanup(g.n_vertices, faces)
    full_map = {w: vmap.get(u if w == v else w) for w in range(g.n_vertices)}
    face_map = {i: fmap.get(i) for i in range(len(g.faces))}
    return CollapseResult(out, full_map, face_map, is_3_connected(out))


def face_collapse(g: PlanarGraph, face: int, split: tuple) -> CollapseResult:
    """Collapse face ``face`` to an edge.

    ``split`` names two anchors on the face cycle, each ``("vertex", k)``
    or ``("edge", k)`` with k a position in the cycle (edge k joins cycle
    positions k and k+1).  The anchors must bisect the cycle; vertices at
    equal steps from the anchors on the two arcs are identified pairwise,
    flattening the face onto an edge between the anchors.
    """
    cyc = g.faces[face]
    m = len(cyc)
    (kind_a, pos_a), (kind_b, pos_b) = split
    # Half-integer positions around the cycle: vertex k at 2k, edge k at 2k+1.
    ha = 2 * pos_a + (1 if kind_a == "edge" else 0)
    hb = 2 * pos_b + (1 if kind_b == "edge" else 0)
    if (hb - ha) % (2 * m) != m:
        raise CollapseMakesDegenerate("anchors do not bisect the face cycle")
    pairs = []
    for s in range(1, m):
        pa = (ha + s) % (2 * m)
        pb = (ha - s) % (2 * m)
        if pa % 2 == 0:
            a, b = cyc[pa // 2], cyc[pb // 2]
            if a != b:
                pairs.append((a, b))
    rep = list(range(g.n_vertices))

    def find(x):
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            rep[max(ra, rb)] = min(ra, rb)
    faces = [(i, [find(w) for w in c]) for i, c in enumerate(g.faces) if i != face]
    out, vmap, fmap = _cleanup(g.n_vertices, faces)
    full_map = {w: vmap.get(find(w)) for w in range(g.n_vertices)}
    face_map = {i: fmap.get(i) for i in range(len(g.faces))}
    return CollapseResult(out, full_map, face_map, is_3_connected(out))


# --- angle admissibility ----------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """An offending (or boundary) transverse curve, as its crossed edges."""

    kind: str  # "closed_curve" or "arc"
    crossed_edges: tuple[Edge, ...]
    angle_sum: float
    bound: float
    shares_vertex: bool


@dataclass(frozen=True)
class AdmissibilityReport:
    status: str  # "admissible" | "violated_closed_curve" | "violated_arc"
    witness: Witness | None = None
    equality_cases: tuple[Witness, ...] = ()

    @property
    def admissible(self) -> bool:
        return self.status == "admissible"


def _edges_share_vertex(edges) -> bool:
    common = set(edges[0])
    for e in edges[1:]:
        common &= set(e)
        if not common:
            return False
    return True


def _simple_cycles(adj, n):
    """All simple cycles (length >= 2 edges) of a multigraph-free graph."""
    cycles = []

    def dfs(start, u, visited, path):
        for w in sorted(adj[u]):
            if w == start and len(path) >= 3:
                cycles.append(tuple(path))
            elif w > start and w not in visited:
                visited.add(w)
                path.append(w)
                dfs(start, w, visited, path)
                path.pop()
                visited.remove(w)

    for s in range(n):
        dfs(s, s, {s}, [s])
    # Each cycle found twice (two directions); dedupe by frozenset of edges.
    seen = set()
    out = []
    for cyc in cycles:
        key = frozenset(_norm_edge(cyc[k], cyc[(k + 1) % len(cyc)]) for k in range(len(cyc)))
        if key not in seen:
            seen.add(key)
            out.append(cyc)
    return out


def _simple_paths(adj, src, dst):
    paths = []

    def dfs(u, visited, path):
        if u == dst:
            paths.append(tuple(path))
            return
        for w in sorted(adj[u]):
            if w not in visited:
                visited.add(w)
                path.append(w)
                dfs(w, visited, path)
                path.pop()
                visited.remove(w)

    dfs(src, {src}, [src])
    return paths


def check_hyperideal_angles(g: PlanarGraph, angles: dict, tol: float = 1e-9) -> AdmissibilityReport:
    """Check the linear conditions characterizing hyperideal dihedral angles.

    These are the Bao-Bonahon inequalities over transverse curves: for a
    simple closed curve crossing edges e_1..e_h once each the angle sum is
    at most (h-2)pi, with equality allowed only when the crossed edges
    share a vertex; for an arc joining two faces that share a vertex the
    sum must be strictly below (h-1)pi unless the crossed edges share a
    vertex.  Curves are enumerated exhaustively through the dual graph.

    Equality cases sitting on a bound (within tol) are reported in
    ``equality_cases``; those not exempted by a shared vertex make the
    vector inadmissible.
    """
    if not g.is_polyhedral():
        raise NotPolyhedral("admissibility needs a 3-connected polyhedral graph")
    for e in g.edges:
        th = angles.get(e)
        if th is None:
            raise AngleOutOfRange(f"missing angle for edge {e}")
        if not (0.0 < th < math.pi):
            raise AngleOutOfRange(f"angle {th} at edge {e} outside (0, pi)")

    dual = dual_graph(g)
    # Primal edge crossed when the dual path steps between the two faces of it.
    dual_adj = [set(s) for s in dual.adjacency]
    cross = {}
    for e, (f1, f2) in g.edge_faces.items():
        cross[_norm_edge(f1, f2)] = e

    equalities = []

    def consider(kind, crossed, total, bound):
        shares = _edges_share_vertex(crossed)
        w = Witness(kind, tuple(crossed), total, bound, shares)
        if kind == "arc" and shares:
            return None  # condition waived when the crossed edges share a vertex
        if abs(total - bound) <= tol:
            if kind == "closed_curve" and shares:
                equalities.append(w)
                return None
            return w
        return w if total > bound else None

    for cyc in _simple_cycles(dual_adj, dual.n_vertices):
        h = len(cyc)
        crossed = [cross[_norm_edge(cyc[k], cyc[(k + 1) % h])] for k in range(h)]
        if len(set(crossed)) != h:
            continue
        total = sum(angles[e] for e in crossed)
        bad = consider("closed_curve", crossed, total, (h - 2) * math.pi)
        if bad is not None:
            return AdmissibilityReport("violated_closed_curve", bad, tuple(equalities))

    # Arcs: endpoints in two different faces sharing a vertex.
    share_pairs = set()
    for ring in g.vertex_faces:
        for a, b in combinations(ring, 2):
            share_pairs.add(_norm_edge(a, b))
    for f1, f2 in sorted(share_pairs):
        for path in _simple_paths(dual_adj, f1, f2):
            h = len(path) - 1
            if h < 1:
                continue
            crossed = [cross[_norm_edge(path[k], path[k + 1])] for k in range(h)]
            if len(set(crossed)) != h:
                continue
            total = sum(angles[e] for e in crossed)
            bad = consider("arc", crossed, total, (h - 1) * math.pi)
            if bad is not None:
                return AdmissibilityReport("violated_arc", bad, tuple(equalities))

    return AdmissibilityReport("admissible", None, tuple(equalities))


# --- text format ------------------------------------------------------------


def parse_graph(text: str) -> PlanarGraph:
    """Parse the line-oriented graph format."""
    n = None
    faces = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "V":
            if n is not None:
                raise BadFormat("duplicate V line")
            n = int(parts[1])
        elif parts[0] == "F":
            faces.append(tuple(int(p) for p in parts[1:]))
        else:
            raise BadFormat(f"unknown line {parts[0]!r}")
    if n is None or not faces:
        raise BadFormat("need one V line and at least one F line")
    return PlanarGraph(n_vertices=n, faces=tuple(faces))


def format_graph(g: PlanarGraph) -> str:
    lines = [f"V {g.n_vertices}"]
    for cyc in g.faces:
        lines.append("F " + " ".join(map(str, cyc)))
    return "\n".join(lines) + "\n"


# --- named corpus graphs ----------------------------------------------------


def tetrahedron_graph() -> PlanarGraph:
    return PlanarGraph(4, ((0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)))


def cube_graph() -> PlanarGraph:
    return PlanarGraph(8, (
        (0, 1, 2, 3), (7, 6, 5, 4),
        (0, 4, 5, 1), (1, 5, 6, 2), (2, 6, 7, 3), (3, 7, 4, 0),
    ))


def octahedron_graph() -> PlanarGraph:
    return PlanarGraph(6, (
        (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 1),
        (5, 2, 1), (5, 3, 2), (5, 4, 3), (5, 1, 4),
    ))


def pyramid_graph(n: int) -> PlanarGraph:
    """n-gonal pyramid: apex 0 over base 1..n."""
    if n < 3:
        raise BadFormat("pyramid needs n >= 3")
    lateral = tuple((0, 1 + i, 1 + (i + 1) % n) for i in range(n))
    base = tuple(range(n, 0, -1))
    return PlanarGraph(n + 1, lateral + (base,))


def prism_graph(n: int) -> PlanarGraph:
    """n-gonal prism: bottom 0..n-1, top n..2n-1."""
    if n < 3:
        raise BadFormat("prism needs n >= 3")
    bottom = tuple(range(n))
    top = tuple(range(2 * n - 1, n - 1, -1))
    sides = tuple((i, n + i, n + (i + 1) % n, (i + 1) % n)[::-1] for i in range(n))
    return PlanarGraph(2 * n, (bottom, top) + sides)
