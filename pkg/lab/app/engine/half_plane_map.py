"""
Explicit finite portion of a half-planar triangulation under peeling.

Vertices are creation-ordered integers (root vertex 0, its right boundary neighbour 1).
The unexplored boundary is a doubly linked frontier; the original boundary on both
sides is materialized lazily. Edges carry ids; a 2-gon closed without a face glues
its two edge ids together through a union-find.
"""
import logging
from collections import deque
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, TextIO, Tuple

import networkx as nx
import numpy as np

from app.engine.streams import RngStream
from app.errors import DomainError, InsufficientExplorationError, MapConsistencyError
from app.models import PeelEvent, Side, StepKind
from app.tools.analytic_tools import log_phi

logger = logging.getLogger(__name__)

ROOT = 0
INF = -1


class EdgeUnionFind:
    """Union-find over edge ids with dynamic enlarging and path compression"""

    def __init__(self):
        self.parents: List[int] = []
        self.boundary: List[bool] = []

    def add(self, on_boundary: bool = False) -> int:
        self.parents.append(len(self.parents))
        self.boundary.append(on_boundary)
        return len(self.parents) - 1

    def find(self, e: int) -> int:
        root = e
        while root != self.parents[root]:
            root = self.parents[root]
        while e != root:
            self.parents[e], e = root, self.parents[e]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if rb < ra:
            ra, rb = rb, ra
        self.parents[rb] = ra
        self.boundary[ra] = self.boundary[ra] or self.boundary[rb]
        return ra

    def on_boundary(self, e: int) -> bool:
        return self.boundary[self.find(e)]


class PolygonHole(NamedTuple):
    """
    A hole to triangulate: vertices[j] -> vertices[j+1] runs along edges[j],
    and the last edge closes the cycle. Root edge is edges[0].
    """
    vertices: List[int]
    edges: List[int]
    theta: float = 0.0

    @property
    def size(self) -> int:
        return len(self.vertices)


class HoleFilling(NamedTuple):
    faces: List[Tuple[int, int, int]]
    face_edges: List[Tuple[int, int, int]]
    new_vertices: List[int]
    new_edges: List[Tuple[int, int]]
    glued: List[Tuple[int, int]]


class HullSets(NamedTuple):
    vertices: FrozenSet[int]
    faces: FrozenSet[int]


def _split_order(m: int) -> List[int]:
    order, lo, hi = [], 2, m - 1
    while lo <= hi:
        order.append(lo)
        if hi != lo:
            order.append(hi)
        lo, hi = lo + 1, hi - 1
    return order


def _choose_root_face(m: int, n: int, u: float) -> Tuple[str, int, int]:
    """
    Pick the face on the root edge of an m-gon holding exactly n internal vertices,
    uniformly among all such triangulations. Returns (kind, j, n1).
    """
    if m == 2 and n == 0:
        return "glue", 0, 0
    log_total = log_phi(n, m)
    acc = 0.0
    if n >= 1:
        acc = float(np.exp(log_phi(n - 1, m + 1) - log_total))
        if u < acc:
            return "internal", 0, 0
    last = ("internal", 0, 0)
    n1 = np.arange(n + 1)
    for j in _split_order(m):
        w = np.exp(log_phi(n1, j) + log_phi(n - n1, m - j + 1) - log_total)
        cum = acc + np.cumsum(w)
        if u < cum[-1]:
            return "split", j, int(np.searchsorted(cum, u, side="right"))
        acc = float(cum[-1])
        nz = np.flatnonzero(w)
        if nz.size:
            last = ("split", j, int(nz[-1]))
    # rounding left u just above the accumulated mass
    return last


def fill_hole(hole: PolygonHole, target_internal_count: int, rng: RngStream,
              next_vertex: Optional[int] = None, next_edge: Optional[int] = None) -> HoleFilling:
    """
    Triangulate an m-gon with exactly target_internal_count internal vertices.

    Conditionally on its count a free triangulation is uniform, so each root-edge
    face is drawn with weight phi_{n-1,m+1} (internal apex) or
    phi_{n1,j} phi_{n-n1,m-j+1} (split at vertex j) out of phi_{n,m}.

    Args:
        hole: boundary cycle and edge ids
        target_internal_count: internal vertices to create
        rng: stream owned by the caller
        next_vertex / next_edge: first ids to allocate (defaults: one past the hole's ids)

    Returns:
        HoleFilling with faces, their edge ids, new vertices, new edges and glued edge pairs
    """
    m = hole.size
    if m < 2 or len(hole.edges) != m:
        raise DomainError(f"a hole needs m >= 2 vertices and m edges, got {m} and {len(hole.edges)}")
    if len(set(hole.vertices)) != m:
        raise MapConsistencyError("hole boundary is not a simple cycle")
    if target_internal_count < 0:
        raise DomainError("internal count must be >= 0")
    vid = next_vertex if next_vertex is not None else max(hole.vertices) + 1
    eid = next_edge if next_edge is not None else max(hole.edges) + 1

    faces, face_edges, new_vertices, new_edges, glued = [], [], [], [], []
    stack = [(list(hole.vertices), list(hole.edges), int(target_internal_count))]
    uniform = rng.generator.random
    while stack:
        verts, edges, n = stack.pop()
        kind, j, n1 = _choose_root_face(len(verts), n, uniform())
        v0, v1 = verts[0], verts[1]
        if kind == "glue":
            glued.append((edges[0], edges[1]))
        elif kind == "internal":
            z = vid
            vid += 1
            new_vertices.append(z)
            a, b = eid, eid + 1  # a = (v0, z), b = (z, v1)
            eid += 2
            new_edges.extend([(v0, z), (z, v1)])
            faces.append((v0, v1, z))
            face_edges.append((edges[0], b, a))
            stack.append(([v0, z] + verts[1:], [a, b] + edges[1:], n - 1))
        else:
            vj = verts[j]
            s1, s2 = eid, eid + 1  # s1 = (v1, vj), s2 = (vj, v0)
            eid += 2
            new_edges.extend([(v1, vj), (vj, v0)])
            faces.append((v0, v1, vj))
            face_edges.append((edges[0], s1, s2))
            stack.append((verts[j:] + [v0], edges[j:] + [s2], n - n1))
            stack.append((verts[1:j + 1], edges[1:j] + [s1], n1))
    return HoleFilling(faces, face_edges, new_vertices, new_edges, glued)


class HoleRecord(NamedTuple):
    step: int
    size: int
    internal: int
    filled: bool


class HalfPlaneMap:
    """
    Revealed region P_n of a half-planar triangulation plus the frontier of T_n.

    The region's own frontier segment runs from seg_left to seg_right; both ends are
    original-boundary vertices. Faces remember the step that revealed them, so the
    region after any earlier step can be recovered.
    """

    def __init__(self, theta: float = 0.0, fill_geometry: bool = True):
        self.theta = float(theta)
        self.fill_geometry = fill_geometry
        self.n_vertices = 0
        self.boundary_pos: Dict[int, int] = {}
        self.joined_at: Dict[int, int] = {}
        self.left: Dict[int, int] = {}
        self.right: Dict[int, int] = {}
        self.edge_right: Dict[int, int] = {}
        self.edge_ends: List[Tuple[int, int]] = []
        self.edges = EdgeUnionFind()
        self.faces: List[Tuple[int, int, int]] = []
        self.face_edges: List[Tuple[int, int, int]] = []
        self.face_step: List[int] = []
        self.holes: List[HoleRecord] = []
        self.cuts: List[Tuple[int, Tuple[int, int]]] = []  # (step, edge) filled in by the explorer
        self.virtual_vertices = 0
        self.steps = 0
        self.alpha_steps = 0

        root = self._new_vertex(boundary_pos=0)
        first = self._new_vertex(boundary_pos=1)
        self._link(root, first, self._new_edge(root, first, on_boundary=True))
        self._leftmost = root
        self._rightmost = first
        self.root_edge = (root, first)
        self.joined_at[root] = 0
        self.seg_left = self.seg_right = root

    # -- construction helpers ------------------------------------------------

    def _new_vertex(self, boundary_pos: Optional[int] = None) -> int:
        v = self.n_vertices
        self.n_vertices += 1
        if boundary_pos is not None:
            self.boundary_pos[v] = boundary_pos
        return v

    def _new_edge(self, a: int, b: int, on_boundary: bool = False) -> int:
        if a == b:
            raise MapConsistencyError(f"self-loop at vertex {a}")
        self.edge_ends.append((a, b))
        return self.edges.add(on_boundary)

    def _link(self, a: int, b: int, e: int) -> None:
        self.right[a] = b
        self.left[b] = a
        self.edge_right[a] = e

    def right_of(self, v: int) -> int:
        """Right frontier neighbour, extending the original boundary if needed"""
        if v not in self.right:
            if v != self._rightmost:
                raise MapConsistencyError(f"vertex {v} is not on the frontier")
            w = self._new_vertex(boundary_pos=self.boundary_pos[v] + 1)
            self._link(v, w, self._new_edge(v, w, on_boundary=True))
            self._rightmost = w
        return self.right[v]

    def left_of(self, v: int) -> int:
        """Left frontier neighbour, extending the original boundary if needed"""
        if v not in self.left:
            if v != self._leftmost:
                raise MapConsistencyError(f"vertex {v} is not on the frontier")
            w = self._new_vertex(boundary_pos=self.boundary_pos[v] - 1)
            self._link(w, v, self._new_edge(w, v, on_boundary=True))
            self._leftmost = w
        return self.left[v]

    def on_frontier(self, v: int) -> bool:
        return v in self.right or v in self.left

    def in_region(self, v: int) -> bool:
        return v in self.joined_at

    def _join(self, v: int) -> None:
        if v not in self.joined_at:
            self.joined_at[v] = self.steps + 1
            if self.on_frontier(v) and v in self.boundary_pos:
                pos = self.boundary_pos[v]
                if pos < self.boundary_pos[self.seg_left]:
                    self.seg_left = v
                elif pos > self.boundary_pos[self.seg_right]:
                    self.seg_right = v

    def _drop(self, v: int) -> None:
        """Remove v from the frontier (it becomes interior to the region)"""
        self.left.pop(v, None)
        self.right.pop(v, None)
        self.edge_right.pop(v, None)

    def _add_face(self, verts: Tuple[int, int, int], edges: Tuple[int, int, int]) -> None:
        if len(set(verts)) != 3:
            raise MapConsistencyError(f"degenerate face {verts}")
        self.faces.append(verts)
        self.face_edges.append(edges)
        self.face_step.append(self.steps + 1)
        for v in verts:
            self._join(v)

    # -- peeling ---------------------------------------------------------------

    def apply_step(self, at: int, event: PeelEvent, rng: RngStream,
                   fill_geometry: Optional[bool] = None) -> None:
        """
        Peel the frontier edge (at, right(at)).

        Args:
            at: left endpoint of the peeled frontier edge
            event: outcome to realize
            rng: stream used to triangulate the hole
            fill_geometry: override the map's default hole handling
        """
        fill = self.fill_geometry if fill_geometry is None else fill_geometry
        if not self.on_frontier(at):
            raise MapConsistencyError(f"peel position {at} is not on the frontier")
        u = at
        w = self.right_of(u)
        if not (self.in_region(u) or self.in_region(w)):
            raise DomainError("the peeled edge must touch the revealed region")
        e0 = self.edge_right[u]

        if event.kind == StepKind.ALPHA:
            z = self._new_vertex()
            a = self._new_edge(u, z)
            b = self._new_edge(z, w)
            self._add_face((u, w, z), (e0, b, a))
            self._link(u, z, a)
            self._link(z, w, b)
            self.alpha_steps += 1
        elif event.side == Side.RIGHT:
            path = [w]
            for _ in range(event.i):
                path.append(self.right_of(path[-1]))
            apex = path[-1]
            path_edges = [self.edge_right[x] for x in path[:-1]]
            x = self._new_edge(w, apex)
            y = self._new_edge(u, apex)
            self._add_face((u, w, apex), (e0, x, y))
            for v in path[:-1]:
                self._join(v)
                self._drop(v)
            self._link(u, apex, y)
            self._hole(PolygonHole(path, path_edges + [x], self.theta), event.hole_internal_count, rng, fill)
        else:
            path = [u]
            for _ in range(event.i):
                path.append(self.left_of(path[-1]))
            apex = path[-1]
            path.reverse()  # apex, ..., u
            path_edges = [self.edge_right[v] for v in path[:-1]]
            x = self._new_edge(u, apex)
            y = self._new_edge(w, apex)
            self._add_face((u, w, apex), (e0, y, x))
            for v in path[1:]:
                self._join(v)
                self._drop(v)
            self._link(apex, w, y)
            self._hole(PolygonHole(path, path_edges + [x], self.theta), event.hole_internal_count, rng, fill)
        self.steps += 1

    def _hole(self, hole: PolygonHole, count: int, rng: RngStream, fill: bool) -> None:
        if fill:
            filling = fill_hole(hole, count, rng, next_vertex=self.n_vertices, next_edge=len(self.edge_ends))
            self.n_vertices += len(filling.new_vertices)
            for a, b in filling.new_edges:
                self._new_edge(a, b)
            for a, b in filling.glued:
                self.edges.union(a, b)
            for verts, edges in zip(filling.faces, filling.face_edges):
                self._add_face(verts, edges)
        else:
            self.virtual_vertices += count
        for v in hole.vertices:
            self._join(v)
        self.holes.append(HoleRecord(self.steps + 1, hole.size, count, fill))

    # -- queries ---------------------------------------------------------------

    @property
    def unexplored_root(self) -> Tuple[int, int]:
        """Root edge of T_n: leftmost edge of the region's frontier segment"""
        return self.seg_left, self.right_of(self.seg_left)

    def frontier_segment(self) -> List[int]:
        """Frontier vertices of the region, left to right"""
        out = [self.seg_left]
        while out[-1] != self.seg_right:
            out.append(self.right[out[-1]])
        return out

    def frontier_edges(self) -> List[int]:
        seg = self.frontier_segment()
        return [self.edges.find(self.edge_right[v]) for v in seg[:-1]]

    @property
    def volume(self) -> int:
        """|P_n| including hole vertices that were only counted"""
        return len(self.joined_at) + self.virtual_vertices

    def region_edges(self, faces: Optional[Iterable[int]] = None) -> Dict[int, Tuple[int, int]]:
        """Canonical edge id -> endpoints, over the given faces (default: all)"""
        idx = range(len(self.faces)) if faces is None else faces
        out: Dict[int, Tuple[int, int]] = {}
        for f in idx:
            for e in self.face_edges[f]:
                c = self.edges.find(e)
                if c not in out:
                    out[c] = self.edge_ends[c]
        return out

    def edge_faces(self, faces: Optional[Iterable[int]] = None) -> Dict[int, List[int]]:
        idx = range(len(self.faces)) if faces is None else faces
        out: Dict[int, List[int]] = {}
        for f in idx:
            for e in self.face_edges[f]:
                out.setdefault(self.edges.find(e), []).append(f)
        return out

    def adjacency(self, faces: Optional[Iterable[int]] = None) -> Dict[int, List[int]]:
        """Neighbour lists with multiplicity over the region's edges"""
        adj: Dict[int, List[int]] = {ROOT: []}
        for a, b in self.region_edges(faces).values():
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        return adj

    def distances(self, source: int = ROOT, faces: Optional[Iterable[int]] = None) -> Dict[int, int]:
        adj = self.adjacency(faces)
        dist = {source: 0}
        queue = deque([source])
        while queue:
            x = queue.popleft()
            for y in adj.get(x, ()):
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        return dist

    def snapshot(self, step: int) -> HullSets:
        """Faces and vertices of P_step"""
        faces = frozenset(f for f, s in enumerate(self.face_step) if s <= step)
        verts = {ROOT}
        for f in faces:
            verts.update(self.faces[f])
        return HullSets(frozenset(verts), faces)

    def check_invariants(self) -> None:
        """Raise MapConsistencyError if a structural invariant fails"""
        seen = set()
        v = self._leftmost
        while True:
            if v in seen:
                raise MapConsistencyError("frontier revisits a vertex")
            seen.add(v)
            if v == self._rightmost:
                break
            v = self.right[v]
        for c, (a, b) in self.region_edges().items():
            if a == b:
                raise MapConsistencyError(f"self-loop on edge {c}")
        for verts in self.faces:
            if len(set(verts)) != 3:
                raise MapConsistencyError(f"degenerate face {verts}")
        hole_internal = sum(h.internal for h in self.holes)
        expected = len(self.boundary_pos) + self.alpha_steps + hole_internal
        if self.n_vertices + self.virtual_vertices != expected:
            raise MapConsistencyError(
                f"vertex accounting: {self.n_vertices + self.virtual_vertices} != {expected}")
        hole_faces = sum(2 * h.internal + h.size - 2 for h in self.holes if h.filled)
        if len(self.faces) != self.steps + hole_faces:
            raise MapConsistencyError(f"face accounting: {len(self.faces)} != {self.steps + hole_faces}")
        if self.seg_left not in self.boundary_pos or self.seg_right not in self.boundary_pos:
            raise MapConsistencyError("segment ends must lie on the original boundary")
        for s in self.frontier_segment():
            if not self.in_region(s):
                raise MapConsistencyError(f"frontier vertex {s} lies outside the region")


def bfs_hull(hmap: HalfPlaneMap, r: int) -> HullSets:
    """
    Hull of radius r: faces with a vertex at distance < r from the root vertex,
    plus every finite component of the remaining faces.

    Raises:
        InsufficientExplorationError: if a frontier vertex lies at distance < r
    """
    if r < 1:
        raise DomainError(f"radius must be positive, got {r}")
    dist = hmap.distances()
    for s in hmap.frontier_segment():
        if dist.get(s, r) < r:
            raise InsufficientExplorationError(
                f"frontier vertex {s} at distance {dist[s]} < {r}: hull not determined")
    ball = {f for f, verts in enumerate(hmap.faces) if any(dist.get(v, r) < r for v in verts)}
    frontier = set(hmap.frontier_edges())
    edge_faces = hmap.edge_faces()

    hull = set(ball)
    seen = set(ball)
    for start in range(len(hmap.faces)):
        if start in seen:
            continue
        component, infinite = [], False
        queue = deque([start])
        seen.add(start)
        while queue:
            f = queue.popleft()
            component.append(f)
            for e in hmap.face_edges[f]:
                c = hmap.edges.find(e)
                if c in frontier:
                    infinite = True
                for g in edge_faces[c]:
                    if g not in seen:
                        seen.add(g)
                        queue.append(g)
        if not infinite:
            hull.update(component)
    verts = {ROOT}
    for f in hull:
        verts.update(hmap.faces[f])
    return HullSets(frozenset(verts), frozenset(hull))


def find_root_cutedges(hmap: HalfPlaneMap, region: Optional[Iterable[int]] = None) -> List[Tuple[int, int]]:
    """
    Single edges whose removal separates the root face from the frontier.

    Works on the face-adjacency multigraph of the region: shared edges join two faces,
    frontier edges join a face to a sink node, original-boundary edges are dropped.
    Bridges on the tree path from the root face to the sink are the cuts.

    Args:
        hmap: revealed map
        region: face indices (default: all revealed faces); must contain face 0

    Returns:
        Primal edges (u, v), ordered from the root outward
    """
    faces = set(range(len(hmap.faces)) if region is None else region)
    if not faces or 0 not in faces:
        return []
    graph = nx.MultiGraph()
    graph.add_nodes_from(faces)
    graph.add_node(INF)
    for c, incident in hmap.edge_faces().items():
        inside = [f for f in incident if f in faces]
        if len(inside) == 2:
            graph.add_edge(inside[0], inside[1], key=c)
        elif len(inside) == 1 and not hmap.edges.on_boundary(c):
            graph.add_edge(inside[0], INF, key=c)

    bridge_pairs = list(nx.bridges(graph))
    reduced = graph.copy()
    for a, b in bridge_pairs:
        reduced.remove_edges_from([(a, b, k) for k in list(graph[a][b])])
    comp = {}
    for label, nodes in enumerate(nx.connected_components(reduced)):
        for x in nodes:
            comp[x] = label

    tree: Dict[int, List[Tuple[int, int]]] = {}
    for a, b in bridge_pairs:
        (key,) = graph[a][b]
        tree.setdefault(comp[a], []).append((comp[b], key))
        tree.setdefault(comp[b], []).append((comp[a], key))
    parent: Dict[int, Tuple[int, int]] = {comp[INF]: (comp[INF], -1)}
    queue = deque([comp[INF]])
    while queue:
        x = queue.popleft()
        for y, key in tree.get(x, ()):
            if y not in parent:
                parent[y] = (x, key)
                queue.append(y)
    if comp[0] not in parent:
        return []
    cuts = []
    node = comp[0]
    while node != comp[INF]:
        node, key = parent[node]
        cuts.append(hmap.edge_ends[key])
    return cuts


def export_edge_list(hmap: HalfPlaneMap, sink: TextIO) -> None:
    """
    Write the region as text: a header '# vertices=<n> root=<u>,<v>' then one 'u v' per edge.
    Vertices are renumbered compactly in creation order; edges keep their multiplicity.
    """
    edges = sorted(hmap.region_edges().items())
    used = {ROOT, hmap.root_edge[1]}
    for _, (a, b) in edges:
        used.update((a, b))
    label = {v: j for j, v in enumerate(sorted(used))}
    sink.write(f"# vertices={len(label)} root={label[hmap.root_edge[0]]},{label[hmap.root_edge[1]]}\n")
    for _, (a, b) in edges:
        sink.write(f"{label[a]} {label[b]}\n")


def import_edge_list(source: TextIO) -> Tuple[int, Tuple[int, int], List[Tuple[int, int]]]:
    """
    Read an edge list written by export_edge_list: (vertex count, root edge, edges).
    Other comment lines before the '# vertices=' header are skipped.
    """
    header = source.readline().strip()
    while header.startswith("#") and "vertices=" not in header:
        header = source.readline().strip()
    if not header.startswith("#"):
        raise DomainError("missing edge-list header")
    fields = dict(tok.split("=", 1) for tok in header[1:].split())
    n = int(fields["vertices"])
    u, v = (int(x) for x in fields["root"].split(","))
    edges = []
    for line in source:
        line = line.strip()
        if line:
            a, b = line.split()
            edges.append((int(a), int(b)))
    return n, (u, v), edges
