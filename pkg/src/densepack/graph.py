"""Periodic Voronoi neighbours and the Delaunay graph of ball centers.

Two balls are neighbours when their Voronoi cells on the torus share a facet
of positive (d-1)-measure; contacts through a lower-dimensional face (the
diagonals of a square) are dropped. An edge ``(k, j, shift)`` joins center
``k`` to the image ``centers[j] + shift`` of center ``j``.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection, Voronoi, cKDTree
from scipy.spatial import QhullError

from .errors import CellTooSkewedError, DegenerateConfigurationError
from .torus import Basis, canonical_frac, min_separation, shift_window

Shift = tuple[int, ...]


def _neg(s: Shift) -> Shift:
    return tuple(-v for v in s)


def _lex_positive(s: Shift) -> bool:
    for v in s:
        if v:
            return v > 0
    return False


def canonical_edge(k: int, j: int, s: Shift) -> tuple[int, int, Shift]:
    """Orientation under which an undirected periodic edge is stored."""
    s = tuple(int(v) for v in s)
    if k < j or (k == j and _lex_positive(s)):
        return k, j, s
    return j, k, _neg(s)


@dataclass(frozen=True)
class PeriodicEdge:
    k: int
    j: int
    shift: Shift
    gap: float
    length: float


@dataclass(frozen=True, eq=False)
class PeriodicGraph:
    n: int
    edges: tuple[PeriodicEdge, ...]

    @cached_property
    def neighbors(self) -> list[list[tuple[int, Shift]]]:
        """Directed neighbour lists J_k as ``(j, shift)`` pairs."""
        J: list[list[tuple[int, Shift]]] = [[] for _ in range(self.n)]
        for e in self.edges:
            J[e.k].append((e.j, e.shift))
            J[e.j].append((e.k, _neg(e.shift)))
        return J

    @property
    def degrees(self) -> list[int]:
        return [len(Jk) for Jk in self.neighbors]

    def arrays(self):
        """Edge endpoints, shifts and lengths as numpy arrays."""
        k = np.array([e.k for e in self.edges], dtype=np.int64)
        j = np.array([e.j for e in self.edges], dtype=np.int64)
        s = np.array([e.shift for e in self.edges], dtype=np.int64).reshape(len(self.edges), -1)
        length = np.array([e.length for e in self.edges], dtype=float)
        return k, j, s, length

    def is_connected(self) -> bool:
        return len(connected_components(self.n, [(e.k, e.j) for e in self.edges])) <= 1

    def with_geometry(self, basis: Basis, centers, radius: float = 0.0) -> PeriodicGraph:
        """Same adjacency, lengths and gaps recomputed for new centers."""
        frac = canonical_frac(np.atleast_2d(centers))
        edges = []
        for e in self.edges:
            length = float(np.linalg.norm(basis.cartesian(frac[e.j] + np.array(e.shift) - frac[e.k])))
            edges.append(PeriodicEdge(e.k, e.j, e.shift, length - 2 * radius, length))
        return PeriodicGraph(self.n, tuple(edges))

    @classmethod
    def from_adjacency(cls, n: int, adjacency, basis: Basis | None = None, centers=None,
                       radius: float = 0.0) -> PeriodicGraph:
        """Build from directed neighbour lists; each undirected edge must appear
        from both ends (a self-edge as both ``s`` and ``-s``)."""
        seen: dict[tuple[int, int, Shift], int] = {}
        for k, Jk in enumerate(adjacency):
            for j, s in Jk:
                key = canonical_edge(k, int(j), tuple(s))
                seen[key] = seen.get(key, 0) + 1
        edges = []
        for (k, j, s), cnt in sorted(seen.items()):
            for _ in range(cnt // 2):
                edges.append(PeriodicEdge(k, j, s, math.nan, math.nan))
        g = cls(n, tuple(edges))
        if basis is not None and centers is not None:
            g = g.with_geometry(basis, centers, radius)
        return g


def connected_components(n: int, pairs) -> list[list[int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    comps: dict[int, list[int]] = {}
    for v in range(n):
        comps.setdefault(find(v), []).append(v)
    return [comps[r] for r in sorted(comps)]


def _facet_measure(points: np.ndarray, normal: np.ndarray) -> float:
    """(d-1)-measure of the convex hull of coplanar points with given normal."""
    d = points.shape[1]
    if len(points) < d:
        return 0.0
    if d == 2:
        return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    # orthonormal basis of the hyperplane
    _, _, vt = np.linalg.svd(normal[None, :] / np.linalg.norm(normal))
    plane = vt[1:]
    proj = (points - points.mean(axis=0)) @ plane.T
    try:
        return float(ConvexHull(proj).volume)
    except (QhullError, ValueError):
        return 0.0


def _replicate(basis: Basis, frac: np.ndarray, window: np.ndarray):
    n = len(frac)
    img = (frac[None, :, :] + window[:, None, :]).reshape(-1, basis.d)
    return basis.cartesian(img), n


def _check_coincident(basis: Basis, frac: np.ndarray):
    if len(frac) > 1 or basis.d >= 1:
        sep = min_separation(basis, frac)
        if sep <= 1e-9 * basis.volume ** (1 / basis.d):
            raise DegenerateConfigurationError("coincident centers (distance below 1e-9 cell scale)")


def _facets_voronoi(basis: Basis, frac: np.ndarray):
    """Facets of the central cells from an ordinary Voronoi diagram of the
    3^d-replicated centers. Yields (k, j, shift, measure)."""
    d = basis.d
    W = shift_window(d)
    zero = int(np.flatnonzero(~W.any(axis=1))[0])
    pts, n = _replicate(basis, frac, W)
    vor = Voronoi(pts)
    central = set(range(zero * n, zero * n + n))
    out = []
    used_vertices = set()
    for (p1, p2), verts in zip(vor.ridge_points, vor.ridge_vertices):
        if p1 not in central and p2 not in central:
            continue
        if p1 not in central:
            p1, p2 = p2, p1
        if -1 in verts:
            raise CellTooSkewedError("unbounded Voronoi cell for a central center")
        k = p1 - zero * n
        j = p2 % n
        s = tuple(int(v) for v in W[p2 // n])
        V = vor.vertices[verts]
        used_vertices.update(verts)
        out.append((k, j, s, _facet_measure(V, pts[p2] - pts[p1])))
    # every central Voronoi vertex must be a true vertex of the periodic tessellation
    W2 = np.array(list(itertools.product(range(-2, 3), repeat=d)), dtype=np.int64)
    big, _ = _replicate(basis, frac, W2)
    tree = cKDTree(big)
    vidx = np.array(sorted(used_vertices), dtype=np.int64)
    if len(vidx):
        vv = vor.vertices[vidx]
        near, _ = tree.query(vv)
        near_small, _ = cKDTree(pts).query(vv)
        if np.any(near < near_small * (1 - 1e-9)):
            raise CellTooSkewedError("3^d replication misses Voronoi neighbours; cell too skewed")
    return out


def voronoi_facets_halfspace(basis: Basis, frac, k: int):
    """Facets of the Voronoi cell of center ``k`` by direct half-space
    intersection over all window images. Returns list of (j, shift, measure)."""
    frac = canonical_frac(np.atleast_2d(frac))
    d = basis.d
    W = shift_window(d)
    n = len(frac)
    ak = basis.cartesian(frac[k])
    cands = []
    for j in range(n):
        for w in W:
            if j == k and not w.any():
                continue
            cands.append((j, tuple(int(v) for v in w)))
    C = np.array([basis.cartesian(frac[j] + np.array(s)) for j, s in cands])
    A = C - ak
    b = ((C**2).sum(axis=1) - ak @ ak) / 2
    hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), ak)
    V = hs.intersections
    scale = basis.volume ** (1 / d)
    out = []
    for i, (j, s) in enumerate(cands):
        nrm = np.linalg.norm(A[i])
        on = np.abs(V @ A[i] - b[i]) / nrm <= 1e-9 * scale
        if on.sum() == 0:
            continue
        out.append((j, s, _facet_measure(V[on], A[i])))
    return out


def _facets_halfspace_all(basis: Basis, frac: np.ndarray):
    out = []
    for k in range(len(frac)):
        out.extend((k, j, s, m) for j, s, m in voronoi_facets_halfspace(basis, frac, k))
    return out


def _facets_1d(basis: Basis, frac: np.ndarray):
    order = np.argsort(frac[:, 0], kind="stable")
    n = len(order)
    out = []
    for i in range(n):
        k, j = int(order[i]), int(order[(i + 1) % n])
        s = (1,) if i == n - 1 else (0,)
        out.append((k, j, s, 1.0))
    return out


def build_delaunay(
    basis: Basis,
    centers,
    radius: float = 0.0,
    facet_tol: float = 1e-9,
    method: str = "auto",
) -> PeriodicGraph:
    """Delaunay graph of the centers on the torus.

    ``method`` is ``"voronoi"`` (replicated ordinary Voronoi, d = 2, 3),
    ``"halfspace"`` (direct facet computation, any d) or ``"auto"``.
    """
    frac = canonical_frac(np.atleast_2d(np.asarray(centers, dtype=float)))
    d = basis.d
    if frac.shape[1] != d:
        raise DegenerateConfigurationError("center dimension does not match basis")
    _check_coincident(basis, frac)
    if d == 1:
        facets = _facets_1d(basis, frac)
    else:
        if method == "auto":
            method = "voronoi" if d in (2, 3) else "halfspace"
        if method == "voronoi":
            facets = _facets_voronoi(basis, frac)
        elif method == "halfspace":
            facets = _facets_halfspace_all(basis, frac)
        else:
            raise ValueError(f"unknown method {method!r}")
    thresh = facet_tol * basis.volume ** ((d - 1) / d) if d > 1 else 0.0
    keep: dict[tuple[int, int, Shift], float] = {}
    for k, j, s, measure in facets:
        if measure <= thresh:
            continue
        key = canonical_edge(int(k), int(j), s)
        keep[key] = max(keep.get(key, 0.0), measure)
    edges = []
    for k, j, s in sorted(keep):
        if any(abs(v) > 1 for v in s):
            raise CellTooSkewedError(f"neighbour shift {list(s)} outside the window")
        length = float(np.linalg.norm(basis.cartesian(frac[j] + np.array(s) - frac[k])))
        edges.append(PeriodicEdge(k, j, s, length - 2 * radius, length))
    return PeriodicGraph(len(frac), tuple(edges))


# ---------------------------------------------------------------------------
# graph-class signature


def hermite_normal_form(rows) -> tuple[tuple[int, ...], ...]:
    """Row-style Hermite normal form of an integer matrix (zero rows dropped)."""
    M = [list(map(int, r)) for r in rows if any(r)]
    if not M:
        return ()
    ncol = len(M[0])
    r0 = 0
    for c in range(ncol):
        while True:
            nz = [i for i in range(r0, len(M)) if M[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(M[i][c]))
            M[r0], M[piv] = M[piv], M[r0]
            done = True
            for i in range(r0 + 1, len(M)):
                q = M[i][c] // M[r0][c]
                if q:
                    M[i] = [a - q * b for a, b in zip(M[i], M[r0])]
                if M[i][c] != 0:
                    done = False
            if done:
                break
        if r0 < len(M) and M[r0][c] != 0:
            if M[r0][c] < 0:
                M[r0] = [-a for a in M[r0]]
            for i in range(r0):
                q = M[i][c] // M[r0][c]
                if q:
                    M[i] = [a - q * b for a, b in zip(M[i], M[r0])]
            r0 += 1
    return tuple(tuple(r) for r in M[:r0])


def cycle_windings(n: int, edges) -> tuple[list[int], list[list[tuple[int, ...]]]]:
    """Component id per vertex and, per component, the windings of its
    fundamental cycles. ``edges`` holds ``(k, j, shift)`` triples."""
    adj: list[list[tuple[int, Shift]]] = [[] for _ in range(n)]
    for k, j, s in edges:
        adj[k].append((j, tuple(s)))
        adj[j].append((k, _neg(tuple(s))))
    lift: list[np.ndarray | None] = [None] * n
    comp = [-1] * n
    windings: list[list[tuple[int, ...]]] = []
    for root in range(n):
        if comp[root] >= 0:
            continue
        cid = len(windings)
        windings.append([])
        d = len(edges[0][2]) if edges else 0
        lift[root] = np.zeros(d, dtype=np.int64)
        comp[root] = cid
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w, s in adj[v]:
                if comp[w] < 0:
                    comp[w] = cid
                    lift[w] = lift[v] + np.array(s, dtype=np.int64)
                    queue.append(w)
        for k, j, s in edges:
            if comp[k] == cid:
                wnd = lift[k] + np.array(s, dtype=np.int64) - lift[j]
                if wnd.any():
                    windings[cid].append(tuple(int(x) for x in wnd))
    return comp, windings


@dataclass(frozen=True)
class GraphSignature:
    n: int
    degrees: tuple[int, ...]
    colors: tuple[int, ...]
    components: tuple

    def digest(self) -> str:
        return hashlib.sha256(repr(self).encode()).hexdigest()[:16]


def graph_class_signature(g: PeriodicGraph, rounds: int | None = None) -> GraphSignature:
    """Isomorphism-invariant fingerprint of a periodic graph.

    Colour refinement on the quotient multigraph (self-loops included) plus
    the Hermite normal form of each component's cycle-winding lattice. The
    windings do not change when a center is re-wrapped into the cell, so the
    signature ignores which image of a center was chosen.
    """
    n = g.n
    J = g.neighbors
    color = [len(Jk) for Jk in J]
    # canonicalise to dense ranks
    for _ in range(rounds if rounds is not None else n + 1):
        sig = [(color[v], tuple(sorted(color[j] for j, _ in J[v]))) for v in range(n)]
        ranks = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [ranks[s] for s in sig]
        stable = len(set(new)) == len(set(color))
        color = new
        if stable:
            break
    comp, windings = cycle_windings(n, [(e.k, e.j, e.shift) for e in g.edges])
    comps = []
    for cid, wl in enumerate(windings):
        members = [v for v in range(n) if comp[v] == cid]
        comps.append((tuple(sorted(color[v] for v in members)), hermite_normal_form(wl)))
    return GraphSignature(
        n=n,
        degrees=tuple(sorted(g.degrees)),
        colors=tuple(sorted(color)),
        components=tuple(sorted(comps)),
    )
