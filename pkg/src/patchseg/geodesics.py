"""Radius-bounded geodesic distance fields, path tracing, and AGD.

Two interchangeable backends:

* ``exact`` — window propagation over unfolded triangle strips (continuous
  Dijkstra). Windows on an edge are trimmed against each other so only
  intervals that can still carry shortest paths survive; saddle and boundary
  vertices become secondary pseudo-sources. Distances are exact up to
  floating point and the trim margin.
* ``subdivision`` — Dijkstra on the edge graph augmented with Steiner points
  (``steiner_per_edge`` extra nodes per edge, all-pairs chords inside each
  face). An upper bound that converges to the exact field; cheap on large
  meshes.

Every ball records which backend produced it.
"""

from __future__ import annotations

import heapq
import itertools
import math
from math import hypot, sqrt

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .mesh import TriMesh

TRIM_EPS = 1e-9          # window overlap / tie margin, absolute (spec'd)
SPAWN_ANGLE_EPS = 1e-7   # vertices with total angle >= 2*pi - eps also spawn
_REL = 1e-12


class GeodesicError(RuntimeError):
    pass


def patch_radius(mesh: TriMesh, m: int = 1000) -> float:
    """Patch radius sqrt(total_area / m)."""
    if m <= 0:
        raise ValueError("m must be positive")
    return sqrt(mesh.total_area() / m)


def edge_graph_distances(mesh: TriMesh, sources):
    """Plain Dijkstra distances on the mesh edge graph (oracle/upper bound)."""
    g = _edge_graph(mesh)
    return dijkstra(g, directed=False, indices=sources)


def _edge_graph(mesh):
    if not hasattr(mesh, "_edge_graph_csr"):
        rows, cols, vals = [], [], []
        v = mesh.vertices
        for (a, b) in mesh.edge_faces:
            rows.append(a)
            cols.append(b)
            vals.append(float(np.linalg.norm(v[a] - v[b])))
        g = sp.coo_matrix((vals, (rows, cols)), shape=(mesh.n_vertices,) * 2)
        mesh._edge_graph_csr = g.tocsr()
    return mesh._edge_graph_csr


def require_connected(mesh: TriMesh):
    n, comp = connected_components(_edge_graph(mesh), directed=False)
    if n != 1:
        sizes = np.bincount(comp)
        raise GeodesicError(
            f"mesh {mesh.name or '<unnamed>'} has {n} connected components "
            f"(sizes {sizes.tolist()})"
        )


def farthest_pair(mesh: TriMesh):
    """Approximate geodesic diameter endpoints by double-sweep Dijkstra.

    Ties resolved toward the smaller vertex id so the result is deterministic.
    """
    d0 = edge_graph_distances(mesh, 0)
    a = _argmax_tol(d0)
    da = edge_graph_distances(mesh, a)
    b = _argmax_tol(da)
    return (a, b) if a < b else (b, a)


def _argmax_tol(arr, tol=1e-9):
    m = float(np.max(arr))
    return int(np.flatnonzero(arr >= m - tol)[0])


# -- one-ring angular chart ------------------------------------------------------


class RingChart:
    """Flattened angular coordinates around a vertex.

    Corner angles are accumulated counter-clockwise (face orientation order)
    starting at the edge to the first ring neighbor, then rescaled by
    2*pi / total_angle so the ring closes at exactly 2*pi.
    """

    def __init__(self, mesh: TriMesh, center: int):
        self.mesh = mesh
        self.center = center
        ring = mesh.vertex_one_rings[center]
        if len(ring) == 0:
            raise GeodesicError(f"vertex {center} is isolated")
        self.ring = ring
        c = mesh.vertices[center]
        e = mesh.vertices[ring] - c
        norms = np.linalg.norm(e, axis=1)
        self._dirs = e / norms[:, None]
        corner = np.zeros(len(ring))
        closed = not mesh.is_boundary_vertex[center]
        n_corner = len(ring) if closed else len(ring) - 1
        for j in range(n_corner):
            k = (j + 1) % len(ring)
            corner[j] = math.acos(float(np.clip(self._dirs[j] @ self._dirs[k], -1.0, 1.0)))
        self.corner = corner
        self.cum = np.concatenate([[0.0], np.cumsum(corner[:n_corner])])
        self.total_angle = float(self.cum[-1])
        self.scale = 2.0 * math.pi / self.total_angle
        self.closed = closed
        self._pos = {int(n): j for j, n in enumerate(ring)}

    def angle_of_neighbor(self, n: int) -> float:
        return (self.cum[self._pos[int(n)]] * self.scale) % (2.0 * math.pi)

    def angle_of_direction(self, dir3) -> float:
        """Flattened angle of a tangent direction lying in an incident face."""
        d = np.asarray(dir3, dtype=float)
        nd = np.linalg.norm(d)
        if nd <= 0:
            raise GeodesicError("zero direction")
        d = d / nd
        best = None
        n_corner = len(self.ring) if self.closed else len(self.ring) - 1
        for j in range(n_corner):
            k = (j + 1) % len(self.ring)
            a = math.acos(float(np.clip(self._dirs[j] @ d, -1.0, 1.0)))
            b = math.acos(float(np.clip(d @ self._dirs[k], -1.0, 1.0)))
            resid = abs(a + b - self.corner[j])
            if best is None or resid < best[0]:
                best = (resid, self.cum[j] + a)
        return (best[1] * self.scale) % (2.0 * math.pi)

    def angle_in_face(self, face_id: int, dir3) -> float:
        """Signed flattened angle of an arbitrary direction projected in a face."""
        mesh = self.mesh
        face = mesh.faces[face_id]
        i = int(np.flatnonzero(face == self.center)[0])
        a = int(face[(i + 1) % 3])
        j = self._pos[a]
        e1 = self._dirs[j]
        nrm = mesh.face_normals()[face_id]
        d = np.asarray(dir3, dtype=float)
        d = d - (d @ nrm) * nrm
        nd = np.linalg.norm(d)
        if nd <= 0:
            raise GeodesicError("direction orthogonal to face")
        d = d / nd
        ang = math.atan2(float(np.cross(e1, d) @ nrm), float(e1 @ d))
        return ((self.cum[j] + ang) * self.scale) % (2.0 * math.pi)


def ring_chart(mesh: TriMesh, center: int) -> RingChart:
    if not hasattr(mesh, "_ring_charts"):
        mesh._ring_charts = {}
    chart = mesh._ring_charts.get(center)
    if chart is None:
        chart = RingChart(mesh, center)
        mesh._ring_charts[center] = chart
    return chart


# -- windows ----------------------------------------------------------------------


class _Window:
    __slots__ = ("he", "L", "sx", "sy", "sigma", "root", "parent", "ctp",
                 "ivals", "popped", "uid")

    def __init__(self, he, L, sx, sy, sigma, root, parent, ctp, ivals, uid):
        self.he = he
        self.L = L
        self.sx = sx
        self.sy = sy
        self.sigma = sigma
        self.root = root
        self.parent = parent      # None => source is `root` itself
        self.ctp = ctp            # child->parent affine (xx, xy, yx, yy, tx, ty)
        self.ivals = ivals        # disjoint [x0, x1] intervals, own frame
        self.popped = False
        self.uid = uid

    def min_dist(self):
        best = math.inf
        for x0, x1 in self.ivals:
            best = min(best, self._seg_min(x0, x1))
        return best

    def _seg_min(self, x0, x1):
        if x0 <= self.sx <= x1:
            d = self.sy
        elif self.sx < x0:
            d = hypot(self.sx - x0, self.sy)
        else:
            d = hypot(self.sx - x1, self.sy)
        return self.sigma + d

    def dist_at(self, x):
        return self.sigma + hypot(self.sx - x, self.sy)

    def to_parent(self, x, y):
        xx, xy, yx, yy, tx, ty = self.ctp
        return (xx * x + yx * y + tx, xy * x + yy * y + ty)


def _crossovers(a1, h1, s1, a2, h2, s2, lo, hi):
    """t values in (lo, hi) where s1+hypot(t-a1,h1) == s2+hypot(t-a2,h2)."""
    ds = s2 - s1
    A1 = 2.0 * (a2 - a1)
    C1 = a1 * a1 - a2 * a2 + h1 * h1 - h2 * h2
    cands = []
    if ds == 0.0:
        if A1 != 0.0:
            cands.append(-C1 / A1)
    else:
        C2 = C1 - ds * ds
        qa = A1 * A1 - 4.0 * ds * ds
        qb = 2.0 * A1 * C2 + 8.0 * ds * ds * a2
        qc = C2 * C2 - 4.0 * ds * ds * (a2 * a2 + h2 * h2)
        if abs(qa) < 1e-300:
            if abs(qb) > 1e-300:
                cands.append(-qc / qb)
        else:
            disc = qb * qb - 4.0 * qa * qc
            if disc >= 0.0:
                r = sqrt(disc)
                # numerically stable pair
                q = -0.5 * (qb + math.copysign(r, qb))
                cands.append(q / qa)
                if q != 0.0:
                    cands.append(qc / q)

    def f(t):
        return (s1 + hypot(t - a1, h1)) - (s2 + hypot(t - a2, h2))

    roots = []
    for t in cands:
        if not (lo - 1e-9 < t < hi + 1e-9) or not math.isfinite(t):
            continue
        # one secant refinement step, then verify
        dt = max(1e-9, 1e-9 * abs(t))
        f0, f1 = f(t - dt), f(t + dt)
        if f1 != f0:
            t2 = t - dt + (t + dt - (t - dt)) * (0.0 - f0) / (f1 - f0)
            if math.isfinite(t2) and abs(f(t2)) < abs(f(t)):
                t = t2
        if lo < t < hi and abs(f(t)) < 1e-7 * (1.0 + abs(s1) + abs(s2)):
            roots.append(t)
    roots.sort()
    dedup = []
    for t in roots:
        if not dedup or t - dedup[-1] > 1e-12 * max(1.0, hi - lo):
            dedup.append(t)
    return dedup


def _subtract(ivals, cuts):
    """Remove sorted disjoint `cuts` intervals from `ivals` (both in t space)."""
    out = []
    for x0, x1 in ivals:
        segs = [(x0, x1)]
        for c0, c1 in cuts:
            nxt = []
            for s0, s1 in segs:
                if c1 <= s0 or c0 >= s1:
                    nxt.append((s0, s1))
                    continue
                if c0 > s0:
                    nxt.append((s0, c0))
                if c1 < s1:
                    nxt.append((c1, s1))
            segs = nxt
        out.extend(segs)
    return out


# -- exact propagation -------------------------------------------------------------


class _ExactBallSolver:
    def __init__(self, mesh: TriMesh, center: int, radius, max_windows, deficits):
        self.mesh = mesh
        self.center = center
        self.radius = math.inf if radius is None else float(radius)
        self.max_windows = max_windows
        self.deficits = deficits
        self.V = mesh.vertices
        self.final = {}
        self.routing = {}
        self.heap = []
        self.seq = itertools.count()
        self.uid = itertools.count()
        self.edge_windows = {}  # canonical edge -> list of windows
        self.n_windows = 0
        self.eps_len = _REL * max(mesh.bbox_diag, 1.0)

    # geometry helpers ---------------------------------------------------------

    def elen(self, u, v):
        p, q = self.V[u], self.V[v]
        return hypot(hypot(p[0] - q[0], p[1] - q[1]), p[2] - q[2])

    def _push_vertex(self, vid, d, prov):
        if vid in self.final or d >= self.radius:
            return
        heapq.heappush(self.heap, (d, next(self.seq), 1, (vid, d, prov)))

    def _push_window(self, w):
        md = w.min_dist()
        if md >= self.radius or not w.ivals:
            return
        heapq.heappush(self.heap, (md, next(self.seq), 0, w))

    def _unfold_above(self, a, b, p, L):
        """2D position of vertex p across halfedge frame (a at 0, b at L), y >= 0."""
        la = self.elen(a, p)
        lb = self.elen(b, p)
        x = (L * L + la * la - lb * lb) / (2.0 * L)
        y2 = la * la - x * x
        return x, sqrt(y2) if y2 > 0.0 else 0.0

    # window creation ------------------------------------------------------------

    def _spawn_from_vertex(self, p, d):
        mesh = self.mesh
        for fi in mesh.vertex_faces[p]:
            face = mesh.faces[fi]
            i = int(np.flatnonzero(face == p)[0])
            a = int(face[(i + 1) % 3])
            b = int(face[(i + 2) % 3])
            L = self.elen(a, b)
            sx, sy = self._unfold_above(a, b, p, L)
            w = _Window((a, b), L, sx, sy, d, p, None, None, [(0.0, L)], next(self.uid))
            self._register(w)

    def _register(self, w):
        """Endpoint candidates, trim against resident windows, then enqueue."""
        u, v = w.he
        for x0, x1 in w.ivals:
            self._push_vertex(u, w.dist_at(x0) + x0, ("win", w, x0))
            self._push_vertex(v, w.dist_at(x1) + (w.L - x1), ("win", w, x1))

        key = (u, v) if u < v else (v, u)
        flip = u > v
        L = w.L

        def to_t(x):
            return L - x if flip else x

        a_t = to_t(w.sx)
        my = [(min(to_t(x0), to_t(x1)), max(to_t(x0), to_t(x1))) for x0, x1 in w.ivals]
        my.sort()
        lst = self.edge_windows.setdefault(key, [])
        for other in lst:
            if not other.ivals:
                continue
            ou, ov = other.he
            oflip = ou > ov
            o_t = (L - other.sx) if oflip else other.sx
            if oflip:
                o_ivals = sorted((L - x1, L - x0) for x0, x1 in other.ivals)
            else:
                o_ivals = sorted(other.ivals)
            new_cuts, old_cuts = [], []
            for m0, m1 in my:
                for q0, q1 in o_ivals:
                    lo, hi = max(m0, q0), min(m1, q1)
                    if hi - lo <= self.eps_len:
                        continue
                    pts = [lo] + _crossovers(a_t, w.sy, w.sigma, o_t, other.sy,
                                             other.sigma, lo, hi) + [hi]
                    for i in range(len(pts) - 1):
                        s0, s1 = pts[i], pts[i + 1]
                        if s1 - s0 <= self.eps_len:
                            continue
                        tm = 0.5 * (s0 + s1)
                        dn = w.sigma + hypot(tm - a_t, w.sy)
                        do = other.sigma + hypot(tm - o_t, other.sy)
                        if do < dn - TRIM_EPS:
                            new_cuts.append((s0, s1))
                        elif dn < do - TRIM_EPS:
                            old_cuts.append((s0, s1))
                        elif (other.root, other.uid) < (w.root, w.uid):
                            new_cuts.append((s0, s1))
                        else:
                            old_cuts.append((s0, s1))
            if old_cuts:
                old_cuts.sort()
                o_kept = _subtract(o_ivals, old_cuts)
                other.ivals = [
                    ((L - t1, L - t0) if oflip else (t0, t1))
                    for t0, t1 in o_kept if t1 - t0 > self.eps_len
                ]
            if new_cuts:
                new_cuts.sort()
                my = [iv for iv in _subtract(my, new_cuts) if iv[1] - iv[0] > self.eps_len]
                if not my:
                    break
        lst[:] = [o for o in lst if o.ivals]
        if not my:
            w.ivals = []
            return
        w.ivals = [((L - t1, L - t0) if flip else (t0, t1)) for t0, t1 in my]
        w.ivals.sort()
        lst.append(w)
        self.n_windows += 1
        if self.n_windows > self.max_windows:
            raise GeodesicError(
                f"window budget exceeded ({self.max_windows}) at vertex {self.center}"
            )
        self._push_window(w)

    # propagation ------------------------------------------------------------------

    def _propagate(self, w):
        u, v = w.he
        mesh = self.mesh
        if (v, u) not in mesh.halfedge_face:
            return  # boundary edge; bending handled by boundary pseudo-sources
        c, _ = mesh.opposite_vertex(v, u)
        L = w.L
        cx, cy_mag = self._unfold_above(u, v, c, L)
        c2 = (cx, -cy_mag)
        luc = self.elen(u, c)
        lcv = self.elen(c, v)
        sx, sy, sig = w.sx, w.sy, w.sigma

        for x0, x1 in w.ivals:
            if w._seg_min(x0, x1) >= self.radius:
                continue
            # apex candidate (bent through the nearest interval point if needed)
            if sy - (-cy_mag) > 1e-300:
                t_ap = sy / (sy + cy_mag)
                x_split = sx + t_ap * (cx - sx)
            else:
                x_split = math.inf
            via = min(max(x_split, x0), x1)
            d_c = sig + hypot(sx - via, sy) + hypot(via - cx, cy_mag)
            self._push_vertex(c, d_c, ("win", w, via))
            if sy <= 0.0:
                continue
            # left child: edge u->c
            lx1 = min(x1, x_split)
            if lx1 - x0 > self.eps_len and luc > 0:
                self._make_child(w, (u, c), luc, (0.0, 0.0), c2, x0, lx1, sx, sy, sig)
            # right child: edge c->v
            rx0 = max(x0, x_split)
            if x1 - rx0 > self.eps_len and lcv > 0:
                self._make_child(w, (c, v), lcv, c2, (L, 0.0), rx0, x1, sx, sy, sig)

    def _make_child(self, w, he, L, A, B, px0, px1, sx, sy, sig):
        ex, ey = B[0] - A[0], B[1] - A[1]
        ts = []
        for px in (px0, px1):
            dx, dy = px - sx, 0.0 - sy
            det = ex * dy - ey * dx
            if abs(det) < 1e-300:
                return
            rx, ry = A[0] - sx, A[1] - sy
            alpha = (ex * ry - ey * rx) / det
            t = (dx * ry - dy * rx) / det
            if alpha < 1.0 - 1e-9:
                return
            ts.append(min(max(t, 0.0), 1.0))
        t0, t1 = min(ts), max(ts)
        if (t1 - t0) * L <= self.eps_len:
            return
        inv = 1.0 / hypot(ex, ey)
        xhx, xhy = ex * inv, ey * inv    # child x-axis in parent frame
        yhx, yhy = -xhy, xhx
        rsx, rsy = sx - A[0], sy - A[1]
        csx = rsx * xhx + rsy * xhy
        csy = rsx * yhx + rsy * yhy
        if csy < -1e-9 * max(1.0, L):
            return
        if csy < 0.0:
            csy = 0.0
        ctp = (xhx, xhy, yhx, yhy, A[0], A[1])
        child = _Window(he, L, csx, csy, sig, w.root, w, ctp,
                        [(t0 * L, t1 * L)], next(self.uid))
        self._register(child)

    # main loop ----------------------------------------------------------------------

    def run(self):
        mesh = self.mesh
        c = self.center
        if len(mesh.vertex_one_rings[c]) == 0:
            raise GeodesicError(f"vertex {c} is isolated")
        self.final[c] = 0.0
        self.routing[c] = ("src",)
        for n in mesh.vertex_one_rings[c]:
            self._push_vertex(int(n), self.elen(c, int(n)), ("edge", c))
        self._spawn_from_vertex(c, 0.0)

        deficits = self.deficits
        while self.heap:
            key, _, kind, payload = heapq.heappop(self.heap)
            if key >= self.radius:
                break
            if kind == 1:
                vid, d, prov = payload
                if vid in self.final:
                    continue
                self.final[vid] = d
                self.routing[vid] = prov
                for n in self.mesh.vertex_one_rings[vid]:
                    n = int(n)
                    if n not in self.final:
                        self._push_vertex(n, d + self.elen(vid, n), ("edge", vid))
                if self.mesh.is_boundary_vertex[vid] or deficits[vid] <= SPAWN_ANGLE_EPS:
                    self._spawn_from_vertex(vid, d)
            else:
                w = payload
                if w.popped or not w.ivals:
                    continue
                w.popped = True
                self._propagate(w)
        return self.final, self.routing


# -- ball object -----------------------------------------------------------------


class GeodesicBall:
    """Distance field around a center vertex, truncated at ``radius``.

    ``dist`` maps vertex id -> geodesic distance for every vertex strictly
    inside the radius. ``trace(v)`` reconstructs the geodesic polyline back to
    the center and the departure angle (in the center's rescaled one-ring
    coordinates, 0 at the edge to the first ring neighbor).
    """

    def __init__(self, mesh, center, radius, backend, dist, routing):
        self.mesh = mesh
        self.center = int(center)
        self.radius = radius
        self.backend = backend
        self.dist = dist
        self._routing = routing
        self._angles = {}

    @property
    def reached(self):
        return sorted(self.dist)

    def distance(self, v):
        try:
            return self.dist[int(v)]
        except KeyError:
            raise GeodesicError(f"vertex {v} not reached by ball at {self.center}") from None

    def trace(self, v):
        """(polyline from v to center as (k, 3) array, departure angle at center)."""
        v = int(v)
        if v not in self.dist:
            raise GeodesicError(f"vertex {v} not reached by ball at {self.center}")
        if v == self.center:
            pts = self.mesh.vertices[[v]]
            return np.asarray(pts, dtype=float), 0.0
        if self.backend == "exact":
            pts = self._trace_exact(v)
        else:
            pts = self._trace_graph(v)
        chart = ring_chart(self.mesh, self.center)
        tail = pts[-2] - pts[-1]
        angle = chart.angle_of_direction(tail)
        return np.asarray(pts, dtype=float), angle

    def departure_angle(self, v):
        v = int(v)
        if v not in self._angles:
            if v == self.center:
                self._angles[v] = 0.0
            else:
                self._angles[v] = self.trace(v)[1]
        return self._angles[v]

    def _edge_point(self, he, x):
        u, v = he
        p, q = self.mesh.vertices[u], self.mesh.vertices[v]
        L = float(np.linalg.norm(q - p))
        return p + (x / L) * (q - p)

    def _trace_exact(self, v):
        V = self.mesh.vertices
        pts = [V[v].copy()]
        prov = self._routing[v]
        guard = 0
        while prov[0] != "src":
            guard += 1
            if guard > 100000:
                raise GeodesicError("path tracing did not terminate")
            if prov[0] == "edge":
                parent = prov[1]
                pts.append(V[parent].copy())
                prov = self._routing[parent]
                continue
            _, w, via = prov
            ep = self._edge_point(w.he, via)
            if np.linalg.norm(ep - pts[-1]) > 1e-12 * max(1.0, self.mesh.bbox_diag):
                pts.append(ep)
            qx, qy = via, 0.0
            while w.parent is not None:
                qx, qy = w.to_parent(qx, qy)
                w = w.parent
                if qy < -1e-12 * max(1.0, w.L):
                    # crossing point on w's edge
                    xc = qx + (0.0 - qy) * (w.sx - qx) / (w.sy - qy)
                    ep = self._edge_point(w.he, min(max(xc, 0.0), w.L))
                    if np.linalg.norm(ep - pts[-1]) > 1e-12 * max(1.0, self.mesh.bbox_diag):
                        pts.append(ep)
                    qx, qy = xc, 0.0
            root = w.root
            pts.append(V[root].copy())
            if root == self.center:
                break
            prov = self._routing[root]
        return pts

    def _trace_graph(self, v):
        coords, members, pred, node_of_vertex = self._routing
        pts = []
        node = node_of_vertex[v]
        while node >= 0:
            pts.append(coords[node])
            node = pred[node]
        return pts


# -- engine -----------------------------------------------------------------------


class GeodesicEngine:
    """Per-mesh geodesic solver with a selectable backend."""

    def __init__(self, mesh: TriMesh, backend="exact", steiner_per_edge=3,
                 max_windows=2_000_000):
        if backend not in ("exact", "subdivision"):
            raise ValueError(f"unknown geodesic backend {backend!r}")
        self.mesh = mesh
        self.backend = backend
        self.steiner_per_edge = steiner_per_edge
        self.max_windows = max_windows
        self._sub_graph = None
        self._deficits = None

    def ball(self, center, radius=None) -> GeodesicBall:
        center = int(center)
        if len(self.mesh.vertex_one_rings[center]) == 0:
            raise GeodesicError(f"vertex {center} is isolated")
        if self.backend == "exact":
            if self._deficits is None:
                self._deficits = self.mesh.angle_deficits()
            solver = _ExactBallSolver(self.mesh, center, radius, self.max_windows,
                                      self._deficits)
            final, routing = solver.run()
            rad = math.inf if radius is None else float(radius)
            dist = {v: d for v, d in final.items() if d < rad}
            routing = {v: routing[v] for v in dist}
            return GeodesicBall(self.mesh, center, radius, "exact", dist, routing)
        return self._subdivision_ball(center, radius)

    def distances_from(self, center, radius=None):
        """Distance array over all vertices (inf where unreached)."""
        ball = self.ball(center, radius)
        out = np.full(self.mesh.n_vertices, np.inf)
        for v, d in ball.dist.items():
            out[v] = d
        return out

    # subdivision backend --------------------------------------------------------

    def _build_sub_graph(self):
        mesh = self.mesh
        k = self.steiner_per_edge
        V = mesh.vertices
        coords = [V[i] for i in range(mesh.n_vertices)]
        edge_nodes = {}
        for (a, b) in sorted(mesh.edge_faces):
            ids = []
            for i in range(k):
                f = (i + 1) / (k + 1)
                coords.append(V[a] * (1 - f) + V[b] * f)
                ids.append(len(coords) - 1)
            edge_nodes[(a, b)] = ids
        coords = np.asarray(coords)
        rows, cols, vals = [], [], []
        for face in mesh.faces:
            nodes = [int(face[0]), int(face[1]), int(face[2])]
            for i in range(3):
                a, b = int(face[i]), int(face[(i + 1) % 3])
                key = (a, b) if a < b else (b, a)
                nodes.extend(edge_nodes[key])
            for i in range(len(nodes)):
                for j in range(i + 1, len(nodes)):
                    rows.append(nodes[i])
                    cols.append(nodes[j])
                    vals.append(float(np.linalg.norm(coords[nodes[i]] - coords[nodes[j]])))
        g = sp.coo_matrix((vals, (rows, cols)), shape=(len(coords),) * 2).tocsr()
        self._sub_graph = (g, coords)

    def _subdivision_ball(self, center, radius):
        if self._sub_graph is None:
            self._build_sub_graph()
        g, coords = self._sub_graph
        limit = np.inf if radius is None else radius
        d, pred = dijkstra(g, directed=False, indices=center, limit=limit,
                           return_predecessors=True)
        rad = math.inf if radius is None else float(radius)
        dist = {}
        for v in range(self.mesh.n_vertices):
            if d[v] < rad:
                dist[v] = float(d[v])
        node_of_vertex = {v: v for v in dist}
        routing = (coords, None, pred, node_of_vertex)
        return GeodesicBall(self.mesh, center, radius, "subdivision", dist, routing)


def geodesic_ball(mesh: TriMesh, center: int, radius, backend="exact", **kw) -> GeodesicBall:
    return GeodesicEngine(mesh, backend=backend, **kw).ball(center, radius)


def avg_geodesic_distance(mesh: TriMesh, sample_count=100, backend="exact",
                          engine=None, steiner_per_edge=3):
    """Mean geodesic distance from each vertex to a farthest-point sample set.

    Sources are chosen greedily (first source = vertex 0, then repeatedly the
    vertex farthest from the chosen set, ties to the smaller id) using the same
    distance fields that feed the average, so one field per source suffices.
    ``sample_count >= n_vertices`` degenerates to full all-pairs.
    """
    require_connected(mesh)
    if sample_count <= 0:
        raise ValueError("sample_count must be positive")
    n = mesh.n_vertices
    count = min(sample_count, n)
    eng = engine or GeodesicEngine(mesh, backend=backend, steiner_per_edge=steiner_per_edge)
    acc = np.zeros(n)
    mind = np.full(n, np.inf)
    src = 0
    chosen = []
    for _ in range(count):
        chosen.append(src)
        d = eng.distances_from(src)
        if not np.all(np.isfinite(d)):
            raise GeodesicError(f"vertex {int(np.flatnonzero(~np.isfinite(d))[0])} "
                                f"unreached from {src}")
        acc += d
        np.minimum(mind, d, out=mind)
        if len(chosen) < count:
            src = _argmax_tol(mind)
    return acc / count


def dump_ball(ball: GeodesicBall, path):
    """Debug dump: one "vertex_id distance" line per reached vertex."""
    with open(path, "w") as fh:
        for v in ball.reached:
            fh.write(f"{v} {ball.dist[v]:.17g}\n")
