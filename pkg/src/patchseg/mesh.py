"""Triangle mesh container, validation, file io, and topology queries.

Everything downstream (geodesics, parameterization, descriptors) assumes the
invariants enforced here: triangle faces only, indices in range, no degenerate
faces, manifold edges, consistent orientation.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

DEGENERATE_AREA_FACTOR = 1e-12  # of squared bbox diagonal
LABEL_COUNT = 8


class MeshError(ValueError):
    """Invalid mesh data (parse failure, bad index, degenerate face)."""


class TopologyError(MeshError):
    """Mesh violates a manifold / orientation assumption."""


def _ordered_ring(vertex, succ, pred):
    """Order the one-ring of ``vertex`` by walking face successors.

    Returns (neighbors, is_boundary). Raises TopologyError if the incident
    faces do not form a single fan.
    """
    if not succ:
        return [], False
    starts = [a for a in succ if a not in pred]
    if len(starts) > 1:
        raise TopologyError(f"vertex {vertex}: one-ring is not a single fan")
    if starts:
        cur = starts[0]
        boundary = True
    else:
        cur = min(succ)
        boundary = False
    ring = [cur]
    seen = {cur}
    while True:
        nxt = succ.get(cur)
        if nxt is None:
            break
        if nxt == ring[0]:
            break
        if nxt in seen:
            raise TopologyError(f"vertex {vertex}: one-ring walk revisits neighbor {nxt}")
        ring.append(nxt)
        seen.add(nxt)
        cur = nxt
    expected = set(succ) | set(pred)
    if set(ring) != expected:
        raise TopologyError(f"vertex {vertex}: one-ring is not a single fan")
    return ring, boundary


class TriMesh:
    """Indexed triangle mesh with adjacency and per-face areas.

    Parameters
    ----------
    vertices : (n, 3) float array
    faces : (m, 3) int array, counter-clockwise orientation as stored
    labels : optional (n,) int array of semantic labels in [0, LABEL_COUNT)

    The mesh is validated on construction and immutable afterwards; it is safe
    to share one instance across worker processes / threads.
    """

    def __init__(self, vertices, faces, labels=None, name=""):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {f.shape}")
        if f.size:
            bad_mask = ((f < 0) | (f >= len(v))).any(axis=1)
            if bad_mask.any():
                raise MeshError(f"face index out of range (face {int(np.flatnonzero(bad_mask)[0])})")
        repeat = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        if repeat.any():
            raise MeshError(f"face {int(np.flatnonzero(repeat)[0])} repeats a vertex")

        self.vertices = v
        self.faces = f
        self.name = name
        v.setflags(write=False)
        f.setflags(write=False)

        bbox = v.max(axis=0) - v.min(axis=0) if len(v) else np.zeros(3)
        self.bbox_diag = float(np.linalg.norm(bbox))

        cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        self.face_areas = 0.5 * np.linalg.norm(cross, axis=1)
        self.face_areas.setflags(write=False)
        floor = DEGENERATE_AREA_FACTOR * self.bbox_diag**2
        small = self.face_areas <= floor
        if small.any():
            raise MeshError(
                f"degenerate face {int(np.flatnonzero(small)[0])}: "
                f"area {self.face_areas[small][0]:.3e} <= {floor:.3e}"
            )

        self._build_adjacency()

        self.labels = None
        if labels is not None:
            self.set_labels(labels)

        if not self.boundary_edges and len(f):
            self._gauss_bonnet_warning()

    # -- construction helpers -------------------------------------------------

    def _build_adjacency(self):
        f = self.faces
        halfedge_face = {}
        for fi, (a, b, c) in enumerate(f):
            for u, w in ((a, b), (b, c), (c, a)):
                key = (int(u), int(w))
                if key in halfedge_face:
                    raise TopologyError(
                        f"edge {key} shared by faces {halfedge_face[key]} and {fi} "
                        "with the same orientation (non-manifold or flipped face)"
                    )
                halfedge_face[key] = fi
        self.halfedge_face = halfedge_face

        edge_faces = {}
        for (u, w), fi in halfedge_face.items():
            key = (u, w) if u < w else (w, u)
            edge_faces.setdefault(key, []).append(fi)
        for key, fs in edge_faces.items():
            if len(fs) > 2:
                raise TopologyError(f"edge {key} has {len(fs)} incident faces")
        self.edge_faces = edge_faces
        self.boundary_edges = [e for e, fs in edge_faces.items() if len(fs) == 1]

        succ = [dict() for _ in range(len(self.vertices))]
        pred = [dict() for _ in range(len(self.vertices))]
        for a, b, c in f:
            a, b, c = int(a), int(b), int(c)
            for ctr, n1, n2 in ((a, b, c), (b, c, a), (c, a, b)):
                if n1 in succ[ctr]:
                    raise TopologyError(f"vertex {ctr}: duplicate wedge through {n1}")
                succ[ctr][n1] = n2
                pred[ctr][n2] = n1

        rings = []
        boundary_vertex = np.zeros(len(self.vertices), dtype=bool)
        for vid in range(len(self.vertices)):
            ring, on_boundary = _ordered_ring(vid, succ[vid], pred[vid])
            rings.append(np.asarray(ring, dtype=np.int64))
            boundary_vertex[vid] = on_boundary
        self.vertex_one_rings = rings
        self.is_boundary_vertex = boundary_vertex

        vertex_faces = [[] for _ in range(len(self.vertices))]
        for fi, face in enumerate(f):
            for vid in face:
                vertex_faces[int(vid)].append(fi)
        self.vertex_faces = [np.asarray(lst, dtype=np.int64) for lst in vertex_faces]

    def _gauss_bonnet_warning(self):
        chi = len(self.vertices) - len(self.edge_faces) + len(self.faces)
        total = float(self.angle_deficits().sum())
        target = 2.0 * np.pi * chi
        if target != 0 and abs(total - target) > 1e-6 * abs(target):
            logger.warning(
                "mesh %s: angle deficit sum %.6f != 2*pi*chi %.6f; "
                "stored face orientation kept as-is", self.name or "<unnamed>", total, target
            )

    # -- basic quantities ------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def total_area(self):
        return float(self.face_areas.sum())

    def edge_length(self, u, v):
        return float(np.linalg.norm(self.vertices[u] - self.vertices[v]))

    def corner_angles(self):
        """(m, 3) interior angle at each face corner."""
        v = self.vertices[self.faces]
        out = np.empty((len(self.faces), 3))
        for k in range(3):
            e1 = v[:, (k + 1) % 3] - v[:, k]
            e2 = v[:, (k + 2) % 3] - v[:, k]
            cosang = np.einsum("ij,ij->i", e1, e2) / (
                np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
            )
            out[:, k] = np.arccos(np.clip(cosang, -1.0, 1.0))
        return out

    def angle_deficits(self):
        """2*pi (interior) or pi (boundary) minus the incident angle sum."""
        angles = self.corner_angles()
        acc = np.zeros(self.n_vertices)
        np.add.at(acc, self.faces.ravel(), angles.ravel())
        full = np.where(self.is_boundary_vertex, np.pi, 2.0 * np.pi)
        return full - acc

    def face_normals(self, normalized=True):
        v = self.vertices
        f = self.faces
        n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        if normalized:
            n = n / np.linalg.norm(n, axis=1, keepdims=True)
        return n

    def opposite_vertex(self, u, v):
        """Third vertex of the face owning half-edge (u, v), or None."""
        fi = self.halfedge_face.get((u, v))
        if fi is None:
            return None, None
        face = self.faces[fi]
        for w in face:
            w = int(w)
            if w != u and w != v:
                return w, fi
        raise AssertionError

    def set_labels(self, labels):
        lab = np.asarray(labels, dtype=np.int64)
        if lab.shape != (self.n_vertices,):
            raise MeshError(f"labels must be ({self.n_vertices},), got {lab.shape}")
        bad = (lab < 0) | (lab >= LABEL_COUNT)
        if bad.any():
            vid = int(np.flatnonzero(bad)[0])
            raise MeshError(f"vertex {vid}: label {int(lab[vid])} outside [0, {LABEL_COUNT - 1}]")
        lab.setflags(write=False)
        self.labels = lab

    def submesh(self, face_ids):
        return SubMesh(self, face_ids)


class SubMesh:
    """Subset of a parent mesh's faces with a local reindexing."""

    def __init__(self, parent: TriMesh, face_ids):
        self.parent = parent
        self.face_ids = np.asarray(sorted(int(i) for i in face_ids), dtype=np.int64)
        if len(self.face_ids) == 0:
            raise MeshError("submesh with no faces")
        global_faces = parent.faces[self.face_ids]
        self.vertex_ids = np.unique(global_faces)
        self.local_index = {int(g): i for i, g in enumerate(self.vertex_ids)}
        self.faces_local = np.vectorize(self.local_index.__getitem__)(global_faces)

    @property
    def n_vertices(self):
        return len(self.vertex_ids)

    @property
    def n_faces(self):
        return len(self.face_ids)

    def vertices_local(self):
        return self.parent.vertices[self.vertex_ids]

    def edges(self):
        """Set of undirected local-edge pairs."""
        es = set()
        for a, b, c in self.faces_local:
            for u, w in ((a, b), (b, c), (c, a)):
                es.add((min(int(u), int(w)), max(int(u), int(w))))
        return es

    def contains_vertex(self, global_id):
        return int(global_id) in self.local_index


def euler_characteristic(sub) -> int:
    """V - E + F of a (sub)mesh."""
    if isinstance(sub, TriMesh):
        return sub.n_vertices - len(sub.edge_faces) + sub.n_faces
    return sub.n_vertices - len(sub.edges()) + sub.n_faces


def boundary_loops(mesh_or_sub):
    """Closed boundary loops as ordered vertex-id lists.

    Each loop follows the stored half-edge direction, i.e. the surface lies on
    the left when walking with the outward normal up (counter-clockwise around
    the patch as seen from outside). Vertex ids are global for submeshes.
    """
    if isinstance(mesh_or_sub, TriMesh):
        halfedges = set(mesh_or_sub.halfedge_face)
    else:
        sub = mesh_or_sub
        halfedges = set()
        vids = sub.vertex_ids
        for a, b, c in sub.faces_local:
            for u, w in ((a, b), (b, c), (c, a)):
                halfedges.add((int(vids[u]), int(vids[w])))
    boundary = {}
    for u, w in halfedges:
        if (w, u) not in halfedges:
            if u in boundary:
                raise TopologyError(f"boundary branches at vertex {u}")
            boundary[u] = w
    loops = []
    remaining = dict(boundary)
    while remaining:
        start = min(remaining)
        loop = [start]
        cur = remaining.pop(start)
        while cur != start:
            loop.append(cur)
            cur = remaining.pop(cur)
        loops.append(loop)
    loops.sort(key=lambda lp: lp[0])
    return loops


# -- file io -------------------------------------------------------------------


def load_mesh(path, fmt=None, labels_path=None, name=None) -> TriMesh:
    """Load an OFF / OBJ / PLY triangle mesh.

    ``fmt`` defaults to the file extension. ``labels_path`` optionally reads a
    per-vertex label sidecar (one integer per line, line i = label of vertex i).
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "off":
        v, f = _read_off(path)
    elif fmt == "obj":
        v, f = _read_obj(path)
    elif fmt == "ply":
        v, f = _read_ply(path)
    else:
        raise MeshError(f"unsupported mesh format {fmt!r}")
    labels = None
    if labels_path is not None:
        labels = load_labels(labels_path)
    return TriMesh(v, f, labels=labels, name=name if name is not None else path.stem)


def save_mesh(mesh: TriMesh, path, fmt=None, binary=False):
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "off":
        _write_off(mesh, path)
    elif fmt == "obj":
        _write_obj(mesh, path)
    elif fmt == "ply":
        _write_ply(mesh, path, binary=binary)
    else:
        raise MeshError(f"unsupported mesh format {fmt!r}")


def load_labels(path):
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(int(line))
            except ValueError:
                raise MeshError(f"{path}:{lineno + 1}: not an integer label: {line!r}")
    return np.asarray(vals, dtype=np.int64)


def save_labels(labels, path):
    with open(path, "w") as fh:
        for lab in labels:
            fh.write(f"{int(lab)}\n")


def _check_tri(counts_line, path, idx):
    if counts_line != 3:
        raise MeshError(f"{path}: non-triangle face at index {idx} ({counts_line} vertices)")


def _read_off(path):
    with open(path) as fh:
        tokens = []
        for line in fh:
            hash_pos = line.find("#")
            if hash_pos >= 0:
                line = line[:hash_pos]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    pos = 1
    nv, nf = int(tokens[pos]), int(tokens[pos + 1])
    pos += 3  # vertex, face, edge counts
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
    pos += 3 * nv
    faces = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        cnt = int(tokens[pos])
        _check_tri(cnt, path, i)
        faces[i] = [int(t) for t in tokens[pos + 1:pos + 4]]
        pos += 1 + cnt
    return verts, faces


def _write_off(mesh, path):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
        for p in mesh.vertices:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def _read_obj(path):
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [p.split("/")[0] for p in parts[1:]]
                _check_tri(len(idx), path, len(faces))
                faces.append([int(i) - 1 for i in idx])
    return np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64)


def _write_obj(mesh, path):
    with open(path, "w") as fh:
        for p in mesh.vertices:
            fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


_PLY_TYPES = {
    "float": ("f", 4), "float32": ("f", 4), "double": ("d", 8), "float64": ("d", 8),
    "int": ("i", 4), "int32": ("i", 4), "uint": ("I", 4), "uint32": ("I", 4),
    "short": ("h", 2), "ushort": ("H", 2), "char": ("b", 1), "uchar": ("B", 1),
    "int8": ("b", 1), "uint8": ("B", 1), "int16": ("h", 2), "uint16": ("H", 2),
}


def _read_ply(path):
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise MeshError(f"{path}: missing ply header")
        fmt = None
        elements = []  # (name, count, [(prop_kind, ...)])
        while True:
            line = fh.readline()
            if not line:
                raise MeshError(f"{path}: truncated header")
            parts = line.decode("ascii").split()
            if not parts or parts[0] == "comment":
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                elements.append([parts[1], int(parts[2]), []])
            elif parts[0] == "property":
                if parts[1] == "list":
                    elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
                else:
                    elements[-1][2].append(("scalar", parts[1], parts[2]))
            elif parts[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise MeshError(f"{path}: unsupported ply format {fmt}")
        verts = faces = None
        if fmt == "ascii":
            tokens = fh.read().decode("ascii").split()
            pos = 0
            for name, count, props in elements:
                rows = []
                for i in range(count):
                    row = {}
                    for prop in props:
                        if prop[0] == "list":
                            n = int(tokens[pos]); pos += 1
                            row[prop[3]] = [int(float(t)) for t in tokens[pos:pos + n]]
                            pos += n
                        else:
                            row[prop[2]] = float(tokens[pos]); pos += 1
                    rows.append(row)
                verts, faces = _ply_collect(name, rows, verts, faces, path)
        else:
            for name, count, props in elements:
                rows = []
                for i in range(count):
                    row = {}
                    for prop in props:
                        if prop[0] == "list":
                            cfmt, csz = _PLY_TYPES[prop[1]]
                            n = struct.unpack("<" + cfmt, fh.read(csz))[0]
                            ifmt, isz = _PLY_TYPES[prop[2]]
                            row[prop[3]] = list(struct.unpack(f"<{n}{ifmt}", fh.read(n * isz)))
                        else:
                            sfmt, ssz = _PLY_TYPES[prop[1]]
                            row[prop[2]] = struct.unpack("<" + sfmt, fh.read(ssz))[0]
                    rows.append(row)
                verts, faces = _ply_collect(name, rows, verts, faces, path)
        if verts is None or faces is None:
            raise MeshError(f"{path}: ply without vertex/face elements")
        return verts, faces


def _ply_collect(name, rows, verts, faces, path):
    if name == "vertex":
        verts = np.array([[r["x"], r["y"], r["z"]] for r in rows], dtype=np.float64)
    elif name == "face":
        out = []
        for i, r in enumerate(rows):
            idx = r.get("vertex_indices", r.get("vertex_index"))
            _check_tri(len(idx), path, i)
            out.append(idx)
        faces = np.asarray(out, dtype=np.int64)
    return verts, faces


def _write_ply(mesh, path, binary=False, vertex_colors=None):
    header = ["ply"]
    header.append("format binary_little_endian 1.0" if binary else "format ascii 1.0")
    header.append(f"element vertex {mesh.n_vertices}")
    header += ["property double x", "property double y", "property double z"]
    if vertex_colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append(f"element face {mesh.n_faces}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            for i, p in enumerate(mesh.vertices):
                fh.write(struct.pack("<3d", *p))
                if vertex_colors is not None:
                    fh.write(struct.pack("<3B", *vertex_colors[i]))
            for f in mesh.faces:
                fh.write(struct.pack("<B3i", 3, *f))
        else:
            lines = []
            for i, p in enumerate(mesh.vertices):
                line = f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}"
                if vertex_colors is not None:
                    c = vertex_colors[i]
                    line += f" {int(c[0])} {int(c[1])} {int(c[2])}"
                lines.append(line)
            for f in mesh.faces:
                lines.append(f"3 {f[0]} {f[1]} {f[2]}")
            fh.write(("\n".join(lines) + "\n").encode("ascii"))


def write_colored_ply(mesh, vertex_colors, path, binary=False):
    """PLY export with per-vertex uchar RGB."""
    colors = np.asarray(vertex_colors, dtype=np.int64)
    if colors.shape != (mesh.n_vertices, 3):
        raise MeshError(f"colors must be ({mesh.n_vertices}, 3)")
    _write_ply(mesh, path, binary=binary, vertex_colors=colors)
