"""Closed triangle meshes: validation, orientation repair and OFF/OBJ I/O."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from ..errors import (
    DegenerateFaceError,
    DisconnectedMeshError,
    MeshParseError,
    NonManifoldError,
    OpenSurfaceError,
    OrientationError,
)

DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class TriangleMesh:
    """Closed, connected, consistently oriented triangle mesh.

    Vertices may live in R^3 or any higher-dimensional ambient space (the
    discrete operators only use edge lengths), which lets flat tori be
    represented exactly in R^4. Use ``TriangleMesh.build`` to validate raw
    arrays and repair orientation.
    """

    vertices: np.ndarray
    faces: np.ndarray
    name: str = ""

    @classmethod
    def build(cls, vertices, faces, name: str = "", repair: bool = True) -> "TriangleMesh":
        v = np.array(vertices, dtype=float)
        f = np.array(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] < 2:
            raise MeshParseError(f"vertices must be an (V, d) array with d >= 2, got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshParseError(f"faces must be an (F, 3) array, got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshParseError("face index out of range")
        bad = np.flatnonzero((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2]))
        if bad.size:
            raise DegenerateFaceError(f"face {bad[0]} repeats a vertex", simplex=("face", int(bad[0])))
        f = _check_manifold_and_orient(f, repair)
        _check_connected(len(v), f)
        areas = face_areas(v, f)
        tiny = np.flatnonzero(areas <= DEGENERATE_TOL * areas.mean())
        if tiny.size:
            raise DegenerateFaceError(
                f"face {tiny[0]} has area {areas[tiny[0]]:.3e}", simplex=("face", int(tiny[0]))
            )
        if v.shape[1] == 3 and signed_volume(v, f) < 0:
            f = f[:, ::-1].copy()
        v.setflags(write=False)
        f.setflags(write=False)
        return cls(v, f, name)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def edges(self) -> np.ndarray:
        e = np.sort(self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    def scaled(self, factor: float) -> "TriangleMesh":
        return TriangleMesh(np.asarray(self.vertices) * factor, self.faces, self.name)


def face_areas(v, f):
    e1 = v[f[:, 1]] - v[f[:, 0]]
    e2 = v[f[:, 2]] - v[f[:, 0]]
    g11 = np.einsum("ij,ij->i", e1, e1)
    g22 = np.einsum("ij,ij->i", e2, e2)
    g12 = np.einsum("ij,ij->i", e1, e2)
    return 0.5 * np.sqrt(np.maximum(g11 * g22 - g12**2, 0.0))


def signed_volume(v, f):
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def _check_manifold_and_orient(f, repair):
    """Every edge in exactly two faces; propagate a consistent orientation."""
    nf = len(f)
    half = f[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    key = np.sort(half, axis=1)
    uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if np.any(counts > 2):
        e = uniq[np.flatnonzero(counts > 2)[0]]
        raise NonManifoldError(f"edge ({e[0]}, {e[1]}) is shared by more than two faces", simplex=("edge", tuple(map(int, e))))
    if np.any(counts < 2):
        e = uniq[np.flatnonzero(counts < 2)[0]]
        raise OpenSurfaceError(f"boundary edge ({e[0]}, {e[1]}): surface is not closed", simplex=("edge", tuple(map(int, e))))

    order = np.argsort(inv, kind="stable")
    pairs = order.reshape(-1, 2)
    face_of = pairs // 3
    # same direction in both faces means the two faces disagree
    same = np.all(half[pairs[:, 0]] == half[pairs[:, 1]], axis=1)
    if not same.any():
        return f.copy()
    if not repair:
        i = int(np.flatnonzero(same)[0])
        raise OrientationError("inconsistent face orientation", simplex=("edge", tuple(map(int, key[pairs[i, 0]]))))

    adj = [[] for _ in range(nf)]
    for (a, b), s in zip(face_of, same):
        adj[a].append((b, bool(s)))
        adj[b].append((a, bool(s)))
    flip = np.full(nf, -1, dtype=np.int8)
    for seed in range(nf):
        if flip[seed] >= 0:
            continue
        flip[seed] = 0
        queue = deque([seed])
        while queue:
            a = queue.popleft()
            for b, s in adj[a]:
                want = flip[a] ^ int(s)
                if flip[b] < 0:
                    flip[b] = want
                    queue.append(b)
                elif flip[b] != want:
                    raise OrientationError("surface is not orientable", simplex=("face", int(b)))
    out = f.copy()
    out[flip == 1] = out[flip == 1][:, ::-1]
    return out


def _check_connected(nv, f):
    used = np.zeros(nv, dtype=bool)
    used[f.ravel()] = True
    if not used.all():
        i = int(np.flatnonzero(~used)[0])
        raise DisconnectedMeshError(f"vertex {i} belongs to no face", simplex=("vertex", i))
    rows = f[:, [0, 1, 2]].ravel()
    cols = f[:, [1, 2, 0]].ravel()
    g = scipy.sparse.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(nv, nv))
    ncomp, labels = scipy.sparse.csgraph.connected_components(g, directed=False)
    if ncomp != 1:
        i = int(np.flatnonzero(labels != labels[0])[0])
        raise DisconnectedMeshError(f"mesh has {ncomp} components (vertex {i} is not reachable)", simplex=("vertex", i))


def _tokens(path):
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line


def read_off(path):
    lines = list(_tokens(path))
    if not lines:
        raise MeshParseError(f"{path}: empty file")
    head = lines[0].split()
    tag = head[0]
    dim = 3
    rest = head[1:]
    if tag == "nOFF":
        if not rest:
            lines = lines[1:]
            rest = lines[0].split()
        dim = int(rest[0])
        rest = rest[1:]
    elif tag != "OFF":
        raise MeshParseError(f"{path}: expected OFF header, got {tag!r}")
    if not rest:
        lines = lines[1:]
        rest = lines[0].split()
    try:
        nv, nf = int(rest[0]), int(rest[1])
        body = lines[1:]
        verts = np.array([[float(x) for x in body[i].split()[:dim]] for i in range(nv)])
        faces = []
        for j in range(nf):
            tok = body[nv + j].split()
            k = int(tok[0])
            idx = [int(x) for x in tok[1 : 1 + k]]
            if k != 3:
                raise MeshParseError(f"{path}: face {j} has {k} vertices, only triangles are supported", simplex=("face", j))
            faces.append(idx)
    except (IndexError, ValueError) as exc:
        raise MeshParseError(f"{path}: malformed OFF body ({exc})") from None
    return verts, np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_obj(path):
    verts, faces = [], []
    for n, line in enumerate(_tokens(path)):
        tok = line.split()
        try:
            if tok[0] == "v":
                verts.append([float(x) for x in tok[1:4]])
            elif tok[0] == "f":
                idx = [int(t.split("/")[0]) for t in tok[1:]]
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                if len(idx) != 3:
                    raise MeshParseError(f"{path}: line {n + 1}: only triangles are supported", simplex=("face", len(faces)))
                faces.append(idx)
        except ValueError as exc:
            raise MeshParseError(f"{path}: line {n + 1}: {exc}") from None
    if not verts:
        raise MeshParseError(f"{path}: no vertices")
    return np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3)


def load_mesh(path, fmt: str = None) -> TriangleMesh:
    """Read and validate an OFF or OBJ triangle mesh."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "off":
        v, f = read_off(path)
    elif fmt == "obj":
        v, f = read_obj(path)
    else:
        raise MeshParseError(f"unsupported mesh format {fmt!r}")
    return TriangleMesh.build(v, f, name=path.stem)


def save_mesh(mesh: TriangleMesh, path, fmt: str = None) -> None:
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    v, f = np.asarray(mesh.vertices), np.asarray(mesh.faces)
    lines = []
    if fmt == "off":
        if v.shape[1] == 3:
            lines.append("OFF")
        else:
            lines.append(f"nOFF\n{v.shape[1]}")
        lines.append(f"{len(v)} {len(f)} 0")
        lines += [" ".join(repr(float(x)) for x in p) for p in v]
        lines += [f"3 {a} {b} {c}" for a, b, c in f]
    elif fmt == "obj":
        if v.shape[1] != 3:
            raise MeshParseError("OBJ output needs 3D vertices")
        lines += ["v " + " ".join(repr(float(x)) for x in p) for p in v]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in f]
    else:
        raise MeshParseError(f"unsupported mesh format {fmt!r}")
    path.write_text("\n".join(lines) + "\n")
