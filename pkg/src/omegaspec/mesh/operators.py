"""Discrete operators on a closed triangle mesh.

Cotangent stiffness L, lumped mixed-Voronoi mass M, vertex Gaussian
curvature by angle defect, and the curvature-weighted stiffness
L_K = sum_T Kbar_T L^T (on a surface Ric = K g, so L_K discretizes
u, v -> int Ric(grad u, grad v)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .trimesh import TriangleMesh


@dataclass(frozen=True)
class MeshOperators:
    stiffness: sp.csr_matrix
    mass: np.ndarray  # diagonal of M
    curvature: np.ndarray
    angle_defect: np.ndarray
    weighted_stiffness: sp.csr_matrix
    euler_characteristic: int
    fallback_faces: tuple = field(default_factory=tuple)

    @property
    def mass_matrix(self) -> sp.dia_matrix:
        return sp.diags(self.mass)

    @property
    def gauss_bonnet_residual(self) -> float:
        return float(self.angle_defect.sum() - 2 * np.pi * self.euler_characteristic)

    @property
    def total_area(self) -> float:
        return float(self.mass.sum())


def _corner_geometry(v, f):
    """Per-face corner cotangents, corner angles, and squared opposite edge lengths."""
    p = [v[f[:, i]] for i in range(3)]
    cot = np.empty(f.shape)
    ang = np.empty(f.shape)
    sq = np.empty(f.shape)
    for i in range(3):
        a = p[(i + 1) % 3] - p[i]
        b = p[(i + 2) % 3] - p[i]
        aa = np.einsum("ij,ij->i", a, a)
        bb = np.einsum("ij,ij->i", b, b)
        ab = np.einsum("ij,ij->i", a, b)
        cross = np.sqrt(np.maximum(aa * bb - ab**2, 0.0))
        cot[:, i] = ab / cross
        ang[:, i] = np.arctan2(cross, ab)
        e = p[(i + 2) % 3] - p[(i + 1) % 3]
        sq[:, i] = np.einsum("ij,ij->i", e, e)
    area = 0.5 * cross
    return cot, ang, sq, area


def _assemble(f, cot, weight, nv):
    """sum_T weight_T * (cotangent stiffness of T)."""
    rows, cols, vals = [], [], []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        w = 0.5 * cot[:, i] * weight
        # edge (j, k) is opposite corner i
        rows += [f[:, j], f[:, k], f[:, j], f[:, k]]
        cols += [f[:, k], f[:, j], f[:, j], f[:, k]]
        vals += [-w, -w, w, w]
    L = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nv, nv)
    ).tocsr()
    L.sum_duplicates()
    return L


def build_operators(mesh: TriangleMesh) -> MeshOperators:
    v = np.asarray(mesh.vertices)
    f = np.asarray(mesh.faces)
    nv = len(v)
    cot, ang, sq, area = _corner_geometry(v, f)

    obtuse = np.any(ang > np.pi / 2, axis=1)
    # Voronoi share of corner i: (|e_ij|^2 cot_k + |e_ik|^2 cot_j) / 8
    vor = np.empty(f.shape)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        vor[:, i] = (sq[:, k] * cot[:, k] + sq[:, j] * cot[:, j]) / 8.0
    vor[obtuse] = area[obtuse, None] / 3.0
    mass = np.bincount(f.ravel(), weights=vor.ravel(), minlength=nv)

    defect = 2 * np.pi - np.bincount(f.ravel(), weights=ang.ravel(), minlength=nv)
    K = defect / mass

    L = _assemble(f, cot, np.ones(len(f)), nv)
    Kbar = K[f].mean(axis=1)
    LK = _assemble(f, cot, Kbar, nv)
    return MeshOperators(
        stiffness=L,
        mass=mass,
        curvature=K,
        angle_defect=defect,
        weighted_stiffness=LK,
        euler_characteristic=mesh.euler_characteristic,
        fallback_faces=tuple(int(i) for i in np.flatnonzero(obtuse)),
    )


def weighted_stiffness(mesh: TriangleMesh, face_weight) -> sp.csr_matrix:
    """Cotangent stiffness with an arbitrary per-face weight."""
    v = np.asarray(mesh.vertices)
    f = np.asarray(mesh.faces)
    cot, _, _, _ = _corner_geometry(v, f)
    return _assemble(f, cot, np.broadcast_to(np.asarray(face_weight, float), (len(f),)), len(v))
