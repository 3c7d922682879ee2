"""Deterministic mesh generators: icosphere, ellipsoid, flat and embedded tori,
and the sphere-with-blob family used for the near-extremal experiment."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import gaussian_filter1d

from ..errors import InputError, ResolutionError
from .trimesh import TriangleMesh


def icosahedron():
    t = (1 + math.sqrt(5)) / 2
    v = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]],
        dtype=float,
    )
    f = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def octahedron() -> TriangleMesh:
    v = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    f = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]]
    return TriangleMesh.build(v, f, name="octahedron")


def _subdivide(v, f):
    edges = np.sort(f[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    inv = inv.reshape(-1, 3) + len(v)
    mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    ab, bc, ca = inv[:, 0], inv[:, 1], inv[:, 2]
    nf = np.concatenate(
        [np.stack(t, axis=1) for t in ((a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca))]
    )
    return np.vstack([v, mid]), nf


def icosphere(subdiv: int = 3, radius: float = 1.0) -> TriangleMesh:
    """Loop-style subdivided icosahedron projected to the sphere: 10*4^s + 2 vertices."""
    if subdiv < 0:
        raise InputError("subdiv must be nonnegative")
    v, f = icosahedron()
    for _ in range(subdiv):
        v, f = _subdivide(v, f)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    return TriangleMesh.build(radius * v, f, name=f"icosphere{subdiv}")


def ellipsoid(axes=(2.0, 1.0, 1.0), subdiv: int = 4) -> TriangleMesh:
    if len(axes) != 3 or min(axes) <= 0:
        raise InputError("ellipsoid needs three positive semi-axes")
    s = icosphere(subdiv)
    return TriangleMesh.build(np.asarray(s.vertices) * np.asarray(axes, float), s.faces,
                              name="ellipsoid%g:%g:%g" % tuple(axes))


def _grid_torus_faces(nu, nv):
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    a = i * nv + j
    b = ((i + 1) % nu) * nv + j
    c = ((i + 1) % nu) * nv + (j + 1) % nv
    d = i * nv + (j + 1) % nv
    return np.concatenate([np.stack([a, b, c], -1).reshape(-1, 3), np.stack([a, c, d], -1).reshape(-1, 3)])


def flat_torus(nu: int = 32, nv: int = 32, periods=(2 * math.pi, 2 * math.pi)) -> TriangleMesh:
    """Regular grid on the Clifford-type embedding of a flat torus in R^4.

    Every vertex sees the same six corner angles, so all angle defects vanish
    and the discrete metric is exactly flat.
    """
    if nu < 3 or nv < 3:
        raise InputError("flat torus needs at least 3 vertices per direction")
    P, Q = periods
    u = np.arange(nu) * 2 * math.pi / nu
    w = np.arange(nv) * 2 * math.pi / nv
    U, W = np.meshgrid(u, w, indexing="ij")
    R1, R2 = P / (2 * math.pi), Q / (2 * math.pi)
    v = np.stack([R1 * np.cos(U), R1 * np.sin(U), R2 * np.cos(W), R2 * np.sin(W)], -1).reshape(-1, 4)
    return TriangleMesh.build(v, _grid_torus_faces(nu, nv), name=f"flat_torus{nu}x{nv}")


def revolution_torus(R: float = 3.0, r: float = 1.0, nu: int = 48, nv: int = 24) -> TriangleMesh:
    """Torus of revolution in R^3 (not flat: K = cos t / (r (R + r cos t)))."""
    if not R > r > 0:
        raise InputError("need R > r > 0")
    u = np.arange(nu) * 2 * math.pi / nu
    t = np.arange(nv) * 2 * math.pi / nv
    U, T = np.meshgrid(u, t, indexing="ij")
    rho = R + r * np.cos(T)
    v = np.stack([rho * np.cos(U), rho * np.sin(U), r * np.sin(T)], -1).reshape(-1, 3)
    return TriangleMesh.build(v, _grid_torus_faces(nu, nv), name=f"torus{R:g}_{r:g}")


def _zip_rings(ia, ta, ib, tb):
    """Triangulate the band between two closed rings given vertex ids and angles."""
    faces = []
    na, nb = len(ia), len(ib)
    i = j = 0
    while i < na or j < nb:
        next_a = ta[(i + 1) % na] + (2 * math.pi if i + 1 >= na else 0.0)
        next_b = tb[(j + 1) % nb] + (2 * math.pi if j + 1 >= nb else 0.0)
        if j >= nb or (i < na and next_a <= next_b):
            faces.append((ia[i % na], ia[(i + 1) % na], ib[j % nb]))
            i += 1
        else:
            faces.append((ia[i % na], ib[(j + 1) % nb], ib[j % nb]))
            j += 1
    return faces


def resample_profile(profile, h):
    """Resample a (radius, z) polyline so consecutive spacing follows ``h``.

    ``h`` gives the target edge length at each input point. Returns arrays
    (r, z, h, s) at the new samples, s being the original arc length.
    """
    profile = np.asarray(profile, float)
    seg = np.linalg.norm(np.diff(profile, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    h = np.asarray(h, float)
    density = np.concatenate([[0.0], np.cumsum(seg * 0.5 * (1 / h[1:] + 1 / h[:-1]))])
    n_seg = max(4, int(round(density[-1])))
    st = np.interp(np.linspace(0, density[-1], n_seg + 1), density, s)
    r = np.interp(st, s, profile[:, 0])
    z = np.interp(st, s, profile[:, 1])
    r[0] = r[-1] = 0.0
    return r, z, np.interp(st, s, h), st


def revolution_mesh(r, z, h, name="revolution", min_ring=6, warp=None) -> TriangleMesh:
    """Sphere-topology surface of revolution about the z axis.

    ``r``, ``z`` are profile samples from the south pole (r = 0) to the north
    pole (r = 0); ``h`` is the target edge length per sample. Each ring gets
    about 2 pi r / h vertices and is rotated half a step against the previous
    one. ``warp`` optionally maps the final (V, 3) vertex array.
    """
    n_seg = len(r) - 1
    verts = [(0.0, 0.0, z[0])]
    rings = []
    phase = 0.0
    for k in range(1, n_seg):
        n = max(min_ring, int(round(2 * math.pi * r[k] / h[k])))
        phase += math.pi / n
        theta = phase + 2 * math.pi * np.arange(n) / n
        ids = np.arange(len(verts), len(verts) + n)
        verts += [(r[k] * math.cos(t), r[k] * math.sin(t), z[k]) for t in theta]
        rings.append((ids, np.mod(theta, 2 * math.pi)))
    verts.append((0.0, 0.0, z[-1]))
    south, north = 0, len(verts) - 1

    faces = []
    ids = rings[0][0]
    faces += [(south, ids[(i + 1) % len(ids)], ids[i]) for i in range(len(ids))]
    for (ia, ta), (ib, tb) in zip(rings[:-1], rings[1:]):
        oa, ob = np.argsort(ta), np.argsort(tb)
        faces += _zip_rings(ia[oa], ta[oa], ib[ob], tb[ob])
    ids = rings[-1][0]
    faces += [(north, ids[i], ids[(i + 1) % len(ids)]) for i in range(len(ids))]
    verts = np.array(verts)
    if warp is not None:
        verts = warp(verts)
    return TriangleMesh.build(verts, np.array(faces), name=name)


def blob_profile(eps: float, bulb_radius: float = 0.5, samples: int = 4000):
    """Profile of a unit sphere joined to a bulb by a neck of width eps.

    The unit sphere loses a polar cap of radius eps/2 around its north pole;
    a cylindrical neck of radius eps/2 and length eps connects it to a sphere
    of radius ``bulb_radius``. Corners are rounded by smoothing over a length
    of eps/4. Returns (profile, arc length of the neck midpoint, z range of
    the neck).
    """
    w = eps / 2
    phi0 = math.asin(w)
    z0 = math.cos(phi0)
    z1 = z0 + eps
    zc = z1 + math.sqrt(bulb_radius**2 - w**2)
    psi0 = math.asin(w / bulb_radius)

    phi = np.linspace(math.pi, phi0, samples)
    main = np.stack([np.sin(phi), np.cos(phi)], 1)
    neck = np.stack([np.full(samples // 4, w), np.linspace(z0, z1, samples // 4)], 1)
    psi = np.linspace(math.pi - psi0, 0.0, samples)
    bulb = np.stack([bulb_radius * np.sin(psi), zc + bulb_radius * np.cos(psi)], 1)
    prof = np.vstack([main, neck[1:], bulb[1:]])

    seg = np.linalg.norm(np.diff(prof, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    s_neck = 0.5 * (s[samples - 1] + s[samples - 1 + samples // 4 - 1])
    su = np.linspace(0, s[-1], 8 * samples)
    prof = np.stack([np.interp(su, s, prof[:, 0]), np.interp(su, s, prof[:, 1])], 1)
    sigma = (eps / 4) / (su[1] - su[0])
    smooth = np.stack([gaussian_filter1d(prof[:, i], sigma, mode="nearest") for i in range(2)], 1)
    # poles stay exact; only the junctions get rounded
    blend = np.exp(-0.5 * ((su - s_neck) / (2 * eps)) ** 2)[:, None]
    prof = blend * smooth + (1 - blend) * prof
    return prof, s_neck, (z0, z1)


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6 * t - 15) + 10)


def blob_sphere(
    eps: float,
    h_far: float = 0.05,
    per_eps: int = 8,
    bulb_radius: float = 0.5,
    bulb_stretch: tuple = (1.6, 0.6),
) -> TriangleMesh:
    """Unit sphere with a non-round bulb attached through a neck of width ``eps``.

    The bulb's horizontal cross-sections are stretched by ``bulb_stretch``
    along x and y, so the surface has no rotational symmetry (a surface of
    revolution already has Omega_1 = 1/2). The round part is untouched below
    the neck. Edge length is ``eps / per_eps`` at the neck and grows linearly
    to ``h_far``.
    """
    if not 0 < eps < 1:
        raise InputError("eps must lie in (0, 1)")
    prof, s_neck, (z0, z1) = blob_profile(eps, bulb_radius)
    seg = np.linalg.norm(np.diff(prof, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    h = np.minimum(h_far, eps / per_eps + 0.25 * np.abs(s - s_neck))
    r, z, hs, st = resample_profile(prof, h)
    check_neck_resolution(r, hs, st, s_neck, eps)

    sx, sy = bulb_stretch

    def warp(v):
        t = _smoothstep((v[:, 2] - z1) / bulb_radius)[:, None]
        return v * (1 + t * (np.array([sx, sy, 1.0]) - 1))

    return revolution_mesh(r, z, hs, name=f"blob{eps:g}", warp=warp)


def check_neck_resolution(r, h, st, s_neck, eps, required: int = 4) -> None:
    """Require ``required`` edges along the neck and across its diameter."""
    along = int(np.sum(np.abs(st - s_neck) <= eps / 2))
    if along < required + 1:
        raise ResolutionError(f"only {along} vertex rings along a neck of width {eps:g}; {required + 1} required")
    i = int(np.argmin(np.abs(st - s_neck)))
    across = math.pi * r[i] / h[i]  # ring edges spanning half the neck circumference
    if across < required:
        raise ResolutionError(f"neck diameter resolved by {across:.1f} edges; {required} required")
