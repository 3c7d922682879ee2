import math

import numpy as np
import pytest

from omegaspec.errors import (
    DegenerateFaceError,
    DisconnectedMeshError,
    InputError,
    MeshParseError,
    NonManifoldError,
    OpenSurfaceError,
    OrientationError,
    ResolutionError,
)
from omegaspec.mesh import (
    TriangleMesh,
    blob_experiment,
    blob_sphere,
    build_operators,
    eigensolve,
    ellipsoid,
    flat_torus,
    icosphere,
    load_mesh,
    octahedron,
    omega_spectrum,
    revolution_torus,
    save_mesh,
)
from omegaspec.mesh import pipeline
from omegaspec.mesh.operators import weighted_stiffness
from omegaspec.mesh.trimesh import signed_volume

TETRA_V = np.array([[1.0, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
TETRA_F = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])


@pytest.fixture(scope="module")
def sphere3():
    return icosphere(3)


@pytest.fixture(scope="module")
def sphere3_result(sphere3):
    return omega_spectrum(sphere3, basis_size=100, top=5)


# --- meshes and validation -------------------------------------------------------------------


@pytest.mark.parametrize("s", [0, 1, 2, 3])
def test_icosphere_counts(s):
    m = icosphere(s)
    assert m.n_vertices == 10 * 4**s + 2
    assert m.euler_characteristic == 2
    assert np.allclose(np.linalg.norm(m.vertices, axis=1), 1.0)


def test_outward_orientation_restored():
    m = TriangleMesh.build(TETRA_V, TETRA_F[:, ::-1])
    assert signed_volume(m.vertices, m.faces) > 0


def test_orientation_repair_of_single_flipped_face():
    f = TETRA_F.copy()
    f[2] = f[2][::-1]
    m = TriangleMesh.build(TETRA_V, f)
    ref = TriangleMesh.build(TETRA_V, TETRA_F)
    assert sorted(map(tuple, m.faces)) == sorted(map(tuple, ref.faces))
    with pytest.raises(OrientationError):
        TriangleMesh.build(TETRA_V, f, repair=False)


def test_non_orientable_surface_rejected():
    # six-vertex projective plane
    faces = np.array(
        [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 1], [1, 2, 4], [2, 3, 5], [3, 4, 1], [4, 5, 2], [5, 1, 3]]
    )
    verts = np.random.default_rng(0).standard_normal((6, 3))
    with pytest.raises(OrientationError):
        TriangleMesh.build(verts, faces)


def test_open_and_nonmanifold_meshes_name_the_edge():
    with pytest.raises(OpenSurfaceError) as e:
        TriangleMesh.build(TETRA_V, TETRA_F[:3])
    assert e.value.simplex[0] == "edge"
    faces = np.vstack([TETRA_F, [[0, 1, 4]]])
    verts = np.vstack([TETRA_V, [[3.0, 0, 0]]])
    with pytest.raises(NonManifoldError) as e:
        TriangleMesh.build(verts, faces)
    assert e.value.simplex == ("edge", (0, 1))


def test_degenerate_and_disconnected():
    v = TETRA_V.copy()
    v[3] = (v[0] + v[1]) / 2  # faces through 0, 1, 3 collapse
    with pytest.raises(DegenerateFaceError):
        TriangleMesh.build(v, TETRA_F)
    with pytest.raises(DegenerateFaceError):
        TriangleMesh.build(TETRA_V, np.array([[0, 0, 1]]))
    two = np.vstack([TETRA_V, TETRA_V + 5])
    with pytest.raises(DisconnectedMeshError):
        TriangleMesh.build(two, np.vstack([TETRA_F, TETRA_F + 4]))
    with pytest.raises(MeshParseError):
        TriangleMesh.build(TETRA_V, TETRA_F + 1)


def test_off_obj_round_trip(tmp_path, sphere3):
    for ext in ("off", "obj"):
        p = tmp_path / f"s.{ext}"
        save_mesh(sphere3, p)
        m = load_mesh(p)
        assert np.allclose(m.vertices, sphere3.vertices) and np.array_equal(m.faces, sphere3.faces)
    t = flat_torus(8, 8)
    save_mesh(t, tmp_path / "t.off")
    assert load_mesh(tmp_path / "t.off").vertices.shape == (64, 4)


def test_obj_variants_and_parse_errors(tmp_path):
    p = tmp_path / "t.obj"
    lines = ["# tetra", *("v " + " ".join(map(str, x)) for x in TETRA_V), "vn 0 0 1"]
    lines += [f"f {a + 1}/1/1 {b + 1}//1 {c - 4}" for a, b, c in TETRA_F]
    p.write_text("\n".join(lines))
    assert load_mesh(p).n_faces == 4
    bad = tmp_path / "b.off"
    bad.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n")
    with pytest.raises(MeshParseError):
        load_mesh(bad)
    quad = tmp_path / "q.off"
    quad.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(MeshParseError):
        load_mesh(quad)
    with pytest.raises(MeshParseError):
        load_mesh(tmp_path / "x.stl")


# --- discrete operators ----------------------------------------------------------------------------


def test_operator_invariants(sphere3):
    ops = build_operators(sphere3)
    L = ops.stiffness
    assert np.abs(L @ np.ones(sphere3.n_vertices)).max() < 1e-12
    assert abs(L - L.T).max() < 1e-14
    assert np.linalg.eigvalsh(L.toarray())[0] > -1e-10
    assert np.all(ops.mass > 0)
    assert abs(ops.gauss_bonnet_residual) < 1e-9
    assert ops.total_area == pytest.approx(4 * math.pi, rel=5e-3)
    assert np.allclose(ops.curvature, 1.0, atol=0.1)


def test_gauss_bonnet_on_torus_and_flat_defects():
    ops = build_operators(revolution_torus())
    assert ops.euler_characteristic == 0 and abs(ops.gauss_bonnet_residual) < 1e-9
    flat = build_operators(flat_torus(16, 16))
    assert np.abs(flat.angle_defect).max() < 1e-12


def test_weighted_stiffness_linear_in_weight(sphere3):
    ops = build_operators(sphere3)
    assert abs(weighted_stiffness(sphere3, 2.5) - 2.5 * ops.stiffness).max() < 1e-12


def test_octahedron_spectrum_exact():
    # equilateral faces: cot = 1/sqrt(3), vertex area 2 sqrt(3)/3, graph Laplacian of K_{2,2,2}
    # has spectrum 0, 4 (x3), 6 (x2), so lambda = {4, 6} / 2
    basis, _ = eigensolve(build_operators(octahedron()), 4)
    assert np.allclose(basis.eigenvalues, [2, 2, 2, 3], atol=1e-12)


@pytest.mark.parametrize("count", [20, 60, 100])
def test_sparse_and_dense_paths_agree(sphere3, monkeypatch, count):
    # windows ending inside degenerate clusters are the hard case for Lanczos
    ops = build_operators(sphere3)
    dense, _ = eigensolve(ops, count)
    monkeypatch.setattr(pipeline, "DENSE_LIMIT", 100)
    sparse, _ = eigensolve(ops, count)
    assert np.allclose(dense.eigenvalues, sparse.eigenvalues, rtol=1e-10)


def test_eigensolve_contract(sphere3):
    ops = build_operators(sphere3)
    basis, X = eigensolve(ops, 10)
    G = X.T @ (ops.mass[:, None] * X)
    assert np.allclose(G, np.eye(10), atol=1e-9)
    assert np.allclose(basis.eigenvalues[:3], 2.0, rtol=2e-2)
    with pytest.raises(InputError):
        eigensolve(ops, 1)


# --- Omega pipeline ------------------------------------------------------------------------------


def test_sphere_omega(sphere3_result):
    r = sphere3_result
    assert 0.48 <= r.omega1 <= 0.505
    assert r.converged
    assert r.margin == pytest.approx(0.5 - r.omega1)
    assert r.fallback_count == 0 and r.lambda1 == pytest.approx(2.0, rel=2e-2)


def test_homothety_invariance(sphere3, sphere3_result):
    r2 = omega_spectrum(sphere3.scaled(2.5), basis_size=100, top=5)
    assert np.allclose(r2.omega, sphere3_result.omega, atol=1e-9)
    assert r2.lambda1 == pytest.approx(sphere3_result.lambda1 / 6.25, rel=1e-10)


def test_icosphere_monotone_refinement():
    vals = [omega_spectrum(icosphere(s), 100, 1).omega1 for s in (2, 3, 4)]
    assert all(b <= a + 1e-3 for a, b in zip(vals, vals[1:]))
    assert abs(vals[2] - 0.5) < abs(vals[0] - 0.5)


def test_flat_torus_has_zero_omega():
    r = omega_spectrum(flat_torus(24, 24), basis_size=40, top=5)
    assert abs(r.omega1) <= 0.05
    assert r.spectrum.positive.size == 0 and r.spectrum.zero_dim == 40


def test_triaxial_ellipsoid_strictly_below_bound():
    r = omega_spectrum(ellipsoid((2.0, 1.5, 1.0), 4), 100, 5)
    assert r.omega1 <= 0.49


def test_surface_of_revolution_reaches_bound():
    # rotationally symmetric surfaces carry a concircular function, so Omega_1 = 1/2
    r = omega_spectrum(ellipsoid((2.0, 1.0, 1.0), 4), 100, 5)
    assert abs(r.omega1 - 0.5) <= 5e-3


def test_revolution_torus_positive_below_half():
    r = omega_spectrum(revolution_torus(), 60, 3)
    assert 0 < r.omega1 < 0.5


def test_top_limited_to_quarter_basis(sphere3):
    with pytest.raises(InputError):
        omega_spectrum(sphere3, basis_size=20, top=6)


def test_blob_resolution_and_order():
    with pytest.raises(ResolutionError):
        blob_sphere(0.1, per_eps=1)
    with pytest.raises(InputError):
        blob_experiment([0.1, 0.2])
    with pytest.raises(InputError):
        blob_sphere(1.5)
    m = blob_sphere(0.4)
    assert m.euler_characteristic == 2


def test_blob_zero_eps_is_icosphere():
    rows = blob_experiment([0.0], basis_size=60, base_subdiv=3)
    assert rows[0].omega1 == pytest.approx(omega_spectrum(icosphere(3), 60, 1).omega1, abs=1e-14)
