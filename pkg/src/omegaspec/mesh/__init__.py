from .generators import blob_sphere, ellipsoid, flat_torus, icosphere, octahedron, revolution_torus
from .operators import MeshOperators, build_operators
from .pipeline import MeshOmegaResult, blob_experiment, eigensolve, omega_spectrum
from .trimesh import TriangleMesh, load_mesh, save_mesh

__all__ = [
    "TriangleMesh", "MeshOperators", "MeshOmegaResult",
    "load_mesh", "save_mesh", "build_operators", "eigensolve", "omega_spectrum", "blob_experiment",
    "icosphere", "ellipsoid", "octahedron", "flat_torus", "revolution_torus", "blob_sphere",
]
