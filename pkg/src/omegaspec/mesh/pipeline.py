"""Laplacian eigenpairs and the Galerkin pipeline Omega_k = Lambda_k(Ric) on surfaces."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from ..errors import ConvergenceError, InputError, ResolutionError
from ..forms import FormPair, LambdaSpectrum, SpectralBasis, solve_lambda
from .generators import blob_sphere, icosphere
from .operators import MeshOperators, build_operators
from .trimesh import TriangleMesh

DENSE_LIMIT = 1500
EIG_RESIDUAL_TOL = 1e-8
CONVERGENCE_TOL = 1e-3
# Omega values are dimensionless, so a fixed floor separates roundoff from curvature.
OMEGA_ZERO_FLOOR = 1e-10


def _fix_signs(X):
    idx = np.argmax(np.abs(X) > 1e-8 * np.abs(X).max(axis=0), axis=0)
    return X * np.sign(X[idx, np.arange(X.shape[1])])


def eigensolve(ops: MeshOperators, count: int, provenance: str = "mesh"):
    """Smallest ``count`` nonzero eigenpairs of L x = lambda M x.

    Returns (SpectralBasis, X) with X of shape (V, count), M-orthonormal.
    """
    V = ops.stiffness.shape[0]
    if not 2 <= count < V - 1:
        raise InputError(f"count must satisfy 2 <= count < {V - 1}, got {count}")
    L = ops.stiffness
    m = ops.mass
    if V <= DENSE_LIMIT:
        w, X = scipy.linalg.eigh(L.toarray(), np.diag(m), subset_by_index=[0, count])
    else:
        sigma = -1e-2 / ops.total_area
        v0 = np.random.default_rng(0).standard_normal(V)
        # Lanczos can drop copies of a degenerate eigenvalue near the edge of
        # the requested window, so ask for a padded window and keep the bottom
        k = min(count + 1 + max(10, count // 4), V - 2)
        w, X = spla.eigsh(
            L.tocsc(), k=k, M=ops.mass_matrix.tocsc(), sigma=sigma, which="LM", v0=v0, tol=1e-12,
            ncv=min(V - 1, max(2 * k + 1, 20)),
        )
        order = np.argsort(w)[: count + 1]
        w, X = w[order], X[:, order]
    X = X / np.sqrt(np.einsum("ij,ij->j", X, m[:, None] * X))
    R = L @ X - (m[:, None] * X) * w
    LX = np.linalg.norm(L @ X, axis=0)
    res = np.linalg.norm(R, axis=0) / np.maximum(LX, np.finfo(float).tiny)
    if np.any(res[1:] > EIG_RESIDUAL_TOL):
        raise ConvergenceError(f"eigensolver residual {res[1:].max():.3e} exceeds {EIG_RESIDUAL_TOL:g}", residuals=res)
    if not abs(w[0]) <= 1e-8 * w[-1] or w[1] <= 1e-8 * w[-1]:
        raise ConvergenceError("expected exactly one zero eigenvalue (constants) on a connected mesh")
    X = _fix_signs(X[:, 1:])
    basis = SpectralBasis(dim_manifold=2, eigenvalues=w[1:], provenance=provenance)
    return basis, X


@dataclass
class MeshOmegaResult:
    spectrum: LambdaSpectrum
    basis: SpectralBasis
    top: int
    omega_half: np.ndarray
    converged: bool
    gauss_bonnet_residual: float
    fallback_count: int
    min_curvature: float
    timings: dict = field(default_factory=dict)

    @property
    def omega(self) -> np.ndarray:
        return self.spectrum.positive[: self.top]

    @property
    def omega1(self) -> float:
        return float(self.spectrum.positive[0]) if self.spectrum.positive.size else 0.0

    @property
    def margin(self) -> float:
        """Distance (n-1)/n - Omega_1 to the sharp bound for surfaces."""
        return 0.5 - self.omega1

    @property
    def lambda1(self) -> float:
        return float(self.basis.eigenvalues[0])


def surface_forms(ops: MeshOperators, basis: SpectralBasis, X) -> FormPair:
    """A_ij = x_i^T L_K x_j and B = diag(lambda_j^2)."""
    A = X.T @ (ops.weighted_stiffness @ X)
    return FormPair.from_eigenbasis(basis, 0.5 * (A + A.T))


def omega_spectrum(mesh: TriangleMesh, basis_size: int = 100, top: int = 5, ops: MeshOperators = None) -> MeshOmegaResult:
    """Omega_k of a closed surface from a Galerkin basis of ``basis_size`` eigenfunctions.

    Only k <= basis_size/4 may be requested; the convergence flag compares
    against the same computation on the first basis_size/2 eigenfunctions.
    """
    if top < 1 or top > basis_size // 4:
        raise InputError(f"top must lie in [1, basis_size/4 = {basis_size // 4}]")
    t0 = time.perf_counter()
    if ops is None:
        ops = build_operators(mesh)
    t1 = time.perf_counter()
    basis, X = eigensolve(ops, basis_size, provenance=mesh.name)
    t2 = time.perf_counter()
    spec = solve_lambda(surface_forms(ops, basis, X), zero_tol_abs=OMEGA_ZERO_FLOOR)
    half = basis_size // 2
    hb = SpectralBasis(2, basis.eigenvalues[:half], provenance=mesh.name)
    spec_half = solve_lambda(surface_forms(ops, hb, X[:, :half]), zero_tol_abs=OMEGA_ZERO_FLOOR)
    t3 = time.perf_counter()
    full = np.pad(spec.positive[:top], (0, max(0, top - spec.positive.size)))
    halfv = np.pad(spec_half.positive[:top], (0, max(0, top - spec_half.positive.size)))
    converged = bool(np.all(np.abs(full - halfv) <= CONVERGENCE_TOL))
    return MeshOmegaResult(
        spectrum=spec,
        basis=basis,
        top=top,
        omega_half=halfv,
        converged=converged,
        gauss_bonnet_residual=ops.gauss_bonnet_residual,
        fallback_count=len(ops.fallback_faces),
        min_curvature=float(ops.curvature.min()),
        timings={"operators": t1 - t0, "eigensolve": t2 - t1, "forms": t3 - t2},
    )


@dataclass
class BlobRow:
    eps: float
    omega1: float
    n_vertices: int
    converged: bool


def blob_experiment(eps_values, basis_size: int = 60, base_subdiv: int = 4, h_far: float = 0.05, per_eps: int = 8):
    """Omega_1 of the sphere-with-blob family along a decreasing eps sequence.

    eps = 0 stands for the unmodified icosphere of subdivision ``base_subdiv``.
    """
    eps_values = [float(e) for e in eps_values]
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise InputError("eps values must be strictly decreasing")
    if any(e < 0 for e in eps_values):
        raise InputError("eps values must be nonnegative")
    rows = []
    for eps in eps_values:
        if eps == 0:
            mesh = icosphere(base_subdiv)
        else:
            mesh = blob_sphere(eps, h_far=h_far, per_eps=per_eps)
        res = omega_spectrum(mesh, basis_size, top=1)
        rows.append(BlobRow(eps, res.omega1, mesh.n_vertices, res.converged))
    return rows
