"""Galerkin restriction of the variational sequence Lambda_k(S).

Given a truncated, mean-zero spectral basis {psi_j} of a closed manifold and a
symmetric 2-tensor S, the quotient

    Lambda_S(v) = int S(grad v, grad v) dmu / ||Delta v||^2

restricted to span{psi_j} is the generalized Rayleigh quotient of the pair

    A_ij = int S(grad psi_i, grad psi_j) dmu,   B_ij = int Delta psi_i Delta psi_j dmu.

The inductive "sup over the orthogonal complement" construction of Lambda_k
then coincides with the generalized symmetric eigenproblem ``A x = Lambda B x``.
``solve_lambda`` solves that problem; ``greedy_lambda`` follows the inductive
construction literally and is kept as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, InputError

ZERO_TOL_REL = 1e-10
RESIDUAL_TOL = 1e-9
SYMMETRY_TOL = 1e-12
CLUSTER_RTOL = 1e-9


@dataclass(frozen=True)
class SpectralBasis:
    """Truncated Laplacian eigenbasis with the constant mode removed."""

    dim_manifold: int
    eigenvalues: np.ndarray
    provenance: str = ""
    orthonormal: bool = True

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if self.dim_manifold < 1:
            raise InputError(f"dim_manifold must be positive, got {self.dim_manifold}")
        if ev.ndim != 1 or ev.size < 2:
            raise InputError("a spectral basis needs at least 2 eigenvalues")
        if np.any(ev <= 0):
            raise InputError("eigenvalues must be strictly positive (constants are excluded)")
        if np.any(np.diff(ev) < 0):
            raise InputError("eigenvalues must be sorted ascending")
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def size(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class FormPair:
    """Gram matrices of the S-form (A) and the biharmonic form (B)."""

    A: np.ndarray
    B: np.ndarray
    basis: Optional[SpectralBasis] = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError(f"A must be square, got shape {A.shape}")
        if B.shape != A.shape:
            raise InputError(f"A and B shapes differ: {A.shape} vs {B.shape}")
        if self.basis is not None and self.basis.size != A.shape[0]:
            raise InputError("basis size does not match the form dimension")
        scale = max(np.abs(A).max(initial=0.0), np.finfo(float).tiny)
        if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_TOL * scale:
            raise InputError("A is not symmetric")
        bscale = max(np.abs(B).max(initial=0.0), np.finfo(float).tiny)
        if np.abs(B - B.T).max(initial=0.0) > SYMMETRY_TOL * bscale:
            raise InputError("B is not symmetric")
        A = 0.5 * (A + A.T)
        B = 0.5 * (B + B.T)
        try:
            np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            raise InputError("B is not positive definite") from None
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_eigenbasis(cls, basis: SpectralBasis, A) -> "FormPair":
        """Pair ``A`` with ``B = diag(lambda_j^2)``, exact for an L2-orthonormal eigenbasis."""
        return cls(A=A, B=np.diag(basis.eigenvalues**2), basis=basis)


@dataclass(frozen=True)
class LambdaSpectrum:
    """Signed spectrum of a FormPair.

    ``positive`` is nonincreasing, ``negative`` is nondecreasing
    (Lambda_{-1} <= Lambda_{-2} <= ... < 0). Vector matrices hold one
    B-normalized coefficient column per listed value.
    """

    positive: np.ndarray
    negative: np.ndarray
    zero_dim: int
    positive_vectors: np.ndarray
    negative_vectors: np.ndarray
    zero_vectors: np.ndarray
    zero_tol: float = 0.0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def values(self) -> np.ndarray:
        """All values: positive (descending), zeros, negative (from -0 downwards)."""
        return np.concatenate([self.positive, np.zeros(self.zero_dim), self.negative[::-1]])

    @property
    def vectors(self) -> np.ndarray:
        return np.hstack([self.positive_vectors, self.zero_vectors, self.negative_vectors[:, ::-1]])

    def top(self, k: int) -> np.ndarray:
        return self.positive[:k]

    def multiplicities(self, rtol: float = CLUSTER_RTOL):
        """Distinct positive values with their multiplicities, descending."""
        return group_values(self.positive, rtol=rtol)


def group_values(values, rtol: float = CLUSTER_RTOL, atol: float = 0.0):
    """Group a sorted sequence into runs of (numerically) equal values.

    Returns a list of ``(value, multiplicity)``; the reported value is the
    first member of the run.
    """
    out = []
    for v in np.asarray(values, dtype=float):
        if out and abs(v - out[-1][0]) <= max(atol, rtol * max(abs(v), abs(out[-1][0]))):
            out[-1][1] += 1
        else:
            out.append([float(v), 1])
    return [(v, m) for v, m in out]


def rayleigh(forms: FormPair, v) -> float:
    """Lambda_S(v) = (v^T A v) / (v^T B v)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (forms.size,):
        raise InputError(f"coefficient vector must have shape ({forms.size},)")
    if not np.any(v):
        raise InputError("rayleigh quotient of the zero vector is undefined")
    return float(v @ forms.A @ v) / float(v @ forms.B @ v)


def _leading_index(v):
    return int(np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())[0])


def _canonical_cluster(V, B):
    """Canonical B-orthonormal basis of span(V).

    Gram-Schmidt applied to the reduced row echelon form of span(V), which
    does not depend on the solver's choice inside a degenerate eigenspace.
    Each vector's first nonzero coefficient is made positive.
    """
    m = V.shape[1]
    R = V.T.copy()
    row = 0
    tiny = 1e-8 * np.abs(R).max()
    support = np.flatnonzero(np.abs(R).max(axis=0) > tiny)
    for col in support:
        if row == m or m == 1:
            break
        p = row + int(np.argmax(np.abs(R[row:, col])))
        if abs(R[p, col]) <= 1e-8 * np.abs(R[row:]).max():
            continue
        R[[row, p]] = R[[p, row]]
        R[row] /= R[row, col]
        factors = R[:, col].copy()
        factors[row] = 0.0
        R -= np.outer(factors, R[row])
        row += 1
    # Gram-Schmidt in row order == W L^{-T} with L the Cholesky factor of W^T B W
    W = R.T
    L = np.linalg.cholesky(W.T @ B @ W)
    out = scipy.linalg.solve_triangular(L, W.T, lower=True).T
    lead = [_leading_index(out[:, j]) for j in range(m)]
    out *= np.sign(out[lead, np.arange(m)])
    order = np.argsort(lead, kind="stable")
    return out[:, order]


def _canonicalize(values, vectors, B, tol):
    """Apply the tie-breaking convention to every cluster of equal values."""
    vectors = vectors.copy()
    i = 0
    n = values.size
    while i < n:
        j = i + 1
        while j < n and abs(values[j] - values[i]) <= max(tol, CLUSTER_RTOL * abs(values[i])):
            j += 1
        vectors[:, i:j] = _canonical_cluster(vectors[:, i:j], B)
        i = j
    return vectors


def solve_lambda(
    forms: FormPair,
    zero_tol_rel: float = ZERO_TOL_REL,
    residual_tol: float = RESIDUAL_TOL,
    zero_tol_abs: float = 0.0,
) -> LambdaSpectrum:
    """Full signed spectrum of ``A x = Lambda B x``.

    Values with ``|Lambda| <= max(zero_tol_rel * max|Lambda|, zero_tol_abs)``
    form the zero class. The absolute floor lets callers who know the natural
    scale of Lambda (dimensionless Omega values, say) classify a form that is
    zero up to roundoff as zero. Raises ConvergenceError if any pair violates
    the residual contract.
    """
    A, B = forms.A, forms.B
    w, X = scipy.linalg.eigh(A, B)
    X = X / np.sqrt(np.einsum("ij,ij->j", X, B @ X))
    scale = float(np.abs(w).max(initial=0.0))
    zero_tol = max(zero_tol_rel * scale, zero_tol_abs)

    R = A @ X - (B @ X) * w
    res = np.linalg.norm(R, axis=0) / np.maximum(np.linalg.norm(B @ X, axis=0), np.finfo(float).tiny)
    if np.any(res > residual_tol):
        raise ConvergenceError(
            f"generalized eigensolve residual {res.max():.3e} exceeds {residual_tol:.1e}", residuals=res
        )

    pos = w > zero_tol
    neg = w < -zero_tol
    zer = ~(pos | neg)
    order_p = np.argsort(-w[pos], kind="stable")
    order_n = np.argsort(w[neg], kind="stable")
    pv, pV = w[pos][order_p], X[:, pos][:, order_p]
    nv, nV = w[neg][order_n], X[:, neg][:, order_n]
    zV = X[:, zer]
    pV = _canonicalize(pv, pV, B, zero_tol)
    nV = _canonicalize(nv, nV, B, zero_tol)
    if zV.shape[1]:
        zV = _canonical_cluster(zV, B)
    return LambdaSpectrum(
        positive=pv,
        negative=nv,
        zero_dim=int(zer.sum()),
        positive_vectors=pV,
        negative_vectors=nV,
        zero_vectors=zV,
        zero_tol=zero_tol,
        residuals=res,
    )


def _b_complement(V, B):
    """Orthonormal (Euclidean) basis of {x : V^T B x = 0}."""
    if V.shape[1] == 0:
        return np.eye(B.shape[0])
    return scipy.linalg.null_space((B @ V).T)


def greedy_lambda(forms: FormPair, k: int, zero_tol_rel: float = ZERO_TOL_REL) -> LambdaSpectrum:
    """Positive prefix Lambda_1..Lambda_k by repeated maximization.

    Each step maximizes the Rayleigh quotient over the B-orthogonal complement
    of the vectors already found, stopping once the supremum is not positive.
    Only ``positive`` and ``positive_vectors`` are populated.
    """
    N = forms.size
    if not 1 <= k <= N:
        raise InputError(f"k must satisfy 1 <= k <= {N}, got {k}")
    A, B = forms.A, forms.B
    vals = []
    V = np.zeros((N, 0))
    zero_tol = None
    for _ in range(k):
        P = _b_complement(V, B)
        if P.shape[1] == 0:
            break
        w, Y = scipy.linalg.eigh(P.T @ A @ P, P.T @ B @ P)
        if zero_tol is None:
            zero_tol = zero_tol_rel * max(abs(w[0]), abs(w[-1]))
        if w[-1] <= zero_tol:
            break
        v = P @ Y[:, -1]
        v /= np.sqrt(v @ B @ v)
        vals.append(w[-1])
        V = np.hstack([V, v[:, None]])
    vals = np.array(vals)
    return LambdaSpectrum(
        positive=vals,
        negative=np.zeros(0),
        zero_dim=0,
        positive_vectors=V,
        negative_vectors=np.zeros((N, 0)),
        zero_vectors=np.zeros((N, 0)),
        zero_tol=zero_tol or 0.0,
    )


def einstein_forms(basis: SpectralBasis, einstein_const: float) -> FormPair:
    """Forms for S = Ric = a*g on an L2-orthonormal eigenbasis: A = diag(a*lambda)."""
    return FormPair.from_eigenbasis(basis, np.diag(einstein_const * basis.eigenvalues))


def tensor_product_forms(f1: FormPair, f2: FormPair, provenance: str = "product") -> FormPair:
    """Forms for S1 (+) S2 on the product basis {psi_i psi'_k : (i, k) != (0, 0)}.

    Both factors must carry L2-orthonormal Laplacian eigenbases. The constant
    mode of each factor is re-inserted (its gradient vanishes, so its row of A
    is zero); the pair (0, 0) is dropped. Product functions are ordered by
    ascending Laplacian eigenvalue lambda_i + lambda'_k (stable on ties).
    """
    for f in (f1, f2):
        if f.basis is None or not f.basis.orthonormal:
            raise InputError("tensor product needs L2-orthonormal eigenbases on both factors")
    l1 = np.concatenate([[0.0], f1.basis.eigenvalues])
    l2 = np.concatenate([[0.0], f2.basis.eigenvalues])
    A1 = np.zeros((l1.size, l1.size))
    A1[1:, 1:] = f1.A
    A2 = np.zeros((l2.size, l2.size))
    A2[1:, 1:] = f2.A
    A = np.kron(A1, np.eye(l2.size)) + np.kron(np.eye(l1.size), A2)
    lam = (l1[:, None] + l2[None, :]).ravel()
    keep = np.arange(1, lam.size)
    keep = keep[np.argsort(lam[keep], kind="stable")]
    basis = SpectralBasis(
        dim_manifold=f1.basis.dim_manifold + f2.basis.dim_manifold,
        eigenvalues=lam[keep],
        provenance=provenance,
    )
    return FormPair.from_eigenbasis(basis, A[np.ix_(keep, keep)])
