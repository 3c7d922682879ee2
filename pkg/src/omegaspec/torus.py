"""Flat-torus computations for arbitrary symmetric tensor fields S.

``fourier_omega`` assembles the S-form on real Fourier modes by uniform-grid
quadrature (exact for trigonometric-polynomial fields) and solves for the
signed spectrum. ``positivity_probe`` builds the localized oscillatory family
psi * sin(m N x^1) around a point where S has a positive direction and checks
that its Gram matrix under S is positive definite, which yields a
k-dimensional subspace on which Lambda_S is positive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InputError, PreconditionError
from .forms import FormPair, LambdaSpectrum, SpectralBasis, solve_lambda

K_CAP = 2**14
N_CAP = 2**12
BAND_TOL = 1e-12


@dataclass(frozen=True)
class TorusField:
    """Symmetric 2-tensor field on R^n / (periods Z^n).

    ``samples`` has shape (n, n, G, ..., G) on the uniform grid
    x_j = periods * j / G. ``func`` (optional) evaluates S at arbitrary
    points of shape (..., n) returning (..., n, n); without it, fields are
    evaluated by trigonometric interpolation of the samples.
    """

    periods: tuple
    samples: np.ndarray
    func: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        periods = tuple(float(p) for p in self.periods)
        if not periods or any(p <= 0 for p in periods):
            raise InputError("periods must be positive")
        n = len(periods)
        S = np.asarray(self.samples, dtype=float)
        if S.ndim != 2 + n or S.shape[:2] != (n, n):
            raise InputError(f"samples must have shape ({n}, {n}, G, ...), got {S.shape}")
        G = S.shape[2]
        if any(s != G for s in S.shape[2:]):
            raise InputError("grid must have the same size along every axis")
        if G < 16 or G & (G - 1):
            raise InputError(f"grid_size must be a power of 2 >= 16, got {G}")
        scale = max(np.abs(S).max(), 1.0)
        if np.abs(S - np.swapaxes(S, 0, 1)).max() > 1e-12 * scale:
            raise InputError("S is not symmetric at every sample point")
        S.setflags(write=False)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "samples", S)

    @classmethod
    def from_function(cls, func, periods, grid_size: int = 64, name: str = "") -> "TorusField":
        pts = grid_points(periods, grid_size)
        S = np.moveaxis(np.asarray(func(pts), dtype=float), (-2, -1), (0, 1))
        return cls(tuple(periods), S, func=func, name=name)

    @property
    def dim(self) -> int:
        return len(self.periods)

    @property
    def grid_size(self) -> int:
        return self.samples.shape[2]

    @property
    def volume(self) -> float:
        return float(np.prod(self.periods))

    def coefficients(self):
        """FFT of each component, normalized so samples = sum c_k e^{i k.x}."""
        n = self.dim
        return np.fft.fftn(self.samples, axes=tuple(range(2, 2 + n))) / self.grid_size**n

    def bandwidth(self) -> int:
        """Largest |frequency index| (per axis) carrying a nonnegligible coefficient."""
        c = np.abs(self.coefficients())
        mag = c.max(axis=(0, 1))
        freqs = np.fft.fftfreq(self.grid_size, 1.0 / self.grid_size).astype(int)
        idx = np.argwhere(mag > BAND_TOL * max(mag.max(), 1e-300))
        if idx.size == 0:
            return 0
        return int(np.abs(freqs[idx]).max())

    def evaluate(self, points) -> np.ndarray:
        """S at points of shape (..., n); returns (..., n, n)."""
        points = np.asarray(points, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(np.mod(points, self.periods)), dtype=float)
        n, G = self.dim, self.grid_size
        c = self.coefficients()
        mag = np.abs(c).max(axis=(0, 1))
        keep = np.argwhere(mag > BAND_TOL * mag.max())
        freqs = np.fft.fftfreq(G, 1.0 / G)
        k = freqs[keep] * (2 * np.pi / np.array(self.periods))
        phase = np.exp(1j * (points.reshape(-1, n) @ k.T))
        coef = np.stack([c[(slice(None), slice(None)) + tuple(ix)] for ix in keep], axis=-1)
        out = np.einsum("pk,abk->pab", phase, coef).real
        return out.reshape(points.shape[:-1] + (n, n))

    def max_eigen(self):
        """Largest pointwise eigenvalue of S over the grid, its location and direction."""
        n = self.dim
        S = np.moveaxis(self.samples, (0, 1), (-2, -1)).reshape(-1, n, n)
        w, U = np.linalg.eigh(S)
        i = int(np.argmax(w[:, -1]))
        pts = grid_points(self.periods, self.grid_size).reshape(-1, n)
        return float(w[i, -1]), pts[i], U[i, :, -1]


def grid_points(periods, grid_size):
    """Uniform grid of shape (G, ..., G, n)."""
    axes = [np.arange(grid_size) * p / grid_size for p in periods]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def constant_field(matrix, periods=(2 * math.pi, 2 * math.pi), grid_size: int = 16, name: str = "") -> TorusField:
    M = np.asarray(matrix, dtype=float)
    return TorusField.from_function(lambda x: np.broadcast_to(M, x.shape[:-1] + M.shape), periods, grid_size, name)


def fourier_modes(periods, max_freq: int):
    """Real L2-normalized Fourier modes with 0 < max|m_j| <= max_freq.

    Returns (wavevectors k (M, n), kind (M,) with 0 = cos, 1 = sin, eigenvalues |k|^2),
    ordered by ascending eigenvalue.
    """
    n = len(periods)
    ms = []
    for m in itertools.product(range(-max_freq, max_freq + 1), repeat=n):
        nz = [x for x in m if x != 0]
        if nz and nz[0] > 0:  # one representative of each +-m pair
            ms.append(m)
    ms = np.array(ms, dtype=float).reshape(-1, n)
    k = ms * (2 * np.pi / np.array(periods, dtype=float))
    k = np.repeat(k, 2, axis=0)
    kind = np.tile([0, 1], len(ms))
    lam = np.sum(k**2, axis=1)
    order = np.argsort(lam, kind="stable")
    return k[order], kind[order], lam[order]


def fourier_forms(field: TorusField, max_freq: int) -> FormPair:
    """A_ij = int S(grad phi_i, grad phi_j) by grid quadrature, B = diag(lambda^2)."""
    if max_freq < 1:
        raise InputError("max_freq must be >= 1")
    G = field.grid_size
    bw = field.bandwidth()
    if 2 * bw >= G:
        raise InputError(f"field bandwidth {bw} exceeds the grid Nyquist limit {G // 2}")
    if 2 * max_freq + bw >= G:
        raise InputError(
            f"grid of size {G} cannot integrate modes up to {max_freq} against bandwidth {bw} exactly; "
            f"need grid_size > {2 * max_freq + bw}"
        )
    n = field.dim
    k, kind, lam = fourier_modes(field.periods, max_freq)
    pts = grid_points(field.periods, G).reshape(-1, n)
    theta = pts @ k.T  # (P, M)
    amp = math.sqrt(2.0 / field.volume)
    # d/dx cos = -k sin, d/dx sin = k cos
    dphi = np.where(kind == 0, -np.sin(theta), np.cos(theta)) * amp  # (P, M)
    S = np.moveaxis(field.samples, (0, 1), (-2, -1)).reshape(-1, n, n)
    w = field.volume / G**n
    A = np.zeros((len(lam), len(lam)))
    for a in range(n):
        Ga = dphi * k[:, a]
        for b in range(n):
            Gb = dphi * k[:, b]
            A += Ga.T @ (Gb * (w * S[:, a, b])[:, None])
    A = 0.5 * (A + A.T)
    basis = SpectralBasis(n, lam, provenance=f"torus:{field.name}")
    return FormPair.from_eigenbasis(basis, A)


def truncate(spec: LambdaSpectrum, top: int) -> LambdaSpectrum:
    return LambdaSpectrum(
        positive=spec.positive[:top],
        negative=spec.negative[:top],
        zero_dim=spec.zero_dim,
        positive_vectors=spec.positive_vectors[:, :top],
        negative_vectors=spec.negative_vectors[:, :top],
        zero_vectors=spec.zero_vectors,
        zero_tol=spec.zero_tol,
        residuals=spec.residuals,
    )


def fourier_omega(field: TorusField, max_freq: int, top: Optional[int] = None) -> LambdaSpectrum:
    """Signed Lambda spectrum of S on the Fourier basis; lists cut to ``top`` if given."""
    spec = solve_lambda(fourier_forms(field, max_freq))
    return spec if top is None else truncate(spec, top)


# --- localized oscillatory family -------------------------------------------------


def _bump_1d(t, N):
    """1 on |t| <= pi/N, 0 on |t| >= 2pi/N, quintic smoothstep between.

    Returns value, first and second derivative.
    """
    a = np.pi / N
    s = np.clip((2 * a - np.abs(t)) / a, 0.0, 1.0)
    val = s**3 * (6 * s**2 - 15 * s + 10)
    ds = 30 * s**2 * (s - 1) ** 2
    d2s = 60 * s * (s - 1) * (2 * s - 1)
    inside = (s > 0) & (s < 1)
    sign = -np.sign(t) / a
    d1 = np.where(inside, ds * sign, 0.0)
    d2 = np.where(inside, d2s / a**2, 0.0)
    return val, d1, d2


def _patch_rule(N, q_per_piece):
    """Composite Gauss-Legendre rule on [-2pi/N, 2pi/N] split at the bump's kinks."""
    x, w = np.polynomial.legendre.leggauss(q_per_piece)
    a = np.pi / N
    edges = [-2 * a, -a, a, 2 * a]
    pts, wts = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        pts.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        wts.append(0.5 * (hi - lo) * w)
    return np.concatenate(pts), np.concatenate(wts)


@dataclass
class ProbeFamily:
    """psi * sin(m N y^1), m = K+1..K+k, in a frame y centred at x0 with y^1 along X0."""

    field: TorusField
    k: int
    K: int
    N: int
    center: np.ndarray
    frame: np.ndarray  # columns: X0 direction first

    @property
    def frequencies(self):
        return np.arange(self.K + 1, self.K + self.k + 1)

    def _quadrature(self):
        n = self.field.dim
        q1 = max(24, 3 * (self.K + self.k) + 16)
        rules = [_patch_rule(self.N, q1)] + [_patch_rule(self.N, 24)] * (n - 1)
        Y = np.stack(np.meshgrid(*[r[0] for r in rules], indexing="ij"), -1).reshape(-1, n)
        W = np.prod(np.stack(np.meshgrid(*[r[1] for r in rules], indexing="ij"), -1).reshape(-1, n), axis=1)
        return Y, W

    def _functions(self, Y):
        """Values' gradients (P, k, n) and Laplacians (P, k) in y coordinates."""
        n = self.field.dim
        vals, d1s, d2s = zip(*[_bump_1d(Y[:, a], self.N) for a in range(n)])
        vals, d1s, d2s = np.array(vals), np.array(d1s), np.array(d2s)
        psi = np.prod(vals, axis=0)
        grad_psi = np.empty((Y.shape[0], n))
        lap_psi = np.zeros(Y.shape[0])
        for a in range(n):
            others = np.prod(np.delete(vals, a, axis=0), axis=0) if n > 1 else 1.0
            grad_psi[:, a] = d1s[a] * others
            lap_psi += d2s[a] * others
        m = self.frequencies * self.N
        ph = Y[:, :1] * m[None, :]
        u, du, d2u = np.sin(ph), np.cos(ph) * m, -np.sin(ph) * m**2
        grad = grad_psi[:, None, :] * u[:, :, None]
        grad[:, :, 0] += psi[:, None] * du
        lap = lap_psi[:, None] * u + 2 * grad_psi[:, :1] * du + psi[:, None] * d2u
        return grad, lap

    def gram_matrices(self):
        """(G, H): G_ab = int S(grad f_a, grad f_b), H_ab = int Delta f_a Delta f_b."""
        Y, W = self._quadrature()
        X = self.center + Y @ self.frame.T
        S = self.field.evaluate(X)
        Sy = np.einsum("ai,pab,bj->pij", self.frame, S, self.frame)
        grad, lap = self._functions(Y)
        G = np.einsum("p,pai,pij,pbj->ab", W, grad, Sy, grad)
        H = np.einsum("p,pa,pb->ab", W, lap, lap)
        return 0.5 * (G + G.T), 0.5 * (H + H.T)


@dataclass
class ProbeResult:
    K: int
    N: int
    gram_min_eig: float
    family: ProbeFamily
    gram: np.ndarray
    bilaplace: np.ndarray
    delta: float

    @property
    def passed(self) -> bool:
        return self.gram_min_eig > 0

    def sample_lambda(self, samples: int = 100, seed: int = 0) -> np.ndarray:
        """Lambda_S of random members of the span after subtracting their mean.

        The constant shift changes neither the gradient nor the Laplacian, so
        the quotient is a^T G a / a^T H a.
        """
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((samples, self.family.k))
        num = np.einsum("si,ij,sj->s", a, self.gram, a)
        den = np.einsum("si,ij,sj->s", a, self.bilaplace, a)
        return num / den


def _patch_fits(field, N):
    return 2 * (2 * np.pi / N) * math.sqrt(field.dim) < min(field.periods)


def choose_patch(field: TorusField, x0, X0, delta):
    """Smallest admissible N (doubling) with S(X0, X0) >= delta on the patch."""
    N = 1
    while not _patch_fits(field, N):
        N += 1
    frame = _frame(X0)
    t = np.linspace(-2 * np.pi, 2 * np.pi, 9)
    while N <= N_CAP:
        Y = np.stack(np.meshgrid(*[t / N] * field.dim, indexing="ij"), -1).reshape(-1, field.dim)
        S = field.evaluate(x0 + Y @ frame.T)
        if np.all(np.einsum("i,pij,j->p", X0, S, X0) >= delta):
            return N, frame
        N *= 2
    raise PreconditionError(f"no patch up to N={N_CAP} keeps S(X0, X0) >= {delta:g}")


def _frame(X0):
    n = len(X0)
    M = np.eye(n)
    M[:, 0] = X0
    Q, _ = np.linalg.qr(M)
    if Q[:, 0] @ X0 < 0:
        Q = -Q
    return Q


def positivity_probe(field: TorusField, k: int, K_cap: int = K_CAP) -> ProbeResult:
    """Find K (doubling from 1) for which the k-member probe family has a positive definite Gram matrix.

    Raises PreconditionError when S <= 0 at every grid point; reaching
    ``K_cap`` without success returns the last (failed) result, which is
    inconclusive rather than a counterexample.
    """
    if k < 1:
        raise InputError("k must be positive")
    smax, x0, X0 = field.max_eigen()
    if smax <= 0:
        raise PreconditionError("S <= 0 at every grid point: no positive direction to probe")
    delta = smax / 2
    N, frame = choose_patch(field, x0, X0, delta)
    K = 1
    while True:
        fam = ProbeFamily(field, k, K, N, np.asarray(x0), frame)
        G, H = fam.gram_matrices()
        lam_min = float(np.linalg.eigvalsh(G)[0])
        result = ProbeResult(K, N, lam_min, fam, G, H, delta)
        if lam_min > 0 or K >= K_cap:
            return result
        K *= 2


def probe_at(field: TorusField, k: int, K: int, N: int) -> ProbeResult:
    """Evaluate the probe family at a fixed (K, N) without searching."""
    smax, x0, X0 = field.max_eigen()
    fam = ProbeFamily(field, k, K, N, np.asarray(x0), _frame(X0))
    G, H = fam.gram_matrices()
    return ProbeResult(K, N, float(np.linalg.eigvalsh(G)[0]), fam, G, H, smax / 2)


# --- named fields -----------------------------------------------------------------


def _identity(x):
    n = x.shape[-1]
    return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n))


def _cap(x):
    f = ((1 + np.cos(x[..., 0])) * (1 + np.cos(x[..., 1])) / 4) ** 4 - 0.5
    return f[..., None, None] * np.eye(2)


def _indefinite(x):
    s = 0.5 * np.sin(x[..., 1])
    c = np.cos(x[..., 0])
    return np.stack([np.stack([c, s], -1), np.stack([s, -np.ones_like(c)], -1)], -2)


FIELDS = {
    "identity": lambda x: _identity(x),
    "neg-identity": lambda x: -_identity(x),
    "cap": _cap,
    "indefinite": _indefinite,
    "diag-split": lambda x: np.broadcast_to(np.diag([1.0, -1.0]), x.shape[:-1] + (2, 2)),
}


def named_field(name: str, grid_size: int = 64, periods=(2 * math.pi, 2 * math.pi)) -> TorusField:
    """Built-in fields on the square torus.

    identity / neg-identity: S = +-g. cap: S = (f - 1/2) g with
    f = ((1 + cos x)(1 + cos y)/4)^4, positive only near the origin.
    indefinite: S = [[cos x, sin(y)/2], [sin(y)/2, -1]]. diag-split: diag(1, -1).
    """
    if name not in FIELDS:
        raise InputError(f"unknown field {name!r}; choose from {sorted(FIELDS)}")
    return TorusField.from_function(FIELDS[name], periods, grid_size, name=name)


def field_from_csv(path, periods, name: str = "") -> TorusField:
    """Read a tabulated 2D field: CSV rows i, j, S11, S12, S22 on a G x G grid."""
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] != 5:
        raise InputError("field CSV needs columns i, j, S11, S12, S22")
    G = int(data[:, :2].max()) + 1
    S = np.zeros((2, 2, G, G))
    i, j = data[:, 0].astype(int), data[:, 1].astype(int)
    S[0, 0, i, j] = data[:, 2]
    S[0, 1, i, j] = S[1, 0, i, j] = data[:, 3]
    S[1, 1, i, j] = data[:, 4]
    return TorusField(tuple(periods), S, name=name or str(path))
