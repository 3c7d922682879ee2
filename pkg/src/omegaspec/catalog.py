"""Closed-form spectra and Omega values for a catalog of closed manifolds.

Covers round spheres, flat tori, products of Einstein manifolds, the
bi-invariant family on U(n) and left-invariant metrics on Heisenberg
nilmanifolds. Forms for cross-validation against ``forms.solve_lambda`` are
assembled from the same spectra in ``factor_forms``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, InsufficientSpectrumError, PreconditionError
from .forms import FormPair, SpectralBasis, einstein_forms

VALUE_RTOL = 1e-12


@dataclass(frozen=True)
class EinsteinFactor:
    """Einstein manifold (Ric = a g) described by its truncated spectrum.

    The spectrum is complete up to its largest listed eigenvalue.
    """

    einstein_const: float
    eigenvalues: tuple
    multiplicities: tuple
    dim: int
    label: str = ""

    def __post_init__(self):
        ev = tuple(float(x) for x in self.eigenvalues)
        mult = tuple(int(m) for m in self.multiplicities)
        if len(ev) != len(mult) or not ev:
            raise InputError("eigenvalues and multiplicities must be nonempty and of equal length")
        if ev[0] != 0.0 or mult[0] != 1:
            raise InputError("spectrum must start with the simple eigenvalue 0")
        if any(b <= a for a, b in zip(ev, ev[1:])):
            raise InputError("eigenvalues must be distinct and ascending")
        if any(m < 1 for m in mult):
            raise InputError("multiplicities must be positive")
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "multiplicities", mult)

    @property
    def nonzero_count(self) -> int:
        return sum(self.multiplicities[1:])

    @property
    def cutoff(self) -> float:
        """Largest eigenvalue up to which the spectrum is known completely."""
        return self.eigenvalues[-1]

    def expanded(self) -> np.ndarray:
        """Nonzero eigenvalues repeated by multiplicity, ascending."""
        return np.repeat(np.array(self.eigenvalues[1:]), self.multiplicities[1:])

    def scaled(self, factor: float) -> "EinsteinFactor":
        """Spectrum of the metric factor**2 * g."""
        s = 1.0 / factor**2
        return EinsteinFactor(
            einstein_const=self.einstein_const * s,
            eigenvalues=tuple(x * s for x in self.eigenvalues),
            multiplicities=self.multiplicities,
            dim=self.dim,
            label=f"{self.label}*{factor:g}" if self.label else "",
        )


@dataclass(frozen=True)
class HeisenbergMetric:
    """Left-invariant metric on a Heisenberg nilmanifold of dimension 2n+1.

    ``d`` are the structure constants of an orthonormal basis of the
    complement of the center; ``g_last`` is the squared length of Z.
    """

    d: tuple
    g_last: float

    def __post_init__(self):
        d = tuple(float(x) for x in self.d)
        if not d or any(x <= 0 for x in d):
            raise InputError("all d_i must be positive")
        if not self.g_last > 0:
            raise InputError("g_last must be positive")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def power_sums(self):
        """(p, q, r) = (sum d^2, sum d^4, sum d^6)."""
        d = np.array(self.d)
        return float(np.sum(d**2)), float(np.sum(d**4)), float(np.sum(d**6))


@dataclass(frozen=True)
class OmegaValue:
    value: float
    multiplicity: Optional[int]
    witness: str = ""

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InputError("Omega value must be finite")
        if self.multiplicity is not None and self.multiplicity < 1:
            raise InputError("multiplicity must be positive when resolved")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "multiplicity": self.multiplicity if self.multiplicity is not None else "unresolved",
            "witness": self.witness,
        }


def sphere_spectrum(n: int, radius: float = 1.0, max_level: int = 10) -> EinsteinFactor:
    """Spectrum of the round sphere S^n of the given radius, levels 0..max_level."""
    if n < 1:
        raise InputError(f"sphere dimension must be >= 1, got {n}")
    if not radius > 0:
        raise InputError("radius must be positive")
    if max_level < 0:
        raise InputError("max_level must be nonnegative")
    ev, mult = [], []
    for k in range(max_level + 1):
        ev.append(k * (k + n - 1) / radius**2)
        lower = math.comb(n + k - 2, n) if n + k - 2 >= 0 else 0
        mult.append(math.comb(n + k, n) - lower)
    return EinsteinFactor((n - 1) / radius**2, tuple(ev), tuple(mult), n, f"S^{n}({radius:g})")


def torus_spectrum(periods: Sequence[float], max_norm: float) -> EinsteinFactor:
    """Flat torus R^n / (prod periods_j Z) eigenvalues up to ``max_norm``."""
    periods = np.asarray(periods, dtype=float)
    if periods.ndim != 1 or periods.size == 0 or np.any(periods <= 0):
        raise InputError("periods must be a nonempty list of positive reals")
    if max_norm < 0:
        raise InputError("max_norm must be nonnegative")
    freq = 2 * np.pi / periods
    bounds = [int(math.floor(math.sqrt(max_norm) / f)) for f in freq]
    grids = np.meshgrid(*[np.arange(-b, b + 1) for b in bounds], indexing="ij")
    m = np.stack([g.ravel() for g in grids], axis=1)
    lam = np.sum((m * freq) ** 2, axis=1)
    lam = np.sort(lam[lam <= max_norm * (1 + 1e-12)])
    ev, mult = [], []
    for x in lam:
        if ev and abs(x - ev[-1]) <= 1e-12 * max(x, 1.0):
            mult[-1] += 1
        else:
            ev.append(float(x))
            mult.append(1)
    label = "T^%d(%s)" % (periods.size, ",".join(f"{p:g}" for p in periods))
    return EinsteinFactor(0.0, tuple(ev), tuple(mult), int(periods.size), label)


def factor_basis(factor: EinsteinFactor) -> SpectralBasis:
    return SpectralBasis(factor.dim, factor.expanded(), provenance=factor.label)


def factor_forms(factor: EinsteinFactor) -> FormPair:
    """Forms for S = Ric on the factor's eigenbasis: A = diag(a lambda), B = diag(lambda^2)."""
    return einstein_forms(factor_basis(factor), factor.einstein_const)


def _group(pairs):
    """Merge (value, multiplicity, witness) triples with equal values, descending."""
    pairs = sorted(pairs, key=lambda t: -t[0])
    out = []
    for val, m, w in pairs:
        if out and abs(val - out[-1][0]) <= VALUE_RTOL * max(abs(val), abs(out[-1][0])):
            out[-1][1] += m
            out[-1][2].append(w)
        else:
            out.append([val, m, [w]])
    return out


def catalog_lambda_of_g(factor: EinsteinFactor, top: int) -> list:
    """Lambda_k(g) = 1/lambda_k: the ``top`` largest distinct values with multiplicities."""
    if top < 1:
        raise InputError("top must be positive")
    if len(factor.eigenvalues) - 1 < top:
        raise InsufficientSpectrumError(
            f"{factor.label or 'factor'} lists {len(factor.eigenvalues) - 1} nonzero levels, {top} requested"
        )
    return [
        OmegaValue(1.0 / lam, m, f"lambda={lam:.12g}")
        for lam, m in zip(factor.eigenvalues[1 : top + 1], factor.multiplicities[1 : top + 1])
    ]


def einstein_omega(factor: EinsteinFactor, top: int) -> list:
    """Omega_k = a / lambda_k for an Einstein manifold; empty when a <= 0."""
    if factor.einstein_const <= 0:
        return []
    return [
        OmegaValue(factor.einstein_const * v.value, v.multiplicity, v.witness)
        for v in catalog_lambda_of_g(factor, top)
    ]


def _pair_value(a1, a2, lam, mu):
    return (a1 * lam + a2 * mu) / (lam + mu) ** 2


def product_omega(f1: EinsteinFactor, f2: EinsteinFactor, top: int) -> list:
    """Largest ``top`` distinct Omega values of the Riemannian product f1 x f2.

    The values are (a1 lam + a2 mu) / (lam + mu)^2 over eigenvalue pairs other
    than (0, 0), kept when positive. Pairs outside the listed spectra satisfy
    lam + mu > T = min(cutoff1, cutoff2) and hence have value below
    max(a1, |a2|) / T; the result is returned only when that bound certifies it.
    """
    a1, a2 = f1.einstein_const, f2.einstein_const
    if not a1 > 0:
        raise PreconditionError("product formula requires a1 > 0")
    if top < 1:
        raise InputError("top must be positive")
    entries = []
    for (lam, m1), (mu, m2) in itertools.product(
        zip(f1.eigenvalues, f1.multiplicities), zip(f2.eigenvalues, f2.multiplicities)
    ):
        if lam == 0.0 and mu == 0.0:
            continue
        val = _pair_value(a1, a2, lam, mu)
        if val > 0:
            entries.append((val, m1 * m2, (lam, mu)))
    grouped = _group(entries)
    T = min(f1.cutoff, f2.cutoff)
    bound = max(a1, abs(a2)) / T if T > 0 else math.inf
    if len(grouped) < top or grouped[top - 1][0] < bound:
        raise InsufficientSpectrumError(
            f"spectra up to lambda+mu={T:g} cannot certify {top} values "
            f"(tail bound {bound:.6g})"
        )
    return [
        OmegaValue(val, m, "pairs " + "; ".join(f"({l:.12g}, {u:.12g})" for l, u in ws))
        for val, m, ws in grouped[:top]
    ]


def product_spectra_for(f1_builder, f2_builder, top: int, start: int = 4, max_level: int = 256):
    """Grow two truncated spectra until ``product_omega`` can certify ``top`` values.

    ``f*_builder(level)`` returns an EinsteinFactor truncated at ``level``.
    """
    level = start
    while True:
        f1, f2 = f1_builder(level), f2_builder(level)
        try:
            return product_omega(f1, f2, top), (f1, f2)
        except InsufficientSpectrumError:
            if level >= max_level:
                raise
            level *= 2


def heisenberg_omega_ck(metric: HeisenbergMetric, c: int, k: Sequence[int]) -> float:
    """Omega(c, k, g) for the Hermite component (c, k) of a Heisenberg manifold."""
    if c == 0:
        raise InputError("c must be a nonzero integer")
    k = np.asarray(k, dtype=float)
    if k.shape != (metric.n,) or np.any(k < 0):
        raise InputError(f"k must be {metric.n} nonnegative integers")
    d = np.array(metric.d)
    g = metric.g_last
    ac = abs(c)
    num = 2 * np.pi**2 * c**2 * np.sum(d**4) - np.sum(np.pi * ac * d**6 * g * (2 * k + 1))
    den = (4 * np.pi**2 * c**2 / g + np.sum(2 * np.pi * ac * d**2 * (2 * k + 1))) ** 2
    return float(num / den)


def heisenberg_maximizer(metric: HeisenbergMetric) -> float:
    """Real maximizer x* of c -> Omega(c, 0, g) over c > 0."""
    p, q, r = metric.power_sums
    s = metric.g_last / (2 * np.pi)
    return s * (r / q) * (math.sqrt(9 / 16 + p * q / (2 * r)) + 3 / 4)


def heisenberg_omega1(metric: HeisenbergMetric) -> OmegaValue:
    """Omega_1 of a Heisenberg manifold.

    c -> Omega(c, 0, g) increases on (0, x*] and decreases afterwards, so the
    integer maximum sits at floor(x*) or ceil(x*); one extra neighbor on each
    side absorbs rounding at the boundary.
    """
    xs = heisenberg_maximizer(metric)
    lo = max(1, math.floor(xs) - 1)
    hi = max(1, math.ceil(xs) + 1)
    zero = (0,) * metric.n
    best, arg = 0.0, None
    for c in range(lo, hi + 1):
        val = heisenberg_omega_ck(metric, c, zero)
        if val > best:
            best, arg = val, c
    witness = f"c={arg}, k=0" if arg is not None else "no positive component"
    return OmegaValue(best, None, witness)


def _heisenberg_bound(X: float) -> float:
    return 0.25 * (X - 0.75) / ((X - 0.25) * (X + 0.75) ** 2)


def heisenberg_sup(n: int) -> float:
    """Supremum of Omega_1 over all left-invariant metrics on a (2n+1)-dim Heisenberg manifold."""
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    if n == 1:
        return _heisenberg_bound(math.sqrt(17) / 4)
    return _heisenberg_bound(5 / 4)


def heisenberg_sup_metric(n: int, c: int = 1, tail: float = 0.0) -> HeisenbergMetric:
    """Metric whose Omega(c, 0, g) attains (n=1) or approaches (n>=2) the supremum.

    For n >= 2, d = (1, 1, tail, ..., tail); the supremum is attained at
    tail = 0 and approached as tail -> 0. ``g_last`` is chosen so that the
    real maximizer equals the integer ``c``.
    """
    if n < 1:
        raise InputError("n must be positive")
    d = (1.0,) if n == 1 else (1.0, 1.0) + (tail,) * (n - 2)
    if n > 2 and tail <= 0:
        raise InputError("tail must be positive for n > 2")
    unit = HeisenbergMetric(d, 1.0)
    return HeisenbergMetric(d, c / heisenberg_maximizer(unit))


def unitary_omega1(n: int, r: float) -> float:
    """Omega_1 of U(n) with the bi-invariant metric induced by g_1(r) + g_0."""
    if n < 2:
        raise InputError("unitary family needs n >= 2")
    if not r > 0:
        raise InputError("r must be positive")
    first = 0.5 * n**2 * (n**2 - 1) / (n**2 + n / r**2 - 1) ** 2
    return max(first, 0.25)


def bochner_ceiling(dim: int) -> float:
    """Universal upper bound (n-1)/n for Omega_1 of an n-manifold."""
    return (dim - 1) / dim
