"""Randomized and catalog-driven property suites.

Each ``check_*`` function tests one relation on one input and returns a
VerifyReport; ``run_suite`` draws ``cases`` inputs from a seeded generator
(case i uses ``default_rng([seed, i])`` so any failure can be replayed on
its own) and merges the reports.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .catalog import (
    EinsteinFactor,
    factor_forms,
    product_omega,
    product_spectra_for,
    sphere_spectrum,
)
from .errors import InputError
from .forms import FormPair, SpectralBasis, solve_lambda, tensor_product_forms

# Every tolerance used by the suites lives here.
TOLERANCES = {
    "minmax": {"upper": 1e-10, "equality": 1e-9},
    "monotone": {"order": 1e-10},
    "product-law": {"equal": 1e-10},
    "orthogonality": {"B": 1e-9, "A": 1e-9, "zero": 1e-8},
    "decay-bound": {"bound": 1e-10},
    "lichnerowicz": {"analytic": 1e-12, "mesh": 0.02},
}
DEFAULT_CASES = 100
CI_CASES = 1000


@dataclass
class VerifyReport:
    suite: str
    cases: int = 0
    checks: int = 0
    failures: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    wall_time: float = 0.0
    skipped: Optional[str] = None

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, inputs, expected: str, observed) -> None:
        self.failures.append({"inputs": inputs, "expected": expected, "observed": observed})

    def merge(self, other: "VerifyReport", case: Optional[dict] = None) -> None:
        self.cases += 1 if case is not None else other.cases
        self.checks += other.checks or other.cases
        for f in other.failures:
            entry = dict(f)
            if case is not None:
                entry["inputs"] = {**case, **(f.get("inputs") or {})}
            self.failures.append(entry)

    def to_dict(self, include_time: bool = False) -> dict:
        out = {
            "suite": self.suite,
            "cases": self.cases,
            "checks": self.checks,
            "passed": self.passed,
            "failures": self.failures,
            "tolerances": self.tolerances,
        }
        if self.skipped:
            out["skipped"] = self.skipped
        if include_time:
            out["wall_time"] = self.wall_time
        return out


def _report(suite):
    return VerifyReport(suite, tolerances=dict(TOLERANCES[suite]))


def _descending(forms: FormPair):
    """All generalized eigenvalues in descending order with B-normalized vectors."""
    w, X = scipy.linalg.eigh(forms.A, forms.B)
    return w[::-1], X[:, ::-1]


def _subspace_min(forms: FormPair, Q) -> float:
    """min over span(Q) of the Rayleigh quotient."""
    return float(scipy.linalg.eigh(Q.T @ forms.A @ Q, Q.T @ forms.B @ Q, eigvals_only=True)[0])


# --- single-input checks --------------------------------------------------------------


def check_minmax(forms: FormPair, j: int, samples: int = 100, seed: int = 0) -> VerifyReport:
    """Random j-dimensional subspaces never beat Lambda_j; span(v_1..v_j) attains it."""
    N = forms.size
    if not 1 <= j <= N // 2:
        raise InputError(f"j must satisfy 1 <= j <= N/2 = {N // 2}")
    tol = TOLERANCES["minmax"]
    rep = _report("minmax")
    w, X = _descending(forms)
    target = float(w[j - 1])
    rng = np.random.default_rng(seed)
    for s in range(samples):
        Q = rng.standard_normal((N, j))
        m = _subspace_min(forms, Q)
        rep.cases += 1
        if m > target + tol["upper"]:
            rep.fail({"sample": s, "j": j}, f"subspace min <= Lambda_{j} + {tol['upper']:g}", {"min": m, "lambda": target})
    m = _subspace_min(forms, X[:, :j])
    rep.cases += 1
    if abs(m - target) > tol["equality"]:
        rep.fail({"witness": "span(v_1..v_j)", "j": j}, "min equals Lambda_j", {"min": m, "lambda": target})
    return rep


def check_monotone(base: FormPair, increment) -> VerifyReport:
    """Adding a PSD increment to A can only raise every ordered value."""
    inc = np.asarray(increment, dtype=float)
    if np.linalg.eigvalsh(0.5 * (inc + inc.T))[0] < -1e-12 * max(1.0, np.abs(inc).max()):
        raise InputError("increment must be positive semidefinite")
    tol = TOLERANCES["monotone"]["order"]
    rep = _report("monotone")
    bumped = FormPair(base.A + inc, base.B, base.basis)
    w0, _ = _descending(base)
    w1, _ = _descending(bumped)
    lo = solve_lambda(base)
    hi = solve_lambda(bumped)
    rep.cases += 1
    bad = np.flatnonzero(w1 < w0 - tol)
    if bad.size:
        k = int(bad[0])
        rep.fail({"index": k + 1}, "ordered values do not decrease", {"before": float(w0[k]), "after": float(w1[k])})
    # Lambda_{-k} read off the negative lists (missing entries count as 0)
    for k in range(max(lo.negative.size, hi.negative.size)):
        a = float(lo.negative[k]) if k < lo.negative.size else 0.0
        b = float(hi.negative[k]) if k < hi.negative.size else 0.0
        if b < a - tol:
            rep.fail({"index": -(k + 1)}, "Lambda_-k does not decrease", {"before": a, "after": b})
            break
    return rep


def check_product_law(f1: FormPair, f2: FormPair) -> VerifyReport:
    """Lambda_1 of the product form equals max(Lambda_1(f1), Lambda_1(f2), 0)."""
    tol = TOLERANCES["product-law"]["equal"]
    rep = _report("product-law")

    def lam1(f):
        s = solve_lambda(f)
        return float(s.positive[0]) if s.positive.size else 0.0

    expected = max(lam1(f1), lam1(f2))
    got = lam1(tensor_product_forms(f1, f2))
    rep.cases += 1
    if abs(got - expected) > tol * max(1.0, abs(expected)):
        rep.fail({}, "Lambda_1(product) = max of factor values", {"product": got, "max": expected})
    return rep


def check_orthogonality(forms: FormPair) -> VerifyReport:
    """Distinct values have B- and A-orthogonal vectors; zero-class vectors satisfy A v = 0."""
    tol = TOLERANCES["orthogonality"]
    rep = _report("orthogonality")
    spec = solve_lambda(forms)
    vals = np.concatenate([spec.positive, spec.negative])
    V = np.hstack([spec.positive_vectors, spec.negative_vectors])
    Z = spec.zero_vectors
    allv = np.hstack([V, Z])
    allw = np.concatenate([vals, np.zeros(Z.shape[1])])
    GB = allv.T @ forms.B @ allv
    GA = allv.T @ forms.A @ allv
    distinct = np.abs(allw[:, None] - allw[None, :]) > max(spec.zero_tol, 1e-9 * max(1.0, np.abs(allw).max(initial=0)))
    rep.cases += 1
    if np.any(np.abs(GB[distinct]) > tol["B"]):
        rep.fail({}, f"|v^T B v'| <= {tol['B']:g} for distinct values", {"max": float(np.abs(GB[distinct]).max())})
    if np.any(np.abs(GA[distinct]) > tol["A"]):
        rep.fail({}, f"|v^T A v'| <= {tol['A']:g} for distinct values", {"max": float(np.abs(GA[distinct]).max())})
    if Z.shape[1]:
        normA = np.linalg.norm(forms.A, 2)
        r = float(np.linalg.norm(forms.A @ Z, axis=0).max())
        if r > tol["zero"] * max(normA, np.finfo(float).tiny):
            rep.fail({}, "zero class: ||A v|| <= 1e-8 ||A||", {"max": r, "normA": normA})
    return rep


def check_decay_bound(forms: FormPair, s_max: float) -> VerifyReport:
    """Lambda_k <= s_max / lambda_k whenever S <= s_max g pointwise."""
    tol = TOLERANCES["decay-bound"]["bound"]
    rep = _report("decay-bound")
    lam = forms.basis.eigenvalues
    pos = solve_lambda(forms).positive
    bound = s_max / lam[: pos.size]
    rep.cases += 1
    bad = np.flatnonzero(pos > bound + tol * np.maximum(1.0, np.abs(bound)))
    if bad.size:
        k = int(bad[0])
        rep.fail({"k": k + 1, "s_max": s_max}, "Lambda_k <= s_max / lambda_k", {"lambda_k": float(pos[k]), "bound": float(bound[k])})
    return rep


@dataclass(frozen=True)
class LichnerowiczCase:
    """Data for the chain lambda_1 >= r / Omega_1 >= n/(n-1) r."""

    label: str
    dim: int
    ricci_lower: float
    lambda1: float
    omega1: float
    kind: str = "analytic"  # or "mesh"


def check_lichnerowicz(case: LichnerowiczCase) -> VerifyReport:
    rep = _report("lichnerowicz")
    r, n = case.ricci_lower, case.dim
    if not r > 0:
        rep.skipped = f"{case.label}: Ricci lower bound r = {r:g} is not positive"
        return rep
    tol = TOLERANCES["lichnerowicz"]["mesh" if case.kind == "mesh" else "analytic"]
    mid = r / case.omega1
    low = n / (n - 1) * r
    rep.cases += 1
    inputs = {"label": case.label, "dim": n, "r": r}
    if case.lambda1 < mid * (1 - tol):
        rep.fail(inputs, "lambda_1 >= r / Omega_1", {"lambda1": case.lambda1, "r_over_omega": mid})
    if mid < low * (1 - tol):
        rep.fail(inputs, "r / Omega_1 >= n r / (n - 1)", {"r_over_omega": mid, "bound": low})
    return rep


def lichnerowicz_einstein(factor: EinsteinFactor) -> LichnerowiczCase:
    lam1 = factor.eigenvalues[1]
    return LichnerowiczCase(factor.label, factor.dim, factor.einstein_const, lam1, factor.einstein_const / lam1)


def lichnerowicz_product(n: int, m: int, radius1: float, radius2: float = 1.0) -> LichnerowiczCase:
    """S^n(radius1) x S^m(radius2): Ric >= min(a1, a2) G, Omega_1 from the product formula."""
    omega = product_spectra_for(
        lambda L: sphere_spectrum(n, radius1, L), lambda L: sphere_spectrum(m, radius2, L), top=1
    )[0][0].value
    a1, a2 = (n - 1) / radius1**2, (m - 1) / radius2**2
    lam1 = min(n / radius1**2, m / radius2**2)
    return LichnerowiczCase(f"S^{n}({radius1:g})xS^{m}({radius2:g})", n + m, min(a1, a2), lam1, omega)


def lichnerowicz_mesh(result, label: str = "mesh") -> LichnerowiczCase:
    """Mesh case: r is the smallest vertex curvature, lambda_1 and Omega_1 from the pipeline."""
    return LichnerowiczCase(label, 2, result.min_curvature, result.lambda1, result.omega1, kind="mesh")


# --- random inputs ----------------------------------------------------------------------


def random_spd(rng, N):
    G = rng.standard_normal((N, N))
    return G @ G.T + 0.5 * np.eye(N)


def random_forms(rng, N, rank=None, repeat=False) -> FormPair:
    """Random symmetric A (optionally low rank or with repeated values) and SPD B."""
    B = random_spd(rng, N)
    if rank is None and not repeat:
        G = rng.standard_normal((N, N))
        A = 0.5 * (G + G.T)
    else:
        # A = B^{1/2} Q diag(d) Q^T B^{1/2} controls the generalized spectrum d exactly
        d = rng.standard_normal(N)
        if repeat:
            d[: N // 2] = d[0]
        if rank is not None:
            d[rank:] = 0.0
        Q, _ = np.linalg.qr(rng.standard_normal((N, N)))
        R = scipy.linalg.sqrtm(B).real
        A = R @ Q @ np.diag(d) @ Q.T @ R
        A = 0.5 * (A + A.T)
    return FormPair(A, B)


def random_eigen_forms(rng, N, sign=None) -> FormPair:
    """Forms on an orthonormal eigenbasis with random ascending eigenvalues."""
    lam = np.sort(rng.uniform(0.5, 10.0, N))
    G = rng.standard_normal((N, N))
    A = 0.5 * (G + G.T)
    if sign == "flat":
        A = np.zeros((N, N))
    elif sign == "negative":
        A = -(G @ G.T)
    return FormPair.from_eigenbasis(SpectralBasis(2, lam, provenance="random"), A)


def _trig_field(rng, bandwidth=2):
    """Random symmetric 2x2 trigonometric-polynomial field on the (2pi)^2 torus."""
    ks = [(a, b) for a in range(-bandwidth, bandwidth + 1) for b in range(-bandwidth, bandwidth + 1)]
    coef = {(i, j): rng.standard_normal((len(ks), 2)) / (1 + np.arange(len(ks)))[:, None] for i, j in [(0, 0), (0, 1), (1, 1)]}
    shift = rng.uniform(-1.0, 1.5)
    kv = np.array(ks, dtype=float)

    def entry(x, c):
        th = x @ kv.T
        return np.cos(th) @ c[:, 0] + np.sin(th) @ c[:, 1]

    def S(x):
        x = np.asarray(x, dtype=float)
        s11 = entry(x, coef[(0, 0)]) + shift
        s12 = entry(x, coef[(0, 1)])
        s22 = entry(x, coef[(1, 1)]) + shift
        return np.stack([np.stack([s11, s12], -1), np.stack([s12, s22], -1)], -2)

    return S


def pointwise_sup(S, periods, grid=64, zoom_steps=14) -> float:
    """Largest pointwise eigenvalue of a smooth field.

    Grid scan followed by repeated local zooms (a 21^n stencil shrunk by 4
    each step) around the three best grid points.
    """
    n = len(periods)
    h = np.asarray(periods, dtype=float) / grid
    axes = [np.arange(grid) * hp for hp in h]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, n)
    top = np.linalg.eigvalsh(S(pts))[:, -1]
    best = float(top.max())
    offs = np.stack(np.meshgrid(*[np.linspace(-1, 1, 21)] * n, indexing="ij"), -1).reshape(-1, n)
    for i in np.argsort(-top)[:3]:
        x, step = pts[i], h.copy()
        for _ in range(zoom_steps):
            cand = x + offs * step
            vals = np.linalg.eigvalsh(S(cand))[:, -1]
            j = int(np.argmax(vals))
            x, step = cand[j], step / 4
            best = max(best, float(vals[j]))
    return best


# --- suites -----------------------------------------------------------------------------


def _case_minmax(rng):
    N = int(rng.integers(4, 13))
    j = int(rng.integers(1, min(4, N // 2) + 1))
    forms = random_forms(rng, N)
    return {"N": N, "j": j}, check_minmax(forms, j, samples=100, seed=int(rng.integers(2**31)))


def _case_monotone(rng):
    N = int(rng.integers(3, 13))
    forms = random_forms(rng, N)
    r = int(rng.integers(0, N + 1))
    G = rng.standard_normal((r, N))
    return {"N": N, "rank": r}, check_monotone(forms, G.T @ G)


def _case_product(rng):
    n1, n2 = int(rng.integers(2, 9)), int(rng.integers(2, 9))
    kinds = [None, None, "flat", "negative"]
    s1, s2 = kinds[int(rng.integers(4))], kinds[int(rng.integers(4))]
    return {"N1": n1, "N2": n2, "kind1": s1, "kind2": s2}, check_product_law(
        random_eigen_forms(rng, n1, s1), random_eigen_forms(rng, n2, s2)
    )


def _case_orthogonality(rng):
    N = int(rng.integers(3, 13))
    mode = int(rng.integers(3))
    rank = int(rng.integers(1, N)) if mode == 1 else None
    forms = random_forms(rng, N, rank=rank, repeat=(mode == 2))
    return {"N": N, "rank": rank, "repeat": mode == 2}, check_orthogonality(forms)


def _case_decay(rng):
    from .torus import TorusField, fourier_forms

    S = _trig_field(rng)
    periods = (2 * math.pi, 2 * math.pi)
    field = TorusField.from_function(S, periods, grid_size=16)
    max_freq = int(rng.integers(1, 4))
    forms = fourier_forms(field, max_freq)
    return {"max_freq": max_freq}, check_decay_bound(forms, pointwise_sup(S, periods))


def _case_lichnerowicz(rng):
    kind = int(rng.integers(2))
    if kind == 0:
        n = int(rng.integers(2, 6))
        rho = float(rng.uniform(0.3, 3.0))
        case = lichnerowicz_einstein(sphere_spectrum(n, rho, 2))
        inputs = {"sphere": n, "radius": rho}
    else:
        n = int(rng.integers(2, 5))
        m = int(rng.integers(2, n + 1))
        r1 = float(rng.uniform(1.0, 4.0))
        case = lichnerowicz_product(n, m, r1)
        inputs = {"product": [n, m], "radius1": r1}
    return inputs, check_lichnerowicz(case)


SUITES = {
    "minmax": _case_minmax,
    "monotone": _case_monotone,
    "product-law": _case_product,
    "orthogonality": _case_orthogonality,
    "decay-bound": _case_decay,
    "lichnerowicz": _case_lichnerowicz,
}


def _fixed_cases(name, mesh_cases):
    """Catalog and mesh inputs checked in addition to the random draws."""
    if name == "product-law":
        s2 = factor_forms(sphere_spectrum(2, 1.0, 4))
        flat = FormPair.from_eigenbasis(SpectralBasis(2, np.array([1.0, 1.0, 1.0, 1.0, 2.0]), "flat"), np.zeros((5, 5)))
        yield {"fixed": "S2xS2"}, check_product_law(s2, s2)
        yield {"fixed": "flat x S2"}, check_product_law(flat, s2)
    elif name == "lichnerowicz":
        yield {"fixed": "S3"}, check_lichnerowicz(lichnerowicz_einstein(sphere_spectrum(3, 1.0, 2)))
        yield {"fixed": "S2(10)xS2(1)"}, check_lichnerowicz(lichnerowicz_product(2, 2, 10.0))
        if mesh_cases:
            from .mesh import ellipsoid, icosphere, omega_spectrum

            for label, mesh in [("icosphere-3", icosphere(3)), ("ellipsoid-2-1.5-1", ellipsoid((2.0, 1.5, 1.0), 3))]:
                res = omega_spectrum(mesh, basis_size=60, top=1)
                yield {"mesh": label}, check_lichnerowicz(lichnerowicz_mesh(res, label))


def run_suite(name: str, cases: int = DEFAULT_CASES, seed: int = 0, mesh_cases: bool = True) -> VerifyReport:
    """Run ``cases`` randomized cases of a named suite.

    Product-law and Lichnerowicz also run fixed catalog inputs; the latter
    checks two meshes (icosphere and a triaxial ellipsoid) unless
    ``mesh_cases`` is False.
    """
    if name not in SUITES:
        raise InputError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    if cases < 1:
        raise InputError("cases must be positive")
    t0 = time.perf_counter()
    rep = _report(name)
    for i in range(cases):
        rng = np.random.default_rng([seed, i])
        inputs, sub = SUITES[name](rng)
        rep.merge(sub, {"seed": seed, "case": i, **inputs})
    for inputs, sub in _fixed_cases(name, mesh_cases):
        rep.merge(sub, inputs)
    rep.wall_time = time.perf_counter() - t0
    return rep


def run_all(cases: int = DEFAULT_CASES, seed: int = 0) -> list:
    return [run_suite(name, cases, seed) for name in SUITES]


__all__ = [
    "TOLERANCES",
    "VerifyReport",
    "LichnerowiczCase",
    "check_minmax",
    "check_monotone",
    "check_product_law",
    "check_orthogonality",
    "check_decay_bound",
    "check_lichnerowicz",
    "lichnerowicz_einstein",
    "lichnerowicz_product",
    "lichnerowicz_mesh",
    "run_suite",
    "run_all",
    "SUITES",
]
