import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omegaspec.errors import ConvergenceError, InputError
from omegaspec.forms import (
    FormPair,
    SpectralBasis,
    einstein_forms,
    greedy_lambda,
    group_values,
    rayleigh,
    solve_lambda,
    tensor_product_forms,
)


def jacobi_eigenvalues(M, sweeps=100):
    """Cyclic Jacobi rotations on a symmetric matrix, written out by hand."""
    M = [list(map(float, row)) for row in M]
    n = len(M)
    for _ in range(sweeps):
        off = sum(M[i][j] ** 2 for i in range(n) for j in range(n) if i != j)
        if off < 1e-30:
            break
        for p in range(n):
            for q in range(p + 1, n):
                if abs(M[p][q]) < 1e-300:
                    continue
                theta = (M[q][q] - M[p][p]) / (2 * M[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    mkp, mkq = M[k][p], M[k][q]
                    M[k][p] = c * mkp - s * mkq
                    M[k][q] = s * mkp + c * mkq
                for k in range(n):
                    mpk, mqk = M[p][k], M[q][k]
                    M[p][k] = c * mpk - s * mqk
                    M[q][k] = s * mpk + c * mqk
    return sorted(M[i][i] for i in range(n))


def cholesky_reduce(A, B):
    """L^{-1} A L^{-T} with B = L L^T (hand-rolled Cholesky and triangular solves)."""
    n = len(B)
    L = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            s = B[i][j] - sum(L[i][k] * L[j][k] for k in range(j))
            L[i][j] = math.sqrt(s) if i == j else s / L[j][j]

    def lsolve(col):
        x = [0.0] * n
        for i in range(n):
            x[i] = (col[i] - sum(L[i][k] * x[k] for k in range(i))) / L[i][i]
        return x

    Y = [lsolve([A[r][c] for r in range(n)]) for c in range(n)]  # columns of L^-1 A
    Yt = [[Y[c][r] for c in range(n)] for r in range(n)]  # L^-1 A as rows
    Z = [lsolve(Yt[r]) for r in range(n)]  # rows of (L^-1 A) L^-T
    return Z


def random_pair(rng, n):
    G = rng.standard_normal((n, n))
    A = 0.5 * (G + G.T)
    H = rng.standard_normal((n, n))
    B = H @ H.T + n * np.eye(n)
    return A, B


def diag_example():
    basis = SpectralBasis(2, np.array([2.0, 6.0, 12.0]), provenance="S2")
    return FormPair.from_eigenbasis(basis, np.diag([2.0, 6.0, 12.0]))


# --- examples ---------------------------------------------------------------------------


def test_identity_forms_give_all_ones():
    rng = np.random.default_rng(1)
    _, B = random_pair(rng, 6)
    spec = solve_lambda(FormPair(B, B))
    assert np.allclose(spec.positive, 1.0, atol=1e-12)
    assert spec.zero_dim == 0 and spec.negative.size == 0


def test_metric_form_gives_reciprocal_eigenvalues():
    spec = solve_lambda(diag_example())
    assert np.allclose(spec.positive, [1 / 2, 1 / 6, 1 / 12], rtol=0, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_solve_matches_jacobi_oracle(seed):
    rng = np.random.default_rng(seed)
    A, B = random_pair(rng, 5)
    spec = solve_lambda(FormPair(A, B))
    oracle = jacobi_eigenvalues(cholesky_reduce(A.tolist(), B.tolist()))
    got = sorted(np.concatenate([spec.positive, spec.negative, np.zeros(spec.zero_dim)]))
    assert np.allclose(got, oracle, rtol=0, atol=1e-10)


def test_rayleigh_examples():
    forms = FormPair(np.diag([2.0, 6.0]), np.diag([4.0, 36.0]))
    assert rayleigh(forms, [1.0, 0.0]) == pytest.approx(0.5, abs=1e-15)
    spec = solve_lambda(diag_example())
    assert rayleigh(diag_example(), spec.positive_vectors[:, 0]) == pytest.approx(spec.positive[0], abs=1e-9)


def test_rayleigh_rejects_zero_and_bad_shape():
    forms = diag_example()
    with pytest.raises(InputError):
        rayleigh(forms, np.zeros(3))
    with pytest.raises(InputError):
        rayleigh(forms, np.ones(2))


def test_random_vectors_stay_below_top_value():
    forms = diag_example()
    rng = np.random.default_rng(0)
    for v in rng.standard_normal((200, 3)):
        assert rayleigh(forms, v) <= 0.5 + 1e-12


def test_greedy_examples():
    forms = diag_example()
    g = greedy_lambda(forms, 3)
    assert np.allclose(g.positive, [1 / 2, 1 / 6, 1 / 12], atol=1e-14)
    neg = FormPair(-np.diag([1.0, 2.0, 3.0]), np.eye(3))
    assert greedy_lambda(neg, 3).positive.size == 0
    one = FormPair(np.diag([3.0, -1.0, -2.0]), np.diag([2.0, 1.0, 1.0]))
    assert greedy_lambda(one, 1).positive == pytest.approx([1.5])
    assert greedy_lambda(one, 3).positive.size == 1
    with pytest.raises(InputError):
        greedy_lambda(forms, 0)
    with pytest.raises(InputError):
        greedy_lambda(forms, 4)


def test_validation_errors():
    with pytest.raises(InputError):
        FormPair(np.array([[1.0, 2.0], [0.0, 1.0]]), np.eye(2))
    with pytest.raises(InputError):
        FormPair(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(InputError):
        FormPair(np.eye(2), np.eye(3))
    with pytest.raises(InputError):
        SpectralBasis(2, np.array([0.0, 1.0]))
    with pytest.raises(InputError):
        SpectralBasis(2, np.array([2.0, 1.0]))
    with pytest.raises(InputError):
        SpectralBasis(2, np.array([1.0]))


def test_forms_are_read_only():
    forms = diag_example()
    with pytest.raises(ValueError):
        forms.A[0, 0] = 5.0


def test_residual_contract_enforced():
    A, B = random_pair(np.random.default_rng(3), 6)
    with pytest.raises(ConvergenceError):
        solve_lambda(FormPair(A, B), residual_tol=1e-30)


def test_tie_breaking_is_canonical():
    # one degenerate cluster: the vectors must not depend on how the space is presented
    spec = solve_lambda(FormPair(np.eye(4), np.eye(4)))
    assert np.allclose(spec.positive_vectors, np.eye(4), atol=1e-12)
    rng = np.random.default_rng(7)
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    D = np.diag([2.0, 2.0, 2.0, -1.0])
    A = Q @ D @ Q.T
    s1 = solve_lambda(FormPair(0.5 * (A + A.T), np.eye(4)))
    s2 = solve_lambda(FormPair(0.5 * (A + A.T), np.eye(4)))
    assert np.array_equal(s1.positive_vectors, s2.positive_vectors)
    lead = [int(np.flatnonzero(np.abs(v) > 1e-12)[0]) for v in s1.positive_vectors.T]
    assert lead == sorted(lead)
    assert all(v[i] > 0 for v, i in zip(s1.positive_vectors.T, lead))


def test_zero_floor_classifies_roundoff_as_zero():
    basis = SpectralBasis(2, np.array([1.0, 2.0, 3.0]))
    forms = FormPair.from_eigenbasis(basis, 1e-17 * np.diag([1.0, -1.0, 1.0]))
    assert solve_lambda(forms).positive.size == 2
    s = solve_lambda(forms, zero_tol_abs=1e-10)
    assert s.positive.size == 0 and s.zero_dim == 3


def test_group_values():
    assert group_values([0.5, 0.5, 0.25, 0.1]) == [(0.5, 2), (0.25, 1), (0.1, 1)]


def test_einstein_and_product_forms():
    b = SpectralBasis(2, np.array([2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0]))
    f = einstein_forms(b, 1.0)
    prod = tensor_product_forms(f, f)
    assert prod.size == 9 * 9 - 1
    assert np.all(np.diff(prod.basis.eigenvalues) >= 0)
    spec = solve_lambda(prod)
    assert spec.positive[0] == pytest.approx(0.5, abs=1e-12)
    assert spec.multiplicities()[0] == (pytest.approx(0.5), 6)
    with pytest.raises(InputError):
        tensor_product_forms(FormPair(np.eye(2), np.eye(2)), f)


# --- properties -------------------------------------------------------------------------

sizes = st.integers(min_value=2, max_value=12)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(sizes, seeds, st.integers(min_value=1, max_value=12))
def test_greedy_equals_eigen(n, seed, k):
    k = min(k, n)
    A, B = random_pair(np.random.default_rng(seed), n)
    forms = FormPair(A, B)
    spec = solve_lambda(forms)
    g = greedy_lambda(forms, k)
    m = min(k, spec.positive.size)
    assert g.positive.size == m
    assert np.allclose(g.positive, spec.positive[:m], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(sizes, seeds)
def test_spectrum_structure(n, seed):
    rng = np.random.default_rng(seed)
    A, B = random_pair(rng, n)
    # add a kernel to exercise the zero class
    r = int(rng.integers(0, n))
    if r:
        P = rng.standard_normal((n, r))
        proj = np.eye(n) - P @ np.linalg.pinv(P)
        A = proj @ A @ proj
    forms = FormPair(0.5 * (A + A.T), B)
    spec = solve_lambda(forms)
    assert spec.positive.size + spec.negative.size + spec.zero_dim == n
    assert np.all(spec.positive > 0) and np.all(np.diff(spec.positive) <= 0)
    assert np.all(spec.negative < 0) and np.all(np.diff(spec.negative) >= 0)
    V = spec.vectors
    G = V.T @ B @ V
    assert np.allclose(np.diag(G), 1.0, atol=1e-9)
    vals = spec.values
    distinct = np.abs(vals[:, None] - vals[None, :]) > 1e-8
    assert np.all(np.abs(G[distinct]) <= 1e-9)
    assert np.all(np.abs((V.T @ forms.A @ V)[distinct]) <= 1e-9)
    if spec.zero_dim:
        assert np.linalg.norm(forms.A @ spec.zero_vectors, axis=0).max() <= 1e-8 * np.linalg.norm(forms.A, 2)


@settings(max_examples=50, deadline=None)
@given(sizes, seeds, st.floats(min_value=-1e3, max_value=1e3).filter(lambda c: abs(c) > 1e-3))
def test_rayleigh_scale_invariant(n, seed, c):
    A, B = random_pair(np.random.default_rng(seed), n)
    forms = FormPair(A, B)
    v = np.random.default_rng(seed + 1).standard_normal(n)
    assert rayleigh(forms, c * v) == pytest.approx(rayleigh(forms, v), rel=1e-12, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(sizes, seeds, st.integers(min_value=0, max_value=12))
def test_monotone_under_psd_increment(n, seed, rank):
    rng = np.random.default_rng(seed)
    A, B = random_pair(rng, n)
    G = rng.standard_normal((rank, n))
    lo = solve_lambda(FormPair(A, B)).values
    hi = solve_lambda(FormPair(A + G.T @ G, B)).values
    assert np.all(hi >= lo - 1e-10)


@settings(max_examples=40, deadline=None)
@given(sizes, seeds, st.floats(min_value=0.1, max_value=10.0))
def test_rescaling_forms(n, seed, c):
    # Lambda is homogeneous of degree 1 in A and -1 in B
    A, B = random_pair(np.random.default_rng(seed), n)
    s = solve_lambda(FormPair(A, B)).positive
    s2 = solve_lambda(FormPair(c * A, B / c)).positive
    assert np.allclose(s2, c * c * s, rtol=1e-9, atol=1e-12)
