import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density
from qentropy.linalg import (
    NotHermitianError,
    coherence_measure_Q,
    dephase,
    gibbs_log_populations,
    gibbs_state,
    j_superoperator,
    relative_entropy,
    renyi_trace,
    skew_information,
    spectral_decompose,
    unitary_from_generator,
    von_neumann_entropy,
)
from qentropy.models import SIGMA_X, SIGMA_Z, random_hermitian, random_unitary

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 32)


def test_identity_single_cluster():
    dec = spectral_decompose(np.eye(2))
    np.testing.assert_allclose(dec.eigenvalues, [1, 1])
    assert dec.n_clusters == 1


def test_diagonal_two_clusters():
    dec = spectral_decompose(np.diag([-1.0, 1.0]))
    np.testing.assert_allclose(dec.eigenvalues, [-1, 1])
    assert dec.n_clusters == 2
    np.testing.assert_allclose(np.abs(dec.eigenvectors), np.eye(2), atol=1e-15)


def test_rotated_qubit_eigenvectors():
    theta = 1.1
    H = np.cos(theta) * SIGMA_Z + np.sin(theta) * SIGMA_X
    dec = spectral_decompose(H)
    np.testing.assert_allclose(dec.eigenvalues, [-1, 1], atol=1e-14)
    up = np.array([np.cos(theta / 2), np.sin(theta / 2)])
    assert abs(abs(np.vdot(up, dec.eigenvectors[:, 1])) - 1) < 1e-14


def test_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        spectral_decompose(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        spectral_decompose(np.ones((2, 3)))


def test_gibbs_examples():
    rho, _ = gibbs_state(random_hermitian(4, np.random.default_rng(0)), 0.0)
    np.testing.assert_allclose(rho, np.eye(4) / 4, atol=1e-15)
    bw = 0.7
    rho, _ = gibbs_state(bw * SIGMA_Z, 1.0)
    np.testing.assert_allclose(np.diag(rho).real, np.array([np.exp(-bw), np.exp(bw)]) / (2 * np.cosh(bw)))
    rho, log_z = gibbs_state(np.diag([0.0, 1.0, 2.0]), 1.0)
    w = np.exp(-np.arange(3.0))
    np.testing.assert_allclose(np.diag(rho).real, w / w.sum())
    assert log_z == pytest.approx(np.log(w.sum()))


def test_gibbs_extreme_beta_stays_finite():
    logp, _ = gibbs_log_populations(np.array([0.0, 1.0, 5.0]), 1e4)
    assert np.all(np.isfinite(logp))
    assert logp[0] == pytest.approx(0.0, abs=1e-300)
    with pytest.raises(ValueError):
        gibbs_state(np.eye(2), -1.0)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, st.floats(0, 20))
def test_gibbs_populations_normalized_and_monotone(seed, d, beta):
    rng = np.random.default_rng(seed)
    H = random_hermitian(d, rng)
    logp, _ = gibbs_log_populations(np.linalg.eigvalsh(H), beta)
    p = np.exp(logp)
    assert abs(p.sum() - 1) < 1e-12
    assert np.all(np.diff(p) <= 1e-15)


def test_dephase_examples():
    theta, omega = 1.1, 0.8
    Htau = omega * (np.cos(theta) * SIGMA_Z + np.sin(theta) * SIGMA_X)
    np.testing.assert_allclose(dephase(Htau, spectral_decompose(SIGMA_Z)), omega * np.cos(theta) * SIGMA_Z)
    A = np.diag([1.0, 2.0])
    np.testing.assert_allclose(dephase(A, spectral_decompose(SIGMA_Z)), A)
    B = random_hermitian(3, np.random.default_rng(1))
    np.testing.assert_allclose(dephase(B, spectral_decompose(np.eye(3))), B)


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_dephase_properties(seed, d):
    rng = np.random.default_rng(seed)
    ref = spectral_decompose(random_hermitian(d, rng))
    A, B = random_hermitian(d, rng), random_hermitian(d, rng)
    DA = dephase(A, ref)
    np.testing.assert_allclose(dephase(DA, ref), DA, atol=1e-12)
    assert abs(np.trace(DA) - np.trace(A)) < 1e-10
    np.testing.assert_allclose(dephase(2 * A - B, ref), 2 * DA - dephase(B, ref), atol=1e-12)
    np.testing.assert_allclose(DA, DA.conj().T, atol=1e-12)
    R = ref.reconstruct()
    assert np.linalg.norm(DA @ R - R @ DA) < 1e-10


def test_dephase_degenerate_reference_keeps_blocks():
    ref = spectral_decompose(np.diag([0.0, 0.0, 1.0]))
    A = random_hermitian(3, np.random.default_rng(2))
    DA = dephase(A, ref)
    np.testing.assert_allclose(DA[:2, :2], A[:2, :2])
    assert np.allclose(DA[:2, 2], 0) and np.allclose(DA[2, :2], 0)


def test_entropy_examples():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == pytest.approx(0.0, abs=1e-15)
    assert von_neumann_entropy(np.eye(5) / 5) == pytest.approx(np.log(5))
    assert von_neumann_entropy(np.diag([0.25, 0.75])) == pytest.approx(-0.25 * np.log(0.25) - 0.75 * np.log(0.75))


def test_relative_entropy_examples():
    rho = random_density(3, np.random.default_rng(3))
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert relative_entropy(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == np.inf
    expect = 0.5 * np.log(0.5 / 0.25) + 0.5 * np.log(0.5 / 0.75)
    assert relative_entropy(np.diag([0.5, 0.5]), np.diag([0.25, 0.75])) == pytest.approx(expect)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 12))
def test_relative_entropy_nonnegative(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(d, rng), random_density(d, rng)
    assert relative_entropy(rho, sigma) >= -1e-12
    assert relative_entropy(rho, rho) < 1e-10


def test_renyi_trace_examples(rng):
    rho, sigma = random_density(4, rng), random_density(4, rng)
    assert renyi_trace(rho, sigma, 0.0) == pytest.approx(1.0)
    assert renyi_trace(rho, sigma, 1.0) == pytest.approx(1.0)
    for v in (-0.3, 0.4, 1.7):
        assert renyi_trace(rho, rho, v) == pytest.approx(1.0)
    p, q = np.array([0.1, 0.6, 0.3]), np.array([0.5, 0.2, 0.3])
    v = 0.35
    assert renyi_trace(np.diag(p), np.diag(q), v) == pytest.approx(np.sum(p**v * q ** (1 - v)))


def test_renyi_trace_negative_power_of_null_eigenvalue():
    assert renyi_trace(np.diag([0.5, 0.5]), np.diag([1.0, 0.0]), 1.5) == np.inf
    assert renyi_trace(np.diag([1.0, 0.0]), np.diag([0.5, 0.5]), 0.5) == pytest.approx(np.sqrt(0.5))


def test_j_superoperator_simple_limits(rng):
    X = random_hermitian(4, rng)
    np.testing.assert_allclose(j_superoperator(np.eye(4) / 4, X), X / 4, atol=1e-15)
    p = np.array([0.1, 0.2, 0.7])
    Xd = np.diag([1.0, -2.0, 0.5])
    np.testing.assert_allclose(j_superoperator(np.diag(p), Xd), np.diag(p * np.diag(Xd)), atol=1e-15)


def _j_by_midpoint(rho, X, n):
    p, V = np.linalg.eigh(rho)
    t = (np.arange(n) + 0.5) / n
    acc = np.zeros_like(X, dtype=complex)
    for ti in t:
        acc += (V * p**ti) @ V.conj().T @ X @ (V * p ** (1 - ti)) @ V.conj().T
    return acc / n


@pytest.mark.parametrize("d", [3, 5, 8])
def test_j_superoperator_matches_quadrature(rng, d):
    rho, X = random_density(d, rng), random_hermitian(d, rng)
    # Richardson-extrapolated midpoint rule (200 and 400 nodes) is accurate to O(h^4)
    ref = (4 * _j_by_midpoint(rho, X, 400) - _j_by_midpoint(rho, X, 200)) / 3
    np.testing.assert_allclose(j_superoperator(rho, X), ref, atol=1e-8)


def test_skew_information_examples(rng):
    assert skew_information(np.diag([1.0, 0.0]), SIGMA_X, 0.5) == pytest.approx(1.0)
    rho = np.diag([0.3, 0.7])
    assert skew_information(rho, SIGMA_Z, 0.3) == pytest.approx(0.0, abs=1e-15)
    rho, X = random_density(4, rng), random_hermitian(4, rng)
    for y in (0.2, 0.5, 0.85):
        p, V = np.linalg.eigh(rho)
        ry = (V * p**y) @ V.conj().T
        r1y = (V * p ** (1 - y)) @ V.conj().T
        direct = -0.5 * np.trace((ry @ X - X @ ry) @ (r1y @ X - X @ r1y)).real
        assert skew_information(rho, X, y) == pytest.approx(direct, abs=1e-10)
        assert skew_information(rho, X, y) == pytest.approx(skew_information(rho, X, 1 - y), abs=1e-12)
    with pytest.raises(ValueError):
        skew_information(rho, X, 1.0)


def test_coherence_measure_Q_qubit_analytic():
    omega, theta, beta = 1.0, 0.7, 1.0
    rho, _ = gibbs_state(omega * SIGMA_Z, beta)
    dH = omega * (np.cos(theta) - 1) * SIGMA_Z + omega * np.sin(theta) * SIGMA_X
    p = np.sort(np.diag(rho).real)
    # integral_0^1 I^y dy = sum_ij |X_ij|^2 (p_i + p_j - 2 L(p_i, p_j)) / 2 with L the log mean
    L = (p[1] - p[0]) / np.log(p[1] / p[0])
    integral = (omega * np.sin(theta)) ** 2 * (p[0] + p[1] - 2 * L)
    Q = coherence_measure_Q(rho, dH, beta)
    assert Q > 0
    assert Q == pytest.approx(0.5 * beta * integral, rel=1e-12)


def test_coherence_measure_Q_properties(rng):
    rho = np.diag([0.2, 0.3, 0.5])
    assert coherence_measure_Q(rho, np.diag([1.0, 2.0, 3.0]), 1.0) == pytest.approx(0.0, abs=1e-16)
    for d in (4, 16):
        H = random_hermitian(d, rng)
        rho, _ = gibbs_state(H, 2.0)
        X = random_hermitian(d, rng)
        assert abs(coherence_measure_Q(rho, X, 2.0, 32) - coherence_measure_Q(rho, X, 2.0, 64)) < 1e-10
    with pytest.raises(ValueError):
        coherence_measure_Q(rho, X, 1.0, nodes=4)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 16), st.floats(0, 5))
def test_unitary_from_generator_is_unitary(seed, d, t):
    rng = np.random.default_rng(seed)
    U = unitary_from_generator(random_hermitian(d, rng), t)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(d), atol=1e-12)
    V = random_unitary(d, rng)
    np.testing.assert_allclose(V @ V.conj().T, np.eye(d), atol=1e-12)


def test_log_trace_of_powers_matches_dense(rng):
    from qentropy.linalg import log_trace_of_powers, trace_of_powers

    A = random_density(5, rng)
    B = random_density(5, rng)
    la, Va = np.linalg.eigh(A)
    lb, Vb = np.linalg.eigh(B)
    la, lb = np.log(la), np.log(lb)
    for facs in (
        [(la, Va, 0.3), (lb, Vb, 0.7)],
        [(la, Va, 0.5), (la, Va, -0.2), (lb, Vb, 0.7)],
        [(la, Va, 0.4), (lb, Vb, 0.2), (la, Va, 0.4)],
    ):
        assert log_trace_of_powers(facs) == pytest.approx(np.log(trace_of_powers(facs)), abs=1e-12)
    null = la.copy()
    null[0] = -np.inf
    assert log_trace_of_powers([(null, Va, -0.5), (lb, Vb, 1.5)]) == np.inf
    assert np.isfinite(log_trace_of_powers([(null, Va, 0.5), (lb, Vb, 0.5)]))
