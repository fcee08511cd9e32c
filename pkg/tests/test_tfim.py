import numpy as np
import pytest

from qentropy.perturbation import PerturbationInput, fdr_decomposition
from qentropy.tfim import (
    TfimParams,
    finite_modes,
    free_energy,
    gamma_split_tfim,
    infinitesimal_tfim,
    k_quadrature,
    lambda_split_tfim,
    mode_data,
    pair_mode_hamiltonians,
    pair_mode_oracle,
    per_mode_terms,
    totals,
)
from qentropy.perturbation import susceptibility_sigma

KEYS = ("sigma", "gamma_cl", "gamma_qu", "lambda_cl", "lambda_qu")


def test_mode_data_examples():
    k = np.array([1e-3, 1e-5])
    m = mode_data(TfimParams(1.0, 0.01, 1.0), k)
    np.testing.assert_allclose(m.cos_theta, np.abs(np.sin(k / 2)), rtol=1e-9)
    assert np.all(m.eps0 < 2e-3)
    m = mode_data(TfimParams(0.4, 0.0, 1.0), np.linspace(0.1, 3.0, 7))
    np.testing.assert_allclose(m.delta, 0.0)
    np.testing.assert_allclose(m.eps_tilde, m.eps0)
    np.testing.assert_allclose(m.eps_tau, m.eps0)
    m = mode_data(TfimParams(0.0, 0.1, 1.0), np.pi / 2)
    assert float(m.eps0) == pytest.approx(1.0)
    assert float(m.cos_theta) == pytest.approx(0.0, abs=1e-15)
    assert float(m.sin_theta) == pytest.approx(1.0)


def test_mode_identities(rng):
    for _ in range(50):
        p = TfimParams(rng.uniform(0, 2), rng.uniform(-0.5, 0.5), 1.0)
        k = rng.uniform(0.01, np.pi - 0.01, 20)
        m = mode_data(p, k)
        np.testing.assert_allclose(m.eps_tilde, m.eps_tau * m.cos_delta, atol=1e-12)
        np.testing.assert_allclose(m.sin_delta, -p.delta_g * np.sin(k) / (m.eps_tau * m.eps0), atol=1e-12)
        np.testing.assert_allclose(m.cos_delta**2 + m.sin_delta**2, 1.0, atol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        TfimParams(1.0, 0.1, 1.0, size=7)
    with pytest.raises(ValueError):
        TfimParams(1.0, 0.1, 1.0, size=2)
    with pytest.raises(ValueError):
        TfimParams(1.0, 0.1, -1.0)


@pytest.mark.parametrize("p", [TfimParams(0.7, 0.0, 2.0), TfimParams(0.7, 0.1, 0.0), TfimParams(0.7, 0.0, 2.0, size=64)])
def test_trivial_zeros(p):
    assert lambda_split_tfim(p) == (0.0, 0.0, 0.0)
    assert gamma_split_tfim(p) == (0.0, 0.0)
    assert infinitesimal_tfim(p) == (0.0, 0.0)


def test_pair_mode_oracle_agrees(rng):
    for _ in range(60):
        p = TfimParams(rng.uniform(0, 2), rng.uniform(-0.3, 0.3), rng.uniform(0.1, 20))
        k = rng.uniform(0.01, np.pi - 0.01)
        closed = {q: float(v) for q, v in per_mode_terms(p, k).items()}
        oracle = pair_mode_oracle(p, k).as_dict()
        for q in KEYS:
            assert closed[q] == pytest.approx(oracle[q], abs=1e-10)
        assert closed["gamma_cl"] + closed["gamma_qu"] == pytest.approx(closed["sigma"], abs=1e-10)
        assert closed["lambda_cl"] + closed["lambda_qu"] == pytest.approx(closed["sigma"], abs=1e-10)


def test_pair_mode_coherent_part_structure():
    _, _, dH_c = pair_mode_hamiltonians(TfimParams(0.5, 0.2, 1.0), 0.8)
    mask = np.zeros((4, 4), bool)
    mask[0, 3] = mask[3, 0] = True
    assert np.all(dH_c[~mask] == 0) and np.all(dH_c[mask] != 0)
    assert all(abs(v) < 1e-15 for v in pair_mode_oracle(TfimParams(0.5, 0.0, 1.0), 0.8).as_dict().values())


@pytest.mark.parametrize("size", [None, 64])
def test_integrated_additivity(size):
    for g0 in (0.5, 0.99, 1.0, 1.4):
        t = totals(TfimParams(g0, 0.05, 8.0, size))
        assert t["lambda_cl"] + t["lambda_qu"] == pytest.approx(t["sigma"], abs=1e-10)
        assert t["gamma_cl"] + t["gamma_qu"] == pytest.approx(t["sigma"], abs=1e-9)
        assert min(t.values()) > -1e-12


def test_finite_chain_is_mode_sum():
    p = TfimParams(0.8, 0.05, 3.0, size=8)
    k = finite_modes(8)
    np.testing.assert_allclose(k, [np.pi / 8, 3 * np.pi / 8, 5 * np.pi / 8, 7 * np.pi / 8])
    direct = sum(pair_mode_oracle(p, kk).sigma for kk in k)
    assert totals(p)["sigma"] == pytest.approx(direct, abs=1e-12)


def test_finite_chain_approaches_density():
    p = TfimParams(0.6, 0.05, 2.0)
    dens = totals(p)["sigma"]
    fin = totals(TfimParams(0.6, 0.05, 2.0, size=256))["sigma"] / 256
    assert fin == pytest.approx(dens, rel=1e-8)


def test_quadrature_weights():
    for g0 in (0.3, 1.0, 1.02):
        k, w = k_quadrature(TfimParams(g0, 0.01, 20.0))
        assert w.sum() == pytest.approx(0.5)
        assert np.all((k > 0) & (k < np.pi))


@pytest.mark.parametrize("g0,beta", [(0.5, 2.0), (1.5, 10.0), (0.95, 5.0), (1.0, 20.0)])
def test_node_doubling(g0, beta):
    a = totals(TfimParams(g0, 0.01, beta, quad_nodes=512))
    b = totals(TfimParams(g0, 0.01, beta, quad_nodes=1024))
    for q in KEYS:
        assert a[q] == pytest.approx(b[q], abs=1e-10)


def test_infinitesimal_halving_ratio():
    errs = []
    for dg in (0.04, 0.02, 0.01):
        p = TfimParams(0.6, dg, 3.0)
        lcl, lqu, _ = lambda_split_tfim(p)
        icl, iqu = infinitesimal_tfim(p)
        errs.append(np.abs([lcl - icl, lqu - iqu]))
    ratio = errs[1] / errs[2]
    assert np.all((ratio > 6) & (ratio < 10))


def test_infinitesimal_matches_per_mode_fdr():
    p = TfimParams(0.7, 1e-3, 2.5)
    k, w = k_quadrature(p)
    lcl = lqu = 0.0
    for kk, ww in zip(k[::16], w[::16]):
        H0, dH_d, dH_c = pair_mode_hamiltonians(p, kk)
        # lift the 0,0 degeneracy of the odd-parity levels; they never couple
        H0 = H0 + np.diag([0.0, 1e-3, -1e-3, 0.0])
        f = fdr_decomposition(PerturbationInput(H0, dH_d + dH_c, p.beta))
        lcl += ww * f["lambda_cl"]
        lqu += ww * f["lambda_qu"]
    m = mode_data(p, k[::16])
    x0 = p.beta * m.eps0
    pref = (p.beta * p.delta_g) ** 2
    ref_cl = w[::16] @ (pref * m.cos_theta**2 / np.cosh(x0) ** 2)
    ref_qu = w[::16] @ (pref * m.sin_theta**2 * np.tanh(x0) / x0)
    assert lcl == pytest.approx(ref_cl, rel=1e-8)
    assert lqu == pytest.approx(ref_qu, rel=1e-8)


def test_free_energy_susceptibility_matches_infinitesimal_sigma():
    g0, beta, dg = 0.6, 2.0, 1e-3
    h = 1e-3
    gs = g0 + h * np.arange(-3, 4)
    F = np.array([free_energy(g, beta) for g in gs])
    sus = susceptibility_sigma(gs, F, g0, dg, beta)
    lcl, lqu = infinitesimal_tfim(TfimParams(g0, dg, beta))
    assert sus == pytest.approx(lcl + lqu, rel=1e-5)


def test_lambda_cl_vanishes_at_low_temperature():
    lcl = [lambda_split_tfim(TfimParams(0.75, 0.01, b))[0] for b in (4.0, 16.0, 64.0)]
    lqu = [lambda_split_tfim(TfimParams(0.75, 0.01, b))[1] for b in (4.0, 16.0, 64.0)]
    assert lcl[2] < 1e-12 * lqu[2]
    assert lcl[0] > lcl[1] > lcl[2]
    assert lqu[0] < lqu[1] < lqu[2]


def test_gamma_vs_lambda_regimes():
    hi = TfimParams(0.75, 0.01, 0.05)
    lcl, lqu, _ = lambda_split_tfim(hi)
    gcl, gqu = gamma_split_tfim(hi)
    assert gcl == pytest.approx(lcl, rel=1e-2) and gqu == pytest.approx(lqu, rel=1e-2)
    gcl = [gamma_split_tfim(TfimParams(0.75, 0.01, b))[0] for b in (20.0, 40.0, 80.0)]
    slopes = np.diff(gcl) / np.diff([20.0, 40.0, 80.0])
    assert slopes[1] == pytest.approx(slopes[0], rel=0.05) and slopes[0] > 0
