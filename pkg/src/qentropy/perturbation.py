"""Infinitesimal quenches ``H0 -> H0 + dH`` with ``U = 1``, to second order in ``dH``.

Covers the dephased/coherent split of the perturbation, the second-order
splittings and their fluctuation-dissipation form, the perturbative
probabilities that govern analyticity, the perturbative CGFs, and the
susceptibility form of the entropy production.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import (
    SpectralDecomposition,
    _skew_profile,
    check_beta,
    check_hermitian,
    coherence_measure_Q,
    dephase,
    expectation,
    gauss_legendre,
    gibbs_log_populations,
    gibbs_state,
    j_superoperator,
    spectral_decompose,
    variance,
)

DENOMINATOR_RTOL = 1e-10
DEFAULT_CGF_NODES = 32


class DegenerateSpectrumError(ValueError):
    """The unperturbed Hamiltonian has a degenerate spectrum."""


@dataclass(frozen=True)
class PerturbationInput:
    """Unperturbed Hamiltonian, perturbation and inverse temperature (``U = 1``)."""

    H0: np.ndarray
    dH: np.ndarray
    beta: float

    def __post_init__(self):
        H0 = check_hermitian(self.H0, "H0")
        dH = check_hermitian(self.dH, "dH")
        if H0.shape != dH.shape:
            raise ValueError(f"dimension mismatch: H0 {H0.shape}, dH {dH.shape}")
        object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "dH", dH)
        object.__setattr__(self, "beta", check_beta(self.beta))
        dec = spectral_decompose(H0)
        if dec.n_clusters < dec.dim:
            raise DegenerateSpectrumError(
                "H0 has a degenerate spectrum; the perturbative expansion assumes "
                "non-degenerate unperturbed levels"
            )

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return spectral_decompose(self.H0)

    @cached_property
    def rho0(self) -> np.ndarray:
        return gibbs_state(self.H0, self.beta)[0]

    @cached_property
    def populations(self) -> np.ndarray:
        return np.exp(gibbs_log_populations(self.spectrum.eigenvalues, self.beta)[0])

    @cached_property
    def dH_eigenbasis(self) -> np.ndarray:
        """Matrix elements ``<i_0| dH |j_0>``."""
        V = self.spectrum.eigenvectors
        return V.conj().T @ self.dH @ V


@dataclass(frozen=True)
class ExpansionCoefficients:
    dH_diag: np.ndarray
    E2: np.ndarray
    f_tilde: np.ndarray
    f: np.ndarray
    s: np.ndarray


def split_perturbation(inp: PerturbationInput) -> tuple[np.ndarray, np.ndarray]:
    """``(dH_d, dH_c)``: the part of ``dH`` diagonal in the ``H0`` basis and the rest."""
    dH_d = dephase(inp.dH, inp.spectrum)
    return dH_d, inp.dH - dH_d


def _j_form(rho, A, shift: float) -> float:
    return float(np.real(np.trace(A @ j_superoperator(rho, A - shift * np.eye(A.shape[0])))))


def perturbative_split(inp: PerturbationInput) -> tuple[float, float, float]:
    """Second-order ``(Sigma, Lambda_cl, Lambda_qu)`` through the ``J`` superoperator."""
    b2 = 0.5 * inp.beta**2
    rho = inp.rho0
    dH_d, dH_c = split_perturbation(inp)
    sig = b2 * _j_form(rho, inp.dH, expectation(rho, inp.dH))
    lcl = b2 * _j_form(rho, dH_d, expectation(rho, dH_d))
    lqu = b2 * _j_form(rho, dH_c, 0.0)
    return sig, lcl, lqu


def fdr_decomposition(inp: PerturbationInput, nodes: int = 32) -> dict[str, float]:
    """Variance / coherence form of the second-order entropy production.

    ``sigma = variance_term - Q_term``; the coherence term lands entirely in
    ``lambda_qu`` while ``lambda_cl`` obeys a plain fluctuation-dissipation relation.
    """
    b2 = 0.5 * inp.beta**2
    rho = inp.rho0
    dH_d, dH_c = split_perturbation(inp)
    var_term = b2 * variance(rho, inp.dH)
    q_term = inp.beta * coherence_measure_Q(rho, inp.dH, inp.beta, nodes)
    return {
        "variance_term": var_term,
        "Q_term": q_term,
        "sigma": var_term - q_term,
        "lambda_cl": b2 * variance(rho, dH_d),
        "lambda_qu": b2 * variance(rho, dH_c) - q_term,
    }


def _checked_gaps(inp: PerturbationInput) -> np.ndarray:
    eps = inp.spectrum.eigenvalues
    gaps = eps[:, None] - eps[None, :]
    off = ~np.eye(eps.size, dtype=bool)
    span = eps[-1] - eps[0]
    if np.any(np.abs(gaps[off]) < DENOMINATOR_RTOL * span):
        raise DegenerateSpectrumError("near-degenerate levels make the perturbative denominators blow up")
    return gaps


def expansion_coefficients(inp: PerturbationInput) -> ExpansionCoefficients:
    """Coefficients of ``p~_i = p_i^0 (1 - f~_i)``, ``p_j^tau = p_j^0 (1 - f_j)``, ``q_j = p_j^0 (1 - s_j)``."""
    beta = inp.beta
    gaps = _checked_gaps(inp)  # gaps[j, l] = eps_j - eps_l
    off = ~np.eye(gaps.shape[0], dtype=bool)
    M = inp.dH_eigenbasis
    absm2 = np.abs(M) ** 2
    p = inp.populations
    diag = np.real(np.diag(M))
    safe = np.where(off, gaps, 1.0)

    E2 = np.sum(np.where(off, absm2 / safe, 0.0), axis=1)
    mean_d = p @ diag
    mean_d2 = p @ diag**2
    f_tilde = (
        beta * (diag - mean_d)
        + beta**2 * mean_d * (diag - mean_d)
        - 0.5 * beta**2 * (diag**2 - mean_d2)
    )
    f = f_tilde + beta * (E2 - p @ E2)
    # s_j = sum_{l != j} (1 - exp(-beta (eps_l - eps_j))) |dH_lj|^2 / (eps_j - eps_l)^2
    with np.errstate(over="ignore"):  # -inf is the right limit for a deep ground state
        boltz = -np.expm1(beta * gaps)
    s = np.sum(np.where(off, boltz * absm2.T / safe**2, 0.0), axis=1)
    return ExpansionCoefficients(diag, E2, f_tilde, f, s)


def analyticity_report(inp: PerturbationInput) -> dict:
    """Largest ``|s_j|``, ``|f_j|``, ``|f~_j|`` and whether each stays below 1."""
    c = expansion_coefficients(inp)
    out = {
        "max_abs_s": float(np.max(np.abs(c.s))),
        "max_abs_f": float(np.max(np.abs(c.f))),
        "max_abs_f_tilde": float(np.max(np.abs(c.f_tilde))),
    }
    out["s_ok"] = out["max_abs_s"] < 1
    out["f_ok"] = out["max_abs_f"] < 1
    out["f_tilde_ok"] = out["max_abs_f_tilde"] < 1
    return out


def perturbative_cgf(
    inp: PerturbationInput, v: float, u: float, nodes: int = DEFAULT_CGF_NODES
) -> tuple[float, float]:
    """Second-order ``(K_lambda_cl(v), K_lambda_qu(u))``; the joint CGF is their sum.

    The coherent part carries ``integral_0^u dx integral_x^(1-x) dy I^y``,
    evaluated with nested Gauss-Legendre rules of ``nodes`` points each.
    """
    b2 = 0.5 * inp.beta**2
    rho = inp.rho0
    dH_d, dH_c = split_perturbation(inp)
    k_cl = b2 * (v * v - v) * variance(rho, dH_d)

    p, V = np.linalg.eigh(rho)
    absx2 = np.abs(V.conj().T @ dH_c @ V) ** 2
    xs, wx = gauss_legendre(0.0, u, nodes)
    yref, wref = np.polynomial.legendre.leggauss(nodes)
    inner = np.empty(nodes)
    for k, x in enumerate(xs):
        half = 0.5 * (1.0 - 2.0 * x)
        ys = half * yref + 0.5
        inner[k] = half * (wref @ _skew_profile(p, absx2, ys))
    k_qu = b2 * (u * u - u) * variance(rho, dH_c) + b2 * float(wx @ inner)
    return k_cl, k_qu


def quench_sigma_exact(H0, H1, beta: float) -> float:
    """``beta tr(dH rho0) - beta dF`` for a sudden quench ``H0 -> H1``."""
    beta = check_beta(beta)
    rho0, log_z0 = gibbs_state(H0, beta)
    _, log_z1 = gibbs_state(H1, beta)
    dH = np.asarray(H1) - np.asarray(H0)
    # beta F = -ln Z
    return beta * expectation(rho0, dH) + (log_z1 - log_z0)


def susceptibility_sigma(g_grid, free_energy, g0: float, delta_g: float, beta: float) -> float:
    """``-(beta/2) delta_g^2 d^2F/dg^2`` at ``g0`` from a uniformly sampled free energy.

    The curvature is a central second difference on the grid point nearest ``g0``.
    """
    g = np.asarray(g_grid, dtype=float)
    F = np.asarray(free_energy, dtype=float)
    if g.size < 5 or F.shape != g.shape:
        raise ValueError("need at least 5 uniformly spaced free-energy samples")
    h = np.diff(g)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("free-energy grid must be uniform")
    k = int(np.argmin(np.abs(g - g0)))
    if k == 0 or k == g.size - 1:
        raise ValueError("g0 must lie strictly inside the sampled grid")
    d2F = (F[k + 1] - 2.0 * F[k] + F[k - 1]) / h[0] ** 2
    return -0.5 * check_beta(beta) * delta_g**2 * d2F
