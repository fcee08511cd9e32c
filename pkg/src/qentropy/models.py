"""Concrete protocols: qubit quench, cyclic qubit pulse, macrospin pulse, random protocols."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .linalg import unitary_from_generator
from .splitting import WorkProtocol

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

MAX_MACROSPIN_DIM = 400


@dataclass(frozen=True)
class QubitQuenchParams:
    omega: float
    theta: float
    beta: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class MacrospinParams:
    d: int
    hz: float
    hx: float
    tau: float
    beta: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"macrospin dimension must be an integer >= 2, got {self.d!r}")


def qubit_quench_protocol(p: QubitQuenchParams) -> WorkProtocol:
    """Sudden rotation of the qubit field by ``theta`` with unchanged level spacing."""
    H0 = p.omega * SIGMA_Z
    Htau = p.omega * (np.cos(p.theta) * SIGMA_Z + np.sin(p.theta) * SIGMA_X)
    return WorkProtocol(H0, Htau, np.eye(2, dtype=complex), p.beta)


def _log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


def qubit_closed_forms(p: QubitQuenchParams) -> tuple[float, float, float]:
    """Closed-form ``(Sigma, Gamma_qu, Lambda_qu)`` for the qubit quench."""
    x = p.beta * p.omega
    t = np.tanh(x)
    c = np.cos(p.theta)
    tc = t * c
    sigma = 2.0 * t * x * np.sin(p.theta / 2) ** 2
    # atanh(t) = x exactly; 1 + sinh^2(x) sin^2(theta) evaluated in log form
    log_sinh2 = 2.0 * (x + np.log1p(-np.exp(-2.0 * x)) - np.log(2.0)) if x > 0 else -np.inf
    s2 = np.sin(p.theta) ** 2
    log_term = np.logaddexp(0.0, log_sinh2 + np.log(s2)) if s2 > 0 else 0.0
    gamma_qu = t * x - tc * np.arctanh(tc) - 0.5 * log_term
    lambda_qu = _log_cosh(x) - _log_cosh(x * c)
    return float(sigma), float(gamma_qu), float(lambda_qu)


def qubit_pulse_protocol(omega: float, hx: float, tau: float, beta: float) -> WorkProtocol:
    """Cyclic qubit protocol ``H0 = Htau = omega sz`` driven by ``exp(-i tau (H0 + hx sx))``."""
    if tau < 0:
        raise ValueError("pulse duration must be >= 0")
    H0 = omega * SIGMA_Z
    U = unitary_from_generator(H0 + hx * SIGMA_X, tau)
    return WorkProtocol(H0, H0, U, beta)


def spin_operators(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-S matrices for ``d = 2S + 1`` in the basis ``m = S, S-1, ..., -S``."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    S = (d - 1) / 2
    m = S - np.arange(d)
    # <m+1| S+ |m> sits at row a, column a+1
    raising = np.sqrt(S * (S + 1) - m[1:] * (m[1:] + 1))
    Sp = np.diag(raising, 1).astype(complex)
    Sm = Sp.conj().T
    Sx = 0.5 * (Sp + Sm)
    Sy = -0.5j * (Sp - Sm)
    Sz = np.diag(m).astype(complex)
    return Sx, Sy, Sz


def macrospin_protocol(p: MacrospinParams) -> WorkProtocol:
    """Cyclic ``H0 = Htau = -hz Sz`` with ``U = exp(-i (H0 - hx Sx) tau)``."""
    if p.d > MAX_MACROSPIN_DIM:
        raise ValueError(f"macrospin dimension capped at {MAX_MACROSPIN_DIM}, got {p.d}")
    Sx, _, Sz = spin_operators(int(p.d))
    H0 = -p.hz * Sz
    U = unitary_from_generator(H0 - p.hx * Sx, p.tau)
    return WorkProtocol(H0, H0, U, p.beta)


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """GUE-like matrix with spectrum of order ``[-2 scale, 2 scale]``."""
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (A + A.conj().T) / (2.0 * np.sqrt(d))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng) if d > 1 else np.ones((1, 1), dtype=complex)


def random_protocol(d: int, beta: float, rng: np.random.Generator, commuting: bool = False) -> WorkProtocol:
    """Random ``(H0, Htau, U)``; with ``commuting=True`` the final state commutes with ``Htau``."""
    H0 = random_hermitian(d, rng)
    U = random_unitary(d, rng)
    if commuting:
        # Htau diagonal in the eigenbasis U|i_0> of rho_tau, with arbitrary level order
        _, V0 = np.linalg.eigh(H0)
        psi = U @ V0
        Htau = (psi * rng.uniform(-2, 2, size=d)) @ psi.conj().T
    else:
        Htau = random_hermitian(d, rng)
    return WorkProtocol(H0, Htau, U, beta)
