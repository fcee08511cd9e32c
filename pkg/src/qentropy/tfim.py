"""Transverse-field Ising chain after a sudden field quench ``g0 -> g0 + delta_g`` (``J = 1``).

The chain decouples into independent ``(+k, -k)`` fermion pairs, so every
quantity is a sum over ``k in (0, pi)`` of per-pair closed forms. Finite chains
use the antiperiodic grid ``k = (2n + 1) pi / N``; the thermodynamic limit is
reported per site, ``integral_0^pi dk / 2pi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .linalg import gauss_legendre
from .splitting import AverageSplit, WorkProtocol, average_split

DEFAULT_QUAD_NODES = 512
CRITICAL_WINDOW = 0.1


@dataclass(frozen=True)
class TfimParams:
    """Quench parameters; ``size=None`` selects the thermodynamic limit (per-site values)."""

    g0: float
    delta_g: float
    beta: float
    size: int | None = None
    quad_nodes: int = DEFAULT_QUAD_NODES

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError(f"beta must be finite and >= 0, got {self.beta!r}")
        if self.size is not None and (self.size < 4 or self.size % 2):
            raise ValueError(f"finite chain length must be even and >= 4, got {self.size!r}")
        if self.quad_nodes < 16:
            raise ValueError("quad_nodes must be >= 16")

    @property
    def g_tau(self) -> float:
        return self.g0 + self.delta_g


@dataclass(frozen=True)
class ModeData:
    k: np.ndarray
    eps0: np.ndarray
    eps_tau: np.ndarray
    cos_theta: np.ndarray
    sin_theta: np.ndarray
    cos_delta: np.ndarray
    sin_delta: np.ndarray
    eps_tilde: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        return np.arctan2(self.sin_theta, self.cos_theta)

    @property
    def delta(self) -> np.ndarray:
        return np.arctan2(self.sin_delta, self.cos_delta)


def _g_minus_cos(g: float, k: np.ndarray) -> np.ndarray:
    # (g - 1) + 2 sin^2(k/2) avoids cancellation for g near 1 and small k
    return (g - 1.0) + 2.0 * np.sin(0.5 * k) ** 2


def dispersion(g: float, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return np.hypot(_g_minus_cos(g, k), np.sin(k))


def mode_data(p: TfimParams, k) -> ModeData:
    k = np.asarray(k, dtype=float)
    eps0 = dispersion(p.g0, k)
    eps_tau = dispersion(p.g_tau, k)
    cos_t = _g_minus_cos(p.g0, k) / eps0
    sin_t = np.sin(k) / eps0
    eps_tilde = eps0 + p.delta_g * cos_t
    return ModeData(
        k=k,
        eps0=eps0,
        eps_tau=eps_tau,
        cos_theta=cos_t,
        sin_theta=sin_t,
        cos_delta=eps_tilde / eps_tau,
        sin_delta=-p.delta_g * np.sin(k) / (eps_tau * eps0),
        eps_tilde=eps_tilde,
    )


def _log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


def _log_ratio_tanh(y, cos_d, sin_d):
    """``ln[(1 + c tanh y) / (1 - c tanh y)]`` for ``y >= 0``, ``c = cos(Delta)``, without cancellation."""
    one_minus_t = 2.0 * expit(-2.0 * y)
    t = np.tanh(y)
    one_minus_c = 2.0 * np.sin(0.5 * np.arctan2(sin_d, cos_d)) ** 2
    one_plus_c = 2.0 - one_minus_c
    lo = np.where(cos_d >= 0, one_minus_c + cos_d * one_minus_t, 1.0 - cos_d * t)
    hi = np.where(cos_d <= 0, one_plus_c - cos_d * one_minus_t, 1.0 + cos_d * t)
    return np.log(hi) - np.log(lo)


def _log1p_sinh2_sin2(y, sin_d):
    """``ln[1 + sinh^2(y) sin^2(Delta)]`` for ``y >= 0``."""
    with np.errstate(divide="ignore"):
        log_sinh = y + np.log1p(-np.exp(-2.0 * y)) - np.log(2.0)
        log_s = np.log(np.abs(sin_d))
    return np.logaddexp(0.0, 2.0 * (log_sinh + log_s))


def per_mode_terms(p: TfimParams, k) -> dict[str, np.ndarray]:
    """Contribution of the ``(+k, -k)`` pair to every quantity (already including both modes)."""
    m = mode_data(p, k)
    b = p.beta
    x0, xt, xs = b * m.eps0, b * m.eps_tau, b * m.eps_tilde
    th0 = np.tanh(x0)
    work = -b * p.delta_g * m.cos_theta * th0  # beta (eps0 - eps_tilde) tanh(beta eps0)
    lam_cl = 2.0 * (_log_cosh(xs) - _log_cosh(x0) + work)
    lam_qu = 2.0 * (_log_cosh(xt) - _log_cosh(xs))
    sigma = 2.0 * (_log_cosh(xt) - _log_cosh(x0) + work)

    mixed = _log_ratio_tanh(2.0 * x0, m.cos_delta, m.sin_delta)
    weight = 0.5 - 0.25 / np.cosh(np.minimum(x0, 350.0)) ** 2  # cosh(2x) / (4 cosh^2 x)
    coh = weight * _log1p_sinh2_sin2(2.0 * x0, m.sin_delta)
    gam_qu = 0.5 * th0 * (4.0 * x0 - m.cos_delta * mixed) - coh
    gam_cl = (
        2.0 * (_log_cosh(xt) - _log_cosh(x0))
        - 0.5 * th0 * m.cos_delta * (4.0 * xt - mixed)
        + coh
    )
    return {
        "sigma": sigma,
        "gamma_cl": gam_cl,
        "gamma_qu": gam_qu,
        "lambda_cl": lam_cl,
        "lambda_qu": lam_qu,
    }


def _panel_edges(p: TfimParams) -> np.ndarray:
    """Geometrically graded panels toward ``k = 0`` near the critical field."""
    if abs(p.g0 - 1.0) > CRITICAL_WINDOW and abs(p.g_tau - 1.0) > CRITICAL_WINDOW:
        return np.array([0.0, np.pi])
    # smallest of the gap, quench and thermal momentum scales
    scale = max(min(abs(p.g0 - 1.0), abs(p.g_tau - 1.0)), abs(p.delta_g))
    if p.beta > 0:
        scale = min(scale, 1.0 / p.beta)
    scale = float(np.clip(scale, 1e-4, np.pi / 8))
    edges = [0.0]
    k = scale
    while k < np.pi / 2:
        edges.append(k)
        k *= 4.0
    edges.append(np.pi)
    return np.array(edges)


def k_quadrature(p: TfimParams) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``integral_0^pi dk / 2pi``, ``quad_nodes`` points in total."""
    edges = _panel_edges(p)
    n_panels = edges.size - 1
    per = max(8, p.quad_nodes // n_panels)
    ks, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(a, b, per)
        ks.append(x)
        ws.append(w)
    return np.concatenate(ks), np.concatenate(ws) / (2.0 * np.pi)


def finite_modes(n_sites: int) -> np.ndarray:
    """Positive momenta ``(2n + 1) pi / N``, ``n = 0 .. N/2 - 1``."""
    return (2.0 * np.arange(n_sites // 2) + 1.0) * np.pi / n_sites


def _mode_sum(p: TfimParams, integrand) -> dict[str, float]:
    if p.size is None:
        k, w = k_quadrature(p)
    else:
        k = finite_modes(p.size)
        w = np.ones_like(k)
    return {name: float(w @ vals) for name, vals in integrand(p, k).items()}


def totals(p: TfimParams) -> dict[str, float]:
    """All five quantities: extensive for a finite chain, per site in the thermodynamic limit."""
    if p.delta_g == 0.0 or p.beta == 0.0:
        return dict.fromkeys(("sigma", "gamma_cl", "gamma_qu", "lambda_cl", "lambda_qu"), 0.0)
    return _mode_sum(p, per_mode_terms)


def lambda_split_tfim(p: TfimParams) -> tuple[float, float, float]:
    """``(Lambda_cl, Lambda_qu, Sigma)``."""
    t = totals(p)
    return t["lambda_cl"], t["lambda_qu"], t["sigma"]


def gamma_split_tfim(p: TfimParams) -> tuple[float, float]:
    """``(Gamma_cl, Gamma_qu)``."""
    t = totals(p)
    return t["gamma_cl"], t["gamma_qu"]


def _infinitesimal_terms(p: TfimParams, k) -> dict[str, np.ndarray]:
    m = mode_data(p, k)
    x0 = p.beta * m.eps0
    pref = (p.beta * p.delta_g) ** 2
    return {
        "lambda_cl": pref * m.cos_theta**2 / np.cosh(np.minimum(x0, 350.0)) ** 2,
        "lambda_qu": pref * m.sin_theta**2 * np.tanh(x0) / x0,
    }


def infinitesimal_tfim(p: TfimParams) -> tuple[float, float]:
    """Second-order ``(Lambda_cl, Lambda_qu)``."""
    if p.delta_g == 0.0 or p.beta == 0.0:
        return 0.0, 0.0
    t = _mode_sum(p, _infinitesimal_terms)
    return t["lambda_cl"], t["lambda_qu"]


def pair_mode_hamiltonians(p: TfimParams, k: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(H0, dH_d, dH_c)`` of one pair in the basis ``|00>, |01>, |10>, |11>`` of ``|n_-k n_k>``."""
    m = mode_data(p, float(k))
    level = np.diag([-1.0, 0.0, 0.0, 1.0])
    H0 = 2.0 * float(m.eps0) * level
    dH_d = 2.0 * p.delta_g * float(m.cos_theta) * level
    dH_c = np.zeros((4, 4))
    dH_c[0, 3] = dH_c[3, 0] = 2.0 * p.delta_g * float(m.sin_theta)
    return H0, dH_d, dH_c


def pair_mode_oracle(p: TfimParams, k: float) -> AverageSplit:
    """Per-pair split from the dense 4x4 problem through the generic engine."""
    H0, dH_d, dH_c = pair_mode_hamiltonians(p, k)
    return average_split(WorkProtocol(H0, H0 + dH_d + dH_c, np.eye(4), p.beta))


def log_partition_per_mode(g: float, beta: float, k) -> np.ndarray:
    """``ln Z`` of one pair, ``2 ln(2 cosh(beta eps_k))``."""
    return 2.0 * (_log_cosh(beta * dispersion(g, k)) + np.log(2.0))


def free_energy(g: float, beta: float, size: int | None = None, quad_nodes: int = DEFAULT_QUAD_NODES) -> float:
    """Equilibrium free energy ``-ln Z / beta``; per site when ``size`` is None."""
    if beta <= 0:
        raise ValueError("free energy needs beta > 0")
    p = TfimParams(g, 0.0, beta, size, quad_nodes)
    if size is None:
        k, w = k_quadrature(p)
    else:
        k = finite_modes(size)
        w = np.ones_like(k)
    return -float(w @ log_partition_per_mode(g, beta, k)) / beta
