"""Average entropy production of a unitary work protocol and its two splittings.

``Sigma = Gamma_cl + Gamma_qu`` passes through the final state dephased in the
final energy basis; ``Sigma = Lambda_cl + Lambda_qu`` passes through the Gibbs
state of the final Hamiltonian dephased in the basis of the final state.

Every quantity is evaluated twice, once as a relative entropy / trace-log and
once as a difference of non-equilibrium free energies, and a mismatch is a
hard error.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import logsumexp

from .linalg import (
    SpectralDecomposition,
    check_beta,
    check_hermitian,
    check_square,
    check_unitary,
    dephase,
    gibbs_log_populations,
    gibbs_state,
    spectral_decompose,
    von_neumann_entropy,
)

CROSS_CHECK_TOL = 1e-7

QUANTITIES = ("sigma", "gamma_cl", "gamma_qu", "lambda_cl", "lambda_qu")


class ConsistencyError(RuntimeError):
    """Two independent evaluations of the same quantity disagree."""


@dataclass(frozen=True)
class WorkProtocol:
    """Initial and final Hamiltonians, the drive unitary and the inverse temperature."""

    H0: np.ndarray
    Htau: np.ndarray
    U: np.ndarray
    beta: float
    check_unitarity: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        H0 = check_hermitian(self.H0, "H0")
        Htau = check_hermitian(self.Htau, "Htau")
        U = check_unitary(self.U) if self.check_unitarity else check_square(self.U, "U")
        if not (H0.shape == Htau.shape == U.shape):
            raise ValueError(
                f"dimension mismatch: H0 {H0.shape}, Htau {Htau.shape}, U {U.shape}"
            )
        object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "Htau", Htau)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "beta", check_beta(self.beta))

    @property
    def dim(self) -> int:
        return self.H0.shape[0]


@dataclass(frozen=True)
class ReferenceStates:
    """The four states entering both splittings plus their exact spectral data.

    Index ``i`` labels initial energy eigenstates ``|i_0>`` (ascending energy)
    and the eigenvectors ``|psi_i> = U|i_0>`` of ``rho_tau``; index ``j``
    labels final energy eigenstates ``|j_tau>``. Inside degenerate eigenspaces
    the bases are rotated so that the dephased objects are diagonal.
    """

    rho_tau: np.ndarray
    rho_tau_th: np.ndarray
    rho_tau_dephased: np.ndarray
    rho_tilde_th: np.ndarray
    H_dephased: np.ndarray
    eps0: np.ndarray
    V0: np.ndarray
    psi: np.ndarray
    log_p0: np.ndarray
    eps_tau: np.ndarray
    Vtau: np.ndarray
    log_ptau: np.ndarray
    log_q: np.ndarray
    eps_tilde: np.ndarray
    log_ptilde: np.ndarray
    overlap: np.ndarray
    beta: float
    Htau: np.ndarray

    @property
    def dim(self) -> int:
        return self.eps0.shape[0]


@dataclass(frozen=True)
class AverageSplit:
    sigma: float
    gamma_cl: float
    gamma_qu: float
    lambda_cl: float
    lambda_qu: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def _rotate_within_clusters(vecs: np.ndarray, labels: np.ndarray, A: np.ndarray):
    """Diagonalize ``A`` inside each cluster of columns of ``vecs``.

    Returns the rotated columns, the diagonal values and the rotation blocks.
    """
    vecs = vecs.copy()
    diag = np.real(np.einsum("ki,kl,li->i", vecs.conj(), A, vecs))
    rotations = {}
    for a in np.unique(labels):
        idx = np.flatnonzero(labels == a)
        if idx.size == 1:
            continue
        cols = vecs[:, idx]
        e, W = np.linalg.eigh(cols.conj().T @ A @ cols)
        vecs[:, idx] = cols @ W
        diag[idx] = e
        rotations[a] = (idx, W)
    return vecs, diag, rotations


def _log_populations(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.clip(p, 0.0, None))


def reference_states(p: WorkProtocol) -> ReferenceStates:
    """Build ``rho_tau``, ``rho_tau_th``, ``D_Htau(rho_tau)`` and ``rho_tilde_th``."""
    beta = p.beta
    dec0 = spectral_decompose(p.H0)
    V0 = dec0.eigenvectors.copy()
    psi = p.U @ V0

    # rho_tau has eigenvalues p_i^0, so its degenerate eigenspaces are those of H0;
    # at beta = 0 it is maximally mixed and the dephasing is trivial.
    if beta == 0.0:
        H_deph = p.Htau.copy()
        eps_tilde = np.real(np.einsum("ki,kl,li->i", psi.conj(), p.Htau, psi))
    else:
        labels = dec0.cluster_index
        psi, eps_tilde, rotations = _rotate_within_clusters(psi, labels, p.Htau)
        for idx, W in rotations.values():
            V0[:, idx] = V0[:, idx] @ W
        rho_basis = SpectralDecomposition(np.zeros(p.dim), psi, labels)
        H_deph = dephase(p.Htau, rho_basis)

    log_p0, _ = gibbs_log_populations(dec0.eigenvalues, beta)
    rho_tau = (psi * np.exp(log_p0)) @ psi.conj().T

    dect = spectral_decompose(p.Htau)
    Vtau, _, _ = _rotate_within_clusters(dect.eigenvectors, dect.cluster_index, rho_tau)
    log_ptau, _ = gibbs_log_populations(dect.eigenvalues, beta)

    amp = Vtau.conj().T @ psi  # amp[j, i] = <j_tau| U |i_0>
    overlap = np.abs(amp.T) ** 2
    log_overlap = _log_populations(overlap)
    log_q = logsumexp(log_overlap + log_p0[:, None], axis=0)

    log_ptilde, _ = gibbs_log_populations(eps_tilde, beta)

    return ReferenceStates(
        rho_tau=rho_tau,
        rho_tau_th=gibbs_state(p.Htau, beta)[0],
        rho_tau_dephased=dephase(rho_tau, dect),
        rho_tilde_th=gibbs_state(H_deph, beta)[0],
        H_dephased=H_deph,
        eps0=dec0.eigenvalues,
        V0=V0,
        psi=psi,
        log_p0=log_p0,
        eps_tau=dect.eigenvalues,
        Vtau=Vtau,
        log_ptau=log_ptau,
        log_q=log_q,
        eps_tilde=eps_tilde,
        log_ptilde=log_ptilde,
        overlap=overlap,
        beta=beta,
        Htau=p.Htau,
    )


def _shannon(logp: np.ndarray) -> float:
    p = np.exp(logp)
    nz = p > 0
    return float(-np.sum(p[nz] * logp[nz]))


def _trace_log_form(s: ReferenceStates) -> dict[str, float]:
    """Relative-entropy and trace-log forms built from spectral matrix logarithms."""

    def log_matrix(V, logp):
        return (V * np.where(np.isfinite(logp), logp, 0.0)) @ V.conj().T

    def tr(rho, M):
        return float(np.real(np.einsum("ij,ji->", rho, M)))

    ln_rho = log_matrix(s.psi, s.log_p0)
    ln_th = log_matrix(s.Vtau, s.log_ptau)
    ln_deph = log_matrix(s.Vtau, s.log_q)
    D = s.rho_tau_dephased
    return {
        "sigma": tr(s.rho_tau, ln_rho - ln_th),
        "gamma_cl": tr(D, ln_deph - ln_th),
        "gamma_qu": tr(s.rho_tau, ln_rho - ln_deph),
        "lambda_cl": tr(s.rho_tau, log_matrix(s.psi, s.log_p0 - s.log_ptilde)),
        "lambda_qu": tr(s.rho_tau, log_matrix(s.psi, s.log_ptilde) - ln_th),
    }


def _beta_free_energy(s: ReferenceStates, rho: np.ndarray, entropy: float) -> float:
    """``beta * F(rho) = beta tr(Htau rho) - S(rho)``; finite also at beta = 0."""
    return s.beta * float(np.real(np.einsum("ij,ji->", s.Htau, rho))) - entropy


def _free_energy_form(s: ReferenceStates) -> tuple[dict[str, float], float]:
    bf_rho = _beta_free_energy(s, s.rho_tau, _shannon(s.log_p0))
    bf_th = _beta_free_energy(s, s.rho_tau_th, _shannon(s.log_ptau))
    bf_deph = _beta_free_energy(s, s.rho_tau_dephased, _shannon(s.log_q))
    bf_tilde = _beta_free_energy(s, s.rho_tilde_th, _shannon(s.log_ptilde))
    scale = max(1.0, abs(bf_rho), abs(bf_th), abs(bf_deph), abs(bf_tilde))
    return {
        "sigma": bf_rho - bf_th,
        "gamma_cl": bf_deph - bf_th,
        "gamma_qu": bf_rho - bf_deph,
        "lambda_cl": bf_rho - bf_tilde,
        "lambda_qu": bf_tilde - bf_th,
    }, scale


def both_forms(states: ReferenceStates) -> tuple[dict[str, float], dict[str, float]]:
    """Return (relative-entropy forms, free-energy forms) without cross-checking."""
    return _trace_log_form(states), _free_energy_form(states)[0]


def average_split(p: WorkProtocol | ReferenceStates, tol: float = CROSS_CHECK_TOL) -> AverageSplit:
    """Sigma and both splittings, cross-checked between the two formula families."""
    s = p if isinstance(p, ReferenceStates) else reference_states(p)
    rel = _trace_log_form(s)
    free, scale = _free_energy_form(s)
    for name in QUANTITIES:
        if abs(rel[name] - free[name]) > tol * scale:
            raise ConsistencyError(
                f"{name}: relative-entropy form {rel[name]!r} and free-energy form "
                f"{free[name]!r} differ by more than {tol:g} x {scale:.3g}"
            )
    return AverageSplit(**rel)


def sigma(p: WorkProtocol) -> float:
    """Entropy production ``S(rho_tau || rho_tau_th)``."""
    return average_split(p).sigma


def gamma_split(p: WorkProtocol) -> tuple[float, float]:
    """``(Gamma_cl, Gamma_qu)``; ``Gamma_qu`` is the relative entropy of coherence."""
    a = average_split(p)
    return a.gamma_cl, a.gamma_qu


def lambda_split(p: WorkProtocol) -> tuple[float, float]:
    """``(Lambda_cl, Lambda_qu)`` through the Gibbs state of the dephased final Hamiltonian."""
    a = average_split(p)
    return a.lambda_cl, a.lambda_qu


def nonequilibrium_free_energy(rho, Htau, beta: float) -> float:
    """``tr(Htau rho) - S(rho)/beta``."""
    beta = check_beta(beta)
    if beta == 0.0:
        raise ValueError("free energy is undefined at beta = 0; use beta * F instead")
    Htau = check_hermitian(Htau, "Htau")
    return float(np.real(np.trace(Htau @ rho))) - von_neumann_entropy(rho) / beta


def commutator_norm(A, B) -> float:
    """Spectral norm of ``[A, B]``."""
    return float(np.linalg.norm(A @ B - B @ A, 2))
