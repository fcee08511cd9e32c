"""Dense Hermitian linear algebra used by every other module.

All matrix functions (exponentials, logarithms, real powers) go through an
eigendecomposition, never through power series. Gibbs weights are handled in
the log domain so that low temperatures do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import exprel, logsumexp

HERMITIAN_TOL = 1e-12
DEGENERACY_RTOL = 1e-9
SUPPORT_TOL = 1e-12


class NotHermitianError(ValueError):
    """Raised when a matrix that must be Hermitian is not."""


def check_square(A, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    return A


def check_hermitian(A, name: str = "matrix", tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate Hermiticity relative to the largest entry and return a complex copy."""
    A = check_square(A, name)
    scale = np.max(np.abs(A))
    violation = np.max(np.abs(A - A.conj().T))
    if violation > tol * max(scale, 1.0):
        raise NotHermitianError(
            f"{name} is not Hermitian: max |A - A^dagger| = {violation:.3e} "
            f"(max |A| = {scale:.3e}, tolerance {tol:g} relative)"
        )
    return 0.5 * (A + A.conj().T)


def check_unitary(U, name: str = "U", tol: float = 1e-10) -> np.ndarray:
    U = check_square(U, name)
    err = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if err > tol:
        raise ValueError(f"{name} is not unitary: max |U^dagger U - 1| = {err:.3e}")
    return U


def check_density_matrix(rho, name: str = "rho", tol: float = 1e-10) -> np.ndarray:
    rho = check_hermitian(rho, name, tol=max(tol, HERMITIAN_TOL))
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"{name} has trace {tr!r}, expected 1")
    lowest = np.linalg.eigvalsh(rho)[0]
    if lowest < -tol:
        raise ValueError(f"{name} has a negative eigenvalue {lowest:.3e}")
    return rho


def check_beta(beta: float) -> float:
    beta = float(beta)
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"inverse temperature must be finite and >= 0, got {beta!r}")
    return beta


def cluster_labels(eigenvalues: np.ndarray, tol: float) -> np.ndarray:
    """Single-linkage clustering of ascending eigenvalues with gap threshold ``tol``."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.size == 0:
        return np.zeros(0, dtype=int)
    gaps = np.diff(eigenvalues) > tol
    return np.concatenate([[0], np.cumsum(gaps)]).astype(int)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending), unitary eigenvector columns and degenerate-cluster ids."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    cluster_index: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n_clusters(self) -> int:
        return int(self.cluster_index.max()) + 1 if self.dim else 0

    def clusters(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.cluster_index == a) for a in range(self.n_clusters)]

    def projector(self, alpha: int) -> np.ndarray:
        cols = self.eigenvectors[:, self.cluster_index == alpha]
        return cols @ cols.conj().T

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T

    def apply(self, func) -> np.ndarray:
        """Matrix function ``V f(eps) V^dagger``."""
        V = self.eigenvectors
        return (V * func(self.eigenvalues)) @ V.conj().T


def spectral_decompose(H, degeneracy_tol: float | None = None) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix with degenerate-cluster labels.

    ``degeneracy_tol`` defaults to ``1e-9`` times the spectral range; two
    eigenvalues share a cluster when they are linked by a chain of gaps no
    larger than the tolerance.
    """
    H = check_hermitian(H, "H")
    eigs, vecs = np.linalg.eigh(H)
    if degeneracy_tol is None:
        degeneracy_tol = DEGENERACY_RTOL * (eigs[-1] - eigs[0])
    return SpectralDecomposition(eigs, vecs, cluster_labels(eigs, degeneracy_tol))


def gibbs_log_populations(energies, beta: float) -> tuple[np.ndarray, float]:
    """Return ``(log p, log Z)`` for Boltzmann weights ``exp(-beta * energies)``."""
    beta = check_beta(beta)
    logw = -beta * np.asarray(energies, dtype=float)
    log_z = float(logsumexp(logw))
    return logw - log_z, log_z


def gibbs_state(H, beta: float) -> tuple[np.ndarray, float]:
    """Thermal state ``exp(-beta H)/Z`` together with ``ln Z``."""
    dec = spectral_decompose(H)
    logp, log_z = gibbs_log_populations(dec.eigenvalues, beta)
    V = dec.eigenvectors
    return (V * np.exp(logp)) @ V.conj().T, log_z


def dephase(A, basis_of: SpectralDecomposition) -> np.ndarray:
    """Block-diagonal part of ``A`` with respect to the eigenspaces of a reference operator."""
    A = check_square(A, "A")
    if A.shape[0] != basis_of.dim:
        raise ValueError(f"dimension mismatch: A is {A.shape[0]}, reference is {basis_of.dim}")
    V = basis_of.eigenvectors
    Ae = V.conj().T @ A @ V
    same = basis_of.cluster_index[:, None] == basis_of.cluster_index[None, :]
    return V @ np.where(same, Ae, 0.0) @ V.conj().T


def _entropy_from_populations(p: np.ndarray) -> float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def von_neumann_entropy(rho) -> float:
    """``-tr rho ln rho`` in nats, with ``0 ln 0 = 0``."""
    rho = check_hermitian(rho, "rho", tol=1e-10)
    return _entropy_from_populations(np.linalg.eigvalsh(rho))


def relative_entropy(rho, sigma, support_tol: float = SUPPORT_TOL) -> float:
    """Quantum relative entropy ``tr rho (ln rho - ln sigma)``.

    Returns ``inf`` when ``rho`` has weight above ``support_tol`` on an
    eigenvector of ``sigma`` whose eigenvalue is below ``support_tol``.
    """
    rho = check_hermitian(rho, "rho", tol=1e-10)
    sigma = check_hermitian(sigma, "sigma", tol=1e-10)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    p = np.linalg.eigvalsh(rho)
    q, W = np.linalg.eigh(sigma)
    weights = np.real(np.einsum("ki,kl,li->i", W.conj(), rho, W))
    null = q < support_tol
    if np.any(weights[null] > support_tol):
        return float("inf")
    cross = float(np.sum(weights[~null] * np.log(q[~null])))
    return -_entropy_from_populations(p) - cross


def eig_power(log_eigs: np.ndarray, a: float) -> tuple[np.ndarray, bool]:
    """Elementwise ``exp(a * log_eigs)`` with ``0**0 = 1``.

    The flag is True when a null eigenvalue (``log = -inf``) is raised to a
    negative power, i.e. the result is infinite.
    """
    log_eigs = np.asarray(log_eigs, dtype=float)
    null = np.isneginf(log_eigs)
    if a == 0:
        return np.ones_like(log_eigs), False
    out = np.exp(a * np.where(null, 0.0, log_eigs))
    if a > 0:
        out[null] = 0.0
        return out, False
    return out, bool(np.any(null))


def _log_eigs(rho, support_tol: float) -> tuple[np.ndarray, np.ndarray]:
    p, V = np.linalg.eigh(check_hermitian(rho, "rho", tol=1e-10))
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        logp = np.where(p < support_tol, -np.inf, np.log(p))
    return logp, V


def trace_of_powers(factors) -> float:
    """``tr prod_k (V_k diag(exp(a_k log_eigs_k)) V_k^dagger)``.

    ``factors`` is a sequence of ``(log_eigs, eigenvectors, exponent)``.
    Returns ``inf`` if any null eigenvalue meets a negative exponent.
    """
    prod = None
    for log_eigs, V, a in factors:
        pw, infinite = eig_power(log_eigs, a)
        if infinite:
            return float("inf")
        M = (V * pw) @ V.conj().T
        prod = M if prod is None else prod @ M
    return float(np.real(np.trace(prod)))


def log_trace_of_powers(factors) -> float:
    """``ln`` of :func:`trace_of_powers`, evaluated in the log domain when possible.

    Consecutive factors sharing an eigenbasis are merged first. If two bases
    remain, ``tr A B = sum_ab a_a b_b |<a|b>|^2`` is summed with ``logsumexp``,
    which keeps full relative precision even for very wide spectra.
    """
    merged: list[tuple[np.ndarray, np.ndarray]] = []
    for log_eigs, V, a in factors:
        log_eigs = np.asarray(log_eigs, dtype=float)
        null = np.isneginf(log_eigs)
        if a < 0 and np.any(null):
            return float("inf")
        term = np.where(null, -np.inf if a > 0 else 0.0, a * np.where(null, 0.0, log_eigs))
        if merged and merged[-1][1] is V:
            merged[-1] = (merged[-1][0] + term, V)
        else:
            merged.append((term, V))
    if len(merged) > 1 and merged[0][1] is merged[-1][1]:
        first = merged.pop(0)
        merged[-1] = (merged[-1][0] + first[0], first[1])
    if len(merged) == 1:
        return float(logsumexp(merged[0][0]))
    if len(merged) == 2:
        (la, Va), (lb, Vb) = merged
        with np.errstate(divide="ignore"):
            log_overlap = 2.0 * np.log(np.abs(Va.conj().T @ Vb))
        return float(logsumexp(la[:, None] + lb[None, :] + log_overlap))
    tr = trace_of_powers([(lam, V, 1.0) for lam, V in merged])
    return float(np.log(tr)) if np.isfinite(tr) else float("inf")


def renyi_trace(rho, sigma, v: float, support_tol: float = SUPPORT_TOL) -> float:
    """``tr rho^v sigma^(1-v)`` from spectral powers; ``inf`` when a null eigenvalue gets a negative power."""
    lr, Vr = _log_eigs(rho, support_tol)
    ls, Vs = _log_eigs(sigma, support_tol)
    if Vr.shape != Vs.shape:
        raise ValueError("dimension mismatch")
    return trace_of_powers([(lr, Vr, v), (ls, Vs, 1.0 - v)])


def log_mean_matrix(p: np.ndarray) -> np.ndarray:
    """``(p_i - p_j)/(ln p_i - ln p_j)`` with limit ``p_i`` on the diagonal and 0 if either is 0."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    pi, pj = np.meshgrid(p, p, indexing="ij")
    out = np.zeros_like(pi)
    ok = (pi > 0) & (pj > 0)
    lo = np.minimum(pi, pj)[ok]
    delta = np.abs(np.log(pi[ok]) - np.log(pj[ok]))
    out[ok] = lo * exprel(delta)
    return out


def j_superoperator(rho, X) -> np.ndarray:
    """``integral_0^1 rho^t X rho^(1-t) dt`` evaluated in the eigenbasis of ``rho``."""
    p, V = np.linalg.eigh(check_hermitian(rho, "rho", tol=1e-10))
    X = check_square(X, "X")
    Xe = V.conj().T @ X @ V
    return V @ (Xe * log_mean_matrix(p)) @ V.conj().T


def _skew_profile(p: np.ndarray, absx2: np.ndarray, ys: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    py = p[None, :] ** ys[:, None]
    p1y = p[None, :] ** (1.0 - ys[:, None])
    a = py[:, :, None] - py[:, None, :]
    b = p1y[:, :, None] - p1y[:, None, :]
    return 0.5 * np.einsum("ij,yij->y", absx2, a * b)


def skew_information(rho, X, y: float) -> float:
    """Wigner-Yanase-Dyson skew information ``-1/2 tr [rho^y, X][rho^(1-y), X]``."""
    if not 0.0 < y < 1.0:
        raise ValueError(f"y must lie in (0, 1), got {y!r}")
    p, V = np.linalg.eigh(check_hermitian(rho, "rho", tol=1e-10))
    Xe = V.conj().T @ check_hermitian(X, "X") @ V
    return float(_skew_profile(p, np.abs(Xe) ** 2, np.array([y]))[0])


def gauss_legendre(a: float, b: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def coherence_measure_Q(rho, X, beta: float, nodes: int = 32) -> float:
    """``(beta/2) integral_0^1 I^y(rho, X) dy`` by Gauss-Legendre quadrature."""
    if nodes < 8:
        raise ValueError("at least 8 quadrature nodes are required")
    beta = check_beta(beta)
    p, V = np.linalg.eigh(check_hermitian(rho, "rho", tol=1e-10))
    Xe = V.conj().T @ check_hermitian(X, "X") @ V
    ys, ws = gauss_legendre(0.0, 1.0, nodes)
    return 0.5 * beta * float(ws @ _skew_profile(p, np.abs(Xe) ** 2, ys))


def expectation(rho, X) -> float:
    return float(np.real(np.trace(rho @ X)))


def variance(rho, X) -> float:
    m = expectation(rho, X)
    return expectation(rho, X @ X) - m * m


def unitary_from_generator(G, t: float = 1.0) -> np.ndarray:
    """``exp(-i t G)`` for Hermitian ``G`` via its eigendecomposition."""
    dec = spectral_decompose(G)
    return dec.apply(lambda e: np.exp(-1j * t * e))
