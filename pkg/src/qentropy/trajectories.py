"""Two-point-measurement trajectories, stochastic splittings, distributions and CGFs.

Trajectories ``|i_0> -> |j_tau>`` are enumerated exactly. Probabilities and the
stochastic quantities are kept in the log domain so that strongly suppressed
paths at low temperature neither underflow nor produce ``0 * inf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .linalg import log_trace_of_powers
from .splitting import QUANTITIES, ReferenceStates, WorkProtocol, reference_states

VALUE_MERGE_TOL = 1e-10
INFINITE_WEIGHT_TOL = 1e-14
# |amplitude|^2 of a roundoff-sized overlap; such atoms carry no information
ROUNDOFF_WEIGHT = 1e-28
NORMALIZATION_TOL = 1e-10
DOUBLY_STOCHASTIC_TOL = 1e-9

JOINT_PAIRS = {"gamma": ("gamma_cl", "gamma_qu"), "lambda": ("lambda_cl", "lambda_qu")}


class InvariantViolation(RuntimeError):
    """A trajectory-table invariant failed (normalization, doubly stochastic overlaps, ...)."""


class DivergentQuantityError(ValueError):
    """A distribution carries non-negligible weight on an infinite value."""


@dataclass(frozen=True)
class TrajectoryTable:
    """Joint forward probabilities and per-trajectory stochastic values.

    Arrays indexed ``[i, j]`` run over initial (``i``) and final (``j``)
    energy eigenstates in ascending energy order.
    """

    p0: np.ndarray
    ptau: np.ndarray
    q: np.ndarray
    ptilde: np.ndarray
    overlap: np.ndarray
    log_pf: np.ndarray
    values: dict

    @property
    def dim(self) -> int:
        return self.p0.shape[0]

    @property
    def pf(self) -> np.ndarray:
        return np.exp(self.log_pf)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def backward_probabilities(self) -> np.ndarray:
        """``P_B[i, j] = |<i_0|U^dagger|j_tau>|^2 p_j^tau``."""
        return self.overlap * self.ptau[None, :]

    def average(self, name: str) -> float:
        x = self.values[name]
        mask = np.isfinite(self.log_pf)
        return float(np.sum(np.exp(self.log_pf[mask]) * x[mask]))

    def infinite_weight(self, name: str) -> float:
        """Total forward probability sitting on infinite values of ``name``."""
        x = self.values[name]
        return float(np.sum(np.exp(self.log_pf[~np.isfinite(x)])))


def _table_from_states(s: ReferenceStates, check: bool = True) -> TrajectoryTable:
    with np.errstate(divide="ignore"):
        log_overlap = np.log(s.overlap)
    log_pf = log_overlap + s.log_p0[:, None]
    lp0 = s.log_p0[:, None]
    lpt = s.log_ptau[None, :]
    lq = s.log_q[None, :]
    lpt_i = s.log_ptilde[:, None]
    with np.errstate(invalid="ignore"):
        values = {
            "sigma": np.broadcast_to(lp0 - lpt, log_pf.shape).copy(),
            "gamma_cl": np.broadcast_to(lq - lpt, log_pf.shape).copy(),
            "gamma_qu": np.broadcast_to(lp0 - lq, log_pf.shape).copy(),
            "lambda_cl": np.broadcast_to(lp0 - lpt_i, log_pf.shape).copy(),
            "lambda_qu": np.broadcast_to(lpt_i - lpt, log_pf.shape).copy(),
        }
    table = TrajectoryTable(
        p0=np.exp(s.log_p0),
        ptau=np.exp(s.log_ptau),
        q=np.exp(s.log_q),
        ptilde=np.exp(s.log_ptilde),
        overlap=s.overlap,
        log_pf=log_pf,
        values=values,
    )
    if check:
        violations = table_invariants(table)
        if violations:
            raise InvariantViolation("; ".join(violations))
    return table


def build_table(p: WorkProtocol | ReferenceStates, check: bool = True) -> TrajectoryTable:
    """Enumerate all trajectories of the two-point measurement scheme."""
    s = p if isinstance(p, ReferenceStates) else reference_states(p)
    if s.beta <= 0:
        raise ValueError("trajectory tables need beta > 0")
    return _table_from_states(s, check=check)


def table_invariants(table: TrajectoryTable) -> list[str]:
    """Names and magnitudes of violated table invariants (empty when all hold)."""
    out = []
    total = float(np.exp(logsumexp(table.log_pf)))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        out.append(f"normalization: sum P_F = {total!r}")
    ds = max(
        np.max(np.abs(table.overlap.sum(axis=0) - 1.0)),
        np.max(np.abs(table.overlap.sum(axis=1) - 1.0)),
    )
    if ds > DOUBLY_STOCHASTIC_TOL:
        out.append(f"doubly stochastic: overlap row/column sums deviate by {ds:.3e}")
    marg = np.max(np.abs(table.pf.sum(axis=0) - table.q))
    if marg > NORMALIZATION_TOL:
        out.append(f"marginalization: sum_i P_F - q deviates by {marg:.3e}")
    return out


@dataclass(frozen=True)
class DiscreteDistribution:
    values: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        if np.any(self.probabilities < 0):
            raise ValueError("negative probability")

    def __len__(self) -> int:
        return self.values.shape[0]

    def mean(self) -> float:
        fin = np.isfinite(self.values)
        return float(self.probabilities[fin] @ self.values[fin])


def merge_atoms(values, probabilities, tol: float = VALUE_MERGE_TOL) -> DiscreteDistribution:
    """Aggregate atoms whose values are chained within ``tol``; zero-weight atoms are dropped."""
    values = np.asarray(values, dtype=float).ravel()
    probabilities = np.asarray(probabilities, dtype=float).ravel()
    keep = probabilities > 0
    values, probabilities = values[keep], probabilities[keep]
    order = np.argsort(values, kind="stable")
    v, w = values[order], probabilities[order]
    if v.size == 0:
        return DiscreteDistribution(v, w)
    with np.errstate(invalid="ignore"):
        new_group = np.concatenate([[True], ~(np.diff(v) <= tol)])
    starts = np.flatnonzero(new_group)
    probs = np.add.reduceat(w, starts)
    finite_v = np.where(np.isfinite(v), v, 0.0)
    means = np.add.reduceat(w * finite_v, starts) / probs
    atom_vals = np.where(np.isfinite(v[starts]), means, v[starts])
    return DiscreteDistribution(atom_vals, probs)


def distribution(table: TrajectoryTable, which: str) -> DiscreteDistribution:
    """``P(x) = sum_ij P_F[i, j] delta(x - x[i, j])`` for a stochastic quantity."""
    if which not in QUANTITIES:
        raise KeyError(f"unknown quantity {which!r}; choose from {QUANTITIES}")
    pf = np.where(table.pf > ROUNDOFF_WEIGHT, table.pf, 0.0)
    return merge_atoms(table.values[which], pf)


@dataclass(frozen=True)
class CumulantSet:
    kappa1: float
    kappa2: float
    kappa3: float
    kappa4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.kappa1, self.kappa2, self.kappa3, self.kappa4)


def cumulants(dist: DiscreteDistribution, name: str = "quantity") -> CumulantSet:
    """First four cumulants from central moments of the finite atoms."""
    fin = np.isfinite(dist.values)
    inf_weight = float(dist.probabilities[~fin].sum())
    if inf_weight >= INFINITE_WEIGHT_TOL:
        raise DivergentQuantityError(
            f"{name} has probability {inf_weight:.3e} on infinite values; cumulants diverge"
        )
    x, w = dist.values[fin], dist.probabilities[fin]
    m = float(w @ x)
    dx = x - m
    mu2 = float(w @ dx**2)
    mu3 = float(w @ dx**3)
    mu4 = float(w @ dx**4)
    return CumulantSet(m, mu2, mu3, mu4 - 3.0 * mu2**2)


def fluctuation_theorem_check(table: TrajectoryTable) -> dict[str, float]:
    """``<exp(-x)>`` for all five quantities.

    The first four equal 1 for every protocol; the ``lambda_qu`` entry is
    reported only, since it obeys a fluctuation theorem just for infinitesimal quenches.
    """
    out = {}
    for name in QUANTITIES:
        out[name] = float(np.exp(empirical_log_mgf(table, {name: 1.0})))
    return out


def empirical_log_mgf(table: TrajectoryTable, coefficients: dict[str, float]) -> float:
    """``ln sum_ij P_F[i, j] exp(-sum_x c_x x[i, j])`` over trajectories with nonzero weight."""
    mask = np.isfinite(table.log_pf)
    expo = table.log_pf.copy()
    for name, c in coefficients.items():
        if c == 0:
            continue
        x = table.values[name]
        with np.errstate(invalid="ignore"):
            expo = expo - c * x
    return float(logsumexp(expo[mask]))


def empirical_cgf(table: TrajectoryTable, which: str, v: float, u: float = 0.0) -> float:
    """Empirical CGF matching the selectors of :func:`cgf_trace`."""
    if which in JOINT_PAIRS:
        a, b = JOINT_PAIRS[which]
        return empirical_log_mgf(table, {a: v, b: u})
    if which in QUANTITIES:
        return empirical_log_mgf(table, {which: v})
    raise KeyError(f"unknown CGF selector {which!r}")


def cgf_trace(p: WorkProtocol | ReferenceStates, which: str, v: float, u: float = 0.0) -> float:
    """CGF from trace formulas of matrix powers.

    Selectors: ``sigma`` (uses ``v``), ``gamma`` and ``lambda`` (joint, uses
    ``v`` for the classical and ``u`` for the quantum part), or any single
    component name (uses ``v``). Returns ``inf`` when a null eigenvalue
    receives a negative power.
    """
    s = p if isinstance(p, ReferenceStates) else reference_states(p)
    th = (s.log_ptau, s.Vtau)
    rho = (s.log_p0, s.psi)
    deph = (s.log_q, s.Vtau)
    tilde = (s.log_ptilde, s.psi)
    if which == "sigma":
        factors = [(*th, v), (*rho, 1.0 - v)]
    elif which == "gamma":
        factors = [(*th, v), (*deph, u - v), (*rho, 1.0 - u)]
    elif which == "lambda":
        factors = [(*th, u), (*tilde, v - u), (*rho, 1.0 - v)]
    elif which in ("gamma_cl", "lambda_cl"):
        return cgf_trace(s, which.split("_")[0], v, 0.0)
    elif which in ("gamma_qu", "lambda_qu"):
        return cgf_trace(s, which.split("_")[0], 0.0, v)
    else:
        raise KeyError(f"unknown CGF selector {which!r}")
    return log_trace_of_powers(factors)


def weighted_quantile(values: np.ndarray, weights: np.ndarray, qs) -> np.ndarray:
    order = np.argsort(values)
    v, w = values[order], weights[order]
    cdf = np.cumsum(w) - 0.5 * w
    cdf /= w.sum()
    return np.interp(qs, cdf, v)


def histogram(dist: DiscreteDistribution, bin_width: float | None = None):
    """Weighted histogram of the finite atoms; Freedman-Diaconis width by default.

    Returns ``(edges, probability_per_bin)``.
    """
    fin = np.isfinite(dist.values)
    x, w = dist.values[fin], dist.probabilities[fin]
    if x.size == 0:
        return np.array([0.0, 1.0]), np.array([0.0])
    lo, hi = float(x.min()), float(x.max())
    if bin_width is None:
        q25, q75 = weighted_quantile(x, w, [0.25, 0.75])
        n_eff = w.sum() ** 2 / np.sum(w**2)
        bin_width = 2.0 * (q75 - q25) / np.cbrt(n_eff)
    if not bin_width > 0 or hi == lo:
        bin_width = max(hi - lo, 1.0)
    n_bins = max(1, int(np.ceil((hi - lo) / bin_width)))
    edges = lo + bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(x, bins=edges, weights=w)
    return edges, counts
