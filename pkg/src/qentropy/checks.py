"""Seeded property suites over random protocols, reported invariant by invariant."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .models import random_protocol, random_unitary
from .splitting import QUANTITIES, WorkProtocol, average_split, both_forms, commutator_norm, reference_states
from .trajectories import build_table, cgf_trace, empirical_cgf, fluctuation_theorem_check, table_invariants

FT_TOL = 1e-9
ADDITIVITY_TOL = 1e-9
CGF_TOL = 1e-9
POSITIVITY_FLOOR = -1e-10
LAMBDA_QU_ZERO = 1e-8
COMMUTATOR_ZERO = 1e-6


@dataclass
class CheckResult:
    suite: str
    invariant: str
    passed: bool
    worst: float
    cases: int
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _draw(rng: np.random.Generator, commuting: bool = False) -> WorkProtocol:
    d = int(rng.integers(2, 17))
    beta = float(rng.uniform(0.1, 10.0))
    return random_protocol(d, beta, rng, commuting=commuting)


def fluctuation_suite(rng: np.random.Generator, n: int = 200) -> list[CheckResult]:
    worst = dict.fromkeys(QUANTITIES, 0.0)
    lqu = []
    for _ in range(n):
        ft = fluctuation_theorem_check(build_table(_draw(rng)))
        for q in QUANTITIES[:-1]:
            worst[q] = max(worst[q], abs(ft[q] - 1.0))
        lqu.append(ft["lambda_qu"])
    out = [
        CheckResult("fluctuation", f"<exp(-{q})> = 1", worst[q] <= FT_TOL, worst[q], n)
        for q in QUANTITIES[:-1]
    ]
    out.append(
        CheckResult(
            "fluctuation",
            "<exp(-lambda_qu)> (reported)",
            True,
            float(np.max(np.abs(np.array(lqu) - 1.0))),
            n,
            f"range [{min(lqu):.6g}, {max(lqu):.6g}]",
        )
    )
    return out


def positivity_suite(rng: np.random.Generator, n: int = 500, n_commuting: int = 100) -> list[CheckResult]:
    lowest = np.inf
    mismatches = []
    for k in range(n):
        p = _draw(rng, commuting=k < n_commuting)
        s = reference_states(p)
        lqu = average_split(s).lambda_qu
        lowest = min(lowest, lqu)
        comm = commutator_norm(p.Htau, s.rho_tau)
        if (lqu < LAMBDA_QU_ZERO) != (comm < COMMUTATOR_ZERO):
            mismatches.append(f"case {k}: lambda_qu={lqu:.3e}, ||[Htau, rho_tau]||={comm:.3e}")
    return [
        CheckResult("lambda-positivity", "lambda_qu >= -1e-10", lowest >= POSITIVITY_FLOOR, float(lowest), n),
        CheckResult(
            "lambda-positivity",
            "lambda_qu vanishes iff [Htau, rho_tau] = 0",
            not mismatches,
            float(len(mismatches)),
            n,
            "; ".join(mismatches[:5]),
        ),
    ]


def additivity_suite(rng: np.random.Generator, n: int = 200) -> list[CheckResult]:
    worst_sum = worst_forms = 0.0
    for _ in range(n):
        s = reference_states(_draw(rng))
        rel, free = both_forms(s)
        worst_sum = max(
            worst_sum,
            abs(rel["gamma_cl"] + rel["gamma_qu"] - rel["sigma"]),
            abs(rel["lambda_cl"] + rel["lambda_qu"] - rel["sigma"]),
        )
        worst_forms = max(worst_forms, max(abs(rel[q] - free[q]) for q in QUANTITIES))
    return [
        CheckResult("additivity", "both splits sum to sigma", worst_sum <= ADDITIVITY_TOL, worst_sum, n),
        CheckResult(
            "additivity", "relative-entropy and free-energy forms agree", worst_forms <= ADDITIVITY_TOL, worst_forms, n
        ),
    ]


def cgf_suite(rng: np.random.Generator, n: int = 50, points: int = 20) -> list[CheckResult]:
    worst = 0.0
    for _ in range(n):
        p = _draw(rng)
        s = reference_states(p)
        table = build_table(s)
        for v, u in rng.uniform(-0.5, 1.5, size=(points, 2)):
            for which in ("sigma", "gamma", "lambda"):
                worst = max(worst, abs(cgf_trace(s, which, v, u) - empirical_cgf(table, which, v, u)))
    return [CheckResult("cgf", "trace CGF = empirical CGF", worst <= CGF_TOL, worst, n * points)]


def negative_control_suite(rng: np.random.Generator, error: float = 1e-3) -> list[CheckResult]:
    """A unitary perturbed by ``error`` must trip the doubly-stochastic invariant."""
    p = _draw(rng)
    bad_u = random_unitary(p.dim, rng) + error * (rng.normal(size=(p.dim, p.dim)))
    corrupted = WorkProtocol(p.H0, p.Htau, bad_u, p.beta, check_unitarity=False)
    violations = table_invariants(build_table(corrupted, check=False))
    stochastic = [v for v in violations if v.startswith("doubly stochastic")]
    return [
        CheckResult(
            "negative-control",
            "table invariants under a corrupted unitary",
            not violations,
            float(len(violations)),
            1,
            "; ".join(stochastic or violations),
        )
    ]


SUITES = {
    "fluctuation": fluctuation_suite,
    "lambda-positivity": positivity_suite,
    "additivity": additivity_suite,
    "cgf": cgf_suite,
    "negative-control": negative_control_suite,
}
DEFAULT_SUITES = ("fluctuation", "lambda-positivity", "additivity", "cgf")


def run_checks(suites=DEFAULT_SUITES, seed: int = 0) -> list[CheckResult]:
    """Run suites in order; each draws from a stream keyed by ``seed`` and its own name."""
    names = list(SUITES)
    results = []
    for name in suites:
        if name not in SUITES:
            raise KeyError(f"unknown check suite {name!r}; choose from {sorted(SUITES)}")
        ss = np.random.SeedSequence(seed, spawn_key=(names.index(name),))
        results.extend(SUITES[name](np.random.default_rng(ss)))
    return results
