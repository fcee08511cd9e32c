"""Entropy production of unitary work protocols and its classical/quantum splittings."""

from ._version import __version__
from .linalg import (
    NotHermitianError,
    coherence_measure_Q,
    dephase,
    gibbs_state,
    j_superoperator,
    relative_entropy,
    renyi_trace,
    skew_information,
    spectral_decompose,
    von_neumann_entropy,
)
from .models import (
    MacrospinParams,
    QubitQuenchParams,
    macrospin_protocol,
    qubit_closed_forms,
    qubit_pulse_protocol,
    qubit_quench_protocol,
    random_protocol,
    spin_operators,
)
from .perturbation import (
    DegenerateSpectrumError,
    PerturbationInput,
    analyticity_report,
    expansion_coefficients,
    fdr_decomposition,
    perturbative_cgf,
    perturbative_split,
    quench_sigma_exact,
    split_perturbation,
    susceptibility_sigma,
)
from .splitting import (
    AverageSplit,
    ConsistencyError,
    WorkProtocol,
    average_split,
    gamma_split,
    lambda_split,
    nonequilibrium_free_energy,
    reference_states,
    sigma,
)
from .tfim import (
    TfimParams,
    gamma_split_tfim,
    infinitesimal_tfim,
    lambda_split_tfim,
    mode_data,
    pair_mode_oracle,
)
from .trajectories import (
    DivergentQuantityError,
    InvariantViolation,
    build_table,
    cgf_trace,
    cumulants,
    distribution,
    empirical_cgf,
    fluctuation_theorem_check,
    histogram,
)

__all__ = [
    "__version__",
    "NotHermitianError",
    "coherence_measure_Q",
    "dephase",
    "gibbs_state",
    "j_superoperator",
    "relative_entropy",
    "renyi_trace",
    "skew_information",
    "spectral_decompose",
    "von_neumann_entropy",
    "MacrospinParams",
    "QubitQuenchParams",
    "macrospin_protocol",
    "qubit_closed_forms",
    "qubit_pulse_protocol",
    "qubit_quench_protocol",
    "random_protocol",
    "spin_operators",
    "DegenerateSpectrumError",
    "PerturbationInput",
    "analyticity_report",
    "expansion_coefficients",
    "fdr_decomposition",
    "perturbative_cgf",
    "perturbative_split",
    "quench_sigma_exact",
    "split_perturbation",
    "susceptibility_sigma",
    "AverageSplit",
    "ConsistencyError",
    "WorkProtocol",
    "average_split",
    "gamma_split",
    "lambda_split",
    "nonequilibrium_free_energy",
    "reference_states",
    "sigma",
    "TfimParams",
    "gamma_split_tfim",
    "infinitesimal_tfim",
    "lambda_split_tfim",
    "mode_data",
    "pair_mode_oracle",
    "DivergentQuantityError",
    "InvariantViolation",
    "build_table",
    "cgf_trace",
    "cumulants",
    "distribution",
    "empirical_cgf",
    "fluctuation_theorem_check",
    "histogram",
]
