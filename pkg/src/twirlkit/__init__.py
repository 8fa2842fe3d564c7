"""twirlkit: simulation and estimation for symmetrised noise characterisation.

The package simulates the randomized-symmetrisation protocol against
configurable n-qubit noise channels and recovers the error-weight probability
distribution with exact combinatorics, rigorous sample-size bounds, and
diagnostic tests for noise correlations and memory effects.
"""

from .channels import (
    EigenvalueVector,
    KrausChannel,
    PauliChannel,
    WeightDistribution,
    compose,
    depolarizing_product,
    engineered_channel,
    pauli_decompose,
    validate,
    weight_distribution,
)
from .diagnostics import (
    DiagnosticVerdict,
    correlation_scale,
    markovianity_test,
    scaling_law_test,
)
from .estimator import (
    LinearInversion,
    MLFit,
    ParityEstimate,
    SubsetPolicy,
    estimate_c,
    linear_invert,
    mle_fit,
    normalize_reference,
)
from .pauli import (
    CliffordLayer,
    PauliString,
    QubitPermutation,
    SingleQubitClifford,
    commutes,
    conjugate,
    enumerate_cliffords,
    permute,
    sample_uniform_clifford_layer,
    weight,
)
from .protocol import (
    ProtocolConfig,
    SpamModel,
    TrialRecord,
    TrialSet,
    reference_run,
    simulate_ensemble,
    simulate_standard,
)
from .twirl import eigenvalues, exact_twirl, exact_twirl_bruteforce, symmetrized_channel
from .weightspace import (
    HammingMatrix,
    OmegaMatrix,
    chernoff_sample_size,
    hamming_matrix,
    omega,
    omega_inv,
    recover_p_from_hamming,
    uncertainty_bounds,
    union_bound_sample_size,
)

__version__ = "0.1.0"

__all__ = [
    "CliffordLayer",
    "DiagnosticVerdict",
    "EigenvalueVector",
    "HammingMatrix",
    "KrausChannel",
    "LinearInversion",
    "MLFit",
    "OmegaMatrix",
    "ParityEstimate",
    "PauliChannel",
    "PauliString",
    "ProtocolConfig",
    "QubitPermutation",
    "SingleQubitClifford",
    "SpamModel",
    "SubsetPolicy",
    "TrialRecord",
    "TrialSet",
    "WeightDistribution",
    "chernoff_sample_size",
    "commutes",
    "compose",
    "conjugate",
    "correlation_scale",
    "depolarizing_product",
    "eigenvalues",
    "engineered_channel",
    "enumerate_cliffords",
    "estimate_c",
    "exact_twirl",
    "exact_twirl_bruteforce",
    "hamming_matrix",
    "linear_invert",
    "markovianity_test",
    "mle_fit",
    "normalize_reference",
    "omega",
    "omega_inv",
    "pauli_decompose",
    "permute",
    "recover_p_from_hamming",
    "reference_run",
    "sample_uniform_clifford_layer",
    "scaling_law_test",
    "simulate_ensemble",
    "simulate_standard",
    "symmetrized_channel",
    "uncertainty_bounds",
    "union_bound_sample_size",
    "validate",
    "weight",
    "weight_distribution",
]
