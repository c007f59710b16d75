"""Classical shadow tomography with noisy randomized measurements."""
from .channels import (QuantumChannel, Superoperator, alpha, beta, channel_from_descriptor, compose,
                       in_lambda_n, is_inconsequential, make_amplitude_damping, make_dephasing,
                       make_depolarizing, make_identity, make_kraus, make_reset, random_cptp, tensor)
from .ensembles import (enumerate_clifford, global_clifford, is_t_design, product_clifford,
                        single_qubit_clifford_group)
from .errors import (ChannelValidityError, ConfigError, ContractViolationError, DimensionMismatchError,
                     NotInvertibleError, ParameterError, ShadowError, UnsupportedError)
from .estimator import collect_shadows, estimate, exact_moments, exact_snapshot_mean, median_of_means
from .linalg import pauli_matrix, random_density_matrix, traceless_part
from .planner import advisory_f_bounds, plan_general, plan_global, plan_pauli
from .seminorm import (locality_reduce, seminorm_auto, seminorm_bruteforce, seminorm_global_bounds,
                       seminorm_global_traceless, seminorm_klocal_depolarizing, seminorm_pauli_product)
from .shadow import (ShadowChannel, ShadowSet, f_of_E, inverse_shadow, is_invertible, shadow_channel,
                     shadow_channel_closed_form, shadow_superop_bruteforce)

__version__ = "0.1.0"

__all__ = [
    "QuantumChannel", "Superoperator", "alpha", "beta", "channel_from_descriptor", "compose",
    "in_lambda_n", "is_inconsequential", "make_amplitude_damping", "make_dephasing",
    "make_depolarizing", "make_identity", "make_kraus", "make_reset", "random_cptp", "tensor",
    "enumerate_clifford", "global_clifford", "is_t_design", "product_clifford",
    "single_qubit_clifford_group", "ChannelValidityError", "ConfigError",
    "ContractViolationError", "DimensionMismatchError", "NotInvertibleError", "ParameterError",
    "ShadowError", "UnsupportedError", "locality_reduce", "seminorm_auto",
    "seminorm_bruteforce", "seminorm_global_bounds", "seminorm_global_traceless",
    "seminorm_klocal_depolarizing", "seminorm_pauli_product", "ShadowChannel", "ShadowSet",
    "f_of_E", "inverse_shadow", "is_invertible", "shadow_channel", "shadow_channel_closed_form",
    "shadow_superop_bruteforce", "collect_shadows", "estimate", "exact_moments",
    "exact_snapshot_mean", "median_of_means", "advisory_f_bounds", "plan_general", "plan_global",
    "plan_pauli", "pauli_matrix", "random_density_matrix", "traceless_part",
]
