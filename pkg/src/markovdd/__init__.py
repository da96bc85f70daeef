"""Dynamical decoupling of quantum dynamical semigroups under Markov and Cauchy dilations."""
from .collision import (
    CollisionConfig, convergence_study, evolve_dd, seed_averaged_study, step_map_vacuum, step_unitary,
    vacuum_amplitude_dd, vacuum_amplitude_target,
)
from .decouple import (
    DDScheme, averaged_generator, group_average, lambda_rate, pauli_group, sequence, verify_decoupling_set,
    weyl_group, x_flip_set,
)
from .pocket import (
    SpectralModel, cauchy_generator, cauchy_semigroup, dd_pocket_evolution, markov_two_time,
    mc_cauchy_oracle, two_time_kernel,
)
from .semigroup import (
    HEISENBERG, SCHRODINGER, LindbladModel, SuperOperator, choi_matrix, cp_check, dissipation,
    generator_superop, markov_kernel, semigroup_map,
)

__version__ = "0.1.0"
