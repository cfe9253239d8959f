"""Numerical laboratory for stochastic heat equations with multiplicative colored noise.

Modules: ``kernels`` (closed-form kernel math and the uniqueness-regime
classifier), ``noise`` (spectral synthesis of colored Gaussian increments),
``solver`` (exponential-Euler mild-solution integration, coupled pairs),
``ywtools`` (the constructive machinery behind square-root-type uniqueness
proofs), ``estimators`` (regularity and pair-divergence statistics),
``oracles`` (independent quadrature checks of the Gaussian kernel estimates),
``cli`` (deterministic experiment orchestration).
"""

__version__ = "0.1.0"

from .kernels import (
    KernelSpec,
    RegimeVerdict,
    classify_regime,
    dalang_condition,
    heat_kernel,
    kernel_eval,
    negative_moment_constant,
    semigroup_multiplier,
    spectral_density,
)
from .noise import (
    GridSpec,
    NoiseField,
    RngStream,
    empirical_covariance,
    read_field,
    sample_increment,
    spectral_amplitudes,
    synthesize,
    write_field,
)
from .solver import (
    Field,
    InitialCondition,
    SigmaSpec,
    SolutionPair,
    Trajectory,
    initial_field,
    sigma_eval,
    simulate,
    simulate_pair,
    step,
)
from .ywtools import RhoSpec, YWFamily, a_sequence, build_family, calculus_bound_check, delta_approx_check
from .estimators import (
    HolderReport,
    UniquenessReport,
    conditional_regularity,
    critical_exponent_limit,
    exponent_recursion,
    holder_exponent,
    structure_function,
    uniqueness_gap,
    weighted_sup_moment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
