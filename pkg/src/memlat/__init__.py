"""Cascaded atom-membrane cooling models.

Hybrid system of a lattice-trapped atomic ensemble coupled to a vibrating
membrane by the retro-reflected lattice field.  The membrane feels the
atomic back-action reduced by its power reflectivity; the resulting
one-way (cascaded) master equation, its Gaussian moment flow, an exact
Fock-space solver, the stochastic-equation generator equivalence check,
and weak-coupling rate formulas.  All frequencies and rates are angular
(rad/s).
"""

from .analytic import (
    ComparisonReport,
    WeakCouplingResult,
    compare_with_exact,
    rate_equation,
    weak_coupling,
)
from .errors import (
    CapExceeded,
    DegenerateKernel,
    DetuningSmall,
    EquivalenceFailed,
    InvalidInput,
    MemlatError,
    NonPositiveInput,
    NotHurwitz,
    NumericalError,
    OutOfRegime,
    ReflectivityZero,
    StepTooLarge,
    TrapFrequencyImaginary,
    TruncationLeak,
    ZeroCoolRate,
)
from .fock import (
    ConvergenceReport,
    DensityMatrix,
    FockConfig,
    Liouvillian,
    build_liouvillian,
    evolve_fock,
    level_populations,
    mode_operators,
    moments,
    steady_state_fock,
    truncation_convergence,
)
from .gaussian import (
    CoolingResult,
    DriftDiffusion,
    GaussianState,
    cooling_factor,
    drift_diffusion,
    evolve,
    occupation,
    steady_state,
    thermal_state,
    vacuum_state,
)
from .params import (
    ModelParams,
    PhysicalParams,
    derive_model,
    derive_qsse_couplings,
    model_from_dict,
    model_to_dict,
    physical_from_dict,
    preset_case_study,
    resonant,
)
from .qsse import (
    EquivalenceReport,
    ItoGenerator,
    build_ito_generator,
    extract_mean_flow,
    ito_generator,
    random_coupling_model,
    verify_equivalence,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
