"""Subspace-transfer control of a random-coupling transverse Ising ring."""

__version__ = "0.1.0"

from .spin_model import (
    BoundaryStates,
    Breaker,
    IndexBase,
    SpinChainSpec,
    Spectrum,
    SubspaceDefinition,
    build_boundary_states,
    build_terms,
    degeneracy_report,
    diagonalize,
    gap_profile,
    static_hamiltonian,
)
from .pulses import (
    DressedPulse,
    DressingTerm,
    GaussianFamily,
    GaussianPulse,
    PiecewiseConstantPulse,
    PolynomialFamily,
    PolynomialPulse,
    make_random_basis,
    sample_to_bins,
    solve_polynomial,
    write_pulse_csv,
)
from .dynamics import (
    ControlProblem,
    EvolutionResult,
    PropagationSettings,
    batch_fidelity,
    propagate,
    state_fidelity,
    step_propagator,
    subspace_fidelity,
)
from .optimizers import (
    DcrabConfig,
    GrapeConfig,
    OptimizationResult,
    SearchBox,
    dcrab_optimize,
    finite_difference_gradient,
    grape_cost,
    grape_gradient,
    grape_optimize,
    grid_search,
    nelder_mead,
    random_search,
)
from .harness import (
    ComparisonRecord,
    ExperimentConfig,
    LandscapeGrid,
    SchemeSpec,
    TrialRecord,
    TrialSet,
    compare_schemes,
    draw_couplings,
    landscape_sweep,
    run_campaign,
)
