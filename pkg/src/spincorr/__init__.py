"""Exact correlation-property checkers and spin-system semigroups on {0,1}^n."""

from .lattice import (
    BudgetError,
    decompose_increasing,
    enumerate_up_sets,
    flip,
    is_increasing,
    is_up_set,
    meet_join,
)
from .measures import (
    EXACT,
    FAILS,
    FLOAT,
    HOLDS,
    SEARCH_EXHAUSTED,
    ProbabilityMeasure,
    PropertyReport,
    WeightVector,
    condition_zeros,
    covariance,
    expectation,
    is_associated,
    is_downward_fkg,
    mix,
    normalize,
    project_zeros,
    reverify_witness,
    satisfies_lattice,
    stochastically_dominates,
    tilt,
)
from .tilts import TiltFunction, TiltSampler, conditioning_tilt, dca_falsify
from .dynamics import (
    AdditiveDecomposition,
    EventPolynomial,
    Generator,
    RateTable,
    additive_decomposition,
    association_determinant_poly,
    birth_submodularity,
    births_additive,
    build_generator,
    contact_process,
    deaths_constant,
    deaths_constant_on_occupied,
    derivative_at_zero,
    has_independent_flips,
    independent_flip_kernel,
    is_attractive,
    path_edges,
    semigroup_apply,
    semigroup_apply_expm,
    semigroup_apply_function,
    trotter_compose,
)
from .three_site import SYSTEMS, ThreeSiteCoords, ThreeSiteVerdicts, classify, margins
from .harness import (
    ExperimentOutcome,
    ExperimentSpec,
    SearchOutcome,
    corner_flip_system,
    crossed_birth_pair,
    derangement_measure,
    implication_gap_measures,
    random_measure,
    search_counterexample,
    supermodular_single_birth,
    verify_preservation,
)

__version__ = "0.1.0"
