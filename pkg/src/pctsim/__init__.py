"""Exact sampling for chains with unbounded variable-length memory whose
context length is driven by the distance to the last occurrence of a
reference string, plus the bounding processes and regeneration reports
that make the sampler auditable."""

__version__ = "0.1.0"

from .analysis import (
    AuxiliaryTrace,
    DominatingProcess,
    RegenerationReport,
    RescaledTrace,
    ReturnTimeStats,
    SpontaneousTrace,
    anchor_repeats,
    auxiliary_trace,
    block_regen_time,
    check_coarse_bound,
    coarse_length,
    coarse_length_inverse,
    dominating_process,
    hidden_regeneration,
    rescaled_trace,
    return_time_statistics,
    spontaneous_anchor_time,
    spontaneous_trace,
    summability_terms,
    visible_regeneration,
)
from .cftp import (
    DEFAULT_MAX_BACK,
    ConstructWitness,
    SimulationResult,
    construct_window,
    regen_time,
    sample_stationary,
    simulate,
    simulate_naive,
)
from .dsl import format_model, parse_model
from .errors import (
    AbortedError,
    IndexNotCoveredError,
    ModelInconsistentError,
    NegativeWidthError,
    NoRuleError,
    OracleUnsupportedError,
    ParseError,
    PctsimError,
    SemanticError,
)
from .model import (
    Alphabet,
    ContextTreeModel,
    DistanceRule,
    LengthFn,
    TransitionRules,
    Violation,
    check_termination,
    context_of,
    ref_distance,
    regen_rate,
    transition_vector,
    validate,
)
from .oracle import (
    ChiSquareReport,
    MarginalReport,
    RenewalSpec,
    WindowLaw,
    brute_force_window_law,
    geometric_test,
    renewal_stationary_marginal,
)
from .partition import STAR, IntervalPartition, build_partition, update_F
from .randsrc import FixedTrace, SeededSource
