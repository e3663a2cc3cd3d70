"""Cycle maxima of birth-death chains: exact laws, extremes, and networks."""

from .bdp import (
    BirthDeathSpec,
    CallableSequence,
    Classification,
    FactorialInverseSequence,
    MultiServerSequence,
    OnesSequence,
    TableSequence,
    Verdict,
    classify,
    load_spec,
    mm1,
    mminf,
    mms,
    palm_distribution,
    save_spec,
    spec_from_dict,
    spec_to_dict,
    stationary_distribution,
)
from .distribution import (
    CycleMaxDistribution,
    TailAsymptotics,
    TailRegime,
    blocking_prob,
    conditional_cdf_transient,
    cycle_max_cdf,
    dual_process,
    duality_check,
    failure_rate,
    tail_asymptotics,
)
from .errors import (
    CapExceededError,
    CoincidentLoadsError,
    CycleMaxError,
    EscapedCycleError,
    FitFailedError,
    KindMismatchError,
    NoMonotoneTailError,
    NonSeparableError,
    NotApplicableError,
    NotIrreducibleError,
    NotPositiveRecurrentError,
    NotStableError,
    NotSubcriticalError,
    NotTransientError,
    OutOfRangeError,
    PalmUndefinedError,
    SingularSystemError,
    SpecFormatError,
)
from .extremes import (
    CompactnessReport,
    GumbelBounds,
    NormingConstants,
    NormingKind,
    TailFunction,
    as_limit_constant,
    build_tail_function,
    compactness_diagnostic,
    default_norming_kind,
    gumbel_bounds,
    invert_tail,
    lambert_w,
    norming_constants,
    partial_limit_envelope,
    stirling_tail,
)
from .networks import (
    NetworkSpec,
    NortonReduction,
    Station,
    aggregate_constants,
    harrison_closed_form,
    lattice_constants,
    load_network,
    network_beta,
    network_from_dict,
    network_to_dict,
    norton_reduce,
    save_network,
    simulate_network_cycles,
    solve_traffic,
    station_loads,
)
from .simulate import (
    ESCAPED,
    ConvergenceRow,
    CycleSample,
    SimConfig,
    empirical_cdf,
    ks_two_sample,
    sample_maxima,
    simulate_cycle,
    simulate_cycles,
    verify_as_convergence,
)

__version__ = "0.1.0"
