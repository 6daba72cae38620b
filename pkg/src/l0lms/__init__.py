"""l0-norm constrained LMS adaptive filters for sparse system identification."""

from .filters import (
    AlgorithmConfig,
    DivergenceError,
    FilterState,
    InputTap,
    Variant,
    attractor_exact,
    attractor_taylor,
    compute_error,
    sgn,
    step,
    trajectory,
    update_indices,
)
from .signals import SignalKind, SignalSpec, color_ar1, gen_white, normalize_power, synth_desired
from .sim import (
    LearningCurve,
    SteadyStateStats,
    TrialConfig,
    monte_carlo,
    msd,
    preset,
    reach_level,
    run_trial,
    steady_state,
)
from .systems import (
    ChangeEvent,
    ImpulseResponse,
    SystemSpec,
    apply_change,
    gen_cluster_sparse,
    gen_general_sparse,
)

__version__ = "0.1.0"
