"""Potential/harmonic decomposition of finite games and Shahshahani-geometric
diagnostics of exponential-weights (replicator) learning."""

__version__ = "0.1.0"

from .decomposition import (
    DecompositionResult,
    decompose,
    extract_potential,
    harmonicity_defect,
    is_harmonic,
    is_incompressible,
    random_harmonic,
    random_potential,
)
from .dynamics import (
    RecurrenceReport,
    TrajectoryRecord,
    constant_of_motion,
    detect_recurrence,
    eff_replicator_field,
    integrate,
    interior_rest_point,
    logit,
    regret,
    replicator_field,
    volume_tracker,
)
from .estimators import HodgeDecomposer, RecurrenceDetector, ReplicatorDynamics
from .game import (
    Game,
    eff_payoff_field,
    embed,
    is_non_strategic,
    is_strategically_equivalent,
    load_game,
    mixed_payoff,
    payoff_field,
    reduce,
    save_game,
)
from .geometry import (
    metric_eff,
    metric_eff_inverse,
    replicator_divergence_analytic,
    shah_divergence,
    shah_gradient,
    simplex_volume_numeric,
    simplex_volume_shah,
)
