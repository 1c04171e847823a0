"""Solvers and certificates for rate-independent systems with viscous
corrections: incremental schemes, stability diagnostics, jump costs, and
four analytic desk-scale models."""

from .core import (
    CorrectionSpec,
    JumpRecord,
    PowerLq,
    QuadraticMu,
    RisProblem,
    State,
    Trajectory,
    TrivialH,
    build_correction,
    eval_correction,
    eval_dissipation,
    eval_energy,
    eval_power,
)
from .reduced import (
    MinimizerConfig,
    MinResult,
    global_min_corrected,
    oracle_grid_min,
    reduce_energy,
    reduced_value,
)
from .stability import (
    StabilityReport,
    correction_ratio_check,
    exponent_check,
    is_Q_stable,
    minimal_set,
    residual_stability,
)
from .scheme import (
    DiscreteTrajectory,
    SchemeConfig,
    detect_jumps,
    interpolate,
    jump_onset,
    refine_study,
    solve_incremental,
)
from .jump import (
    CostBound,
    JumpChain,
    SearchConfig,
    augmented_variation,
    incremental_cost,
    jump_cost,
    transition_cost,
    viscous_chain,
)
from .verify import (
    Certificate,
    TolConfig,
    balance_residual,
    gamma_limit_study,
    plasticity_stress_check,
    ve_equals_e,
    verify_E,
    verify_VE,
)
from .models import (
    Damage1dSpec,
    Delamination0dSpec,
    Plasticity0dSpec,
    Toy1dSpec,
    make_damage1d,
    make_delamination0d,
    make_plasticity0d,
    make_toy1d,
)

__version__ = "0.1.0"
