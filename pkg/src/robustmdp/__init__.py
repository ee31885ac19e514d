"""Exact solvers for robust MDPs with polytopic uncertainty."""

from robustmdp.bisim import (
    BisimWeights,
    Pseudometric,
    bisim_fixed_point,
    bisim_table_via_rpi,
    bisim_table_via_rvi,
    bisim_via_rpi,
    build_bisim_rmdp,
    kantorovich_distance,
)
from robustmdp.errors import (
    ActionMismatch,
    EmptyUncertainty,
    FormatError,
    InvalidLayout,
    IterationCapExceeded,
    IterationCapWarning,
    ModelError,
    NumericalFailure,
    RobustMdpError,
)
from robustmdp.frozen_lake import frozen_lake_mdp
from robustmdp.games import game_solution, game_to_rmdp, game_value
from robustmdp.lp import LpOutcome, LpProblem, Sense, Status, solve_lp
from robustmdp.model import (
    BoundedGap,
    DiscountedGame,
    LpExact,
    Mdp,
    Policy,
    Polytope,
    Rmdp,
    Skeleton,
    ValueFunction,
    mdp_as_degenerate_rmdp,
)
from robustmdp.robust_eval import (
    inner_min,
    robust_bellman_apply,
    robust_policy_evaluation,
    robust_policy_evaluation_lifted,
    robust_q_values,
)
from robustmdp.solvers import (
    SolverConfig,
    robust_policy_iteration,
    robust_value_iteration,
    suboptimality_filter,
    threshold_decision,
)
from robustmdp.uncertainty import (
    BallSpec,
    ImdpSpec,
    coupling_polytope,
    imdp_to_polytope,
    l1_to_lifted_polytope,
    linf_to_imdp,
    simplex_over_support,
    validate_polytope,
)

__version__ = "0.1.0"
