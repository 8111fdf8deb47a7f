"""Zero-determinant strategies for the N-player iterated public goods game."""

__version__ = "0.1.0"

from .exceptions import (
    DegenerateFactor,
    DeterminantMismatch,
    InfeasibleExtortion,
    InfeasiblePinning,
    InvalidGame,
    NonErgodicChain,
    SingularStrategy,
    ZDError,
)
from .extortion import (
    ChiBounds,
    ExtortionParams,
    chi_bounds,
    effective_ratio_bound,
    effective_ratio_limit,
    extortion_strategy,
    fit_phi,
    phi_max,
)
from .game import (
    GameSpec,
    ReducedStrategy,
    expand_strategy,
    opponent_cooperators,
    payoff_matrix,
    payoff_vector,
    state_actions,
    state_index,
    state_label,
    zd_column,
)
from .impossibility import (
    CollusionReport,
    SelfPinReport,
    collusion_feasibility,
    pinning_alphas,
    self_pin_feasibility,
    single_player_feasibility,
)
from .markov import (
    RegularityReport,
    controlled_matrix,
    determinant_ratio,
    dot_via_determinant,
    expected_payoffs,
    linear_combination,
    regularity,
    stationary,
    transition_matrix,
)
from .pinning import (
    FeasibleRegion,
    PinningParams,
    feasible_region,
    max_factor_for_pinning,
    max_players_for_pinning,
    pinned_total,
    pinned_total_gamma,
    pinning_bounds,
    pinning_params,
    pinning_regime,
    pinning_strategy,
)
from .simulator import OpponentGenerator, SweepDataset, analytic_sweep, play_match, sweep
