"""Energy-minimal power control for loss-tolerant links without transmit CSI."""
from .chain import ChainAnalysis, OutagePolicy, analyze, build_transition_matrix, steady_state
from .channel import (
    ChannelModel,
    dbw_to_watts,
    outage_from_power,
    power_from_outage,
    regularized_lower_gamma,
    watts_to_dbw,
)
from .closedform import LossConstraints, solve_n1, sweep_n1
from .errors import DegenerateChainError, InfeasibleError, NumericError, ParameterError
from .optimizer import (
    OptResult,
    SaConfig,
    check_feasibility,
    grid_search_oracle,
    locate_eps_out_star,
    sa_optimize,
)
from .simulator import SimStats, simulate_policy, validate_against_chain

__version__ = "0.1.0"
