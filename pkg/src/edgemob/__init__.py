"""Base-station association for a moving user under a long-term energy budget."""

from .bounds import compute_U, drift_delay_bound, drift_energy_bound, ucb_regret_bound
from .config import RunConfig
from .errors import (ConfigError, DegenerateGapWarning, FrameInfeasible, InfeasibleScenario, SchemaError,
                     UnstableServer)
from .harness import emit, run_experiment, sweep
from .model import ChannelState, EdgeServerState, SystemConstants, delay_cost, is_feasible, tx_energy, uplink_rate
from .offline import solve_frame, solve_lookahead
from .policies import FrameSchedule, PsiConfig, RunReport, SlotNoise, fsi_run, psi_run, run_policy
from .scenario import ScenarioTrace, build_grid_topology, generate_trace, load_trace, save_trace

__version__ = "0.1.0"
