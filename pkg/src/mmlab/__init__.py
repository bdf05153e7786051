"""Market-making laboratory: dealer simulator, closed-form benchmarks and Q-learning agents."""
from .agents import (
    ActionGrid,
    FixedActionAgent,
    OptimalAgent,
    Policy,
    SymmetricAgent,
    action_to_quotes,
    nearest_action,
    optimal_quotes,
    optimal_spread,
    quoted_spread,
    reservation_price,
    symmetric_quotes,
)
from .config import RunConfig, load_config, parse_config
from .env import (
    EnvState,
    MarketMakingEnv,
    ModelParams,
    Observation,
    QuotePair,
    RunningMean,
    StepResult,
    fill_probability,
    intensity,
    reset,
    reward_of,
    step,
    wealth,
)
from .evaluation import EvalMetrics, compare, evaluate, histogram, metrics
from .neural import DeepAgent, MLPParams, init_network
from .tabular import QTable, StateKey, TabularAgent, discretize, td_update
from .training import TrainConfig, TrainReport, train

__version__ = "0.1.0"
