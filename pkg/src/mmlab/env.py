"""Discrete-time dealer environment.

The mid-price follows a driftless Brownian motion sampled exactly on a grid of
``N = T / dt`` steps. At every step the agent posts one bid and one ask; each
side is filled at most once per step with a probability derived from the
exponential arrival intensity ``A * exp(-k * delta)``. Cash and inventory are
updated against the pre-move mid, the price then diffuses and the step's
wealth change is scored with the mean-variance reward.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NumericError, StateError

FILL_LINEAR = "linear"
FILL_POISSON = "poisson"
FILL_MODELS = (FILL_LINEAR, FILL_POISSON)

SPREAD_INVENTORY = "inventory"
SPREAD_CONSTANT = "constant"
SPREAD_MODELS = (SPREAD_INVENTORY, SPREAD_CONSTANT)


@dataclass(frozen=True)
class ModelParams:
    """Environment and utility constants.

    ``fill_model`` selects the per-step fill probability: ``"linear"`` is
    ``min(1, lambda * dt)``, ``"poisson"`` is ``1 - exp(-lambda * dt)``.
    ``spread_model`` is read by the quoting agents, not the simulator:
    ``"inventory"`` quotes ``Phi + beta * sigma**2 * (T - t)``, ``"constant"``
    quotes ``Phi`` only.
    """

    s0: float = 100.0
    sigma: float = 2.0
    T: float = 1.0
    dt: float = 0.005
    A: float = 137.45
    k: float = 1.5
    q0: int = 0
    kappa: float = 1.0
    beta: float = 0.5
    fill_model: str = FILL_LINEAR
    spread_model: str = SPREAD_INVENTORY

    def __post_init__(self):
        for name in ("s0", "sigma", "T", "dt", "A", "k", "kappa", "beta"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
        if isinstance(self.q0, bool) or int(self.q0) != self.q0:
            raise ConfigError(f"q0 must be an integer, got {self.q0!r}")
        object.__setattr__(self, "q0", int(self.q0))
        if self.dt <= 0 or self.T <= 0:
            raise ConfigError(f"dt and T must be positive (dt={self.dt}, T={self.T})")
        ratio = self.T / self.dt
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ConfigError(f"T/dt must be a positive integer, got {ratio!r}")
        if self.A <= 0 or self.k <= 0:
            raise ConfigError(f"A and k must be positive (A={self.A}, k={self.k})")
        if self.sigma < 0 or self.kappa < 0:
            raise ConfigError("sigma and kappa must be non-negative")
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.fill_model not in FILL_MODELS:
            raise ConfigError(f"fill_model must be one of {FILL_MODELS}, got {self.fill_model!r}")
        if self.spread_model not in SPREAD_MODELS:
            raise ConfigError(
                f"spread_model must be one of {SPREAD_MODELS}, got {self.spread_model!r}"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def price_step(self) -> float:
        """Standard deviation of one mid-price increment, ``sigma * sqrt(dt)``."""
        return self.sigma * math.sqrt(self.dt)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def canonical(self) -> str:
        return ";".join(f"{f.name}={getattr(self, f.name)!r}" for f in dataclasses.fields(self))

    def params_hash(self) -> bytes:
        """SHA-256 digest of the canonical field listing (32 bytes)."""
        return hashlib.sha256(self.canonical().encode("utf-8")).digest()


@dataclass(frozen=True, slots=True)
class EnvState:
    step_index: int
    mid_price: float
    cash: float
    inventory: int
    done: bool

    def time_left(self, params: ModelParams) -> float:
        return (params.n_steps - self.step_index) * params.dt


@dataclass(frozen=True, slots=True)
class Observation:
    """What an agent sees: mid-price, inventory and time to the horizon."""

    mid_price: float
    inventory: int
    time_left: float


@dataclass(frozen=True, slots=True)
class QuotePair:
    bid: float
    ask: float

    @property
    def center(self) -> float:
        return 0.5 * (self.bid + self.ask)

    @property
    def spread(self) -> float:
        return self.ask - self.bid


@dataclass(frozen=True, slots=True)
class StepResult:
    bid_filled: bool
    ask_filled: bool
    delta_wealth: float
    reward: float
    next_state: EnvState
    done: bool


@dataclass
class RunningMean:
    """Incremental arithmetic mean of the single-period wealth changes."""

    count: int = 0
    mu_hat: float = 0.0

    def update(self, x: float) -> float:
        self.count += 1
        self.mu_hat += (x - self.mu_hat) / self.count
        return self.mu_hat


@dataclass
class EpisodeNoise:
    """Random numbers consumed by one episode.

    Row ``t`` of ``fill_uniforms`` holds the (bid, ask) uniforms compared with
    the fill probabilities at step ``t``; ``shocks[t]`` is the standard normal
    price innovation. Drawn in one block per episode: first all uniforms, then
    all normals.
    """

    fill_uniforms: np.ndarray
    shocks: np.ndarray

    @classmethod
    def draw(cls, rng: np.random.Generator, n_steps: int) -> "EpisodeNoise":
        return cls(rng.random((n_steps, 2)), rng.standard_normal(n_steps))

    @classmethod
    def from_seed(cls, seed: int, n_steps: int) -> "EpisodeNoise":
        return cls.draw(np.random.default_rng(seed), n_steps)

    def __len__(self) -> int:
        return len(self.shocks)


def intensity(delta: float, params: ModelParams) -> float:
    """Order arrival rate ``A * exp(-k * delta)`` at distance ``delta`` from the mid."""
    if not math.isfinite(delta):
        raise DomainError(f"delta must be finite, got {delta!r}")
    return params.A * math.exp(-params.k * delta)


def fill_probability(delta: float, params: ModelParams, dt: float | None = None) -> float:
    """Probability that a quote at distance ``delta`` is filled within one step."""
    dt = params.dt if dt is None else dt
    mass = intensity(delta, params) * dt
    if params.fill_model == FILL_POISSON:
        return -math.expm1(-mass)
    return min(mass, 1.0)


def wealth(state: EnvState) -> float:
    """Cash plus inventory marked at the mid-price."""
    return state.cash + state.inventory * state.mid_price


def reward_of(delta_w: float, mu_hat: float, kappa: float) -> float:
    return delta_w - 0.5 * kappa * (delta_w - mu_hat) ** 2


def observe(state: EnvState, params: ModelParams) -> Observation:
    return Observation(state.mid_price, state.inventory, state.time_left(params))


def reset(params: ModelParams, seed: int | None = None) -> tuple[EnvState, EpisodeNoise]:
    """Initial state plus the episode's noise block derived from ``seed``."""
    if not isinstance(params, ModelParams):
        raise ConfigError(f"expected ModelParams, got {type(params).__name__}")
    state = EnvState(0, float(params.s0), 0.0, params.q0, False)
    noise = EpisodeNoise.from_seed(seed, params.n_steps)
    return state, noise


def step(
    state: EnvState,
    quotes: QuotePair,
    params: ModelParams,
    noise: EpisodeNoise,
    rm: RunningMean,
) -> StepResult:
    if state.done:
        raise StateError("cannot step a finished episode")
    bid, ask = quotes.bid, quotes.ask
    if not (math.isfinite(bid) and math.isfinite(ask)):
        raise NumericError(f"non-finite quotes {quotes!r}")
    t = state.step_index
    s = state.mid_price
    u_bid, u_ask = noise.fill_uniforms[t]
    bid_filled = bool(u_bid < fill_probability(s - bid, params))
    ask_filled = bool(u_ask < fill_probability(ask - s, params))

    cash = state.cash
    q = state.inventory
    if bid_filled:
        cash -= bid
        q += 1
    if ask_filled:
        cash += ask
        q -= 1
    s_next = s + params.price_step * float(noise.shocks[t])

    n = t + 1
    done = n == params.n_steps
    nxt = EnvState(n, s_next, cash, q, done)
    delta_w = wealth(nxt) - wealth(state)
    reward = reward_of(delta_w, rm.mu_hat, params.kappa)
    rm.update(delta_w)
    return StepResult(bid_filled, ask_filled, delta_w, reward, nxt, done)


@dataclass
class MarketMakingEnv:
    """Stateful wrapper around :func:`reset` / :func:`step`.

    The running mean is shared across episodes unless a fresh one is passed.
    """

    params: ModelParams = field(default_factory=ModelParams)
    running_mean: RunningMean = field(default_factory=RunningMean)
    state: EnvState | None = None
    noise: EpisodeNoise | None = None

    def reset(self, seed: int | None = None) -> Observation:
        self.state, self.noise = reset(self.params, seed)
        return observe(self.state, self.params)

    def step(self, quotes: QuotePair) -> StepResult:
        if self.state is None:
            raise StateError("call reset() before step()")
        result = step(self.state, quotes, self.params, self.noise, self.running_mean)
        self.state = result.next_state
        return result

    @property
    def observation(self) -> Observation:
        return observe(self.state, self.params)
