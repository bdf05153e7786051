"""Closed-form benchmark quoting rules and the discrete action grid."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .env import (
    SPREAD_CONSTANT,
    SPREAD_INVENTORY,
    EnvState,
    ModelParams,
    Observation,
    QuotePair,
    observe,
)
from .errors import ConfigError, DomainError


def optimal_spread(beta: float, k: float) -> float:
    """Base bid-ask spread ``(2 / beta) * ln(1 + beta / k)``."""
    if not (beta > 0 and k > 0):
        raise DomainError(f"beta and k must be positive (beta={beta}, k={k})")
    return 2.0 / beta * math.log1p(beta / k)


def quoted_spread(
    time_left: float, beta: float, sigma: float, k: float, spread_model: str = SPREAD_INVENTORY
) -> float:
    """Spread actually quoted by every agent.

    With ``spread_model="inventory"`` the inventory-risk term
    ``beta * sigma**2 * time_left`` is added to the base spread, so the quotes
    widen early in the episode and collapse to :func:`optimal_spread` at the
    horizon. ``"constant"`` returns the base spread unchanged.
    """
    base = optimal_spread(beta, k)
    if spread_model == SPREAD_CONSTANT:
        return base
    if spread_model != SPREAD_INVENTORY:
        raise DomainError(f"unknown spread_model {spread_model!r}")
    return base + beta * sigma**2 * time_left


def reservation_price(obs: Observation, beta: float, sigma: float) -> float:
    return obs.mid_price - beta * sigma**2 * obs.time_left * obs.inventory


def optimal_quotes(
    obs: Observation, beta: float, sigma: float, k: float, spread_model: str = SPREAD_INVENTORY
) -> QuotePair:
    half = 0.5 * quoted_spread(obs.time_left, beta, sigma, k, spread_model)
    rho = reservation_price(obs, beta, sigma)
    return QuotePair(rho - half, rho + half)


def symmetric_quotes(
    obs: Observation, beta: float, sigma: float, k: float, spread_model: str = SPREAD_INVENTORY
) -> QuotePair:
    half = 0.5 * quoted_spread(obs.time_left, beta, sigma, k, spread_model)
    return QuotePair(obs.mid_price - half, obs.mid_price + half)


@dataclass(frozen=True)
class ActionGrid:
    """``n_a`` quote-center offsets spaced ``d_a`` apart, symmetric around zero.

    Index ``(n_a - 1) // 2`` is the zero offset; larger indices move the quote
    center above the mid.
    """

    n_a: int = 21
    d_a: float = 0.2

    def __post_init__(self):
        if isinstance(self.n_a, bool) or int(self.n_a) != self.n_a or self.n_a < 1 or self.n_a % 2 == 0:
            raise ConfigError(f"n_a must be an odd positive integer, got {self.n_a!r}")
        if not (math.isfinite(self.d_a) and self.d_a > 0):
            raise ConfigError(f"d_a must be positive, got {self.d_a!r}")
        object.__setattr__(self, "n_a", int(self.n_a))

    @property
    def middle(self) -> int:
        return (self.n_a - 1) // 2

    @property
    def max_offset(self) -> float:
        return self.middle * self.d_a

    def offset(self, index: int) -> float:
        if not 0 <= index < self.n_a:
            raise DomainError(f"action index {index} outside [0, {self.n_a})")
        return (index - self.middle) * self.d_a

    def offsets(self) -> list[float]:
        return [self.offset(i) for i in range(self.n_a)]


def action_to_quotes(action: int, s: float, grid: ActionGrid, spread: float) -> QuotePair:
    center = s + grid.offset(action)
    half = 0.5 * spread
    return QuotePair(center - half, center + half)


def nearest_action(offset: float, grid: ActionGrid) -> int:
    """Grid index whose offset is closest to ``offset``.

    Clamped to the grid; exact ties go to the index nearer the zero offset.
    """
    if not math.isfinite(offset):
        raise DomainError(f"offset must be finite, got {offset!r}")
    x = offset / grid.d_a
    lo = math.floor(x)
    best = None
    for j in (lo, lo + 1):
        j = min(max(j, -grid.middle), grid.middle)
        key = (abs(j * grid.d_a - offset), abs(j))
        if best is None or key < best[0]:
            best = (key, j)
    return best[1] + grid.middle


class Policy:
    """A quoting rule evaluated once per step."""

    name = "policy"

    def quotes(self, state: EnvState, params: ModelParams) -> QuotePair:
        raise NotImplementedError

    def check_compatible(self, params: ModelParams) -> None:
        """Raise :class:`ConfigError` if the policy cannot act in ``params``."""


class OptimalAgent(Policy):
    name = "optimal"

    def quotes(self, state, params):
        return optimal_quotes(
            observe(state, params), params.beta, params.sigma, params.k, params.spread_model
        )


class SymmetricAgent(Policy):
    name = "symmetric"

    def quotes(self, state, params):
        return symmetric_quotes(
            observe(state, params), params.beta, params.sigma, params.k, params.spread_model
        )


class GridPolicy(Policy):
    """Base for policies that pick an action index on an :class:`ActionGrid`."""

    def __init__(self, grid: ActionGrid):
        self.grid = grid

    def action(self, state: EnvState, params: ModelParams) -> int:
        raise NotImplementedError

    def quotes(self, state, params):
        spread = quoted_spread(
            state.time_left(params), params.beta, params.sigma, params.k, params.spread_model
        )
        return action_to_quotes(self.action(state, params), state.mid_price, self.grid, spread)


class FixedActionAgent(GridPolicy):
    """Always plays the same grid action; useful as a baseline and in tests."""

    def __init__(self, grid: ActionGrid, index: int):
        super().__init__(grid)
        grid.offset(index)
        self.index = index
        self.name = f"fixed[{index}]"

    def action(self, state, params):
        return self.index
