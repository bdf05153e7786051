"""Episode loop that trains a tabular or neural action-value estimate.

Exploration is epsilon-greedy with a linear decay. Each episode draws its
environment noise and exploration coins from its own generator seeded by
:func:`derive_episode_seed`, so a run is fully determined by its config.
"""
from __future__ import annotations

import csv
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .agents import ActionGrid, action_to_quotes, quoted_spread
from .env import EnvState, EpisodeNoise, ModelParams, RunningMean, observe, step, wealth
from .errors import ConfigError, NumericError
from .neural import MLPParams, forward, init_network, loss_and_grad, normalize_features, save_network, sgd_step
from .seeding import derive_episode_seed, episode_rng
from .tabular import QTable, discretize, greedy_index, save_table, td_update

TABULAR = "tabular"
DEEP = "deep"


class TrainingDivergence(NumericError):
    """Training produced a non-finite value."""


@dataclass
class TrainConfig:
    """Hyper-parameters for one training run.

    ``alpha`` is the TD step of the tabular backup, ``lr`` the SGD step of the
    network. ``epsilon_decay_episodes=None`` decays over the first half of the
    run. ``replay_size`` and ``target_update_every`` are off at 0.
    """

    algorithm: str = DEEP
    episodes: int = 1000
    alpha: float = 0.6
    gamma: float = 1.0
    lr: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_episodes: int | None = None
    master_seed: int = 0
    network_seed: int | None = None
    checkpoint_every: int = 0
    replay_size: int = 0
    target_update_every: int = 0

    def __post_init__(self):
        if self.algorithm not in (TABULAR, DEEP):
            raise ConfigError(f"algorithm must be 'tabular' or 'deep', got {self.algorithm!r}")
        if int(self.episodes) != self.episodes or self.episodes < 0:
            raise ConfigError(f"episodes must be a non-negative integer, got {self.episodes!r}")
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma <= 1:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not (0 <= self.epsilon_end <= self.epsilon_start <= 1):
            raise ConfigError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if self.epsilon_decay_episodes is not None and self.epsilon_decay_episodes < 1:
            raise ConfigError("epsilon_decay_episodes must be positive")
        if self.checkpoint_every < 0 or self.replay_size < 0 or self.target_update_every < 0:
            raise ConfigError("checkpoint_every, replay_size and target_update_every must be >= 0")

    @property
    def decay_episodes(self) -> int:
        if self.epsilon_decay_episodes is not None:
            return self.epsilon_decay_episodes
        return max(1, self.episodes // 2)


@dataclass
class TrainReport:
    episodes_run: int = 0
    rewards: list[float] = field(default_factory=list)
    wealth_changes: list[float] = field(default_factory=list)
    final_epsilon: float = float("nan")
    wall_seconds: float = 0.0
    mu_hat: float = 0.0


def epsilon_at(episode: int, config: TrainConfig) -> float:
    horizon = config.decay_episodes
    if episode >= horizon:
        return config.epsilon_end
    frac = episode / horizon
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start)


def epsilon_greedy(values, epsilon: float, coin: float, random_index: int) -> int:
    """Explore with ``random_index`` when ``coin < epsilon``, else argmax (lowest index on ties)."""
    if coin < epsilon:
        return int(random_index)
    return greedy_index(values)


def select_action(values, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice over ``values`` drawing from ``rng``."""
    coin = rng.random()
    random_index = rng.integers(len(values)) if coin < epsilon else 0
    return epsilon_greedy(values, epsilon, coin, random_index)


def _initial_state(params: ModelParams) -> EnvState:
    return EnvState(0, float(params.s0), 0.0, params.q0, False)


def _spreads(params: ModelParams) -> list[float]:
    return [
        quoted_spread((params.n_steps - t) * params.dt, params.beta, params.sigma, params.k, params.spread_model)
        for t in range(params.n_steps)
    ]


def _episode_draws(config: TrainConfig, episode: int, n_steps: int, n_actions: int):
    rng = episode_rng(config.master_seed, episode)
    noise = EpisodeNoise.draw(rng, n_steps)
    coins = rng.random(n_steps).tolist()
    random_actions = rng.integers(0, n_actions, n_steps).tolist()
    return rng, noise, coins, random_actions


def _train_tabular(config, params, grid, table, report, on_checkpoint):
    n = params.n_steps
    spreads = _spreads(params)
    rm = RunningMean()
    gamma, alpha = config.gamma, config.alpha
    for ep in range(config.episodes):
        _, noise, coins, random_actions = _episode_draws(config, ep, n, grid.n_a)
        eps = epsilon_at(ep, config)
        state = _initial_state(params)
        w0 = wealth(state)
        key = discretize(observe(state, params), params)
        g, disc = 0.0, 1.0
        for t in range(n):
            a = epsilon_greedy(table.values(key), eps, coins[t], random_actions[t])
            quotes = action_to_quotes(a, state.mid_price, grid, spreads[t])
            try:
                res = step(state, quotes, params, noise, rm)
                next_key = discretize(observe(res.next_state, params), params)
                td_update(table, key, a, res.reward, next_key, alpha, gamma)
            except NumericError as exc:
                raise TrainingDivergence(f"episode {ep}, step {t}: {exc}") from exc
            g += disc * res.reward
            disc *= gamma
            state, key = res.next_state, next_key
        report.rewards.append(g)
        report.wealth_changes.append(wealth(state) - w0)
        report.episodes_run = ep + 1
        if config.checkpoint_every and (ep + 1) % config.checkpoint_every == 0 and on_checkpoint:
            on_checkpoint(table, ep + 1)
    report.mu_hat = rm.mu_hat
    return table


def _train_deep(config, params, grid, net, report, on_checkpoint):
    n = params.n_steps
    spreads = _spreads(params)
    rm = RunningMean()
    gamma, lr = config.gamma, config.lr
    target_net = net.copy() if config.target_update_every else net
    replay = deque(maxlen=config.replay_size) if config.replay_size else None
    updates = 0
    for ep in range(config.episodes):
        rng, noise, coins, random_actions = _episode_draws(config, ep, n, grid.n_a)
        eps = epsilon_at(ep, config)
        state = _initial_state(params)
        w0 = wealth(state)
        x = normalize_features(observe(state, params), params)
        g, disc = 0.0, 1.0
        for t in range(n):
            try:
                if coins[t] < eps:
                    a = random_actions[t]
                else:
                    a = int(np.argmax(forward(net, x)))
                quotes = action_to_quotes(a, state.mid_price, grid, spreads[t])
                res = step(state, quotes, params, noise, rm)
                x_next = normalize_features(observe(res.next_state, params), params)
                transition = (x, a, res.reward, x_next, res.done)
                if replay is not None:
                    replay.append(transition)
                    transition = replay[int(rng.integers(len(replay)))]
                tx, ta, tr, tx_next, tdone = transition
                target = tr if tdone else tr + gamma * float(np.max(forward(target_net, tx_next)))
                _, grads = loss_and_grad(net, tx, ta, target)
                sgd_step(net, grads, lr)
            except NumericError as exc:
                raise TrainingDivergence(f"episode {ep}, step {t}: {exc}") from exc
            updates += 1
            if config.target_update_every and updates % config.target_update_every == 0:
                target_net = net.copy()
            g += disc * res.reward
            disc *= gamma
            state, x = res.next_state, x_next
        report.rewards.append(g)
        report.wealth_changes.append(wealth(state) - w0)
        report.episodes_run = ep + 1
        if config.checkpoint_every and (ep + 1) % config.checkpoint_every == 0 and on_checkpoint:
            on_checkpoint(net, ep + 1)
    report.mu_hat = rm.mu_hat
    return net


def train(
    config: TrainConfig,
    params: ModelParams | None = None,
    grid: ActionGrid | None = None,
    checkpoint_path=None,
    initial=None,
):
    """Train and return ``(artifact, report)``.

    The artifact is a :class:`QTable` or :class:`MLPParams`. When
    ``checkpoint_path`` is given the artifact is written there every
    ``checkpoint_every`` episodes and once more at the end.
    """
    params = params or ModelParams()
    grid = grid or ActionGrid()
    start = time.perf_counter()
    report = TrainReport()

    if config.algorithm == TABULAR:
        artifact = initial if initial is not None else QTable.for_params(params, grid)
        if artifact.n_actions != grid.n_a:
            raise ConfigError(f"Q-table has {artifact.n_actions} actions, grid has {grid.n_a}")
        run, saver = _train_tabular, lambda a, path: save_table(a, path)
    else:
        seed = config.network_seed if config.network_seed is not None else config.master_seed
        artifact = initial if initial is not None else init_network(
            derive_episode_seed(seed, 2**32), (3, 10, 10, grid.n_a)
        )
        if artifact.layer_sizes[-1] != grid.n_a:
            raise ConfigError(f"network head has {artifact.layer_sizes[-1]} outputs, grid has {grid.n_a}")
        run, saver = _train_deep, lambda a, path: save_network(a, path, params.params_hash())

    on_checkpoint = (lambda a, _ep: saver(a, checkpoint_path)) if checkpoint_path else None
    # overflow is reported as TrainingDivergence, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        artifact = run(config, params, grid, artifact, report, on_checkpoint)
    if checkpoint_path:
        saver(artifact, checkpoint_path)
    report.final_epsilon = epsilon_at(max(config.episodes - 1, 0), config)
    report.wall_seconds = time.perf_counter() - start
    return artifact, report


def write_trace(report: TrainReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "cumulative_reward"])
        for i, g in enumerate(report.rewards):
            writer.writerow([i, repr(g)])
