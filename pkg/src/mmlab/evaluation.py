"""Monte Carlo evaluation of quoting policies.

Episode ``i`` of every evaluation is driven by the seed
``derive_episode_seed(master_seed, i)``, so different policies evaluated with
the same master seed see common random numbers, and splitting episodes
across worker processes does not change any result.

Rewards depend on a running mean of wealth changes that carries across
episodes. Rollouts therefore only record the per-step wealth changes; rewards
are scored afterwards in episode order with a fresh running mean.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .agents import ActionGrid, OptimalAgent, Policy, SymmetricAgent, quoted_spread
from .env import EnvState, EpisodeNoise, ModelParams, RunningMean, fill_probability, reward_of, step, wealth
from .errors import ConfigError, DomainError
from .neural import NET_MAGIC, DeepAgent, load_network
from .seeding import derive_episode_seed
from .tabular import TABLE_MAGIC, TabularAgent, load_table

METRIC_FIELDS = ("mean_wealth", "std_wealth", "sharpe", "mean_cum_reward", "utility_estimate")
UNDEFINED = "undefined"


@dataclass(frozen=True)
class EvalMetrics:
    """One row of the comparison table; ``sharpe`` is ``None`` when the std is zero."""

    mean_wealth: float
    std_wealth: float
    sharpe: float | None
    mean_cum_reward: float
    utility_estimate: float
    episodes: int


@dataclass
class EvalResult:
    metrics: EvalMetrics
    wealth: np.ndarray
    rewards: np.ndarray
    delta_wealth: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class HistogramData:
    bin_edges: np.ndarray
    counts: np.ndarray

    def rows(self):
        for i, c in enumerate(self.counts):
            yield float(self.bin_edges[i]), float(self.bin_edges[i + 1]), int(c)


def run_episode(policy: Policy, params: ModelParams, seed: int) -> tuple[float, np.ndarray]:
    """Roll out one episode; returns final wealth and the per-step wealth changes."""
    noise = EpisodeNoise.from_seed(seed, params.n_steps)
    state = EnvState(0, float(params.s0), 0.0, params.q0, False)
    rm = RunningMean()
    dws = np.empty(params.n_steps)
    for t in range(params.n_steps):
        res = step(state, policy.quotes(state, params), params, noise, rm)
        dws[t] = res.delta_wealth
        state = res.next_state
    return wealth(state), dws


def _rollout_chunk(args):
    policy, params, master_seed, indices = args
    out = []
    for i in indices:
        out.append(run_episode(policy, params, derive_episode_seed(master_seed, i)))
    return out


def rollout(policy: Policy, params: ModelParams, n_episodes: int, master_seed: int, workers: int = 1):
    """Final wealth (n,) and wealth changes (n, N) for episodes ``0..n-1``."""
    indices = list(range(n_episodes))
    if workers <= 1:
        results = _rollout_chunk((policy, params, master_seed, indices))
    else:
        chunks = [indices[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_rollout_chunk, [(policy, params, master_seed, c) for c in chunks]))
        results = [None] * n_episodes
        for chunk, part in zip(chunks, parts):
            for i, r in zip(chunk, part):
                results[i] = r
    w = np.array([r[0] for r in results])
    dws = np.array([r[1] for r in results]).reshape(n_episodes, params.n_steps)
    return w, dws


def score_rewards(delta_wealth: np.ndarray, kappa: float, gamma: float = 1.0) -> np.ndarray:
    """Per-episode cumulative reward, scoring episodes in order with one running mean."""
    rm = RunningMean()
    totals = np.empty(delta_wealth.shape[0])
    for i, row in enumerate(delta_wealth.tolist()):
        g, disc = 0.0, 1.0
        for dw in row:
            g += disc * reward_of(dw, rm.mu_hat, kappa)
            rm.update(dw)
            disc *= gamma
        totals[i] = g
    return totals


def metrics(wealth_samples, reward_samples, beta: float) -> EvalMetrics:
    w = np.asarray(wealth_samples, dtype=np.float64)
    g = np.asarray(reward_samples, dtype=np.float64)
    if w.size < 2 or g.size < 2:
        raise DomainError("metrics need at least two samples")
    mean = float(np.mean(w))
    std = float(np.std(w, ddof=1))
    sharpe = mean / std if std > 0 else None
    utility = float(np.mean(-np.exp(-beta * w)))
    return EvalMetrics(mean, std, sharpe, float(np.mean(g)), utility, int(w.size))


def evaluate(
    policy: Policy,
    n_episodes: int,
    params: ModelParams,
    master_seed: int,
    workers: int = 1,
) -> EvalResult:
    """Run ``n_episodes`` greedy episodes and compute the summary metrics."""
    if n_episodes < 2:
        raise DomainError("evaluation needs at least two episodes")
    policy.check_compatible(params)
    w, dws = rollout(policy, params, n_episodes, master_seed, workers)
    g = score_rewards(dws, params.kappa)
    return EvalResult(metrics(w, g, params.beta), w, g, dws)


def histogram(samples, n_bins: int) -> HistogramData:
    """Uniform bins over [min, max]; half-open except the last bin."""
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise DomainError("histogram of an empty sample")
    counts, edges = np.histogram(samples, bins=n_bins)
    return HistogramData(edges, counts)


def symmetric_expected_wealth(params: ModelParams) -> float:
    """Exact expected final wealth of the symmetric agent.

    Every fill earns half the quoted spread against the mid, inventory is
    marked at a martingale price, and both fill probabilities are independent
    of the state, so E[w_T] = sum_t 2 * p_t * half_spread_t.
    """
    total = 0.0
    for t in range(params.n_steps):
        half = 0.5 * quoted_spread(
            (params.n_steps - t) * params.dt, params.beta, params.sigma, params.k, params.spread_model
        )
        total += 2.0 * fill_probability(half, params) * half
    return total


@dataclass
class Comparison:
    names: list[str]
    rows: list[EvalMetrics]
    results: list[EvalResult] = field(repr=False, default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("policy",) + METRIC_FIELDS + ("episodes",))
        for name, m in zip(self.names, self.rows):
            values = [UNDEFINED if getattr(m, f) is None else repr(getattr(m, f)) for f in METRIC_FIELDS]
            writer.writerow([name, *values, m.episodes])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            [{"policy": name, **asdict(m)} for name, m in zip(self.names, self.rows)], indent=2
        )

    def to_text(self) -> str:
        header = ["policy", "mean wealth", "std wealth", "sharpe", "mean cum reward", "utility"]
        lines = []
        for name, m in zip(self.names, self.rows):
            lines.append(
                [
                    name,
                    f"{m.mean_wealth:.2f}",
                    f"{m.std_wealth:.2f}",
                    UNDEFINED if m.sharpe is None else f"{m.sharpe:.2f}",
                    f"{m.mean_cum_reward:.2f}",
                    f"{m.utility_estimate:.3g}",
                ]
            )
        widths = [max(len(r[i]) for r in [header] + lines) for i in range(len(header))]
        fmt = lambda r: "  ".join(c.rjust(wd) if i else c.ljust(wd) for i, (c, wd) in enumerate(zip(r, widths)))
        return "\n".join([fmt(header)] + [fmt(r) for r in lines]) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json() + "\n"
        if fmt == "table":
            return self.to_text()
        raise ConfigError(f"unknown report format {fmt!r}")


def compare(policies, params: ModelParams, n_episodes: int, seed: int, workers: int = 1, names=None) -> Comparison:
    """Evaluate every policy on the same episode seeds."""
    policies = list(policies)
    if not policies:
        raise ConfigError("compare needs at least one policy")
    names = list(names) if names is not None else [p.name for p in policies]
    results = [evaluate(p, n_episodes, params, seed, workers) for p in policies]
    return Comparison(names, [r.metrics for r in results], results)


def load_policy(spec: str, params: ModelParams, grid: ActionGrid) -> Policy:
    """``"optimal"``, ``"symmetric"`` or the path of a Q-table / network checkpoint."""
    if spec == "optimal":
        return OptimalAgent()
    if spec == "symmetric":
        return SymmetricAgent()
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"policy {spec!r} is neither a benchmark name nor an existing checkpoint file")
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic == TABLE_MAGIC:
        agent = TabularAgent(load_table(path), grid)
    elif magic == NET_MAGIC:
        agent = DeepAgent(load_network(path, params), grid)
    else:
        raise ConfigError(f"{path}: unrecognised checkpoint format")
    agent.name = path.stem
    return agent


def write_histogram_csv(hist: HistogramData, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "count"])
        for left, right, count in hist.rows():
            writer.writerow([repr(left), repr(right), count])


def sharpe_or_nan(m: EvalMetrics) -> float:
    return math.nan if m.sharpe is None else m.sharpe
