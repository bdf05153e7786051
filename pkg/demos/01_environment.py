"""
Stepping the market environment by hand
=======================================

The mid-price is a driftless Brownian motion. At every step the bid and the
ask are each filled with a probability that decays in their distance from
the mid. Wealth is cash plus inventory marked at the mid.
"""

# %%
# Parameters and closed forms
import numpy as np

from mmlab import ModelParams, optimal_spread
from mmlab.agents import optimal_quotes
from mmlab.env import MarketMakingEnv, fill_probability, observe, reset

params = ModelParams()
phi = optimal_spread(params.beta, params.k)
print(f"{params.n_steps} steps of dt={params.dt}, base spread {phi:.6f}")
for delta in (0.0, phi / 2, 1.0, 2.0):
    print(f"  fill probability at distance {delta:.3f}: {fill_probability(delta, params):.5f}")

# %%
# One episode quoting around the reservation price
env = MarketMakingEnv(params)
env.reset(seed=3)
state = env.state
fills = 0
while not state.done:
    obs = observe(state, params)
    result = env.step(optimal_quotes(obs, params.beta, params.sigma, params.k, params.spread_model))
    fills += result.bid_filled + result.ask_filled
    state = result.next_state
print(f"final mid {state.mid_price:.2f}, inventory {state.inventory}, cash {state.cash:.2f}, fills {fills}")

# %%
# The same seed replays the same path
a = reset(params, seed=3)[1].shocks
b = reset(params, seed=3)[1].shocks
print("replayable:", np.array_equal(a, b))
