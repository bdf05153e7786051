"""
Distributions of final wealth and cumulative reward
===================================================

Histograms are exported as CSV (left edge, right edge, count) so they can
be plotted with any tool. Here they are drawn as text bars.
"""

# %%
from mmlab import ModelParams, OptimalAgent, SymmetricAgent, evaluate, histogram

params = ModelParams()


def bars(samples, bins=12, width=40):
    hist = histogram(samples, bins)
    top = max(hist.counts)
    for left, right, count in hist.rows():
        print(f"  [{left:7.1f}, {right:7.1f})  {'#' * round(width * count / top)}")


# %%
for agent in (OptimalAgent(), SymmetricAgent()):
    result = evaluate(agent, 1000, params, 12345)
    print(f"{agent.name}: final wealth")
    bars(result.wealth)
    print(f"{agent.name}: cumulative reward")
    bars(result.rewards)
