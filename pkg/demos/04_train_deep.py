"""
Deep Q-learning with a 381-parameter network
============================================

A 3-10-10-21 perceptron maps (normalized price, inventory, time left) to
one value per action and is trained online, one SGD step per transition.
Training is sensitive to the seed, so a few seeds are tried.
"""

# %%
from mmlab import ActionGrid, DeepAgent, ModelParams, SymmetricAgent, TrainConfig, evaluate, train

params = ModelParams()
grid = ActionGrid()
sym = evaluate(SymmetricAgent(), 1000, params, 12345).metrics
print(f"symmetric: cum reward {sym.mean_cum_reward:.2f}, sharpe {sym.sharpe:.2f}")

# %%
for seed in (1, 2, 3):
    net, report = train(TrainConfig(algorithm="deep", episodes=1000, master_seed=seed), params, grid)
    m = evaluate(DeepAgent(net, grid), 1000, params, 12345).metrics
    print(
        f"seed {seed}: {report.wall_seconds:.0f}s training, cum reward {m.mean_cum_reward:.2f}, "
        f"mean wealth {m.mean_wealth:.2f}, sharpe {m.sharpe:.2f}"
    )
