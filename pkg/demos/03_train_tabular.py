"""
Tabular Q-learning on a coarse clock
====================================

States are (price steps from the start, inventory, steps remaining). With
21 quote-centre actions and a 20-step episode the table stays small, so
200k episodes fit in a couple of minutes.

Pass a smaller episode count on the command line for a quick look, e.g.
``python demos/03_train_tabular.py 20000``.
"""
import sys

# %%
from mmlab import ActionGrid, ModelParams, SymmetricAgent, TabularAgent, TrainConfig, compare, train
from mmlab.tabular import table_stats

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
params = ModelParams(dt=0.05)
grid = ActionGrid()
config = TrainConfig(
    algorithm="tabular",
    episodes=episodes,
    alpha=0.2,
    epsilon_end=0.0,
    epsilon_decay_episodes=int(0.8 * episodes),
    master_seed=1,
)
table, report = train(config, params, grid)
print(f"{report.episodes_run} episodes in {report.wall_seconds:.0f}s, {table_stats(table)}")

# %%
# Learning curve: mean cumulative reward over consecutive blocks
block = max(1, episodes // 10)
for i in range(0, episodes, block):
    chunk = report.rewards[i : i + block]
    print(f"  episodes {i:>7}-{i + len(chunk) - 1:<7} mean reward {sum(chunk) / len(chunk):8.3f}")

# %%
# Greedy evaluation against the symmetric benchmark
print(compare([TabularAgent(table, grid), SymmetricAgent()], params, 1000, seed=12345).to_text())
