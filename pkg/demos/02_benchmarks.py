"""
Closed-form benchmark agents
============================

The inventory-aware agent centres its quotes on the reservation price,
which leans against the current inventory. The symmetric agent centres
on the mid. Both quote the same spread, so any difference in the results
comes from the skew alone.
"""

# %%
from mmlab import ModelParams, OptimalAgent, SymmetricAgent, compare
from mmlab.evaluation import symmetric_expected_wealth

params = ModelParams()
table = compare([OptimalAgent(), SymmetricAgent()], params, n_episodes=1000, seed=12345)
print(table.to_text())

# %%
# The symmetric agent's expected wealth has a closed form: each side earns
# half the spread times its fill probability at every step.
sym = table.rows[1]
se = sym.std_wealth / sym.episodes**0.5
print(f"symmetric mean {sym.mean_wealth:.2f} +- {se:.2f}, exact {symmetric_expected_wealth(params):.2f}")

# %%
# Common random numbers make the comparison paired: every episode sees the
# same price path and the same fill coins under both agents.
gap = table.results[0].wealth - table.results[1].wealth
print(f"paired wealth gap {gap.mean():.2f} +- {gap.std(ddof=1) / len(gap)**0.5:.2f}")
