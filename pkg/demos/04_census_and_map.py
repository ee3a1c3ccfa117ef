"""How often is full dephasing of a random pair implementable, and where does it pay?"""

# %%
import collections

from dualqubit.experiments import CensusConfig, feasibility_census, work_heatmap

# %%
census = feasibility_census(CensusConfig(n_samples=20_000, seed=0, work_samples=0))
print(f"feasible fraction: {census.feasible_fraction:.3f} +- {census.feasible_se:.3f}")

# %%
# Sign of the one-step work for rho2 on a grid in the plane through rho1.
grid = work_heatmap(resolution=41, n=1)
regimes = collections.Counter()
for row in grid.rows:
    if row["status"] != "Feasible":
        regimes["infeasible"] += 1
    else:
        regimes["yield" if row["W_opt"] > 0 else "cost"] += 1
print(dict(regimes))
