"""Work from partially dephasing a pair of states, as a function of the dephasing strength."""

# %%
import numpy as np

from dualqubit.experiments import gamma_sweep
from dualqubit.optimize import OptimizationConfig

r1 = (0.249, 0.183, 0.494)
r2 = (-0.044, -0.640, 0.508)

# %%
# N = 10 keeps the demo quick; the acceptance suite uses N = 20.
grid = np.linspace(0.90, 1.00, 11)
sweep = gamma_sweep(r1, r2, grid, config=OptimizationConfig(n_steps=10))
for row in sweep.rows:
    print(f"gamma = {row['gamma']:.2f}   W = {row['W_opt']:+.5f}   single step = {row['W_single']:+.5f}")

# %%
best = sweep.rows[int(np.nanargmax(sweep.column("W_opt")))]
print("most work at gamma =", round(best["gamma"], 2))
