"""How much does splitting the protocol into more thermalization steps help?"""

# %%
from dualqubit.bounds import clausius_bound, final_bound
from dualqubit.optimize import OptimizationConfig, n_scan
from dualqubit.synthesis import TaskSpec

task = TaskSpec(
    (0.735, 0.273, -0.286), (-0.496, -0.470, -0.294),
    (0.0, 0.0, -0.286), (0.0, 0.0, -0.294),
)

# %%
ns = [1, 2, 3, 5, 10, 15, 20]
results = n_scan(task, ns, OptimizationConfig())
for n, res in zip(ns, results):
    print(f"N = {n:2d}   W = {res.mean_work:+.6f}")

# %%
# Work rises with N but never crosses the closed-form bound, which is
# negative for this task even though the Clausius bound is positive.
print("final bound:   ", final_bound(task))
print("Clausius bound:", clausius_bound(task))
