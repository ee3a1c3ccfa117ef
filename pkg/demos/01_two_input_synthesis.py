"""Build the cheapest one-step protocol that sends two given inputs to two given outputs."""

# %%
import numpy as np

from dualqubit.accounting import protocol_ledger
from dualqubit.bounds import clausius_bound, final_bound
from dualqubit.qubit import bloch_from_density, trace_distance
from dualqubit.synthesis import TaskSpec, canonical_solve, canonical_protocol, run_protocol

# %%
# Two mixed inputs, both fully dephased in the energy basis.
task = TaskSpec(
    (0.735, 0.273, -0.286), (-0.496, -0.470, -0.294),
    (0.0, 0.0, -0.286), (0.0, 0.0, -0.294),
)
sol = canonical_solve(task)
print("status:", sol.status.value)
print("lambda:", sol.lam)
print("tau (Bloch):", np.round(bloch_from_density(sol.tau), 6))

# %%
# The protocol reproduces both outputs exactly.
proto = canonical_protocol(task)
for rho, eta in ((task.rho1, task.eta1), (task.rho2, task.eta2)):
    print("output error:", trace_distance(run_protocol(proto, rho)[-1], eta))

# %%
ledger = protocol_ledger(proto)
print("mean work, one step:", ledger.mean_work)
print("final bound:        ", final_bound(task))
print("Clausius bound:     ", clausius_bound(task))
