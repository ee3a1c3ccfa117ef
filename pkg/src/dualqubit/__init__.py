"""Synthesis, simulation, optimization and bounds for dual-purpose qubit operations."""

from .accounting import (
    EnergyLedger,
    contact_time,
    entropy_production,
    protocol_ledger,
    quench_work,
    step_heat,
)
from .bounds import (
    BoundReport,
    bound_chain_diagnostics,
    clausius_bound,
    final_bound,
    lag_bound,
)
from .channels import (
    PartialThermalization,
    StepSequence,
    apply_thermalization,
    apply_unitary,
    compose_pair,
    compose_sequence,
    conjugate_step,
    normal_form,
)
from .optimize import (
    OptimizationConfig,
    OptimizationResult,
    n_scan,
    optimize_protocol,
    single_input_reference,
)
from .qubit import (
    bloch_from_density,
    density_from_bloch,
    free_energy,
    gibbs_state,
    relative_entropy,
    state_hamiltonian,
    trace_distance,
    vn_entropy,
)
from .synthesis import (
    CanonicalSolution,
    Feasibility,
    Protocol,
    TaskSpec,
    canonical_protocol,
    canonical_solve,
    expand_to_n_steps,
    feasibility_classify,
    run_protocol,
)

__version__ = "0.1.0"
