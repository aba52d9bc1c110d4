"""Exact-diagonalisation toolkit for the paramagnet to frustrated-magnet sweep
of transverse-field Ising flux-qubit networks."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    AccuracyError,
    ControlSchedule,
    SweepModel,
    Trajectory,
    evolve_schrodinger,
    schedule_at,
    track_ground_state,
)
from .eigensolver import ConvergenceError, EigenResult, fix_gauge, ground_state, lanczos  # noqa: E402
from .metrics import (  # noqa: E402
    ChiTrace,
    FidelityPoint,
    FitResult,
    MacroTrace,
    chi_trace,
    fidelity_susceptibility,
    fidelity_susceptibility_family,
    fit_exponential,
    kl_divergence,
    macro_measure,
    macro_trace,
)
from .network import (  # noqa: E402
    ControlParams,
    MemoryBudgetError,
    SparseOperator,
    SpinNetwork,
    apply,
    basis_state,
    build_hamiltonian,
    build_pauli_sum,
    plus_state,
)
from .observables import (  # noqa: E402
    MomentHistogram,
    WitnessValue,
    computational_basis_probabilities,
    moment_distribution,
    paramagnetic_reference,
    reduce_to_block,
    witness_expectation,
)
