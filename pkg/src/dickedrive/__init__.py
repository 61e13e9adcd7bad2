"""Counterdiabatic driving of collective spins.

Prepares Dicke states of N two-level atoms by ramping from a linear coupling
to a quadratic confinement while suppressing diabatic transitions with exact
or partial compensating Hamiltonians, and compiles the higher-order
compensating operators into sequences of quadratic pulses.
"""

from .spinops import (
    SpinOperatorSet,
    CompensatorBasis,
    make_spin_ops,
    compensator_basis,
    dicke_state,
    coherent_state,
    expect,
    m_values,
)
from .schedule import (
    EQUATORIAL,
    MATCHED,
    DriveSchedule,
    HamiltonianAssembly,
    ramp_at,
    target_axis,
    build_assembly,
    hamiltonian_at,
)
from .counterdiabatic import (
    EigenSystem,
    CompensationSolution,
    DegenerateSpectrumError,
    ConditioningError,
    eigensystem,
    ground_state_derivative,
    full_compensator,
    single_state_compensator,
    solve_coefficients,
    averaged_coefficients,
    coefficient_track,
    averaged_coefficient_track,
)
from .propagator import (
    MODE_NONE,
    MODE_EXACT,
    Partial,
    AlphaTable,
    Trajectory,
    ConvergenceError,
    evolve,
    propagate,
    fidelity,
    squeezing_db,
    jz_distribution,
)

__version__ = "0.1.0"
