"""Drive ramps and the time-dependent system Hamiltonian.

The protocol interpolates between a linear coupling Hamiltonian H_c, whose
ground state is a spin coherent state, and a quadratic Hamiltonian H_n whose
ground state is the target Dicke state:

    H(t) = A_c(t) H_c + A_n(t) H_n
    A_c(t) = omega_max cos^3(pi t / 2T),   A_n(t) = chi_max sin^3(pi t / 2T)

The cubed trig ramps start and end with zero slope, so dH/dt vanishes at both
endpoints of the schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spinops import SpinOperatorSet, dicke_state, valid_dicke_index

__all__ = [
    "EQUATORIAL",
    "MATCHED",
    "DriveSchedule",
    "HamiltonianAssembly",
    "ramp_at",
    "target_axis",
    "build_assembly",
    "hamiltonian_at",
]

# Start-axis choices: an equatorial coherent state (H_c = -Jx) or a coherent
# state at the same latitude as the target (H_c = c.J with c from target_axis).
EQUATORIAL = "equatorial"
MATCHED = "matched"


@dataclass(frozen=True)
class DriveSchedule:
    """Ramp parameters: total time T, strengths omega_max / chi_max, target
    Dicke index n and the start-axis choice."""

    total_time: float
    omega_max: float
    chi_max: float
    dicke_n: float = 0.0
    start: str = EQUATORIAL

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        if not self.chi_max > 0:
            raise ValueError(f"chi_max must be positive, got {self.chi_max}")
        if self.omega_max < 0:
            raise ValueError(f"omega_max must be >= 0, got {self.omega_max}")
        if self.start not in (EQUATORIAL, MATCHED):
            raise ValueError(f"start must be {EQUATORIAL!r} or {MATCHED!r}, got {self.start!r}")


def ramp_at(sched: DriveSchedule, t: float):
    """Evaluate (A_c, A_n, dA_c/dt, dA_n/dt) at time t in [0, T].

    The derivatives are the exact analytic ones of the cubed trig ramps.
    """
    big_t = sched.total_time
    if t < 0 or t > big_t:
        raise ValueError(f"t = {t} outside the schedule interval [0, {big_t}]")
    x = math.pi * t / (2 * big_t)
    c, s = math.cos(x), math.sin(x)
    rate = 3 * math.pi / (2 * big_t)
    a_c = sched.omega_max * c**3
    a_n = sched.chi_max * s**3
    da_c = -sched.omega_max * rate * c**2 * s
    da_n = sched.chi_max * rate * s**2 * c
    return a_c, a_n, da_c, da_n


def target_axis(n_atoms: int, n: float) -> np.ndarray:
    """Unit vector c such that the ground state of c.J has <Jz> = n.

    c = -(sqrt(1 - (2n/N)^2), 0, 2n/N); the ground state of c.J is the
    coherent state along -c, which sits at the target latitude.
    """
    x = 2 * n / n_atoms
    if abs(x) > 1 + 1e-12:
        raise ValueError(f"|n| = {abs(n)} exceeds N/2 = {n_atoms / 2}")
    x = min(max(x, -1.0), 1.0)
    return np.array([-math.sqrt(1 - x * x), 0.0, -x])


@dataclass(frozen=True)
class HamiltonianAssembly:
    """The two Hamiltonian building blocks for a given target.

    h_c is the linear coupling shape (spectrum ~ N/2), h_n the quadratic
    confinement (Jz - n)^2, positive semidefinite with the target Dicke
    state as its zero-energy ground state.  The time-dependent prefactors
    come from the schedule.
    """

    ops: SpinOperatorSet
    dicke_n: float
    start: str
    axis: np.ndarray
    h_c: np.ndarray
    h_n: np.ndarray


def build_assembly(
    ops: SpinOperatorSet, sched: DriveSchedule, strict_parity: bool = True
) -> HamiltonianAssembly:
    """Assemble H_c and H_n for the schedule's target index and start choice."""
    n = sched.dicke_n
    if abs(n) > ops.n_atoms / 2 + 1e-12:
        raise ValueError(f"|n| = {abs(n)} exceeds N/2 = {ops.n_atoms / 2}")
    if strict_parity and not valid_dicke_index(ops.n_atoms, n):
        raise ValueError(
            f"n = {n} does not match the parity of N = {ops.n_atoms}"
        )
    if sched.start == EQUATORIAL:
        axis = np.array([-1.0, 0.0, 0.0])
    else:
        axis = target_axis(ops.n_atoms, n)
    h_c = ops.axis_projection(axis)
    z = ops.jz - n * np.eye(ops.dim)
    h_n = z @ z
    return HamiltonianAssembly(ops, n, sched.start, axis, h_c, h_n)


def hamiltonian_at(assembly: HamiltonianAssembly, sched: DriveSchedule, t: float):
    """(H(t), dH/dt(t)) as Hermitian matrices."""
    if assembly.dicke_n != sched.dicke_n or assembly.start != sched.start:
        raise ValueError(
            "assembly was built for a different target "
            f"(n={assembly.dicke_n}, start={assembly.start!r}) than the schedule "
            f"(n={sched.dicke_n}, start={sched.start!r})"
        )
    a_c, a_n, da_c, da_n = ramp_at(sched, t)
    h = a_c * assembly.h_c + a_n * assembly.h_n
    dh = da_c * assembly.h_c + da_n * assembly.h_n
    return h, dh


def ground_state_target(assembly: HamiltonianAssembly) -> np.ndarray:
    """The Dicke state the schedule aims for (parity-consistent n only)."""
    return dicke_state(assembly.ops.n_atoms, assembly.dicke_n)
