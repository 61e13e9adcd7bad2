"""Collective spin operators and reference states on the symmetric subspace.

All operators act on the (N+1)-dimensional spin J = N/2 space spanned by the
Jz eigenbasis, ordered by ascending eigenvalue m = -N/2 ... +N/2, with hbar = 1.
States are plain complex numpy vectors of unit norm over that basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpinOperatorSet",
    "CompensatorBasis",
    "make_spin_ops",
    "compensator_basis",
    "dicke_state",
    "coherent_state",
    "expect",
    "m_values",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    """Return `a` marked read-only; operator sets are immutable by contract."""
    a.flags.writeable = False
    return a


def m_values(n_atoms: int) -> np.ndarray:
    """Jz eigenvalues m = -N/2 ... +N/2 in basis order."""
    return np.arange(n_atoms + 1) - n_atoms / 2


def valid_dicke_index(n_atoms: int, n: float) -> bool:
    """True if n is a reachable Jz eigenvalue: |n| <= N/2 and integer (even N)
    or half-integer (odd N)."""
    if abs(n) > n_atoms / 2 + 1e-12:
        return False
    return abs((n + n_atoms / 2) - round(n + n_atoms / 2)) < 1e-9


@dataclass(frozen=True)
class SpinOperatorSet:
    """Dense collective spin matrices for N two-level atoms (J = N/2)."""

    n_atoms: int
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    @property
    def j(self) -> float:
        return self.n_atoms / 2

    def axis_projection(self, axis) -> np.ndarray:
        """c . J for a real 3-vector c."""
        cx, cy, cz = axis
        return cx * self.jx + cy * self.jy + cz * self.jz


@dataclass(frozen=True)
class CompensatorBasis:
    """The first K shifted compensating operators L_1..L_K.

    The shift replaces Jz by Jz - n*I everywhere, so the same basis serves any
    target Dicke index n.  With n = 0:

        L1 = Jz Jy + Jy Jz
        L2 = Jz Jy Jx + Jx Jy Jz
        L3 = Jz^3 Jy + Jy Jz^3
        L4 = Jz^3 Jy Jx + Jx Jy Jz^3
    """

    n_atoms: int
    shift: float
    operators: tuple

    @property
    def k(self) -> int:
        return len(self.operators)

    @property
    def parity_consistent(self) -> bool:
        return valid_dicke_index(self.n_atoms, self.shift)


def make_spin_ops(n_atoms: int) -> SpinOperatorSet:
    """Build Jx, Jy, Jz for `n_atoms` atoms.

    Uses the standard ladder elements <m+1|J+|m> = sqrt(J(J+1) - m(m+1)).
    N = 0 is rejected: a single basis state has no dynamics.
    """
    if not isinstance(n_atoms, (int, np.integer)):
        raise TypeError(f"atom count must be an integer, got {n_atoms!r}")
    if n_atoms < 1:
        raise ValueError(f"atom count must be >= 1, got {n_atoms}")
    j = n_atoms / 2
    m = m_values(n_atoms)
    up = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.diag(up, -1).astype(complex)  # raising: element (i+1, i)
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    jz = np.diag(m).astype(complex)
    return SpinOperatorSet(n_atoms, _frozen(jx), _frozen(jy), _frozen(jz))


def compensator_basis(
    ops: SpinOperatorSet, n: float = 0.0, k: int = 4, strict_parity: bool = True
) -> CompensatorBasis:
    """First `k` of the shifted compensating operators for target index `n`.

    With strict_parity (default) n must be a reachable Dicke index of this N;
    the averaged fluctuating-N machinery passes strict_parity=False so odd-N
    members of a support can share an integer n.
    """
    if not 1 <= k <= 4:
        raise ValueError(f"operator count must be in 1..4, got {k}")
    if abs(n) > ops.n_atoms / 2 + 1e-12:
        raise ValueError(f"|n| = {abs(n)} exceeds N/2 = {ops.n_atoms / 2}")
    if strict_parity and not valid_dicke_index(ops.n_atoms, n):
        raise ValueError(
            f"n = {n} does not match the parity of N = {ops.n_atoms} "
            "(integer for even N, half-integer for odd N)"
        )
    z = ops.jz - n * np.eye(ops.dim)
    z3 = z @ z @ z
    yx = ops.jy @ ops.jx
    xy = ops.jx @ ops.jy
    ls = (
        z @ ops.jy + ops.jy @ z,
        z @ yx + xy @ z,
        z3 @ ops.jy + ops.jy @ z3,
        z3 @ yx + xy @ z3,
    )
    return CompensatorBasis(ops.n_atoms, n, tuple(_frozen(l) for l in ls[:k]))


def dicke_state(n_atoms: int, m: float) -> np.ndarray:
    """Basis vector |Jz = m>: amplitude 1 at index m + N/2."""
    if not valid_dicke_index(n_atoms, m):
        raise ValueError(f"m = {m} is not a Jz eigenvalue for N = {n_atoms}")
    psi = np.zeros(n_atoms + 1, dtype=complex)
    psi[round(m + n_atoms / 2)] = 1.0
    return psi


def coherent_state(ops: SpinOperatorSet, theta: float, phi: float) -> np.ndarray:
    """Spin coherent state with <J> = (N/2)(sin t cos p, sin t sin p, cos t).

    Built from binomial amplitudes; equals exp(-i phi Jz) exp(-i theta Jy)
    applied to the north pole state |Jz = +N/2> (the rotation route is kept
    as a test oracle).
    """
    if not (math.isfinite(theta) and math.isfinite(phi)):
        raise ValueError("angles must be finite")
    n = ops.n_atoms
    j = ops.j
    m = m_values(n)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    binom = np.array([math.comb(n, i) for i in range(n + 1)], dtype=float)
    amps = np.sqrt(binom) * c ** (j + m) * s ** (j - m) * np.exp(-1j * m * phi)
    return amps / np.linalg.norm(amps)


def expect(op: np.ndarray, psi: np.ndarray) -> float:
    """Real expectation value <psi|op|psi> of a Hermitian operator."""
    return float(np.vdot(psi, op @ psi).real)
