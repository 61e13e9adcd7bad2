"""Bloch-sphere scalar and vector fields for visualizing operators and states.

Every node of a (theta, phi) grid carries a spin coherent state |theta,phi>.
Three fields are produced: the Husimi function Q = |<theta,phi|psi>|^2 of a
state, the coherent-state expectation <theta,phi|H|theta,phi> of an operator,
and the torque d<J>/dt = i<[H, J]> the operator exerts on the mean spin.
Output is raw gridded data; rendering is left to external tools.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spinops import make_spin_ops, m_values

__all__ = [
    "SphereGrid",
    "sphere_grid",
    "q_function",
    "expectation_field",
    "torque_field",
]


@dataclass(frozen=True)
class SphereGrid:
    """Polar/azimuth sample angles plus per-node values.

    values is None for a bare grid, (n_theta, n_phi) for a scalar field, or
    (n_theta, n_phi, 3) for a vector field.
    """

    thetas: np.ndarray
    phis: np.ndarray
    values: np.ndarray = None

    def nodes(self):
        """(theta, phi) pairs in row-major order."""
        t, p = np.meshgrid(self.thetas, self.phis, indexing="ij")
        return np.column_stack([t.ravel(), p.ravel()])


def sphere_grid(n_theta: int = 100, n_phi: int = 200) -> SphereGrid:
    """Uniform grid: theta in [0, pi] inclusive, phi in [0, 2 pi)."""
    if n_theta < 2 or n_phi < 2:
        raise ValueError("grid needs at least 2 samples per angle")
    return SphereGrid(
        np.linspace(0.0, math.pi, n_theta),
        np.arange(n_phi) * 2 * math.pi / n_phi,
    )


def _amplitude_tables(n_atoms: int, grid: SphereGrid):
    """Coherent-state amplitudes factored as theta-profile times phi-phase.

    amp(theta, phi)_m = B[theta, m] * exp(-i m phi), so overlaps against the
    whole grid reduce to one matrix product per field.
    """
    j = n_atoms / 2
    m = m_values(n_atoms)
    binom = np.array([math.comb(n_atoms, i) for i in range(n_atoms + 1)])
    half = grid.thetas[:, None] / 2
    b = np.sqrt(binom)[None, :] * np.cos(half) ** (j + m) * np.sin(half) ** (j - m)
    phase = np.exp(-1j * np.outer(grid.phis, m))
    return b, phase


def q_function(psi: np.ndarray, grid: SphereGrid) -> SphereGrid:
    """Husimi function Q(theta, phi) = |<theta,phi|psi>|^2 on the grid."""
    b, phase = _amplitude_tables(len(psi) - 1, grid)
    overlap = (b * psi[None, :]) @ phase.conj().T
    return replace(grid, values=np.abs(overlap) ** 2)


def _node_states(n_atoms: int, grid: SphereGrid) -> np.ndarray:
    b, phase = _amplitude_tables(n_atoms, grid)
    return (b[:, None, :] * phase[None, :, :]).reshape(-1, n_atoms + 1)


def expectation_field(h: np.ndarray, grid: SphereGrid) -> SphereGrid:
    """Coherent-state expectation of a Hermitian operator at every node."""
    v = _node_states(h.shape[0] - 1, grid)
    vals = np.einsum("am,am->a", v.conj(), v @ h.T).real
    return replace(grid, values=vals.reshape(len(grid.thetas), len(grid.phis)))


def torque_field(h: np.ndarray, grid: SphereGrid) -> SphereGrid:
    """Mean-spin drift (i<[H,Jx]>, i<[H,Jy]>, i<[H,Jz]>) at every node."""
    n_atoms = h.shape[0] - 1
    ops = make_spin_ops(n_atoms)
    v = _node_states(n_atoms, grid)
    comps = []
    for j_a in (ops.jx, ops.jy, ops.jz):
        k = 1j * (h @ j_a - j_a @ h)
        comps.append(np.einsum("am,am->a", v.conj(), v @ k.T).real)
    vals = np.stack(comps, axis=-1)
    return replace(grid, values=vals.reshape(len(grid.thetas), len(grid.phis), 3))
