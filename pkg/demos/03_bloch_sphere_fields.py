#!/usr/bin/env python3
"""Bloch-sphere portraits of the compensating Hamiltonians.

At a chosen instant of the drive this script evaluates, over a
(theta, phi) grid, the coherent-state expectation of the exact compensator,
of its single-state variant, and of the four polynomial compensating
operators, together with the torque field d<J>/dt = i<[H, J]> and the Husimi
function of the instantaneous ground state.  The resulting CSV grids are the
raw material for sphere plots; no rendering happens here.

The printed summary shows the hallmark of the lowest compensating operator:
on the equator it transports states eastward on the eastern hemisphere and
westward on the western one, converging at the -x meridian.
"""

import os

import numpy as np

from dickedrive import (
    DriveSchedule,
    build_assembly,
    compensator_basis,
    eigensystem,
    full_compensator,
    ground_state_derivative,
    hamiltonian_at,
    make_spin_ops,
    single_state_compensator,
)
from dickedrive.blochfield import expectation_field, q_function, sphere_grid, torque_field

OMEGA = 0.2887
TIME = 0.5  # chi_max * t

ops = make_spin_ops(30)
sched = DriveSchedule(2.0, OMEGA, 1.0, dicke_n=0.0)
assembly = build_assembly(ops, sched)
h, dh = hamiltonian_at(assembly, sched, TIME)
eig = eigensystem(h)
gderiv = ground_state_derivative(eig, dh)

grid = sphere_grid(61, 120)
fields = {
    "hb": full_compensator(eig, dh),
    "hb0": single_state_compensator(eig.ground_state, gderiv),
}
for i, op in enumerate(compensator_basis(ops, 0.0, 4).operators):
    fields[f"l{i + 1}"] = np.asarray(op)

outdir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(outdir, exist_ok=True)


def dump(name, sphere, vector=False):
    path = os.path.join(outdir, f"{name}.csv")
    with open(path, "w") as fh:
        fh.write("theta,phi,vx,vy,vz\n" if vector else "theta,phi,value\n")
        for i, theta in enumerate(sphere.thetas):
            for j, phi in enumerate(sphere.phis):
                vals = sphere.values[i, j] if vector else [sphere.values[i, j]]
                flat = ",".join(format(v, ".17g") for v in np.atleast_1d(vals))
                fh.write(f"{theta:.17g},{phi:.17g},{flat}\n")
    return path


dump("ground_q", q_function(eig.ground_state, grid))
for name, op in fields.items():
    dump(f"{name}_expect", expectation_field(op, grid))
    dump(f"{name}_torque", torque_field(op, grid), vector=True)
print(f"wrote {2 * len(fields) + 1} grids to {outdir}")

torque = torque_field(fields["l1"], grid)
equator = 30  # theta = pi/2 in a 61-row grid
east = np.stack([-np.sin(grid.phis), np.cos(grid.phis), np.zeros_like(grid.phis)], -1)
along = np.einsum("jk,jk->j", torque.values[equator], east)
print("\nlowest compensator, equatorial torque (positive = eastward):")
for phi_deg in (45, 135, 225, 315):
    j = int(round(phi_deg / 360 * 120)) % 120
    print(f"  phi = {phi_deg:3d} deg: torque.east = {along[j]:+9.2f}")
