#!/usr/bin/env python3
"""Fidelity and squeezing ladder for the equatorial Dicke target.

Thirty atoms are driven from the +x spin coherent state toward |Jz = 0> in
the short time chi_max * T = 2.  Without help the state lags far behind the
instantaneous ground state (final F ~ 0.19).  Adding the compensating
operators one at a time raises the final fidelity to 0.91, 0.98, 1 - 9e-6,
1 - 2e-7 and deepens the Jz squeezing from -1.6 dB to below -65 dB, while
the exact compensator tracks the ground state to numerical precision.

Writes ladder.csv (one row per mode) next to this script's output directory.
"""

import os

import numpy as np

from dickedrive import (
    MODE_EXACT,
    MODE_NONE,
    DriveSchedule,
    Partial,
    build_assembly,
    evolve,
    make_spin_ops,
)

# Linear coupling calibrated so the uncompensated run ends at F = 0.19
OMEGA = 0.2887
STEPS = 2000

ops = make_spin_ops(30)
sched = DriveSchedule(total_time=2.0, omega_max=OMEGA, chi_max=1.0, dicke_n=0.0)
assembly = build_assembly(ops, sched)

modes = [("none", MODE_NONE)]
modes += [(f"partial K={k}", Partial(k)) for k in (1, 2, 3, 4)]
modes += [("exact", MODE_EXACT)]

print(f"N = 30, chi*T = 2, omega_max = {OMEGA}\n")
print(f"{'mode':14s} {'final F':>12s} {'1 - F':>10s} {'squeezing':>10s}")
rows = []
for name, mode in modes:
    traj = evolve(assembly, sched, mode, steps=STEPS)
    f = traj.final_fidelity
    print(f"{name:14s} {f:12.8f} {1 - f:10.2e} {traj.final_squeezing_db:8.1f} dB")
    rows.append([f, 1 - f, traj.final_squeezing_db])

outdir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(outdir, exist_ok=True)
with open(os.path.join(outdir, "ladder.csv"), "w") as fh:
    fh.write("mode,final_fidelity,infidelity,squeezing_db\n")
    for (name, _), row in zip(modes, rows):
        fh.write(name + "," + ",".join(format(x, ".17g") for x in row) + "\n")
print(f"\nwrote {os.path.join(outdir, 'ladder.csv')}")
