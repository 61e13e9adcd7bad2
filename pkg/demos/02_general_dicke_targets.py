#!/usr/bin/env python3
"""Preparing Dicke states away from the equator.

For a target |Jz = n> with n != 0 there are two natural starting points:
(a) the equatorial coherent state (ground state of -Jx), or (b) the coherent
state at the target latitude (ground state of c.J with the tilted axis c).
With few compensating operators the matched start wins, because it already
overlaps the target; with three or more the equatorial start wins.  This
script reproduces that crossover for n = 5, N = 30 and then sweeps n.
"""

import numpy as np

from dickedrive import (
    EQUATORIAL,
    MATCHED,
    MODE_NONE,
    DriveSchedule,
    Partial,
    build_assembly,
    evolve,
    make_spin_ops,
)

OMEGA = 0.2887
STEPS = 1500

ops = make_spin_ops(30)


def final_fidelity(n_target, start, k):
    sched = DriveSchedule(2.0, OMEGA, 1.0, dicke_n=n_target, start=start)
    assembly = build_assembly(ops, sched)
    mode = MODE_NONE if k == 0 else Partial(k)
    return evolve(assembly, sched, mode, steps=STEPS).final_fidelity


print("crossover at n = 5 (final fidelity):\n")
print(f"{'K':>2s} {'equatorial':>12s} {'matched':>12s}  better")
for k in range(5):
    f_a = final_fidelity(5.0, EQUATORIAL, k)
    f_b = final_fidelity(5.0, MATCHED, k)
    print(f"{k:2d} {f_a:12.6f} {f_b:12.6f}  {'matched' if f_b > f_a else 'equatorial'}")

print("\nfidelity vs target index (K = 3, equatorial start):\n")
for n_target in range(0, 16, 3):
    f = final_fidelity(float(n_target), EQUATORIAL, 3)
    print(f"n = {n_target:2d}: 1 - F = {1 - f:.2e}")
