#!/usr/bin/env python3
"""Emulating the compensating operators with quadratic pulses.

Experiments offer linear couplings and quadratic interactions like Jz^2
(both signs), but not the cubic products the compensation asks for.  Short
pulse cycles fix that: a four-segment commutator cycle behaves like i[A, B]
at second order; splitting the interval between Jx^2 and (Jy+Jz)^2/2 yields
the lowest compensator at first order; cycling through the three quadratic
axes yields the next one; and nesting such cycles inside the exact operator
identities reaches the cubic pair.

For each construction the script prints the residual distance to its target
exponential at several dt and the measured convergence order under
dt-halving, then exports one sequence as a JSON pulse schedule.
"""

import json
import warnings

import numpy as np

from dickedrive import make_spin_ops
from dickedrive.seqcompile import (
    build_L1_split,
    build_L2_triple,
    build_L3_L4_nested,
    commutator_cycle,
    residual_order,
    sequence_residual,
    sequence_to_dict,
)

ops = make_spin_ops(6)
jx = np.asarray(ops.jx)
jz2 = np.asarray(ops.jz @ ops.jz)

studies = {
    "commutator cycle (target L1)": (
        lambda d: commutator_cycle(jx, jz2, d, ("jx", "jz^2")),
        (0.02, 0.01, 0.005),
    ),
    "two-segment split (target L1)": (
        lambda d: build_L1_split(1.0, d, ops),
        (0.02, 0.01, 0.005),
    ),
    "axis triple (target L2)": (
        lambda d: build_L2_triple(1.0, d, ops),
        (0.04, 0.02, 0.01),
    ),
    "nested cycles (target L3)": (
        lambda d: build_L3_L4_nested(build_L1_split(1.0, d, ops), ops),
        (0.16, 0.08, 0.04),
    ),
    "nested cycles (target L4)": (
        lambda d: build_L3_L4_nested(build_L2_triple(1.0, d, ops), ops),
        (0.16, 0.08, 0.04),
    ),
}

for name, (builder, dts) in studies.items():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the study probes dt beyond validity
        residuals = [sequence_residual(builder(d)) for d in dts]
    order = residual_order(residuals)
    pretty = ", ".join(f"{r:.2e}" for r in residuals)
    print(f"{name:32s} residuals [{pretty}]  order {order:.2f}")

seq = commutator_cycle(jx, jz2, 0.01, ("jx", "jz^2"))
print("\nJSON export of the commutator cycle:")
print(json.dumps(sequence_to_dict(seq), indent=2))
