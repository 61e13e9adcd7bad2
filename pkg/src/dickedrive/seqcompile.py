"""Compile compensating operators into sequences of quadratic pulses.

Only linear couplings and quadratic interactions (both signs) are assumed
available.  Higher-order compensating operators are emulated through
Baker-Campbell-Hausdorff constructions:

  * a four-segment commutator cycle
        e^{iA dt} e^{iB dt} e^{-iA dt} e^{-iB dt} = e^{-[A,B] dt^2} + O(dt^3)
    acting like the Hermitian generator i[A,B] at second order;
  * a two-segment split (Jx^2 for dt/3, (Jy+Jz)^2/2 for 2dt/3) giving the
    lowest compensator L1 at first order, up to a constant-of-motion J^2 term;
  * a three-segment cycle through the Jz^2, Jy^2, Jx^2 axes giving L2 at
    second order (reversing the segment order flips its sign);
  * nested commutator cycles for L3 and L4 via the exact operator identities
        L3 = (1/4)[Jz^2,[Jz^2,L1]] + (3/4) L1
        L4 = (1/16)[Jz^2,[Jz^2,L2]] + 3 L2.

Conventions.  A segment (G, c) contributes the factor exp(i c G); the total
unitary is the product of the factors in listed order, so the LAST listed
segment acts first in time (JSON export re-orders to time order).  Every
sequence records the exponent it approximates,

    U_seq ~ exp(i * (plus_i_angle * target + casimir_angle * J^2)),

and since J^2 is a constant on the fixed-J subspace the casimir part is a
global phase.  Distances between unitaries are therefore measured with the
phase-invariant metric d(U, V) = sqrt(1 - |tr(U^dag V)| / dim).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .spinops import SpinOperatorSet, compensator_basis

__all__ = [
    "Segment",
    "PulseSequence",
    "sequence_unitary",
    "unitary_distance",
    "reference_unitary",
    "sequence_residual",
    "commutator_cycle",
    "build_L1_split",
    "build_L2_triple",
    "build_L3_L4_nested",
    "residual_order",
    "sequence_to_dict",
]

_HERM_TOL = 1e-12


@dataclass(frozen=True)
class Segment:
    """One pulse: generator G applied as the factor exp(i coefficient G)."""

    label: str
    generator: np.ndarray
    coefficient: float


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulse segments with the operator they emulate.

    effective_strength is the per-construction scale the sequence achieves
    (see each builder); plus_i_angle and casimir_angle pin the approximated
    exponent exactly as documented in the module header.  needs_negative_sign
    marks sequences that require the attractive sign of an interaction.
    """

    segments: tuple
    target: np.ndarray
    effective_strength: float
    duration: float
    plus_i_angle: float
    casimir_angle: float = 0.0
    kind: str = "custom"
    residual: float = None

    @property
    def needs_negative_sign(self) -> bool:
        return any(s.coefficient < 0 for s in self.segments)


def _check_hermitian(g: np.ndarray, label: str):
    if np.max(np.abs(g - g.conj().T)) > _HERM_TOL * max(1.0, np.max(np.abs(g))):
        raise ValueError(f"generator {label!r} is not Hermitian")


def _expm_i_herm(h: np.ndarray) -> np.ndarray:
    """exp(i h) for Hermitian h via spectral decomposition."""
    energies, states = np.linalg.eigh(h)
    return (states * np.exp(1j * energies)) @ states.conj().T


def sequence_unitary(seq: PulseSequence) -> np.ndarray:
    """Product of exp(i c G) over the segments in listed order."""
    dim = seq.target.shape[0]
    u = np.eye(dim, dtype=complex)
    for seg in seq.segments:
        _check_hermitian(seg.generator, seg.label)
        u = u @ _expm_i_herm(seg.coefficient * seg.generator)
    return u


def unitary_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Global-phase-invariant distance sqrt(1 - |tr(U^dag V)| / dim)."""
    dim = u.shape[0]
    return float(np.sqrt(max(0.0, 1.0 - abs(np.trace(u.conj().T @ v)) / dim)))


def reference_unitary(seq: PulseSequence) -> np.ndarray:
    """The exponential the sequence is built to approximate."""
    dim = seq.target.shape[0]
    j = (dim - 1) / 2
    phase = np.exp(1j * seq.casimir_angle * j * (j + 1))
    return phase * _expm_i_herm(seq.plus_i_angle * seq.target)


def sequence_residual(seq: PulseSequence) -> float:
    """Phase-invariant distance between the sequence and its reference."""
    return unitary_distance(sequence_unitary(seq), reference_unitary(seq))


def commutator_cycle(
    a: np.ndarray, b: np.ndarray, dt: float, labels=("a", "b")
) -> PulseSequence:
    """Four segments (+A, +B, -A, -B) emulating the generator i[A, B].

    The cycle unitary equals exp(-[A,B] dt^2) up to O(dt^3), i.e. the target
    i[A,B] with plus-i angle dt^2; effective_strength is dt.
    """
    if dt <= 0:
        raise ValueError(f"segment duration must be positive, got {dt}")
    _check_hermitian(a, labels[0])
    _check_hermitian(b, labels[1])
    target = 1j * (a @ b - b @ a)
    segments = (
        Segment(labels[0], a, dt),
        Segment(labels[1], b, dt),
        Segment(labels[0], a, -dt),
        Segment(labels[1], b, -dt),
    )
    return PulseSequence(
        segments, target, effective_strength=dt, duration=dt,
        plus_i_angle=dt * dt, kind="cycle",
    )


def build_L1_split(chi: float, dt: float, ops: SpinOperatorSet) -> PulseSequence:
    """Two-segment emulation of L1: Jx^2 for 1/3 and (Jy+Jz)^2/2 for 2/3 of dt.

    Approximates exp(i (chi dt / 3)(J^2 + L1)); the J^2 part is a global
    phase, so the sequence acts like the Hamiltonian (chi/3) L1.
    """
    if chi * dt * ops.n_atoms > 0.3:
        warnings.warn(
            f"chi*dt*N = {chi * dt * ops.n_atoms:.3g} is large; the first-order "
            "split needs chi*dt*N << 1",
            stacklevel=2,
        )
    jx2 = ops.jx @ ops.jx
    zprime2 = (ops.jy + ops.jz) @ (ops.jy + ops.jz) / 2
    target = compensator_basis(ops, 0.0, 1, strict_parity=False).operators[0]
    segments = (
        Segment("jx^2", jx2, chi * dt / 3),
        Segment("(jy+jz)^2/2", zprime2, 2 * chi * dt / 3),
    )
    return PulseSequence(
        segments, target, effective_strength=chi / 3, duration=dt,
        plus_i_angle=chi * dt / 3, casimir_angle=chi * dt / 3, kind="split",
    )


def build_L2_triple(
    chi: float, dt: float, ops: SpinOperatorSet, reverse: bool = False
) -> PulseSequence:
    """Three equal segments cycling the quadratic axis: Jz^2, Jy^2, Jx^2.

    With a = chi dt / 3 the product approximates exp(i a J^2 - i a^2 L2), so
    the system behaves as under the Hamiltonian (chi^2 dt / 9) L2 for the
    interval dt.  Reversing the segment order flips the sign of the L2 term.
    """
    a = chi * dt / 3
    return _triple_from_step(a, dt, ops, reverse)


def _triple_from_step(
    a: float, dt: float, ops: SpinOperatorSet, reverse: bool
) -> PulseSequence:
    if a * ops.n_atoms > 0.3:
        warnings.warn(
            f"step angle * N = {a * ops.n_atoms:.3g} is large; the axis cycle "
            "needs chi*dt*N << 1",
            stacklevel=3,
        )
    squares = [
        ("jx^2", ops.jx @ ops.jx),
        ("jy^2", ops.jy @ ops.jy),
        ("jz^2", ops.jz @ ops.jz),
    ]
    if reverse:
        squares = squares[::-1]
    target = compensator_basis(ops, 0.0, 2, strict_parity=False).operators[1]
    segments = tuple(Segment(lbl, g, a) for lbl, g in squares)
    angle = a * a if reverse else -a * a
    return PulseSequence(
        segments, target, effective_strength=3 * a * a / dt, duration=dt,
        plus_i_angle=angle, casimir_angle=a, kind="triple",
    )


def _inverted(segments) -> tuple:
    return tuple(
        Segment(s.label, s.generator, -s.coefficient) for s in reversed(segments)
    )


def _group_commutator(
    label: str, a: np.ndarray, coeff: float, inner: PulseSequence
) -> PulseSequence:
    """Cycle a quadratic pulse against a whole sequence.

    exp(i c A) U exp(-i c A) U^-1 approximates exp(i (c * theta) i[A, T])
    when U approximates exp(i theta T); the inner casimir phase cancels
    exactly between U and U^-1.
    """
    segments = (
        (Segment(label, a, coeff),)
        + inner.segments
        + (Segment(label, a, -coeff),)
        + _inverted(inner.segments)
    )
    target = 1j * (a @ inner.target - inner.target @ a)
    angle = coeff * inner.plus_i_angle
    return PulseSequence(
        segments, target, effective_strength=angle / inner.duration,
        duration=inner.duration, plus_i_angle=angle, kind="nested",
    )


def _scaled_split(base: PulseSequence, factor: float) -> PulseSequence:
    segments = tuple(
        Segment(s.label, s.generator, factor * s.coefficient) for s in base.segments
    )
    return PulseSequence(
        segments, base.target, base.effective_strength * factor, base.duration,
        base.plus_i_angle * factor, base.casimir_angle * factor, kind="split",
    )


def _match_target(target: np.ndarray, ref: np.ndarray):
    """Scalar c with target ~ c * ref, or None if not proportional."""
    denom = np.vdot(ref, ref).real
    c = np.vdot(ref, target).real / denom
    if abs(c) < 1e-12:
        return None
    if np.max(np.abs(target - c * ref)) > 1e-8 * np.max(np.abs(target)):
        return None
    return c


def build_L3_L4_nested(
    base: PulseSequence, ops: SpinOperatorSet, dt: float = None
) -> PulseSequence:
    """Nest commutator cycles of Jz^2 around an L1 or L2 sequence.

    The double commutator supplies the cubic-in-Jz part and a rescaled copy
    of the base cancels the leftover low-order term, per the exact operator
    identities verified up front.  The achieved plus-i angle on the L3 (L4)
    target and the measured residual are stored on the result.
    """
    basis = compensator_basis(ops, 0.0, 4, strict_parity=False)
    l1, l2, l3, l4 = (np.asarray(l) for l in basis.operators)
    jz2 = np.asarray(ops.jz @ ops.jz)

    def comm(x, y):
        return x @ y - y @ x

    for ident, name in (
        (comm(jz2, comm(jz2, l1)) / 4 + 3 * l1 / 4 - l3, "cubic"),
        (comm(jz2, comm(jz2, l2)) / 16 + 3 * l2 - l4, "cubic-cross"),
    ):
        dev = np.max(np.abs(ident))
        if dev > 1e-10 * max(1.0, np.max(np.abs(l3))):
            raise AssertionError(f"{name} nesting identity violated ({dev:.3e})")

    if dt is None:
        dt = base.duration

    c_l1 = _match_target(base.target, l1)
    c_l2 = _match_target(base.target, l2)
    if c_l1 is not None:
        # base exponent: i * theta_b * L1 with theta_b folding in the match scale
        theta_b = base.plus_i_angle * c_l1
        # outer sign chosen so the achieved L3 angle comes out positive
        sign = -1.0 if theta_b > 0 else 1.0
        level2 = _group_commutator("jz^2", jz2, dt, base)
        level3 = _group_commutator("jz^2", jz2, sign * dt, level2)
        theta3 = sign * dt * dt * theta_b  # negative; angle on (3 L1 - 4 L3)
        tail = _l1_tail(base, ops, -3 * theta3, theta_b, c_l1)
        achieved = -4 * theta3
        final_target, kind = l3, "nested-l3"
        casimir = tail.casimir_angle
    elif c_l2 is not None:
        theta_b = base.plus_i_angle * c_l2
        sign = -1.0 if theta_b > 0 else 1.0
        level2 = _group_commutator("jz^2", jz2, dt, base)
        level3 = _group_commutator("jz^2", jz2, sign * dt, level2)
        theta3 = sign * dt * dt * theta_b  # negative; angle on (48 L2 - 16 L4)
        a_tail = float(np.sqrt(-48 * theta3))
        tail = _triple_from_step(a_tail, base.duration, ops, reverse=True)
        achieved = -16 * theta3
        final_target, kind = l4, "nested-l4"
        casimir = tail.casimir_angle
    else:
        raise ValueError("base sequence target is neither L1 nor L2 (up to scale)")

    seq = PulseSequence(
        level3.segments + tail.segments, final_target,
        effective_strength=achieved, duration=dt,
        plus_i_angle=achieved, casimir_angle=casimir, kind=kind,
    )
    return PulseSequence(
        seq.segments, seq.target, seq.effective_strength, seq.duration,
        seq.plus_i_angle, seq.casimir_angle, seq.kind,
        residual=sequence_residual(seq),
    )


def _l1_tail(base, ops, angle, theta_b, scale) -> PulseSequence:
    """A sequence approximating exp(i angle L1), reusing the base's recipe.

    `scale` is the proportionality of the base's target to the canonical L1
    (its cycle contributes scale * dt'^2 of L1 angle per rebuild).
    """
    if base.kind == "split":
        return _scaled_split(base, angle / theta_b)
    if base.kind == "cycle":
        a = base.segments[0].generator
        b = base.segments[1].generator
        labels = (base.segments[0].label, base.segments[1].label)
        needed = angle / scale
        if needed >= 0:
            return commutator_cycle(a, b, float(np.sqrt(needed)), labels)
        return commutator_cycle(b, a, float(np.sqrt(-needed)), labels[::-1])
    raise ValueError(f"cannot rescale an L1 base of kind {base.kind!r}")


def residual_order(residuals, factor: float = 2.0) -> float:
    """Mean convergence order from residuals at successively halved dt."""
    r = np.asarray(residuals, dtype=float)
    if np.any(r <= 0):
        raise ValueError(
            "residual underflowed the distance metric; measure at larger dt"
        )
    slopes = np.log(r[:-1] / r[1:]) / np.log(factor)
    return float(np.mean(slopes))


def sequence_to_dict(seq: PulseSequence) -> dict:
    """JSON-ready description with segments in time order (first applied
    first); each segment carries the generator label, sign, and duration."""
    return {
        "kind": seq.kind,
        "convention": (
            "each segment applies the factor exp(i*sign*duration*generator); "
            "segments are listed in time order"
        ),
        "effective_strength": seq.effective_strength,
        "duration": seq.duration,
        "plus_i_angle": seq.plus_i_angle,
        "casimir_angle": seq.casimir_angle,
        "needs_negative_sign": seq.needs_negative_sign,
        "residual": seq.residual,
        "segments": [
            {
                "generator": s.label,
                "sign": -1 if s.coefficient < 0 else 1,
                "duration": abs(s.coefficient),
            }
            for s in reversed(seq.segments)
        ],
    }
