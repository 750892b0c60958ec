"""Gradients of tape-level scalar functions.

The parameter-shift rule used here is the two-term +/- pi/2 rule, valid for
RX/RY/RZ and for each Euler angle of ROT3 (each is generated by a Pauli
with eigenvalues +/- 1/2). Shifts are applied per *occurrence* of a
parameter and summed, which is what makes tapes where one slot feeds
several gates (the trainable kernel binds every theta slot twice) come out
right. Central finite differences are deliberately kept as an independent
cross-check, not a fallback.
"""

from __future__ import annotations

from enum import Enum
from math import pi
from typing import Callable

import numpy as np

from .errors import CircuitError, UnsupportedGateError
from .sim import (
    ROTATION_KINDS,
    CircuitTape,
    batch_expectation_z,
    batch_prob_all_zero,
    resolve_angles,
    resolve_angles_batch,
    run_angles_batch,
    tape_occurrences,
)

ScalarFunction = Callable[[np.ndarray], float]


class Observable(Enum):
    """Measurements a tape-level scalar function can end in."""

    Z_WIRE0 = "z_wire0"
    ALL_ZERO = "all_zero"


def measure_batch(states: np.ndarray, tape: CircuitTape, observable: Observable) -> np.ndarray:
    if observable is Observable.Z_WIRE0:
        return batch_expectation_z(states, tape.n_qubits, 0)
    if observable is Observable.ALL_ZERO:
        return batch_prob_all_zero(states)
    raise CircuitError(f"unknown observable {observable!r}")


def _check_shiftable(tape: CircuitTape) -> None:
    for gate in tape.gates:
        if gate.param_slots is None:
            continue
        if any(s is not None for s in gate.param_slots) and gate.kind not in ROTATION_KINDS:
            raise UnsupportedGateError(
                f"parameter-shift rule does not cover parameterized {gate.kind}"
            )


def tape_value(tape: CircuitTape, theta, observable: Observable) -> float:
    """f(theta) for the tape run from |0...0>."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    angles = resolve_angles(tape, theta)[None, :]
    return float(measure_batch(run_angles_batch(tape, angles), tape, observable)[0])


def scalar_function(tape: CircuitTape, observable: Observable) -> ScalarFunction:
    """Bind a tape and observable into theta -> float."""
    return lambda theta: tape_value(tape, theta, observable)


def param_shift_gradient_batch(
    tape: CircuitTape,
    theta_rows,
    observable: Observable,
    slot_range: tuple[int, int] | None = None,
) -> np.ndarray:
    """Occurrence-summed parameter-shift gradients for many bindings.

    Returns (R, hi-lo) where ``slot_range=(lo, hi)`` selects the slots to
    differentiate (default: all of them). Row r is the gradient of
    f(theta_rows[r]).
    """
    _check_shiftable(tape)
    theta_rows = np.asarray(theta_rows, dtype=np.float64)
    if theta_rows.ndim == 1:
        theta_rows = theta_rows[None, :]
    if theta_rows.shape[1] != tape.n_params:
        raise CircuitError(
            f"tape expects {tape.n_params} parameters, got {theta_rows.shape[1]}"
        )
    lo, hi = (0, tape.n_params) if slot_range is None else slot_range
    occurrences = tape_occurrences(tape, (lo, hi))
    n_rows = theta_rows.shape[0]
    grads = np.zeros((n_rows, hi - lo), dtype=np.float64)
    if not occurrences or n_rows == 0:
        return grads
    base = resolve_angles_batch(tape, theta_rows)  # (R, P)
    n_occ = len(occurrences)
    # layout: for each row, 2*n_occ variants (+ then - per occurrence)
    variants = np.repeat(base, 2 * n_occ, axis=0)
    for k, (pos, _slot, sign) in enumerate(occurrences):
        variants[2 * k :: 2 * n_occ, pos] += sign * (pi / 2.0)
        variants[2 * k + 1 :: 2 * n_occ, pos] -= sign * (pi / 2.0)
    values = measure_batch(run_angles_batch(tape, variants), tape, observable)
    values = values.reshape(n_rows, n_occ, 2)
    deltas = 0.5 * (values[:, :, 0] - values[:, :, 1])  # (R, n_occ)
    for k, (_pos, slot, _sign) in enumerate(occurrences):
        grads[:, slot - lo] += deltas[:, k]
    return grads


def param_shift_gradient(tape: CircuitTape, theta, observable: Observable) -> np.ndarray:
    """Gradient of f at theta; length equals tape.n_params."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    return param_shift_gradient_batch(tape, theta[None, :], observable)[0]


def finite_diff_gradient(fn: ScalarFunction, theta, step: float = 1e-6) -> np.ndarray:
    """Central differences, the dumb-on-purpose oracle."""
    if step <= 0:
        raise CircuitError(f"finite-difference step must be positive, got {step}")
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    grad = np.empty_like(theta)
    for j in range(theta.shape[0]):
        up = theta.copy()
        down = theta.copy()
        up[j] += step
        down[j] -= step
        grad[j] = (fn(up) - fn(down)) / (2.0 * step)
    return grad
