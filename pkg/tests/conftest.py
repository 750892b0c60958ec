"""Shared helpers: seeded random tape construction for property tests."""

import numpy as np
import pytest

from qsvm_lab.sim import CircuitTape, Gate

ROTATIONS = ("RX", "RY", "RZ")


def _rotation_gate(rng, kind, wire, n_params):
    """One rotation whose angle is either a constant or a slot read."""
    arity = 3 if kind == "ROT3" else 1
    params = tuple(rng.uniform(-np.pi, np.pi, size=arity))
    if n_params == 0 or rng.random() < 0.3:
        return Gate(kind, (wire,), params=params)
    slots = tuple(
        None if rng.random() < 0.25 else int(rng.integers(n_params))
        for _ in range(arity)
    )
    signs = tuple(int(s) for s in rng.choice([-1, 1], size=arity))
    return Gate(kind, (wire,), params=params, param_slots=slots, param_signs=signs)


def random_tape(rng, n_qubits=None, n_params=None, n_gates=None, allow_cswap=True):
    """A seeded tape mixing rotations, ROT3, H, CNOT and CSWAP.

    Parameterized gates draw from ``n_params`` shared slots, so slots can
    occur several times (including with opposite signs), which is the
    hard case for occurrence-summed gradients.
    """
    if n_qubits is None:
        n_qubits = int(rng.integers(1, 5))
    if n_params is None:
        n_params = int(rng.integers(0, 5))
    if n_gates is None:
        n_gates = int(rng.integers(4, 12))
    gates = []
    for _ in range(n_gates):
        roll = rng.random()
        wire = int(rng.integers(n_qubits))
        if roll < 0.45:
            gates.append(_rotation_gate(rng, str(rng.choice(ROTATIONS)), wire, n_params))
        elif roll < 0.6:
            gates.append(_rotation_gate(rng, "ROT3", wire, n_params))
        elif roll < 0.7:
            gates.append(Gate("H", (wire,)))
        elif roll < 0.9 and n_qubits >= 2:
            control, target = rng.choice(n_qubits, size=2, replace=False)
            gates.append(Gate("CNOT", (int(control), int(target))))
        elif allow_cswap and n_qubits >= 3:
            c, a, b = rng.choice(n_qubits, size=3, replace=False)
            gates.append(Gate("CSWAP", (int(c), int(a), int(b))))
        else:
            gates.append(Gate("H", (wire,)))
    return CircuitTape(n_qubits=n_qubits, gates=tuple(gates), n_params=n_params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
