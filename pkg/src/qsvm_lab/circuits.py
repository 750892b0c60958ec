"""Tape builders: angle embeddings, the layered entangling ansatz, and the
kernel/classifier circuits assembled from them.

Public builders bake data into constant angles and expose trainable angles
as parameter slots. The ``*_pair_tape`` variants instead expose *data* as
slots too, which is what the batched executor wants when sweeping many
(x1, x2) pairs through one tape structure; their slot layout is
``[x1 (f) | x2 (f) | theta (3*L*n)]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError
from .sim import MAX_QUBITS, CircuitTape, Gate, adjoint_tape

_AXIS_TO_KIND = {"X": "RX", "Y": "RY", "Z": "RZ"}


@dataclass(frozen=True)
class EmbeddingSpec:
    """One rotation per qubit; the axis applies to every feature.

    Y is the default axis: RY-embedded states stay real with a nonzero
    Bloch X component, which keeps the rotation-gate gradients of a
    near-identity ansatz alive. RX embeddings put every single-qubit
    state in the Y-Z plane, where the first derivative of a Z readout
    with respect to small ansatz angles vanishes and hinge training
    stalls at its starting point. Kernel values are axis-independent
    for X and Y (both give the product-of-cosines overlap).
    """

    n_features: int
    rotation_axis: str = "Y"

    def __post_init__(self) -> None:
        if not 1 <= self.n_features <= MAX_QUBITS:
            raise ConfigurationError(
                f"n_features must be in [1, {MAX_QUBITS}], got {self.n_features}"
            )
        if self.rotation_axis not in _AXIS_TO_KIND:
            raise ConfigurationError(
                f"rotation_axis must be one of X/Y/Z, got {self.rotation_axis!r}"
            )


def _default_ranges(n_layers: int, n_qubits: int) -> tuple[int, ...]:
    if n_qubits == 1:
        return (1,) * n_layers
    return tuple((layer % (n_qubits - 1)) + 1 for layer in range(n_layers))


@dataclass(frozen=True)
class AnsatzSpec:
    """Layered entangler: per layer one ROT3 per qubit, then a CNOT ring.

    Layer ``l`` entangles wire ``i`` with ``(i + entangler_ranges[l]) % n``;
    a single qubit gets no entanglers. Parameter slots are laid out
    layer-major, qubit-major, angle-minor.
    """

    n_layers: int
    n_qubits: int
    entangler_ranges: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.n_layers < 1:
            raise ConfigurationError(f"n_layers must be >= 1, got {self.n_layers}")
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(
                f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}"
            )
        ranges = self.entangler_ranges
        if ranges is None:
            ranges = _default_ranges(self.n_layers, self.n_qubits)
        ranges = tuple(int(r) for r in ranges)
        if len(ranges) != self.n_layers:
            raise ConfigurationError(
                f"need {self.n_layers} entangler ranges, got {len(ranges)}"
            )
        bound = max(self.n_qubits, 2)
        if any(not 1 <= r < bound for r in ranges):
            raise ConfigurationError(
                f"entangler ranges must lie in [1, {bound - 1}], got {ranges}"
            )
        object.__setattr__(self, "entangler_ranges", ranges)

    @property
    def n_params(self) -> int:
        return 3 * self.n_layers * self.n_qubits


def _embedding_gates(spec, values=None, slot_offset=None, wire_offset=0):
    """One rotation per qubit; constants from ``values`` or slots from
    ``slot_offset``."""
    kind = _AXIS_TO_KIND[spec.rotation_axis]
    gates = []
    for i in range(spec.n_features):
        wire = wire_offset + i
        if slot_offset is None:
            gates.append(Gate(kind, (wire,), (float(values[i]),)))
        else:
            gates.append(Gate(kind, (wire,), param_slots=(slot_offset + i,)))
    return gates


def _as_feature_vector(x, n_features: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if arr.shape[0] != n_features:
        raise DataError(
            f"{name} has {arr.shape[0]} features, embedding expects {n_features}"
        )
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def angle_embedding(x, spec: EmbeddingSpec) -> CircuitTape:
    """Feature vector -> one constant rotation per qubit."""
    vec = _as_feature_vector(x, spec.n_features, "x")
    return CircuitTape(spec.n_features, _embedding_gates(spec, values=vec))


def _ansatz_gates(spec: AnsatzSpec, slot_offset: int = 0) -> list[Gate]:
    gates: list[Gate] = []
    n = spec.n_qubits
    for layer in range(spec.n_layers):
        for q in range(n):
            base = slot_offset + 3 * (layer * n + q)
            gates.append(Gate("ROT3", (q,), param_slots=(base, base + 1, base + 2)))
        if n > 1:
            reach = spec.entangler_ranges[layer]
            for q in range(n):
                gates.append(Gate("CNOT", (q, (q + reach) % n)))
    return gates


def layered_ansatz(spec: AnsatzSpec) -> CircuitTape:
    """Trainable block with slots 0..3*L*n-1."""
    return CircuitTape(spec.n_qubits, _ansatz_gates(spec), n_params=spec.n_params)


def kernel_tape_inversion(x1, x2, spec: EmbeddingSpec) -> CircuitTape:
    """Embed x1, then un-embed x2; overlap shows up as P(all zeros)."""
    v1 = _as_feature_vector(x1, spec.n_features, "x1")
    v2 = _as_feature_vector(x2, spec.n_features, "x2")
    forward = CircuitTape(spec.n_features, _embedding_gates(spec, values=v1))
    backward = adjoint_tape(CircuitTape(spec.n_features, _embedding_gates(spec, values=v2)))
    return CircuitTape(spec.n_features, forward.gates + backward.gates)


def kernel_tape_swap(x1, x2, spec: EmbeddingSpec) -> CircuitTape:
    """SWAP test on 2f+1 wires; wire 0 is the ancilla.

    <Z> on the ancilla equals the squared state overlap.
    """
    v1 = _as_feature_vector(x1, spec.n_features, "x1")
    v2 = _as_feature_vector(x2, spec.n_features, "x2")
    f = spec.n_features
    n = 2 * f + 1
    if n > MAX_QUBITS:
        raise ConfigurationError(
            f"SWAP test needs {n} qubits for {f} features, limit is {MAX_QUBITS}"
        )
    gates = [Gate("H", (0,))]
    gates += _embedding_gates(spec, values=v1, wire_offset=1)
    gates += _embedding_gates(spec, values=v2, wire_offset=1 + f)
    for i in range(f):
        gates.append(Gate("CSWAP", (0, 1 + i, 1 + f + i)))
    gates.append(Gate("H", (0,)))
    return CircuitTape(n, gates)


def variational_tape(x, emb: EmbeddingSpec, ansatz: AnsatzSpec) -> CircuitTape:
    """Constant embedding followed by the slotted ansatz."""
    if emb.n_features != ansatz.n_qubits:
        raise ConfigurationError(
            f"embedding has {emb.n_features} features but ansatz acts on "
            f"{ansatz.n_qubits} qubits"
        )
    vec = _as_feature_vector(x, emb.n_features, "x")
    gates = _embedding_gates(emb, values=vec) + _ansatz_gates(ansatz)
    return CircuitTape(ansatz.n_qubits, gates, n_params=ansatz.n_params)


def hybrid_kernel_tape(
    x1, x2, theta=None, emb: EmbeddingSpec | None = None, ansatz: AnsatzSpec | None = None
) -> CircuitTape:
    """[embed(x1); ansatz] then the adjoint of [embed(x2); ansatz].

    Both halves read the same parameter slots, so every ansatz parameter
    occurs twice in the tape (once direct, once adjoint). ``theta`` is only
    validated here; binding happens at evaluation time.
    """
    if emb is None or ansatz is None:
        raise ConfigurationError("hybrid_kernel_tape needs embedding and ansatz specs")
    if emb.n_features != ansatz.n_qubits:
        raise ConfigurationError(
            f"embedding has {emb.n_features} features but ansatz acts on "
            f"{ansatz.n_qubits} qubits"
        )
    v1 = _as_feature_vector(x1, emb.n_features, "x1")
    v2 = _as_feature_vector(x2, emb.n_features, "x2")
    if theta is not None:
        flat = np.asarray(theta, dtype=np.float64).reshape(-1)
        if flat.shape[0] != ansatz.n_params:
            raise ConfigurationError(
                f"theta has {flat.shape[0]} entries, ansatz expects {ansatz.n_params}"
            )
    n = ansatz.n_qubits
    forward = _embedding_gates(emb, values=v1) + _ansatz_gates(ansatz)
    back = adjoint_tape(
        CircuitTape(
            n,
            _embedding_gates(emb, values=v2) + _ansatz_gates(ansatz),
            n_params=ansatz.n_params,
        )
    )
    return CircuitTape(n, tuple(forward) + back.gates, n_params=ansatz.n_params)


# --- slotted pair variants for batched evaluation ------------------------


def inversion_pair_tape(emb: EmbeddingSpec) -> CircuitTape:
    """Inversion kernel with data as slots: [x1 (f) | x2 (f)]."""
    f = emb.n_features
    forward = CircuitTape(f, _embedding_gates(emb, slot_offset=0), n_params=2 * f)
    backward = adjoint_tape(
        CircuitTape(f, _embedding_gates(emb, slot_offset=f), n_params=2 * f)
    )
    return CircuitTape(f, forward.gates + backward.gates, n_params=2 * f)


def swap_pair_tape(emb: EmbeddingSpec) -> CircuitTape:
    """SWAP-test kernel with data as slots: [x1 (f) | x2 (f)]."""
    f = emb.n_features
    n = 2 * f + 1
    if n > MAX_QUBITS:
        raise ConfigurationError(
            f"SWAP test needs {n} qubits for {f} features, limit is {MAX_QUBITS}"
        )
    gates = [Gate("H", (0,))]
    gates += _embedding_gates(emb, slot_offset=0, wire_offset=1)
    gates += _embedding_gates(emb, slot_offset=f, wire_offset=1 + f)
    for i in range(f):
        gates.append(Gate("CSWAP", (0, 1 + i, 1 + f + i)))
    gates.append(Gate("H", (0,)))
    return CircuitTape(n, gates, n_params=2 * f)


def hybrid_pair_tape(emb: EmbeddingSpec, ansatz: AnsatzSpec) -> CircuitTape:
    """Trainable kernel with slots [x1 (f) | x2 (f) | theta (3*L*n)]."""
    if emb.n_features != ansatz.n_qubits:
        raise ConfigurationError(
            f"embedding has {emb.n_features} features but ansatz acts on "
            f"{ansatz.n_qubits} qubits"
        )
    f = emb.n_features
    n_params = 2 * f + ansatz.n_params
    forward = _embedding_gates(emb, slot_offset=0) + _ansatz_gates(ansatz, slot_offset=2 * f)
    back = adjoint_tape(
        CircuitTape(
            ansatz.n_qubits,
            _embedding_gates(emb, slot_offset=f) + _ansatz_gates(ansatz, slot_offset=2 * f),
            n_params=n_params,
        )
    )
    return CircuitTape(ansatz.n_qubits, tuple(forward) + back.gates, n_params=n_params)


def variational_input_tape(emb: EmbeddingSpec, ansatz: AnsatzSpec) -> CircuitTape:
    """Classifier circuit with slots [x (f) | theta (3*L*n)]."""
    if emb.n_features != ansatz.n_qubits:
        raise ConfigurationError(
            f"embedding has {emb.n_features} features but ansatz acts on "
            f"{ansatz.n_qubits} qubits"
        )
    f = emb.n_features
    gates = _embedding_gates(emb, slot_offset=0) + _ansatz_gates(ansatz, slot_offset=f)
    return CircuitTape(ansatz.n_qubits, gates, n_params=f + ansatz.n_params)
