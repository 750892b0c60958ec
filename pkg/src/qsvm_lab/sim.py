"""Dense statevector simulation for small parameterized circuits.

Conventions
-----------
* Qubit 0 is the most significant bit of a basis-state index, so an
  amplitude vector reshaped to ``[2] * n_qubits`` has qubit ``k`` on axis
  ``k``.
* Rotations use the half-angle convention ``RX(t) = exp(-i t X / 2)`` (RY,
  RZ analogous). ``ROT3(a, b, c)`` is the ZYZ Euler rotation
  ``RZ(c) @ RY(b) @ RZ(a)``, i.e. the ``a`` rotation is applied first.
* A gate angle resolves to ``sign * theta[slot]`` for slot-bound positions
  and ``sign * constant`` otherwise. Keeping the sign separate lets the
  adjoint of a tape share the original parameter vector.

Every operation is pure: it returns fresh states or tapes and never
mutates inputs. Besides the single-state API there is a batched executor
(`final_states`, `run_angles_batch`) that pushes many parameter rows
through one tape structure at once; each batch lane is computed
independently, so results do not depend on chunking or on the thread count
taken from ``QSVM_LAB_THREADS``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from math import cos, sin, sqrt

import numpy as np

from .errors import CircuitError, ConfigurationError

MAX_QUBITS = 24
NORM_TOL = 1e-10

#: angles carried by each gate kind
GATE_ARITY = {"RX": 1, "RY": 1, "RZ": 1, "ROT3": 3, "H": 0, "CNOT": 0, "CSWAP": 0}
#: wires touched by each gate kind
GATE_WIRES = {"RX": 1, "RY": 1, "RZ": 1, "ROT3": 1, "H": 1, "CNOT": 2, "CSWAP": 3}
ROTATION_KINDS = ("RX", "RY", "RZ", "ROT3")

_H_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    """One gate: kind, target wires, and how its angles are obtained.

    ``params`` holds constant angles (one per angle position). When
    ``param_slots`` is given, position ``p`` reads ``theta[param_slots[p]]``
    instead, unless the slot is None. ``param_signs`` multiplies either
    source; adjoints flip it.
    """

    kind: str
    wires: tuple[int, ...]
    params: tuple[float, ...] = ()
    param_slots: tuple[int | None, ...] | None = None
    param_signs: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_ARITY:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if len(self.wires) != GATE_WIRES[self.kind]:
            raise CircuitError(
                f"{self.kind} takes {GATE_WIRES[self.kind]} wire(s), got {self.wires}"
            )
        if len(set(self.wires)) != len(self.wires):
            raise CircuitError(f"{self.kind} wires must be distinct, got {self.wires}")
        if any(w < 0 for w in self.wires):
            raise CircuitError(f"negative wire index in {self.wires}")
        arity = GATE_ARITY[self.kind]
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.param_slots is not None:
            slots = tuple(None if s is None else int(s) for s in self.param_slots)
            object.__setattr__(self, "param_slots", slots)
            if len(slots) != arity:
                raise CircuitError(f"{self.kind} needs {arity} slot entries, got {slots}")
            if any(s is not None and s < 0 for s in slots):
                raise CircuitError("parameter slots must be non-negative")
            if any(s is None for s in slots) and len(self.params) != arity:
                raise CircuitError("constant positions need a params entry each")
        elif len(self.params) != arity:
            raise CircuitError(
                f"{self.kind} takes {arity} angle(s), got {len(self.params)}"
            )
        signs = self.param_signs
        if signs is None:
            signs = (1,) * arity
        signs = tuple(int(s) for s in signs)
        if len(signs) != arity or any(s not in (-1, 1) for s in signs):
            raise CircuitError(f"invalid param_signs {self.param_signs!r}")
        object.__setattr__(self, "param_signs", signs)

    def angles(self, theta=None) -> tuple[float, ...]:
        """Resolve this gate's angles against a bound parameter vector."""
        arity = GATE_ARITY[self.kind]
        if arity == 0:
            return ()
        out = []
        for p in range(arity):
            slot = None if self.param_slots is None else self.param_slots[p]
            if slot is None:
                base = self.params[p]
            else:
                if theta is None or slot >= len(theta):
                    raise CircuitError(
                        f"gate slot {slot} not covered by parameter vector"
                    )
                base = float(theta[slot])
            out.append(self.param_signs[p] * base)
        return tuple(out)


def adjoint_gate(gate: Gate) -> Gate:
    """Inverse of a single gate; self-inverse kinds come back unchanged."""
    arity = GATE_ARITY[gate.kind]
    if arity == 0:
        return gate
    return replace(
        gate,
        params=tuple(reversed(gate.params)),
        param_slots=None if gate.param_slots is None else tuple(reversed(gate.param_slots)),
        param_signs=tuple(-s for s in reversed(gate.param_signs)),
    )


@dataclass(frozen=True)
class CircuitTape:
    """An ordered gate list on ``n_qubits`` wires with ``n_params`` slots."""

    n_qubits: int
    gates: tuple[Gate, ...] = ()
    n_params: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(
                f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}"
            )
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_params < 0:
            raise CircuitError("n_params must be non-negative")
        for gate in self.gates:
            if any(w >= self.n_qubits for w in gate.wires):
                raise CircuitError(
                    f"gate {gate.kind} on wires {gate.wires} exceeds {self.n_qubits} qubits"
                )
            if gate.param_slots is not None:
                for slot in gate.param_slots:
                    if slot is not None and slot >= self.n_params:
                        raise CircuitError(
                            f"slot {slot} out of range for n_params={self.n_params}"
                        )


@dataclass(frozen=True)
class StateVector:
    """2**n_qubits complex amplitudes; construction checks normalization."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amps)
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(f"n_qubits out of range: {self.n_qubits}")
        if amps.shape != (2**self.n_qubits,):
            raise CircuitError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise CircuitError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")


def init_state(n_qubits: int) -> StateVector:
    """|0...0> on ``n_qubits`` wires."""
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}"
        )
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(int(n_qubits), amps)


def _rotation_matrix(kind: str, angles: tuple[float, ...]) -> np.ndarray:
    if kind == "RX":
        c, s = cos(angles[0] / 2.0), sin(angles[0] / 2.0)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == "RY":
        c, s = cos(angles[0] / 2.0), sin(angles[0] / 2.0)
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "RZ":
        phase = np.exp(-0.5j * angles[0])
        return np.array([[phase, 0.0], [0.0, np.conj(phase)]], dtype=np.complex128)
    if kind == "ROT3":
        a, b, c = angles
        cb, sb = cos(b / 2.0), sin(b / 2.0)
        return np.array(
            [
                [cb * np.exp(-0.5j * (a + c)), -sb * np.exp(0.5j * (a - c))],
                [sb * np.exp(-0.5j * (a - c)), cb * np.exp(0.5j * (a + c))],
            ],
            dtype=np.complex128,
        )
    raise CircuitError(f"{kind} has no rotation matrix")


def _apply_single_qubit(amps: np.ndarray, n: int, wire: int, mat: np.ndarray) -> np.ndarray:
    psi = amps.reshape((2,) * n)
    psi = np.tensordot(mat, psi, axes=([1], [wire]))
    psi = np.moveaxis(psi, 0, wire)
    return np.ascontiguousarray(psi).reshape(-1)

def _apply_cnot(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    psi = amps.reshape((2,) * n).copy()
    one_zero = [slice(None)] * n
    one_one = [slice(None)] * n
    one_zero[control], one_zero[target] = 1, 0
    one_one[control], one_one[target] = 1, 1
    lo, hi = tuple(one_zero), tuple(one_one)
    psi[lo], psi[hi] = psi[hi].copy(), psi[lo].copy()
    return psi.reshape(-1)


def _apply_cswap(amps: np.ndarray, n: int, control: int, a: int, b: int) -> np.ndarray:
    psi = amps.reshape((2,) * n).copy()
    left = [slice(None)] * n
    right = [slice(None)] * n
    left[control], left[a], left[b] = 1, 0, 1
    right[control], right[a], right[b] = 1, 1, 0
    lo, hi = tuple(left), tuple(right)
    psi[lo], psi[hi] = psi[hi].copy(), psi[lo].copy()
    return psi.reshape(-1)


def apply_gate(state: StateVector, gate: Gate, params=None) -> StateVector:
    """Apply one gate, resolving slot-bound angles against ``params``."""
    n = state.n_qubits
    if any(w >= n for w in gate.wires):
        raise CircuitError(f"gate wires {gate.wires} exceed state qubits {n}")
    if gate.kind == "CNOT":
        amps = _apply_cnot(state.amplitudes, n, *gate.wires)
    elif gate.kind == "CSWAP":
        amps = _apply_cswap(state.amplitudes, n, *gate.wires)
    elif gate.kind == "H":
        amps = _apply_single_qubit(state.amplitudes, n, gate.wires[0], _H_MATRIX)
    else:
        mat = _rotation_matrix(gate.kind, gate.angles(params))
        amps = _apply_single_qubit(state.amplitudes, n, gate.wires[0], mat)
    return StateVector(n, amps)


def apply_tape(state: StateVector, tape: CircuitTape, params=None) -> StateVector:
    """Run a tape front to back against a bound parameter vector."""
    if tape.n_qubits != state.n_qubits:
        raise CircuitError(
            f"tape on {tape.n_qubits} qubits does not match state on {state.n_qubits}"
        )
    bound = () if params is None else np.asarray(params, dtype=np.float64)
    if len(bound) != tape.n_params:
        raise CircuitError(
            f"tape expects {tape.n_params} parameters, got {len(bound)}"
        )
    for gate in tape.gates:
        state = apply_gate(state, gate, bound)
    return state


def adjoint_tape(tape: CircuitTape) -> CircuitTape:
    """Reverse the gate order and invert each gate; slots are preserved."""
    return CircuitTape(
        n_qubits=tape.n_qubits,
        gates=tuple(adjoint_gate(g) for g in reversed(tape.gates)),
        n_params=tape.n_params,
    )


def expectation_z(state: StateVector, wire: int) -> float:
    """<Z> on one wire: P(bit 0) - P(bit 1)."""
    n = state.n_qubits
    if not 0 <= wire < n:
        raise CircuitError(f"wire {wire} out of range for {n} qubits")
    probs = np.abs(state.amplitudes) ** 2
    marginal = probs.reshape((2,) * n).sum(
        axis=tuple(ax for ax in range(n) if ax != wire)
    )
    return float(marginal[0] - marginal[1])


def prob_all_zero(state: StateVector) -> float:
    """Probability of the all-zeros outcome, |amplitude_0|^2."""
    return float(np.abs(state.amplitudes[0]) ** 2)


# --- batched execution --------------------------------------------------
#
# The batched path evaluates one tape structure for many parameter rows.
# Stage 1 resolves every angle position into a (B, P) matrix; stage 2 runs
# the gates with per-lane 2x2 matrices. Keeping the stages separate lets
# the parameter-shift rule perturb a single *occurrence* of a parameter,
# which a (B, n_params) binding could not express.

_CHUNK_LANES = 4096


@dataclass(frozen=True)
class _TapePlan:
    """Flattened angle layout for one tape."""

    # per angle position: owning gate, slot (-1 = constant), sign, constant
    gate_index: tuple[int, ...]
    slots: tuple[int, ...]
    signs: tuple[float, ...]
    consts: tuple[float, ...]
    # per gate: base index into the position arrays
    gate_pos: tuple[int, ...]


@lru_cache(maxsize=256)
def _plan(tape: CircuitTape) -> _TapePlan:
    gate_index: list[int] = []
    slots: list[int] = []
    signs: list[float] = []
    consts: list[float] = []
    gate_pos: list[int] = []
    for gi, gate in enumerate(tape.gates):
        gate_pos.append(len(slots))
        for p in range(GATE_ARITY[gate.kind]):
            slot = None if gate.param_slots is None else gate.param_slots[p]
            gate_index.append(gi)
            slots.append(-1 if slot is None else slot)
            signs.append(float(gate.param_signs[p]))
            consts.append(gate.params[p] if slot is None else 0.0)
    return _TapePlan(
        tuple(gate_index), tuple(slots), tuple(signs), tuple(consts), tuple(gate_pos)
    )


def angle_count(tape: CircuitTape) -> int:
    """Total number of angle positions in the tape."""
    return len(_plan(tape).slots)


def tape_occurrences(tape: CircuitTape, slot_range=None) -> list[tuple[int, int, float]]:
    """(position, slot, sign) for every slot-bound angle position.

    ``slot_range`` restricts to slots in [lo, hi); None keeps all.
    """
    plan = _plan(tape)
    out = []
    for pos, (slot, sign) in enumerate(zip(plan.slots, plan.signs)):
        if slot < 0:
            continue
        if slot_range is not None and not slot_range[0] <= slot < slot_range[1]:
            continue
        out.append((pos, slot, sign))
    return out


def resolve_angles(tape: CircuitTape, theta=None) -> np.ndarray:
    """Angle row (P,) for one parameter vector."""
    rows = resolve_angles_batch(tape, np.atleast_2d(
        np.zeros(0) if theta is None else np.asarray(theta, dtype=np.float64)
    ))
    return rows[0]


def resolve_angles_batch(tape: CircuitTape, theta_rows) -> np.ndarray:
    """Angle matrix (B, P) for a (B, n_params) binding."""
    theta_rows = np.asarray(theta_rows, dtype=np.float64)
    if theta_rows.ndim == 1:
        theta_rows = theta_rows[None, :]
    if theta_rows.shape[1] != tape.n_params:
        raise CircuitError(
            f"tape expects {tape.n_params} parameters, got {theta_rows.shape[1]}"
        )
    plan = _plan(tape)
    n_rows = theta_rows.shape[0]
    slots = np.asarray(plan.slots)
    signs = np.asarray(plan.signs)
    consts = np.asarray(plan.consts)
    angles = np.empty((n_rows, len(slots)), dtype=np.float64)
    const_mask = slots < 0
    angles[:, const_mask] = (signs * consts)[const_mask]
    bound = ~const_mask
    if bound.any():
        angles[:, bound] = theta_rows[:, slots[bound]] * signs[bound]
    return angles


def _batched_matrices(kind: str, ang: np.ndarray) -> np.ndarray:
    """Per-lane 2x2 matrices; ``ang`` is (B,) or (B, 3) for ROT3."""
    b = ang.shape[0]
    mats = np.empty((b, 2, 2), dtype=np.complex128)
    if kind == "ROT3":
        half_sum = 0.5 * (ang[:, 0] + ang[:, 2])
        half_diff = 0.5 * (ang[:, 0] - ang[:, 2])
        cb = np.cos(ang[:, 1] / 2.0)
        sb = np.sin(ang[:, 1] / 2.0)
        mats[:, 0, 0] = cb * np.exp(-1j * half_sum)
        mats[:, 0, 1] = -sb * np.exp(1j * half_diff)
        mats[:, 1, 0] = sb * np.exp(-1j * half_diff)
        mats[:, 1, 1] = cb * np.exp(1j * half_sum)
        return mats
    half = ang / 2.0
    c, s = np.cos(half), np.sin(half)
    if kind == "RX":
        mats[:, 0, 0] = c
        mats[:, 0, 1] = -1j * s
        mats[:, 1, 0] = -1j * s
        mats[:, 1, 1] = c
    elif kind == "RY":
        mats[:, 0, 0] = c
        mats[:, 0, 1] = -s
        mats[:, 1, 0] = s
        mats[:, 1, 1] = c
    elif kind == "RZ":
        phase = np.exp(-1j * half)
        mats[:, 0, 0] = phase
        mats[:, 0, 1] = 0.0
        mats[:, 1, 0] = 0.0
        mats[:, 1, 1] = np.conj(phase)
    else:
        raise CircuitError(f"{kind} has no rotation matrix")
    return mats


def _chunk_single_qubit(psi: np.ndarray, n: int, wire: int, mats: np.ndarray) -> np.ndarray:
    b = psi.shape[0]
    cube = psi.reshape((b,) + (2,) * n)
    cube = np.moveaxis(cube, 1 + wire, -1)
    moved_shape = cube.shape
    rows = np.ascontiguousarray(cube).reshape(b, -1, 2)
    if mats.ndim == 2:
        rows = np.matmul(rows, mats.T)
    else:
        rows = np.matmul(rows, mats.transpose(0, 2, 1))
    cube = rows.reshape(moved_shape)
    cube = np.moveaxis(cube, -1, 1 + wire)
    return np.ascontiguousarray(cube).reshape(b, -1)


def _chunk_swap_slices(psi: np.ndarray, n: int, lo_index, hi_index) -> np.ndarray:
    b = psi.shape[0]
    cube = psi.reshape((b,) + (2,) * n).copy()
    lo = (slice(None),) + lo_index
    hi = (slice(None),) + hi_index
    cube[lo], cube[hi] = cube[hi].copy(), cube[lo].copy()
    return cube.reshape(b, -1)


def _run_chunk(tape: CircuitTape, angles: np.ndarray) -> np.ndarray:
    plan = _plan(tape)
    n = tape.n_qubits
    b = angles.shape[0]
    psi = np.zeros((b, 2**n), dtype=np.complex128)
    psi[:, 0] = 1.0
    for gi, gate in enumerate(tape.gates):
        base = plan.gate_pos[gi]
        if gate.kind == "H":
            psi = _chunk_single_qubit(psi, n, gate.wires[0], _H_MATRIX)
        elif gate.kind == "CNOT":
            control, target = gate.wires
            lo = [slice(None)] * n
            hi = [slice(None)] * n
            lo[control], lo[target] = 1, 0
            hi[control], hi[target] = 1, 1
            psi = _chunk_swap_slices(psi, n, tuple(lo), tuple(hi))
        elif gate.kind == "CSWAP":
            control, a, bq = gate.wires
            lo = [slice(None)] * n
            hi = [slice(None)] * n
            lo[control], lo[a], lo[bq] = 1, 0, 1
            hi[control], hi[a], hi[bq] = 1, 1, 0
            psi = _chunk_swap_slices(psi, n, tuple(lo), tuple(hi))
        elif gate.kind == "ROT3":
            mats = _batched_matrices("ROT3", angles[:, base : base + 3])
            psi = _chunk_single_qubit(psi, n, gate.wires[0], mats)
        else:
            mats = _batched_matrices(gate.kind, angles[:, base])
            psi = _chunk_single_qubit(psi, n, gate.wires[0], mats)
    return psi


def worker_count(n_jobs: int) -> int:
    """Concurrency cap from QSVM_LAB_THREADS (0 or unset = auto)."""
    raw = os.environ.get("QSVM_LAB_THREADS", "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        raise ConfigurationError(f"QSVM_LAB_THREADS must be an integer, got {raw!r}")
    if requested < 0:
        raise ConfigurationError(f"QSVM_LAB_THREADS must be >= 0, got {requested}")
    if requested == 0:
        requested = min(8, os.cpu_count() or 1)
    return max(1, min(requested, n_jobs))


def run_angles_batch(tape: CircuitTape, angles: np.ndarray) -> np.ndarray:
    """Final states (B, 2**n) for a resolved (B, P) angle matrix."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim != 2 or angles.shape[1] != angle_count(tape):
        raise CircuitError(
            f"expected angle matrix with {angle_count(tape)} columns, got {angles.shape}"
        )
    b = angles.shape[0]
    dim = 2**tape.n_qubits
    if b == 0:
        return np.zeros((0, dim), dtype=np.complex128)
    bounds = list(range(0, b, _CHUNK_LANES)) + [b]
    chunks = list(zip(bounds[:-1], bounds[1:]))
    workers = worker_count(len(chunks))
    out = np.empty((b, dim), dtype=np.complex128)
    if workers == 1:
        for lo, hi in chunks:
            out[lo:hi] = _run_chunk(tape, angles[lo:hi])
    else:
        # disjoint output slices per chunk, so scheduling cannot reorder math
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                (lo, hi, pool.submit(_run_chunk, tape, angles[lo:hi]))
                for lo, hi in chunks
            ]
            for lo, hi, fut in futures:
                out[lo:hi] = fut.result()
    return out


def final_states(tape: CircuitTape, theta_rows) -> np.ndarray:
    """Resolve + run in one step for (B, n_params) parameter rows."""
    return run_angles_batch(tape, resolve_angles_batch(tape, theta_rows))


def batch_prob_all_zero(states: np.ndarray) -> np.ndarray:
    return np.abs(states[:, 0]) ** 2


def batch_expectation_z(states: np.ndarray, n_qubits: int, wire: int) -> np.ndarray:
    if not 0 <= wire < n_qubits:
        raise CircuitError(f"wire {wire} out of range for {n_qubits} qubits")
    b = states.shape[0]
    probs = np.abs(states.reshape((b,) + (2,) * n_qubits)) ** 2
    axes = tuple(ax for ax in range(1, n_qubits + 1) if ax != 1 + wire)
    marginal = probs.sum(axis=axes)
    return marginal[:, 0] - marginal[:, 1]
