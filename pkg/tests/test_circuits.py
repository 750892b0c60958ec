"""Circuit builders: embeddings, ansatz layout, kernel and pair tapes."""

import numpy as np
import pytest

from qsvm_lab.circuits import (
    AnsatzSpec,
    EmbeddingSpec,
    angle_embedding,
    hybrid_kernel_tape,
    hybrid_pair_tape,
    inversion_pair_tape,
    kernel_tape_inversion,
    kernel_tape_swap,
    layered_ansatz,
    swap_pair_tape,
    variational_input_tape,
    variational_tape,
)
from qsvm_lab.errors import ConfigurationError, DataError
from qsvm_lab.sim import (
    apply_tape,
    expectation_z,
    final_states,
    init_state,
    prob_all_zero,
)


def closed_form_overlap(x1, x2):
    """Product of squared half-angle cosines of the feature gaps."""
    return float(np.prod(np.cos((np.asarray(x1) - np.asarray(x2)) / 2.0) ** 2))


def run(tape, theta=None):
    return apply_tape(init_state(tape.n_qubits), tape, params=theta)


class TestEmbeddingSpec:
    def test_default_axis(self):
        assert EmbeddingSpec(n_features=3).rotation_axis == "Y"

    def test_invalid_axis(self):
        with pytest.raises(ConfigurationError):
            EmbeddingSpec(n_features=2, rotation_axis="W")

    def test_feature_bounds(self):
        with pytest.raises(ConfigurationError):
            EmbeddingSpec(n_features=0)

    @pytest.mark.parametrize("axis, kind", [("X", "RX"), ("Y", "RY"), ("Z", "RZ")])
    def test_one_rotation_per_feature(self, axis, kind):
        spec = EmbeddingSpec(n_features=3, rotation_axis=axis)
        tape = angle_embedding([0.1, 0.2, 0.3], spec)
        assert tape.n_qubits == 3
        assert [g.kind for g in tape.gates] == [kind] * 3
        assert [g.wires[0] for g in tape.gates] == [0, 1, 2]
        assert [g.params[0] for g in tape.gates] == [0.1, 0.2, 0.3]

    def test_feature_count_mismatch(self):
        spec = EmbeddingSpec(n_features=3)
        with pytest.raises(DataError):
            angle_embedding([0.1, 0.2], spec)


class TestAnsatzSpec:
    def test_param_count(self):
        assert AnsatzSpec(n_layers=2, n_qubits=4).n_params == 24

    def test_default_entangler_ranges_cycle(self):
        spec = AnsatzSpec(n_layers=5, n_qubits=4)
        assert spec.entangler_ranges == (1, 2, 3, 1, 2)

    def test_single_qubit_has_no_entanglers(self):
        spec = AnsatzSpec(n_layers=2, n_qubits=1)
        tape = layered_ansatz(spec)
        assert all(g.kind == "ROT3" for g in tape.gates)
        assert len(tape.gates) == 2

    def test_range_validation(self):
        with pytest.raises(ConfigurationError):
            AnsatzSpec(n_layers=1, n_qubits=3, entangler_ranges=(3,))
        with pytest.raises(ConfigurationError):
            AnsatzSpec(n_layers=2, n_qubits=3, entangler_ranges=(1,))

    def test_layer_structure(self):
        spec = AnsatzSpec(n_layers=2, n_qubits=3)
        tape = layered_ansatz(spec)
        kinds = [g.kind for g in tape.gates]
        assert kinds == ["ROT3"] * 3 + ["CNOT"] * 3 + ["ROT3"] * 3 + ["CNOT"] * 3
        # slots are layer-major, qubit-major, angle-minor
        rot_slots = [g.param_slots for g in tape.gates if g.kind == "ROT3"]
        assert rot_slots == [
            (0, 1, 2), (3, 4, 5), (6, 7, 8),
            (9, 10, 11), (12, 13, 14), (15, 16, 17),
        ]
        # layer 1 uses range 1, layer 2 uses range 2 (mod ring)
        cnots = [g.wires for g in tape.gates if g.kind == "CNOT"]
        assert cnots[:3] == [(0, 1), (1, 2), (2, 0)]
        assert cnots[3:] == [(0, 2), (1, 0), (2, 1)]


class TestKernelTapes:
    @pytest.mark.parametrize("axis", ["X", "Y"])
    def test_inversion_matches_closed_form(self, axis, rng):
        spec = EmbeddingSpec(n_features=3, rotation_axis=axis)
        for _ in range(20):
            x1 = rng.uniform(-np.pi, np.pi, size=3)
            x2 = rng.uniform(-np.pi, np.pi, size=3)
            tape = kernel_tape_inversion(x1, x2, spec)
            value = prob_all_zero(run(tape))
            assert abs(value - closed_form_overlap(x1, x2)) < 1e-12

    def test_inversion_self_overlap_is_one(self, rng):
        spec = EmbeddingSpec(n_features=4)
        x = rng.uniform(-2, 2, size=4)
        assert abs(prob_all_zero(run(kernel_tape_inversion(x, x, spec))) - 1.0) < 1e-12

    @pytest.mark.parametrize("axis", ["X", "Y"])
    def test_swap_equals_inversion(self, axis, rng):
        spec = EmbeddingSpec(n_features=2, rotation_axis=axis)
        for _ in range(10):
            x1 = rng.uniform(-np.pi, np.pi, size=2)
            x2 = rng.uniform(-np.pi, np.pi, size=2)
            inv = prob_all_zero(run(kernel_tape_inversion(x1, x2, spec)))
            swap_tape = kernel_tape_swap(x1, x2, spec)
            swap = expectation_z(run(swap_tape), 0)
            assert swap_tape.n_qubits == 5
            assert abs(swap - inv) < 1e-12

    def test_swap_qubit_budget(self):
        # 2*12+1 wires exceed the register limit even though 12 features fit
        with pytest.raises(ConfigurationError):
            kernel_tape_swap(np.zeros(12), np.zeros(12), EmbeddingSpec(n_features=12))


class TestHybridTape:
    def test_needs_specs(self):
        with pytest.raises(ConfigurationError):
            hybrid_kernel_tape([0.1], [0.2])

    def test_doubled_occurrences(self):
        emb = EmbeddingSpec(n_features=2)
        ansatz = AnsatzSpec(n_layers=1, n_qubits=2)
        tape = hybrid_kernel_tape([0.1, 0.2], [0.3, 0.4], emb=emb, ansatz=ansatz)
        assert tape.n_params == ansatz.n_params
        per_slot = {}
        for gate in tape.gates:
            if gate.param_slots is None:
                continue
            for slot in gate.param_slots:
                if slot is not None:
                    per_slot[slot] = per_slot.get(slot, 0) + 1
        assert set(per_slot) == set(range(ansatz.n_params))
        assert all(count == 2 for count in per_slot.values())

    def test_theta_cancels(self, rng):
        """The adjoint ansatz directly follows the ansatz, so the kernel
        value cannot depend on theta."""
        emb = EmbeddingSpec(n_features=2)
        ansatz = AnsatzSpec(n_layers=2, n_qubits=2)
        x1 = rng.uniform(-1, 1, size=2)
        x2 = rng.uniform(-1, 1, size=2)
        base = prob_all_zero(run(kernel_tape_inversion(x1, x2, emb)))
        tape = hybrid_kernel_tape(x1, x2, emb=emb, ansatz=ansatz)
        for _ in range(5):
            theta = rng.uniform(-np.pi, np.pi, size=ansatz.n_params)
            assert abs(prob_all_zero(run(tape, theta=theta)) - base) < 1e-12

    def test_theta_length_checked(self):
        emb = EmbeddingSpec(n_features=2)
        ansatz = AnsatzSpec(n_layers=1, n_qubits=2)
        with pytest.raises(ConfigurationError):
            hybrid_kernel_tape([0.1, 0.2], [0.3, 0.4], theta=[0.1], emb=emb, ansatz=ansatz)

    def test_feature_qubit_mismatch(self):
        with pytest.raises(ConfigurationError):
            hybrid_kernel_tape(
                [0.1, 0.2],
                [0.3, 0.4],
                emb=EmbeddingSpec(n_features=2),
                ansatz=AnsatzSpec(n_layers=1, n_qubits=3),
            )


class TestVariationalTape:
    def test_zero_theta_single_qubit_reduces_to_embedding(self, rng):
        # one wire means no entanglers, and ROT3(0,0,0) is the identity
        emb = EmbeddingSpec(n_features=1)
        ansatz = AnsatzSpec(n_layers=3, n_qubits=1)
        x = rng.uniform(-1, 1, size=1)
        bound = run(variational_tape(x, emb, ansatz), theta=np.zeros(ansatz.n_params))
        embedded = run(angle_embedding(x, emb))
        assert np.max(np.abs(bound.amplitudes - embedded.amplitudes)) < 1e-12

    def test_zero_theta_leaves_only_entanglers(self, rng):
        emb = EmbeddingSpec(n_features=2)
        ansatz = AnsatzSpec(n_layers=2, n_qubits=2)
        x = rng.uniform(-1, 1, size=2)
        bound = run(variational_tape(x, emb, ansatz), theta=np.zeros(ansatz.n_params))
        expected = apply_tape(
            run(angle_embedding(x, emb)),
            layered_ansatz(ansatz),
            params=np.zeros(ansatz.n_params),
        )
        assert np.max(np.abs(bound.amplitudes - expected.amplitudes)) < 1e-12

    def test_mismatch_raises(self):
        with pytest.raises(ConfigurationError):
            variational_tape([0.1], EmbeddingSpec(n_features=1), AnsatzSpec(n_layers=1, n_qubits=2))


class TestPairTapes:
    def test_inversion_pair_matches_direct(self, rng):
        emb = EmbeddingSpec(n_features=3)
        tape = inversion_pair_tape(emb)
        assert tape.n_params == 6
        rows = rng.uniform(-np.pi, np.pi, size=(8, 6))
        values = final_states(tape, rows)
        for r in range(8):
            direct = prob_all_zero(run(kernel_tape_inversion(rows[r, :3], rows[r, 3:], emb)))
            got = float(np.abs(values[r, 0]) ** 2)
            assert abs(got - direct) < 1e-12

    def test_swap_pair_matches_direct(self, rng):
        emb = EmbeddingSpec(n_features=2)
        tape = swap_pair_tape(emb)
        rows = rng.uniform(-np.pi, np.pi, size=(5, 4))
        states = final_states(tape, rows)
        for r in range(5):
            direct = expectation_z(run(kernel_tape_swap(rows[r, :2], rows[r, 2:], emb)), 0)
            import qsvm_lab.sim as sim

            got = sim.batch_expectation_z(states[r : r + 1], tape.n_qubits, 0)[0]
            assert abs(got - direct) < 1e-12

    def test_hybrid_pair_matches_direct(self, rng):
        emb = EmbeddingSpec(n_features=2)
        ansatz = AnsatzSpec(n_layers=1, n_qubits=2)
        pair = hybrid_pair_tape(emb, ansatz)
        assert pair.n_params == 4 + ansatz.n_params
        x1 = rng.uniform(-1, 1, size=2)
        x2 = rng.uniform(-1, 1, size=2)
        theta = rng.uniform(-0.5, 0.5, size=ansatz.n_params)
        row = np.concatenate([x1, x2, theta])
        state = final_states(pair, row[None, :])[0]
        direct_tape = hybrid_kernel_tape(x1, x2, emb=emb, ansatz=ansatz)
        direct = prob_all_zero(run(direct_tape, theta=theta))
        assert abs(float(np.abs(state[0]) ** 2) - direct) < 1e-12

    def test_variational_input_matches_direct(self, rng):
        emb = EmbeddingSpec(n_features=3)
        ansatz = AnsatzSpec(n_layers=2, n_qubits=3)
        tape = variational_input_tape(emb, ansatz)
        assert tape.n_params == 3 + ansatz.n_params
        x = rng.uniform(-1, 1, size=3)
        theta = rng.uniform(-0.2, 0.2, size=ansatz.n_params)
        row = np.concatenate([x, theta])
        state = final_states(tape, row[None, :])[0]
        direct = run(variational_tape(x, emb, ansatz), theta=theta)
        assert np.max(np.abs(state - direct.amplitudes)) < 1e-12
