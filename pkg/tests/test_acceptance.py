"""Acceptance gate: one test per shipped guarantee, at its stated tolerance.

Every criterion the package commits to is exercised here end to end, with
runtime budgets asserted alongside the numeric tolerances. Expensive model
trainings are shared through session-scoped fixtures so each configuration
is trained exactly once per test run.

Two sub-checks of the variational-classifier criterion are known to fail
with the pinned default hyperparameters and are kept as honest red tests
rather than loosened: the measured hinge-loss drop is ~38.4% against a
>= 40% target, and the default-seed test accuracy is ~0.833 against a
>= 0.85 target. README's "Acceptance status" section documents the
calibration analysis; every compliant remedy was evaluated and rejected.
"""

import os
import time

import numpy as np
import pytest

from qsvm_lab.autodiff import (
    Observable,
    finite_diff_gradient,
    param_shift_gradient_batch,
    scalar_function,
)
from qsvm_lab.circuits import (
    AnsatzSpec,
    EmbeddingSpec,
    hybrid_pair_tape,
)
from qsvm_lab.cli import main as cli_main
from qsvm_lab.data import (
    DEFAULT_ANGLE_SCALE,
    apply_scaler,
    default_dataset_path,
    fit_scaler,
    load_iris,
    select_binary,
    split_indices,
)
from qsvm_lab.hybrid import refit_svm, train_qvk
from qsvm_lab.kernels import (
    GramMatrix,
    KernelSpec,
    eval_kernel,
    gram_matrix,
    min_eigenvalue,
    symmetry_residual,
)
from qsvm_lab.serialize import read_json
from qsvm_lab.sim import CircuitTape, Gate, adjoint_tape, final_states
from qsvm_lab.svm import (
    TrainConfig,
    decision_function_batch,
    dual_objective,
    smo_train,
)
from qsvm_lab.variational import FitConfig, train_qv

from conftest import random_tape

REPRO_SEEDS = tuple(range(1, 11))
DEFAULT_SEED = 42


# --------------------------------------------------------------------------
# Shared pipeline helpers (mirror the CLI defaults exactly)
# --------------------------------------------------------------------------


def default_split(seed):
    """versicolor/virginica, 70/30 stratified split, standardized angles."""
    ds = load_iris(default_dataset_path())
    pair = select_binary(ds, "versicolor", "virginica")
    train_idx, test_idx = split_indices(pair, 0.3, seed)
    train, test = pair.take(train_idx), pair.take(test_idx)
    scaler = fit_scaler(train.x, "standard", DEFAULT_ANGLE_SCALE)
    return (
        apply_scaler(scaler, train.x),
        train.y.astype(np.float64),
        apply_scaler(scaler, test.x),
        test.y.astype(np.float64),
    )


def accuracy(scores, y_true):
    predictions = np.where(np.asarray(scores) >= 0.0, 1.0, -1.0)
    return float(np.mean(predictions == y_true))


def fit_kernel_machine(seed):
    x_train, y_train, x_test, y_test = default_split(seed)
    spec = KernelSpec(
        kind="quantum_inversion", embedding=EmbeddingSpec(n_features=x_train.shape[1])
    )
    gram = gram_matrix(x_train, spec)
    model = smo_train(
        gram, y_train, TrainConfig(seed=seed), training_x=x_train, kernel=spec
    )
    scores = decision_function_batch(model, x_test)
    return {
        "model": model,
        "acc": accuracy(scores, y_test),
        "scores": scores,
        "split": (x_train, y_train, x_test, y_test),
    }


# --------------------------------------------------------------------------
# Session-scoped trainings (each configuration trained exactly once)
# --------------------------------------------------------------------------


@pytest.fixture(scope="session")
def qk_runs():
    start = time.perf_counter()
    runs = {seed: fit_kernel_machine(seed) for seed in (DEFAULT_SEED,) + REPRO_SEEDS}
    runs["elapsed"] = time.perf_counter() - start
    return runs


@pytest.fixture(scope="session")
def qv_default():
    x_train, y_train, x_test, y_test = default_split(DEFAULT_SEED)
    cfg = FitConfig(seed=DEFAULT_SEED)
    start = time.perf_counter()
    model, trace = train_qv(x_train, y_train, x_test, y_test, cfg)
    _, trace_again = train_qv(x_train, y_train, x_test, y_test, cfg)
    elapsed = time.perf_counter() - start
    return {
        "trace": trace,
        "trace_again": trace_again,
        "acc": trace.records[-1].test_acc,
        "elapsed": elapsed,
    }


@pytest.fixture(scope="session")
def qv_by_seed():
    start = time.perf_counter()
    accs = {}
    for seed in REPRO_SEEDS:
        x_train, y_train, x_test, y_test = default_split(seed)
        _, trace = train_qv(x_train, y_train, x_test, y_test, FitConfig(seed=seed))
        accs[seed] = trace.records[-1].test_acc
    return {"accs": accs, "elapsed": time.perf_counter() - start}


@pytest.fixture(scope="session")
def qvk_runs():
    start = time.perf_counter()
    accs = {}
    for seed in (DEFAULT_SEED,) + REPRO_SEEDS:
        x_train, y_train, x_test, y_test = default_split(seed)
        _, trace = train_qvk(x_train, y_train, x_test, y_test, FitConfig(seed=seed))
        accs[seed] = trace.records[-1].test_acc
    return {"accs": accs, "elapsed": time.perf_counter() - start}


# --------------------------------------------------------------------------
# Criterion: simulator exactness
# --------------------------------------------------------------------------


def test_simulator_exactness():
    start = time.perf_counter()
    rng = np.random.default_rng(91101)

    # Norm preservation and adjoint inversion on random tapes.
    worst_norm = 0.0
    worst_inversion = 0.0
    for _ in range(30):
        tape = random_tape(rng)
        theta = rng.uniform(-np.pi, np.pi, size=(1, tape.n_params))
        state = final_states(tape, theta)[0]
        worst_norm = max(worst_norm, abs(np.linalg.norm(state) - 1.0))
        inverse = CircuitTape(
            n_qubits=tape.n_qubits,
            gates=tuple(tape.gates) + tuple(adjoint_tape(tape).gates),
            n_params=tape.n_params,
        )
        round_trip = final_states(inverse, theta)[0]
        expected = np.zeros_like(round_trip)
        expected[0] = 1.0
        worst_inversion = max(worst_inversion, np.max(np.abs(round_trip - expected)))
    assert worst_norm < 1e-10
    assert worst_inversion < 1e-10

    # <Z> after RX(theta) equals cos(theta) on a 100-point grid.
    grid = np.linspace(-2.0 * np.pi, 2.0 * np.pi, 100)
    tape = CircuitTape(
        n_qubits=1,
        gates=[Gate("RX", (0,), (0.0,), (0,), (1,))],
        n_params=1,
    )
    states = final_states(tape, grid.reshape(-1, 1))
    z_values = np.abs(states[:, 0]) ** 2 - np.abs(states[:, 1]) ** 2
    grid_residual = np.max(np.abs(z_values - np.cos(grid)))
    assert grid_residual < 1e-12

    elapsed = time.perf_counter() - start
    print(
        f"simulator exactness: norm {worst_norm:.2e}, inversion "
        f"{worst_inversion:.2e}, RX grid {grid_residual:.2e}, {elapsed:.2f}s"
    )
    assert elapsed < 5.0


# --------------------------------------------------------------------------
# Criterion: kernel correctness
# --------------------------------------------------------------------------


def test_kernel_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(715)
    emb = EmbeddingSpec(n_features=4)
    inversion = KernelSpec(kind="quantum_inversion", embedding=emb)
    swap = KernelSpec(kind="quantum_swap", embedding=emb)

    worst_closed = 0.0
    worst_swap = 0.0
    for _ in range(100):
        x1 = rng.uniform(-np.pi, np.pi, size=4)
        x2 = rng.uniform(-np.pi, np.pi, size=4)
        closed_form = float(np.prod(np.cos((x1 - x2) / 2.0) ** 2))
        k_inv = eval_kernel(x1, x2, inversion)
        k_swap = eval_kernel(x1, x2, swap)
        worst_closed = max(worst_closed, abs(k_inv - closed_form))
        worst_swap = max(worst_swap, abs(k_swap - k_inv))
    assert worst_closed < 1e-10
    assert worst_swap < 1e-10

    x_train, _, _, _ = default_split(DEFAULT_SEED)
    gram = gram_matrix(x_train[:20], inversion)
    assert gram.values.shape == (20, 20)
    assert symmetry_residual(gram.values) == 0.0
    diag_residual = np.max(np.abs(np.diag(gram.values) - 1.0))
    assert diag_residual < 1e-12
    lam_min = min_eigenvalue(gram)
    assert lam_min >= -1e-8

    elapsed = time.perf_counter() - start
    print(
        f"kernel correctness: closed form {worst_closed:.2e}, swap agreement "
        f"{worst_swap:.2e}, diag {diag_residual:.2e}, min eig {lam_min:.2e}, "
        f"{elapsed:.2f}s"
    )
    assert elapsed < 30.0


# --------------------------------------------------------------------------
# Criterion: gradient correctness
# --------------------------------------------------------------------------


def test_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(50301)
    worst = 0.0

    # 30 random tapes with mixed constant/trainable angles and slot reuse.
    for _ in range(30):
        tape = random_tape(rng, n_params=int(rng.integers(1, 5)))
        theta = rng.uniform(-np.pi, np.pi, size=tape.n_params)
        analytic = param_shift_gradient_batch(
            tape, theta.reshape(1, -1), Observable.Z_WIRE0
        )[0]
        numeric = finite_diff_gradient(scalar_function(tape, Observable.Z_WIRE0), theta)
        worst = max(worst, np.max(np.abs(analytic - numeric)))

    # 20 hybrid-kernel tapes: every circuit angle occurs twice (forward
    # ansatz and its adjoint), exercising occurrence summation.
    emb = EmbeddingSpec(n_features=2)
    for i in range(20):
        ansatz = AnsatzSpec(n_layers=1 + i % 2, n_qubits=2)
        tape = hybrid_pair_tape(emb, ansatz)
        theta = rng.uniform(-np.pi, np.pi, size=tape.n_params)
        analytic = param_shift_gradient_batch(
            tape, theta.reshape(1, -1), Observable.ALL_ZERO
        )[0]
        numeric = finite_diff_gradient(scalar_function(tape, Observable.ALL_ZERO), theta)
        worst = max(worst, np.max(np.abs(analytic - numeric)))

    assert worst < 1e-6
    elapsed = time.perf_counter() - start
    print(f"gradient correctness: max |shift - fd| {worst:.2e}, {elapsed:.2f}s")
    assert elapsed < 60.0


# --------------------------------------------------------------------------
# Criterion: SMO oracle equivalence
# --------------------------------------------------------------------------


def grid_best_dual(gram, y, c, steps=20):
    """Exhaustive feasible-grid maximum of the dual objective for m <= 6."""
    m = y.size
    axis = np.linspace(0.0, c, steps + 1)
    free = np.meshgrid(*([axis] * (m - 1)), indexing="ij")
    free = np.stack([g.reshape(-1) for g in free], axis=1)
    last = -free @ (y[:-1] * y[-1])
    feasible = (last >= 0.0) & (last <= c)
    alphas = np.column_stack([free[feasible], last[feasible]])
    signed = alphas * y
    quad = np.einsum("ri,ij,rj->r", signed, gram, signed)
    objective = alphas.sum(axis=1) - 0.5 * quad
    return float(objective.max())


def kkt_violation(model, gram, y, c):
    margins = y * (gram @ (model.alphas * y) + model.bias)
    worst = 0.0
    for alpha, margin in zip(model.alphas, margins):
        if alpha <= 1e-9:
            worst = max(worst, max(0.0, 1.0 - margin))
        elif alpha >= c - 1e-9:
            worst = max(worst, max(0.0, margin - 1.0))
        else:
            worst = max(worst, abs(margin - 1.0))
    return worst


def test_smo_oracle_equivalence():
    start = time.perf_counter()
    c = 1.0

    # Analytic two-point case: 1-D points +1/-1 with the linear kernel.
    # Dual objective 2a - 2a^2 peaks at a = 1/2, and the margin condition
    # puts the separating threshold at zero.
    y_pair = np.array([1.0, -1.0])
    pair_gram = GramMatrix(
        values=np.array([[1.0, -1.0], [-1.0, 1.0]]), sample_ids=(0, 1)
    )
    model = smo_train(pair_gram, y_pair, TrainConfig(c=c, seed=0))
    assert np.max(np.abs(model.alphas - 0.5)) < 1e-6
    assert abs(model.bias) < 1e-6

    # Seeded small datasets vs exhaustive grid search, plus KKT conditions.
    rng = np.random.default_rng(40404)
    worst_gap = 0.0
    worst_kkt = kkt_violation(model, pair_gram.values, y_pair, c)
    n_datasets = 0
    for m in range(2, 7):
        for _ in range(3):
            x = rng.normal(size=(m, 2))
            y = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(m)])
            spec = KernelSpec(kind="rbf", gamma=0.8)
            gram = gram_matrix(x, spec)
            trained = smo_train(gram, y, TrainConfig(c=c, seed=m))
            smo_value = dual_objective(gram.values, y, trained.alphas)
            grid_value = grid_best_dual(gram.values, y, c)
            worst_gap = max(worst_gap, grid_value - smo_value)
            worst_kkt = max(worst_kkt, kkt_violation(trained, gram.values, y, c))
            n_datasets += 1

    assert worst_gap <= 0.02 * c
    assert worst_kkt <= 1e-3
    elapsed = time.perf_counter() - start
    print(
        f"smo oracle equivalence: {n_datasets} datasets, worst dual gap "
        f"{worst_gap:.2e}, worst KKT violation {worst_kkt:.2e}, {elapsed:.2f}s"
    )


# --------------------------------------------------------------------------
# Criterion: kernel-machine reproduction thresholds
# --------------------------------------------------------------------------


def test_qk_reproduction(qk_runs):
    default_acc = qk_runs[DEFAULT_SEED]["acc"]
    seed_accs = [qk_runs[seed]["acc"] for seed in REPRO_SEEDS]
    median_acc = float(np.median(seed_accs))
    print(
        f"qk reproduction: default-seed accuracy {default_acc:.4f}, "
        f"median over seeds 1-10 {median_acc:.4f}, {qk_runs['elapsed']:.1f}s"
    )
    assert default_acc >= 0.90
    assert median_acc >= 0.92
    assert qk_runs["elapsed"] < 300.0


# --------------------------------------------------------------------------
# Criterion: variational-classifier reproduction thresholds
# --------------------------------------------------------------------------


def test_qv_loss_drop(qv_default):
    """KNOWN RED: measured drop ~38.4% against the >= 40% target."""
    records = qv_default["trace"].records
    first, last = records[0].train_loss, records[-1].train_loss
    drop = (first - last) / first
    print(
        f"qv loss drop: epoch-1 loss {first:.5f}, final loss {last:.5f}, "
        f"drop {drop:.4%} (target >= 40%)"
    )
    assert drop >= 0.40, (
        f"training loss dropped {drop:.4%} from epoch 1 to final; "
        "the >= 40% target is not met with the pinned defaults "
        "(see README: Acceptance status)"
    )


def test_qv_final_accuracy(qv_default):
    """KNOWN RED: measured accuracy ~0.833 against the >= 0.85 target."""
    acc = qv_default["acc"]
    print(f"qv final accuracy: {acc:.4f} (target >= 0.85)")
    assert acc >= 0.85, (
        f"default-seed test accuracy {acc:.4f} is below the 0.85 target "
        "with the pinned defaults (see README: Acceptance status)"
    )


def test_qv_trace_determinism(qv_default):
    first = qv_default["trace"].records
    second = qv_default["trace_again"].records
    assert len(first) == len(second) == 60
    for a, b in zip(first, second):
        assert (a.epoch, a.train_loss, a.test_loss, a.train_acc, a.test_acc) == (
            b.epoch, b.train_loss, b.test_loss, b.train_acc, b.test_acc
        )
    print(
        f"qv determinism: two default-seed runs produced identical 60-epoch "
        f"traces, {qv_default['elapsed']:.1f}s for both"
    )
    assert qv_default["elapsed"] < 900.0


# --------------------------------------------------------------------------
# Criterion: hybrid-classifier reproduction thresholds
# --------------------------------------------------------------------------


def test_qvk_reproduction(qk_runs, qv_default, qv_by_seed, qvk_runs):
    default_acc = qvk_runs["accs"][DEFAULT_SEED]
    wins = sum(
        1
        for seed in REPRO_SEEDS
        if qvk_runs["accs"][seed] >= qv_by_seed["accs"][seed]
    )
    strict_ordering = (
        qvk_runs["accs"][DEFAULT_SEED]
        > qk_runs[DEFAULT_SEED]["acc"]
        > qv_default["acc"]
    )
    elapsed = qvk_runs["elapsed"] + qv_by_seed["elapsed"]
    print(
        f"qvk reproduction: default-seed accuracy {default_acc:.4f}, hybrid >= "
        f"variational on {wins}/10 seeds, {elapsed:.1f}s"
    )
    # Reported, not gated: the strict default-seed ordering hybrid > kernel
    # machine > variational.
    print(
        "qvk ordering report (not gated): qvk "
        f"{qvk_runs['accs'][DEFAULT_SEED]:.4f}, qk "
        f"{qk_runs[DEFAULT_SEED]['acc']:.4f}, qv {qv_default['acc']:.4f} -> "
        f"strict ordering {'holds' if strict_ordering else 'does not hold'}"
    )
    assert default_acc >= 0.90
    assert wins >= 7
    assert elapsed < 1800.0


# --------------------------------------------------------------------------
# Criterion: zero-theta reduction identity
# --------------------------------------------------------------------------


def test_zero_theta_refit_reduction(qk_runs):
    x_train, y_train, x_test, y_test = qk_runs[DEFAULT_SEED]["split"]
    cfg = FitConfig(epochs=0, seed=DEFAULT_SEED, init_scale=0.0)
    hybrid_model, _ = train_qvk(x_train, y_train, x_test, y_test, cfg)
    assert np.all(hybrid_model.theta == 0.0)
    refit = refit_svm(hybrid_model, TrainConfig(seed=DEFAULT_SEED))
    refit_scores = decision_function_batch(refit, x_test)
    qk_scores = qk_runs[DEFAULT_SEED]["scores"]
    residual = np.max(np.abs(refit_scores - qk_scores))
    print(f"zero-theta reduction: max |decision difference| {residual:.2e}")
    assert residual < 1e-10


# --------------------------------------------------------------------------
# Criterion: indicator identities on emitted reports
# --------------------------------------------------------------------------


def assert_indicator_identities(report):
    cm = report["confusion"]
    tp, fp, fn, tn = cm["tp"], cm["fp"], cm["fn"], cm["tn"]
    ind = report["indicators"]
    assert list(ind) == ["accuracy", "precision", "recall", "specificity", "f1"]
    assert abs(ind["accuracy"] - (tp + tn) / (tp + fp + fn + tn)) < 1e-12
    for name, num, den in (
        ("precision", tp, tp + fp),
        ("recall", tp, tp + fn),
        ("specificity", tn, tn + fp),
    ):
        if den == 0:
            assert ind[name] == "undefined"
        else:
            assert abs(ind[name] - num / den) < 1e-12
    # F1 consistency: harmonic mean of precision/recall equals the direct
    # confusion-count form whenever it is defined.
    if (
        ind["precision"] == "undefined"
        or ind["recall"] == "undefined"
        or ind["precision"] + ind["recall"] == 0
    ):
        assert ind["f1"] == "undefined"
    else:
        p, r = ind["precision"], ind["recall"]
        assert abs(ind["f1"] - 2 * p * r / (p + r)) < 1e-12
        assert abs(ind["f1"] - 2 * tp / (2 * tp + fp + fn)) < 1e-12


def test_metrics_identities_on_emitted_reports(tmp_path):
    start = time.perf_counter()
    qk_dir = str(tmp_path / "qk")
    qv_dir = str(tmp_path / "qv")
    cmp_dir = str(tmp_path / "cmp")
    assert cli_main(["train", "--model", "qk", "--limit", "24", "--out", qk_dir]) == 0
    assert cli_main(
        ["train", "--model", "qv", "--limit", "12", "--epochs", "3", "--out", qv_dir]
    ) == 0
    assert cli_main(
        ["compare", "--limit", "12", "--epochs", "2", "--out", cmp_dir]
    ) == 0

    n_reports = 0
    for run_dir in (qk_dir, qv_dir):
        assert_indicator_identities(read_json(os.path.join(run_dir, "report.json")))
        n_reports += 1
    for entry in read_json(os.path.join(cmp_dir, "comparison.json"))["models"]:
        assert_indicator_identities(entry)
        n_reports += 1
    print(
        f"metrics identities: verified on {n_reports} emitted reports, "
        f"{time.perf_counter() - start:.1f}s"
    )


# --------------------------------------------------------------------------
# Criterion: byte-identical replay from config.json
# --------------------------------------------------------------------------


def test_replay_reproducibility(tmp_path):
    start = time.perf_counter()
    first = str(tmp_path / "first")
    again = str(tmp_path / "again")
    args = [
        "train", "--model", "qv", "--limit", "20", "--epochs", "5",
        "--seed", "9", "--out", first,
    ]
    assert cli_main(args) == 0
    assert cli_main(
        ["train", "--config", os.path.join(first, "config.json"), "--out", again]
    ) == 0
    for name in ("report.json", "trace.csv", "model.json"):
        with open(os.path.join(first, name), "rb") as fh:
            original = fh.read()
        with open(os.path.join(again, name), "rb") as fh:
            replayed = fh.read()
        assert original == replayed, f"{name} is not byte-identical on replay"
    print(
        "replay reproducibility: report.json, trace.csv, model.json "
        f"byte-identical, {time.perf_counter() - start:.1f}s"
    )
