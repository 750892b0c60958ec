"""Variational hinge-loss classifier: score = <Z> on wire 0 plus a bias.

Training is vanilla gradient descent on the mean hinge loss. The circuit
gradient comes from occurrence-summed parameter shifts; the bias gradient
is the analytic subgradient -mean(y * [margin violated]). Samples sitting
exactly on the hinge kink contribute a subgradient of zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Observable, param_shift_gradient_batch
from .circuits import AnsatzSpec, EmbeddingSpec, variational_input_tape, variational_tape
from .errors import ConfigurationError, DataError
from .sim import apply_tape, batch_expectation_z, expectation_z, final_states, init_state


@dataclass
class FitConfig:
    """Gradient-descent knobs shared by the variational and hybrid trainers."""

    learning_rate: float = 0.1
    epochs: int = 60
    layers: int = 2
    batch: int | None = None  # None = full batch
    seed: int = 0
    init_scale: float = 0.01

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigurationError(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.layers < 1:
            raise ConfigurationError(f"layers must be >= 1, got {self.layers}")
        if self.batch is not None and self.batch < 1:
            raise ConfigurationError(f"batch must be >= 1, got {self.batch}")
        if self.init_scale < 0:
            raise ConfigurationError(
                f"init_scale must be >= 0, got {self.init_scale}"
            )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    test_loss: float
    train_acc: float
    test_acc: float


@dataclass
class TrainingTrace:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class VarModel:
    """Trained circuit parameters (layers, qubits, 3) plus the output bias."""

    theta: np.ndarray
    bias: float
    embedding: EmbeddingSpec
    ansatz: AnsatzSpec

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64)
        expected = (self.ansatz.n_layers, self.ansatz.n_qubits, 3)
        if theta.shape != expected:
            raise ConfigurationError(
                f"theta shape {theta.shape} does not match ansatz {expected}"
            )
        self.theta = theta

    @property
    def theta_flat(self) -> np.ndarray:
        return self.theta.reshape(-1)


def qv_score(model: VarModel, x) -> float:
    """<Z_0> of the classifier circuit plus the bias."""
    tape = variational_tape(x, model.embedding, model.ansatz)
    state = apply_tape(init_state(tape.n_qubits), tape, model.theta_flat)
    return expectation_z(state, 0) + model.bias


def qv_scores_batch(model: VarModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[0] == 0:
        return np.zeros(0)
    if x.shape[1] != model.embedding.n_features:
        raise DataError(
            f"x has {x.shape[1]} features, embedding expects "
            f"{model.embedding.n_features}"
        )
    tape = variational_input_tape(model.embedding, model.ansatz)
    rows = np.hstack([x, np.broadcast_to(model.theta_flat, (x.shape[0], model.ansatz.n_params))])
    states = final_states(tape, rows)
    return batch_expectation_z(states, tape.n_qubits, 0) + model.bias


def hinge_loss(y: float, score: float) -> float:
    """max(0, 1 - y * score) for a single +-1 label."""
    if y not in (-1, 1):
        raise DataError(f"label must be +1/-1, got {y!r}")
    return max(0.0, 1.0 - y * score)


def qv_cost(model: VarModel, x, y) -> float:
    """Mean hinge loss over a sample set."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape[0] == 0:
        raise DataError("cannot average a loss over zero samples")
    if x.shape[0] != y.shape[0]:
        raise DataError(f"{x.shape[0]} samples but {y.shape[0]} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels must be +1/-1")
    scores = qv_scores_batch(model, x)
    return float(np.mean(np.maximum(0.0, 1.0 - y * scores)))


def _check_train_inputs(x_train, y_train, x_test, y_test):
    x_train = np.atleast_2d(np.asarray(x_train, dtype=np.float64))
    x_test = np.atleast_2d(np.asarray(x_test, dtype=np.float64))
    y_train = np.asarray(y_train, dtype=np.float64).reshape(-1)
    y_test = np.asarray(y_test, dtype=np.float64).reshape(-1)
    if x_train.shape[0] == 0 or x_test.shape[0] == 0:
        raise DataError("train and test sets must both be non-empty")
    if x_train.shape[0] != y_train.shape[0] or x_test.shape[0] != y_test.shape[0]:
        raise DataError("sample/label count mismatch")
    if x_train.shape[1] != x_test.shape[1]:
        raise DataError("train and test feature dimensions differ")
    for name, y in (("train", y_train), ("test", y_test)):
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError(f"{name} labels must be +1/-1")
    return x_train, y_train, x_test, y_test


def _epoch_batches(m: int, batch: int | None, rng) -> list[np.ndarray]:
    if batch is None or batch >= m:
        return [np.arange(m)]
    order = rng.permutation(m)
    return [order[i : i + batch] for i in range(0, m, batch)]


def _mean_hinge(y: np.ndarray, scores: np.ndarray) -> float:
    return float(np.mean(np.maximum(0.0, 1.0 - y * scores)))


def _accuracy(y: np.ndarray, scores: np.ndarray) -> float:
    predictions = np.where(scores >= 0, 1.0, -1.0)
    return float(np.mean(predictions == y))


def train_qv(
    x_train, y_train, x_test, y_test, cfg: FitConfig, embedding: EmbeddingSpec | None = None
):
    """Fit the classifier; returns (VarModel, TrainingTrace).

    The trace holds one record per completed epoch, evaluated after the
    update, on both splits.
    """
    x_train, y_train, x_test, y_test = _check_train_inputs(
        x_train, y_train, x_test, y_test
    )
    n_features = x_train.shape[1]
    if embedding is None:
        embedding = EmbeddingSpec(n_features=n_features)
    ansatz = AnsatzSpec(n_layers=cfg.layers, n_qubits=n_features)
    rng = np.random.default_rng(cfg.seed)
    theta = rng.uniform(
        -cfg.init_scale, cfg.init_scale, size=(cfg.layers, n_features, 3)
    )
    model = VarModel(theta=theta, bias=0.0, embedding=embedding, ansatz=ansatz)

    tape = variational_input_tape(embedding, ansatz)
    theta_slots = (n_features, n_features + ansatz.n_params)
    m = x_train.shape[0]
    trace = TrainingTrace()
    for epoch in range(1, cfg.epochs + 1):
        for batch_idx in _epoch_batches(m, cfg.batch, rng):
            xb, yb = x_train[batch_idx], y_train[batch_idx]
            scores = qv_scores_batch(model, xb)
            violated = yb * scores < 1.0
            grad_theta = np.zeros(ansatz.n_params)
            if np.any(violated):
                rows = np.hstack(
                    [
                        xb[violated],
                        np.broadcast_to(
                            model.theta_flat, (int(np.sum(violated)), ansatz.n_params)
                        ),
                    ]
                )
                per_sample = param_shift_gradient_batch(
                    tape, rows, Observable.Z_WIRE0, slot_range=theta_slots
                )
                grad_theta = -(yb[violated] @ per_sample) / xb.shape[0]
            grad_bias = -float(np.sum(yb[violated])) / xb.shape[0]
            model.theta = (model.theta_flat - cfg.learning_rate * grad_theta).reshape(
                model.theta.shape
            )
            model.bias = model.bias - cfg.learning_rate * grad_bias
        train_scores = qv_scores_batch(model, x_train)
        test_scores = qv_scores_batch(model, x_test)
        trace.records.append(
            EpochRecord(
                epoch=epoch,
                train_loss=_mean_hinge(y_train, train_scores),
                test_loss=_mean_hinge(y_test, test_scores),
                train_acc=_accuracy(y_train, train_scores),
                test_acc=_accuracy(y_test, test_scores),
            )
        )
    return model, trace
