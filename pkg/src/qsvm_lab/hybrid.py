"""Hybrid model: a kernel expansion whose kernel circuit carries trainable
parameters, trained jointly with the expansion weights on hinge loss.

f(x) = sum_i w_i k_theta(X_i, x) + b over the training samples. Gradient
descent updates (theta, w, b) together: w and b analytically, theta by
occurrence-summed parameter shifts through the kernel tape (every theta
slot feeds the tape twice, once in the direct half and once in the
adjoint half). ``refit_svm`` freezes theta and rebuilds the classifier by
solving the SVM dual on the induced Gram matrix instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Observable, param_shift_gradient_batch
from .circuits import AnsatzSpec, EmbeddingSpec, hybrid_kernel_tape, hybrid_pair_tape
from .errors import ConfigurationError, DataError
from .kernels import KernelSpec, gram_matrix
from .sim import apply_tape, batch_prob_all_zero, final_states, init_state, prob_all_zero
from .svm import SvmModel, TrainConfig, smo_train
from .variational import (
    EpochRecord,
    FitConfig,
    TrainingTrace,
    _accuracy,
    _check_train_inputs,
    _epoch_batches,
    _mean_hinge,
)


@dataclass
class QvkModel:
    """Kernel-expansion classifier with a parameterized kernel circuit."""

    theta: np.ndarray
    weights: np.ndarray
    bias: float
    train_x: np.ndarray
    train_y: np.ndarray
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
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.train_x = np.atleast_2d(np.asarray(self.train_x, dtype=np.float64))
        self.train_y = np.asarray(self.train_y, dtype=np.float64).reshape(-1)
        if self.weights.shape[0] != self.train_x.shape[0]:
            raise DataError("one expansion weight per training sample required")
        if self.train_y.shape[0] != self.train_x.shape[0]:
            raise DataError("training label count does not match samples")

    @property
    def theta_flat(self) -> np.ndarray:
        return self.theta.reshape(-1)

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(
            kind="quantum_trainable",
            embedding=self.embedding,
            ansatz=self.ansatz,
            theta=tuple(self.theta_flat.tolist()),
        )


def qvk_kernel(x1, x2, theta, emb: EmbeddingSpec, ansatz: AnsatzSpec) -> float:
    """P(all zeros) of the doubled-parameter kernel tape."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    tape = hybrid_kernel_tape(x1, x2, theta, emb, ansatz)
    value = prob_all_zero(apply_tape(init_state(tape.n_qubits), tape, theta))
    return float(min(1.0, max(0.0, value)))


def _cross_kernel(model: QvkModel, x: np.ndarray) -> np.ndarray:
    """k_theta(train_i, x_j) as an (m, B) block."""
    tape = hybrid_pair_tape(model.embedding, model.ansatz)
    m = model.train_x.shape[0]
    b = x.shape[0]
    ti, xj = np.meshgrid(np.arange(m), np.arange(b), indexing="ij")
    theta_tile = np.broadcast_to(model.theta_flat, (m * b, model.ansatz.n_params))
    rows = np.hstack([model.train_x[ti.ravel()], x[xj.ravel()], theta_tile])
    values = np.clip(batch_prob_all_zero(final_states(tape, rows)), 0.0, 1.0)
    return values.reshape(m, b)


def qvk_score(model: QvkModel, x) -> float:
    """f(x) = sum_i w_i k_theta(X_i, x) + b."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.train_x.shape[1]:
        raise DataError(
            f"x has {x.shape[0]} features, model expects {model.train_x.shape[1]}"
        )
    column = _cross_kernel(model, x[None, :])[:, 0]
    return float(model.weights @ column + model.bias)


def qvk_scores_batch(model: QvkModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.train_x.shape[1]:
        raise DataError(
            f"x has {x.shape[1]} features, model expects {model.train_x.shape[1]}"
        )
    return model.weights @ _cross_kernel(model, x) + model.bias


def _train_gram(model: QvkModel) -> np.ndarray:
    """Symmetric k_theta over the training set (upper triangle mirrored)."""
    tape = hybrid_pair_tape(model.embedding, model.ansatz)
    x = model.train_x
    m = x.shape[0]
    n_params = model.ansatz.n_params
    values = np.empty((m, m), dtype=np.float64)
    iu, ju = np.triu_indices(m, k=1)
    if iu.size:
        theta_tile = np.broadcast_to(model.theta_flat, (iu.size, n_params))
        rows = np.hstack([x[iu], x[ju], theta_tile])
        values[iu, ju] = np.clip(
            batch_prob_all_zero(final_states(tape, rows)), 0.0, 1.0
        )
        values[ju, iu] = values[iu, ju]
    theta_tile = np.broadcast_to(model.theta_flat, (m, n_params))
    diag_rows = np.hstack([x, x, theta_tile])
    np.fill_diagonal(
        values, np.clip(batch_prob_all_zero(final_states(tape, diag_rows)), 0.0, 1.0)
    )
    return values


def _theta_gradient(
    model: QvkModel, violated: np.ndarray, yb: np.ndarray,
    batch_idx: np.ndarray, batch_size: int,
) -> np.ndarray:
    """d(mean hinge)/d(theta), summed over violating samples.

    kernel gradients are shared between (i, s) and (s, i), so each needed
    unordered pair is evaluated once and scattered with its combined
    coefficient.
    """
    m = model.train_x.shape[0]
    n_params = model.ansatz.n_params
    if not np.any(violated):
        return np.zeros(n_params)
    coefficients: dict[tuple[int, int], float] = {}
    for s_local in np.flatnonzero(violated):
        s = int(batch_idx[s_local])
        scale = -float(yb[s_local]) / batch_size
        for i in range(m):
            key = (i, s) if i <= s else (s, i)
            coefficients[key] = coefficients.get(key, 0.0) + scale * float(
                model.weights[i]
            )
    keys = sorted(coefficients)
    pairs_a = np.asarray([k[0] for k in keys])
    pairs_b = np.asarray([k[1] for k in keys])
    coef = np.asarray([coefficients[k] for k in keys])
    tape = hybrid_pair_tape(model.embedding, model.ansatz)
    f = model.train_x.shape[1]
    theta_tile = np.broadcast_to(model.theta_flat, (len(keys), n_params))
    rows = np.hstack([model.train_x[pairs_a], model.train_x[pairs_b], theta_tile])
    grads = param_shift_gradient_batch(
        tape, rows, Observable.ALL_ZERO, slot_range=(2 * f, 2 * f + n_params)
    )
    return coef @ grads


def train_qvk(
    x_train,
    y_train,
    x_test,
    y_test,
    cfg: FitConfig,
    embedding: EmbeddingSpec | None = None,
    freeze_theta: bool = False,
):
    """Joint gradient descent on (theta, w, b); returns (QvkModel, trace).

    Initialization: theta seeded uniform in +-init_scale, w_i = y_i / m,
    b = 0. ``freeze_theta`` skips the circuit-parameter update (used to
    check the convex (w, b) subproblem in isolation).
    """
    x_train, y_train, x_test, y_test = _check_train_inputs(
        x_train, y_train, x_test, y_test
    )
    n_features = x_train.shape[1]
    if embedding is None:
        embedding = EmbeddingSpec(n_features=n_features)
    ansatz = AnsatzSpec(n_layers=cfg.layers, n_qubits=n_features)
    rng = np.random.default_rng(cfg.seed)
    m = x_train.shape[0]
    model = QvkModel(
        theta=rng.uniform(-cfg.init_scale, cfg.init_scale, size=(cfg.layers, n_features, 3)),
        weights=y_train / m,
        bias=0.0,
        train_x=x_train,
        train_y=y_train,
        embedding=embedding,
        ansatz=ansatz,
    )
    trace = TrainingTrace()
    for epoch in range(1, cfg.epochs + 1):
        for batch_idx in _epoch_batches(m, cfg.batch, rng):
            yb = y_train[batch_idx]
            gram = _train_gram(model)
            scores = model.weights @ gram[:, batch_idx] + model.bias
            violated = yb * scores < 1.0
            batch_size = batch_idx.shape[0]
            grad_w = np.zeros(m)
            if np.any(violated):
                hit = batch_idx[violated]
                grad_w = -(gram[:, hit] @ yb[violated]) / batch_size
            grad_b = -float(np.sum(yb[violated])) / batch_size
            if freeze_theta:
                grad_theta = np.zeros(ansatz.n_params)
            else:
                grad_theta = _theta_gradient(
                    model, violated, yb, batch_idx, batch_size
                )
            model.weights = model.weights - cfg.learning_rate * grad_w
            model.bias = model.bias - cfg.learning_rate * grad_b
            model.theta = (
                model.theta_flat - cfg.learning_rate * grad_theta
            ).reshape(model.theta.shape)
        train_scores = qvk_scores_batch(model, x_train)
        test_scores = qvk_scores_batch(model, x_test)
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


def refit_svm(model: QvkModel, cfg: TrainConfig) -> SvmModel:
    """Freeze theta, build the induced Gram, and solve the SVM dual."""
    spec = model.kernel_spec()
    gram = gram_matrix(model.train_x, spec)
    return smo_train(
        gram,
        model.train_y,
        cfg,
        training_x=model.train_x,
        kernel=spec,
    )
