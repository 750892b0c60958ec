"""Soft-margin SVM dual solver (simplified SMO) and the trained model.

The solver is Platt's simplified SMO: scan for a KKT violator, pair it
with a random second index from a seeded generator, solve the 2-variable
subproblem in closed form, clip to the box, repeat until ``max_passes``
consecutive scans change nothing. The equality constraint sum(alpha*y)=0
is preserved exactly by every pairwise update.

The final bias averages y_i - sum_j alpha_j y_j K_ij over free support
vectors (0 < alpha < C); when none are free it takes the midpoint of the
interval the bound samples admit. The main loop converges at half the
configured tolerance so the recomputed bias cannot push any sample past
the certified tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DataError, DegenerateDataError
from .kernels import GramMatrix, KernelSpec, eval_kernel, kernel_matrix_between, min_eigenvalue

SUPPORT_THRESHOLD = 1e-8
_PSD_WARN_FLOOR = -1e-6


@dataclass
class TrainConfig:
    """SMO knobs; defaults match the lab's standard runs."""

    c: float = 1.0
    tolerance: float = 1e-3
    max_passes: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ConfigurationError(f"c must be positive, got {self.c}")
        if self.tolerance <= 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_passes < 1:
            raise ConfigurationError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass
class SvmModel:
    """Dual solution over the training samples it was fit on.

    ``kernel`` and ``training_x`` may be None when the model was fit on a
    bare Gram matrix; such a model holds the dual solution but cannot
    score new points.
    """

    alphas: np.ndarray
    bias: float
    c: float
    kernel: KernelSpec | None
    training_x: np.ndarray | None
    training_y: np.ndarray
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.alphas = np.asarray(self.alphas, dtype=np.float64)
        if self.training_x is not None:
            self.training_x = np.atleast_2d(
                np.asarray(self.training_x, dtype=np.float64)
            )
        self.training_y = np.asarray(self.training_y, dtype=np.float64)

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > SUPPORT_THRESHOLD)


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size == 0:
        raise DataError("empty label vector")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        bad = sorted(set(y[~np.isin(y, (-1.0, 1.0))].tolist()))
        raise DataError(f"labels must be +1/-1, got {bad}")
    return y


def dual_objective(gram_values: np.ndarray, y: np.ndarray, alphas: np.ndarray) -> float:
    """W(alpha) = sum(alpha) - 1/2 alpha^T (yy^T * K) alpha."""
    ay = alphas * y
    return float(np.sum(alphas) - 0.5 * ay @ gram_values @ ay)


def smo_train(
    gram: GramMatrix,
    y,
    cfg: TrainConfig,
    training_x=None,
    kernel: KernelSpec | None = None,
    on_update=None,
) -> SvmModel:
    """Fit the dual on a precomputed Gram matrix.

    ``training_x``/``kernel`` feed the returned model so it can score new
    points; omit them when only the dual solution matters (tests do).
    ``on_update(alphas, bias)`` is called after every pairwise update.
    """
    y = _check_labels(y)
    m = y.shape[0]
    k = gram.values
    if k.shape != (m, m):
        raise DataError(f"Gram matrix is {k.shape}, labels need ({m}, {m})")
    if np.all(y == y[0]):
        raise DegenerateDataError("training labels collapse to a single class")

    warnings: list[str] = []
    min_eig = min_eigenvalue(gram)
    if min_eig < _PSD_WARN_FLOOR:
        warnings.append(
            f"Gram matrix has minimum eigenvalue {min_eig:.3e}; "
            "solving anyway, solution may not be a global optimum"
        )

    c = cfg.c
    tol = 0.5 * cfg.tolerance  # converge tighter than we certify
    rng = np.random.default_rng(cfg.seed)
    alphas = np.zeros(m, dtype=np.float64)
    bias = 0.0
    passes = 0
    while passes < cfg.max_passes:
        changed = 0
        for i in range(m):
            err_i = float((alphas * y) @ k[:, i]) + bias - y[i]
            if not (
                (y[i] * err_i < -tol and alphas[i] < c)
                or (y[i] * err_i > tol and alphas[i] > 0)
            ):
                continue
            j = int(rng.integers(m - 1))
            if j >= i:
                j += 1
            err_j = float((alphas * y) @ k[:, j]) + bias - y[j]
            alpha_i_old, alpha_j_old = alphas[i], alphas[j]
            if y[i] != y[j]:
                low = max(0.0, alpha_j_old - alpha_i_old)
                high = min(c, c + alpha_j_old - alpha_i_old)
            else:
                low = max(0.0, alpha_i_old + alpha_j_old - c)
                high = min(c, alpha_i_old + alpha_j_old)
            if low >= high:
                continue
            eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
            if eta >= 0:
                continue
            alpha_j = alpha_j_old - y[j] * (err_i - err_j) / eta
            alpha_j = min(high, max(low, alpha_j))
            if abs(alpha_j - alpha_j_old) < 1e-7:
                continue
            alpha_i = alpha_i_old + y[i] * y[j] * (alpha_j_old - alpha_j)
            alphas[i], alphas[j] = alpha_i, alpha_j
            b1 = (
                bias
                - err_i
                - y[i] * (alpha_i - alpha_i_old) * k[i, i]
                - y[j] * (alpha_j - alpha_j_old) * k[i, j]
            )
            b2 = (
                bias
                - err_j
                - y[i] * (alpha_i - alpha_i_old) * k[i, j]
                - y[j] * (alpha_j - alpha_j_old) * k[j, j]
            )
            if 0.0 < alpha_i < c:
                bias = b1
            elif 0.0 < alpha_j < c:
                bias = b2
            else:
                bias = 0.5 * (b1 + b2)
            changed += 1
            if on_update is not None:
                on_update(alphas.copy(), bias)
        passes = passes + 1 if changed == 0 else 0

    bias = _final_bias(k, y, alphas, c, fallback=bias)
    if training_x is not None:
        training_x = np.atleast_2d(np.asarray(training_x, dtype=np.float64))
        if training_x.shape[0] != m:
            raise DataError(
                f"training_x has {training_x.shape[0]} rows, labels have {m}"
            )
    return SvmModel(
        alphas=alphas,
        bias=bias,
        c=c,
        kernel=kernel,
        training_x=training_x,
        training_y=y,
        warnings=warnings,
    )


def _final_bias(k, y, alphas, c, fallback) -> float:
    margins = (alphas * y) @ k  # decision values without bias
    residuals = y - margins  # the bias that puts each sample on its margin
    free = (alphas > SUPPORT_THRESHOLD) & (alphas < c - SUPPORT_THRESHOLD)
    if np.any(free):
        return float(np.mean(residuals[free]))
    # all support vectors at bounds: bias is only boxed, take the midpoint
    lower = [
        residuals[i]
        for i in range(len(y))
        if (alphas[i] <= SUPPORT_THRESHOLD and y[i] > 0)
        or (alphas[i] >= c - SUPPORT_THRESHOLD and y[i] < 0)
    ]
    upper = [
        residuals[i]
        for i in range(len(y))
        if (alphas[i] <= SUPPORT_THRESHOLD and y[i] < 0)
        or (alphas[i] >= c - SUPPORT_THRESHOLD and y[i] > 0)
    ]
    if lower and upper:
        return float(0.5 * (max(lower) + min(upper)))
    if lower:
        return float(max(lower))
    if upper:
        return float(min(upper))
    return float(fallback)


def _check_scorable(model: SvmModel) -> None:
    if model.training_x is None or model.kernel is None:
        raise DataError(
            "model was fit on a bare Gram matrix; refit with training_x "
            "and kernel to score new points"
        )


def decision_function(model: SvmModel, x) -> float:
    """f(x) = sum over support of alpha_i y_i k(X_i, x) + b."""
    _check_scorable(model)
    support = model.support_indices
    if support.size == 0:
        raise DataError("model has an empty support set")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.training_x.shape[1]:
        raise DataError(
            f"x has {x.shape[0]} features, model was trained on "
            f"{model.training_x.shape[1]}"
        )
    total = model.bias
    for i in support:
        total += (
            model.alphas[i]
            * model.training_y[i]
            * eval_kernel(model.training_x[i], x, model.kernel)
        )
    return float(total)


def decision_function_batch(model: SvmModel, x) -> np.ndarray:
    """Vectorized decision values for a sample matrix."""
    _check_scorable(model)
    support = model.support_indices
    if support.size == 0:
        raise DataError("model has an empty support set")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.training_x.shape[1]:
        raise DataError(
            f"x has {x.shape[1]} features, model was trained on "
            f"{model.training_x.shape[1]}"
        )
    block = kernel_matrix_between(model.training_x[support], x, model.kernel)
    coef = model.alphas[support] * model.training_y[support]
    return coef @ block + model.bias


def predict(model: SvmModel, x) -> int:
    """Sign of the decision value; exact zero maps to +1."""
    return 1 if decision_function(model, x) >= 0 else -1


def predict_batch(model: SvmModel, x) -> np.ndarray:
    values = decision_function_batch(model, x)
    return np.where(values >= 0, 1, -1).astype(np.int64)
