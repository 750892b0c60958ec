"""Kernel functions, Gram assembly, and the PSD check.

Quantum kinds delegate to circuit tapes: ``quantum_inversion`` and
``quantum_trainable`` read P(all zeros) after an embed/un-embed pair,
``quantum_swap`` reads <Z> on a SWAP-test ancilla. Classical kinds are the
usual closed forms. Gram matrices are assembled from the upper triangle
and mirrored, so exact symmetry is by construction.

The minimum-eigenvalue routine is a cyclic Jacobi sweep; tests cross-check
it against numpy's eigensolver rather than delegating to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt, tanh

import numpy as np

from .circuits import (
    AnsatzSpec,
    EmbeddingSpec,
    hybrid_pair_tape,
    inversion_pair_tape,
    swap_pair_tape,
)
from .errors import ConfigurationError, DataError, QsvmLabError
from .sim import batch_expectation_z, batch_prob_all_zero, final_states

QUANTUM_KINDS = ("quantum_inversion", "quantum_swap", "quantum_trainable")
CLASSICAL_KINDS = ("linear", "poly_homogeneous", "poly_inhomogeneous", "rbf", "sigmoid")
KERNEL_KINDS = QUANTUM_KINDS + CLASSICAL_KINDS

SYMMETRY_TOL = 1e-8
_DIAGONAL_TOL = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to evaluate, with every knob it may need.

    degree / coef0 apply to the polynomial kinds (coef0 is the additive
    constant of the inhomogeneous form), gamma to rbf, slope / coef0 /
    sigmoid_exponent to sigmoid. Quantum kinds need an embedding;
    quantum_trainable additionally needs an ansatz and a flat theta.
    """

    kind: str
    degree: int = 2
    coef0: float = 1.0
    gamma: float = 0.5
    slope: float = 1.0
    sigmoid_exponent: int = 1
    embedding: EmbeddingSpec | None = None
    ansatz: AnsatzSpec | None = None
    theta: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")
        if self.degree < 1:
            raise ConfigurationError(f"degree must be >= 1, got {self.degree}")
        if self.gamma <= 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if self.sigmoid_exponent < 1:
            raise ConfigurationError(
                f"sigmoid_exponent must be >= 1, got {self.sigmoid_exponent}"
            )
        if self.kind in QUANTUM_KINDS and self.embedding is None:
            raise ConfigurationError(f"{self.kind} needs an embedding spec")
        if self.kind == "quantum_trainable":
            if self.ansatz is None:
                raise ConfigurationError("quantum_trainable needs an ansatz spec")
            if self.embedding.n_features != self.ansatz.n_qubits:
                raise ConfigurationError(
                    "embedding features and ansatz qubits disagree"
                )
            theta = self.theta
            if theta is None:
                theta = (0.0,) * self.ansatz.n_params
            theta = tuple(float(t) for t in np.asarray(theta).reshape(-1))
            if len(theta) != self.ansatz.n_params:
                raise ConfigurationError(
                    f"theta has {len(theta)} entries, ansatz expects {self.ansatz.n_params}"
                )
            object.__setattr__(self, "theta", theta)


def _pair_rows(xa: np.ndarray, xb: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Parameter rows [x1 | x2 (| theta)] for the slotted pair tapes."""
    if spec.kind == "quantum_trainable":
        theta = np.asarray(spec.theta, dtype=np.float64)
        tile = np.broadcast_to(theta, (xa.shape[0], theta.shape[0]))
        return np.hstack([xa, xb, tile])
    return np.hstack([xa, xb])


def _pair_tape(spec: KernelSpec):
    if spec.kind == "quantum_inversion":
        return inversion_pair_tape(spec.embedding)
    if spec.kind == "quantum_swap":
        return swap_pair_tape(spec.embedding)
    return hybrid_pair_tape(spec.embedding, spec.ansatz)


def _quantum_values(xa: np.ndarray, xb: np.ndarray, spec: KernelSpec) -> np.ndarray:
    tape = _pair_tape(spec)
    states = final_states(tape, _pair_rows(xa, xb, spec))
    if spec.kind == "quantum_swap":
        values = batch_expectation_z(states, tape.n_qubits, 0)
    else:
        values = batch_prob_all_zero(states)
    # overlap-derived values live in [0, 1]; shave the few-ulp excursions
    return np.clip(values, 0.0, 1.0)


def _check_pair(x1, x2) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x1, dtype=np.float64).reshape(-1)
    b = np.asarray(x2, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DataError(f"feature dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] == 0:
        raise DataError("empty feature vectors")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DataError("non-finite feature values")
    return a, b


def eval_kernel(x1, x2, spec: KernelSpec) -> float:
    """k(x1, x2) for any configured kind."""
    a, b = _check_pair(x1, x2)
    if spec.kind in QUANTUM_KINDS:
        if a.shape[0] != spec.embedding.n_features:
            raise DataError(
                f"kernel embedding expects {spec.embedding.n_features} features, "
                f"got {a.shape[0]}"
            )
        return float(_quantum_values(a[None, :], b[None, :], spec)[0])
    inner = float(np.dot(a, b))
    if spec.kind == "linear":
        return inner
    if spec.kind == "poly_homogeneous":
        return inner**spec.degree
    if spec.kind == "poly_inhomogeneous":
        return (inner + spec.coef0) ** spec.degree
    if spec.kind == "rbf":
        diff = a - b
        return float(np.exp(-spec.gamma * np.dot(diff, diff)))
    # sigmoid
    return tanh(spec.slope * inner + spec.coef0) ** spec.sigmoid_exponent


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric kernel matrix plus the sample ids it was built from."""

    values: np.ndarray
    sample_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DataError(f"Gram matrix must be square, got shape {values.shape}")
        if len(self.sample_ids) != values.shape[0]:
            raise DataError("sample_ids length does not match the matrix")
        object.__setattr__(self, "sample_ids", tuple(int(i) for i in self.sample_ids))

    @property
    def size(self) -> int:
        return self.values.shape[0]


def kernel_matrix_between(xa, xb, spec: KernelSpec) -> np.ndarray:
    """Rectangular kernel block k(xa[i], xb[j]); no symmetry assumed."""
    xa = np.atleast_2d(np.asarray(xa, dtype=np.float64))
    xb = np.atleast_2d(np.asarray(xb, dtype=np.float64))
    if xa.shape[1] != xb.shape[1]:
        raise DataError(
            f"feature dimensions differ: {xa.shape[1]} vs {xb.shape[1]}"
        )
    if spec.kind in QUANTUM_KINDS:
        ia, ib = np.meshgrid(
            np.arange(xa.shape[0]), np.arange(xb.shape[0]), indexing="ij"
        )
        flat = _quantum_values(xa[ia.ravel()], xb[ib.ravel()], spec)
        return flat.reshape(xa.shape[0], xb.shape[0])
    out = np.empty((xa.shape[0], xb.shape[0]), dtype=np.float64)
    for i in range(xa.shape[0]):
        for j in range(xb.shape[0]):
            out[i, j] = eval_kernel(xa[i], xb[j], spec)
    return out


def gram_matrix(x, spec: KernelSpec, sample_ids=None) -> GramMatrix:
    """k over all sample pairs; upper triangle computed, mirrored down."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    m = x.shape[0]
    if m == 0:
        raise DataError("cannot build a Gram matrix from zero samples")
    if sample_ids is None:
        sample_ids = range(m)
    values = np.empty((m, m), dtype=np.float64)
    if spec.kind in QUANTUM_KINDS:
        iu, ju = np.triu_indices(m, k=1)
        if iu.size:
            values[iu, ju] = _quantum_values(x[iu], x[ju], spec)
        diag = _quantum_values(x, x, spec)
        if np.any(np.abs(diag - 1.0) > _DIAGONAL_TOL):
            worst = float(np.max(np.abs(diag - 1.0)))
            raise QsvmLabError(
                f"self-kernel deviates from 1 by {worst:.3e}; simulator integrity check failed"
            )
        np.fill_diagonal(values, diag)
    else:
        for i in range(m):
            values[i, i] = eval_kernel(x[i], x[i], spec)
            for j in range(i + 1, m):
                values[i, j] = eval_kernel(x[i], x[j], spec)
    iu, ju = np.triu_indices(m, k=1)
    values[ju, iu] = values[iu, ju]
    return GramMatrix(values, tuple(sample_ids))


def symmetry_residual(values: np.ndarray) -> float:
    return float(np.max(np.abs(values - values.T))) if values.size else 0.0


def min_eigenvalue(gram) -> float:
    """Smallest eigenvalue via cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below 1e-12.
    """
    values = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DataError(f"expected a square matrix, got shape {values.shape}")
    if symmetry_residual(values) > SYMMETRY_TOL:
        raise DataError(
            f"matrix is not symmetric within {SYMMETRY_TOL}; "
            f"residual {symmetry_residual(values):.3e}"
        )
    a = 0.5 * (values + values.T)  # fold sub-tolerance asymmetry
    m = a.shape[0]
    if m == 1:
        return float(a[0, 0])
    # absolute target per the documented stopping rule, with a relative
    # floor so very large-scale matrices still terminate at rounding level
    target = max(1e-12, 1e-14 * float(np.linalg.norm(a)))
    for _sweep in range(100):
        off_part = a.copy()
        np.fill_diagonal(off_part, 0.0)
        # norm of the actual off-diagonal entries; subtracting summed
        # squares instead cancels catastrophically near convergence
        off = float(np.linalg.norm(off_part))
        if off < target:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                delta = a[q, q] - a[p, p]
                if abs(apq) * 1e12 <= abs(delta):
                    # implied rotation is below the convergence target and
                    # tau may overflow; the entry is rounding-level mass
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                tau = delta / (2.0 * apq)
                if abs(tau) > 1e10:
                    t = 1.0 / (2.0 * tau)  # asymptotic root, avoids tau**2 overflow
                elif tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    else:
        raise QsvmLabError("Jacobi eigenvalue iteration failed to converge")
    return float(np.min(np.diag(a)))
