"""Quantum-SVM laboratory: exact statevector simulation, quantum kernels,
and three SVM-style classifiers (fixed-kernel, variational, hybrid) with a
reproducible command-line experiment runner."""

from .circuits import (
    AnsatzSpec,
    EmbeddingSpec,
    angle_embedding,
    hybrid_kernel_tape,
    kernel_tape_inversion,
    kernel_tape_swap,
    layered_ansatz,
    variational_tape,
)
from .data import Dataset, Scaler, fit_scaler, load_iris, select_binary, split
from .errors import (
    CircuitError,
    ConfigurationError,
    DataError,
    DegenerateDataError,
    IngestionError,
    QsvmLabError,
    UnsupportedGateError,
)
from .hybrid import QvkModel, qvk_kernel, qvk_score, refit_svm, train_qvk
from .kernels import GramMatrix, KernelSpec, eval_kernel, gram_matrix, min_eigenvalue
from .metrics import ConfusionMatrix, confusion, indicators
from .sim import CircuitTape, Gate, StateVector, apply_tape, init_state
from .svm import SvmModel, TrainConfig, decision_function, predict, smo_train
from .variational import FitConfig, TrainingTrace, VarModel, qv_score, train_qv

__version__ = "0.1.0"

__all__ = [
    "AnsatzSpec",
    "CircuitError",
    "CircuitTape",
    "ConfigurationError",
    "ConfusionMatrix",
    "DataError",
    "Dataset",
    "DegenerateDataError",
    "EmbeddingSpec",
    "FitConfig",
    "Gate",
    "GramMatrix",
    "IngestionError",
    "KernelSpec",
    "QsvmLabError",
    "QvkModel",
    "Scaler",
    "StateVector",
    "SvmModel",
    "TrainConfig",
    "TrainingTrace",
    "UnsupportedGateError",
    "VarModel",
    "angle_embedding",
    "apply_tape",
    "confusion",
    "decision_function",
    "eval_kernel",
    "fit_scaler",
    "gram_matrix",
    "hybrid_kernel_tape",
    "indicators",
    "init_state",
    "kernel_tape_inversion",
    "kernel_tape_swap",
    "layered_ansatz",
    "load_iris",
    "min_eigenvalue",
    "predict",
    "qv_score",
    "qvk_kernel",
    "qvk_score",
    "refit_svm",
    "select_binary",
    "smo_train",
    "split",
    "train_qv",
    "train_qvk",
    "variational_tape",
    "__version__",
]
