"""Deterministic JSON/CSV writers and model (de)serialization.

Every float is rendered with 17 significant digits, enough to round-trip
IEEE 754 doubles exactly, so identical runs produce byte-identical
artifacts. Dict insertion order is preserved; no timestamps are written.
"""

from __future__ import annotations

import json
import math
import os
from typing import Any

import numpy as np

from .circuits import AnsatzSpec, EmbeddingSpec
from .errors import ConfigurationError, DataError
from .hybrid import QvkModel
from .kernels import CLASSICAL_KINDS, GramMatrix, KernelSpec
from .svm import SvmModel
from .variational import TrainingTrace, VarModel

TRACE_HEADER = "epoch,train_loss,test_loss,train_acc,test_acc"


def fmt_float(value: float) -> str:
    """17-significant-digit decimal form; exact double round-trip."""
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"cannot serialize non-finite float {value!r}")
    return f"{value:.17g}"


def _render(obj: Any, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = []
        for key, value in obj.items():
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            parts.append(f"{inner}{json.dumps(key)}: {_render(value, indent + 1)}")
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{_render(item, indent + 1)}" for item in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def json_dumps(obj: Any) -> str:
    return _render(obj, 0) + "\n"


def write_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json_dumps(obj))


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_trace_csv(path: str, trace: TrainingTrace) -> None:
    lines = [TRACE_HEADER]
    for rec in trace.records:
        lines.append(
            ",".join(
                [
                    str(rec.epoch),
                    fmt_float(rec.train_loss),
                    fmt_float(rec.test_loss),
                    fmt_float(rec.train_acc),
                    fmt_float(rec.test_acc),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_gram_csv(path: str, gram: GramMatrix) -> None:
    """One matrix row per line, comma-separated, 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in gram.values:
            fh.write(",".join(fmt_float(v) for v in row) + "\n")


def _embedding_doc(spec: EmbeddingSpec) -> dict:
    return {"n_features": spec.n_features, "rotation_axis": spec.rotation_axis}


def _embedding_from_doc(doc: dict) -> EmbeddingSpec:
    return EmbeddingSpec(
        n_features=int(doc["n_features"]), rotation_axis=str(doc["rotation_axis"])
    )


def _ansatz_doc(spec: AnsatzSpec) -> dict:
    return {
        "n_layers": spec.n_layers,
        "n_qubits": spec.n_qubits,
        "entangler_ranges": list(spec.entangler_ranges),
    }


def _ansatz_from_doc(doc: dict) -> AnsatzSpec:
    return AnsatzSpec(
        n_layers=int(doc["n_layers"]),
        n_qubits=int(doc["n_qubits"]),
        entangler_ranges=tuple(int(r) for r in doc["entangler_ranges"]),
    )


def kernel_spec_doc(spec: KernelSpec) -> dict:
    doc: dict[str, Any] = {"kind": spec.kind}
    if spec.kind in CLASSICAL_KINDS:
        if spec.kind in ("poly_homogeneous", "poly_inhomogeneous"):
            doc["degree"] = spec.degree
        if spec.kind == "poly_inhomogeneous":
            doc["coef0"] = spec.coef0
        if spec.kind == "rbf":
            doc["gamma"] = spec.gamma
        if spec.kind == "sigmoid":
            doc["slope"] = spec.slope
            doc["coef0"] = spec.coef0
            doc["sigmoid_exponent"] = spec.sigmoid_exponent
        return doc
    doc["embedding"] = _embedding_doc(spec.embedding)
    if spec.kind == "quantum_trainable":
        doc["ansatz"] = _ansatz_doc(spec.ansatz)
        doc["theta"] = list(spec.theta)
    return doc


def kernel_spec_from_doc(doc: dict) -> KernelSpec:
    kind = str(doc["kind"])
    kwargs: dict[str, Any] = {"kind": kind}
    for field in ("degree", "sigmoid_exponent"):
        if field in doc:
            kwargs[field] = int(doc[field])
    for field in ("coef0", "gamma", "slope"):
        if field in doc:
            kwargs[field] = float(doc[field])
    if "embedding" in doc:
        kwargs["embedding"] = _embedding_from_doc(doc["embedding"])
    if "ansatz" in doc:
        kwargs["ansatz"] = _ansatz_from_doc(doc["ansatz"])
    if "theta" in doc:
        kwargs["theta"] = tuple(float(t) for t in doc["theta"])
    return KernelSpec(**kwargs)


def svm_model_doc(model: SvmModel) -> dict:
    """Store only the support vectors; the rest of the dual is zero."""
    if model.training_x is None or model.kernel is None:
        raise DataError(
            "model was fit on a bare Gram matrix and cannot be serialized"
        )
    support = model.support_indices
    return {
        "model_type": "svm",
        "kernel": kernel_spec_doc(model.kernel),
        "bias": model.bias,
        "c": model.c,
        "support_alphas": model.alphas[support],
        "support_labels": model.training_y[support],
        "support_vectors": model.training_x[support],
        "warnings": list(model.warnings),
    }


def svm_model_from_doc(doc: dict) -> SvmModel:
    alphas = np.asarray(doc["support_alphas"], dtype=np.float64)
    labels = np.asarray(doc["support_labels"], dtype=np.float64)
    vectors = np.atleast_2d(np.asarray(doc["support_vectors"], dtype=np.float64))
    return SvmModel(
        alphas=alphas,
        bias=float(doc["bias"]),
        c=float(doc["c"]),
        kernel=kernel_spec_from_doc(doc["kernel"]),
        training_x=vectors,
        training_y=labels,
        warnings=list(doc.get("warnings", [])),
    )


def var_model_doc(model: VarModel) -> dict:
    return {
        "model_type": "variational",
        "embedding": _embedding_doc(model.embedding),
        "ansatz": _ansatz_doc(model.ansatz),
        "theta": model.theta,
        "bias": model.bias,
    }


def var_model_from_doc(doc: dict) -> VarModel:
    return VarModel(
        theta=np.asarray(doc["theta"], dtype=np.float64),
        bias=float(doc["bias"]),
        embedding=_embedding_from_doc(doc["embedding"]),
        ansatz=_ansatz_from_doc(doc["ansatz"]),
    )


def qvk_model_doc(model: QvkModel) -> dict:
    return {
        "model_type": "hybrid",
        "embedding": _embedding_doc(model.embedding),
        "ansatz": _ansatz_doc(model.ansatz),
        "theta": model.theta,
        "weights": model.weights,
        "bias": model.bias,
        "train_x": model.train_x,
        "train_y": model.train_y,
    }


def qvk_model_from_doc(doc: dict) -> QvkModel:
    return QvkModel(
        theta=np.asarray(doc["theta"], dtype=np.float64),
        weights=np.asarray(doc["weights"], dtype=np.float64),
        bias=float(doc["bias"]),
        train_x=np.atleast_2d(np.asarray(doc["train_x"], dtype=np.float64)),
        train_y=np.asarray(doc["train_y"], dtype=np.float64),
        embedding=_embedding_from_doc(doc["embedding"]),
        ansatz=_ansatz_from_doc(doc["ansatz"]),
    )


def model_from_doc(doc: dict):
    kind = doc.get("model_type")
    if kind == "svm":
        return svm_model_from_doc(doc)
    if kind == "variational":
        return var_model_from_doc(doc)
    if kind == "hybrid":
        return qvk_model_from_doc(doc)
    raise ConfigurationError(f"unknown model_type {kind!r} in model document")


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
