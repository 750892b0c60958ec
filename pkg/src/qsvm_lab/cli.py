"""Command-line experiment runner.

Three subcommands: ``train`` fits one model and writes report/model/trace
artifacts, ``kernel-matrix`` writes a Gram matrix with its PSD summary,
``compare`` trains the three quantum models on one split and tabulates
their indicators. Every run directory receives a config.json with all
defaults materialized; rerunning from that file reproduces the artifacts
byte for byte. ``--config`` loads such a file as the baseline and explicit
flags override it.

Exit codes: 0 success, 2 configuration or data problems, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .circuits import AnsatzSpec, EmbeddingSpec
from .data import (
    DEFAULT_ANGLE_SCALE,
    SCALER_KINDS,
    Dataset,
    apply_scaler,
    default_dataset_path,
    fit_scaler,
    load_iris,
    select_binary,
    split_indices,
    stratified_head,
)
from .errors import ConfigurationError, DataError, QsvmLabError
from .hybrid import qvk_scores_batch, refit_svm, train_qvk
from .kernels import (
    CLASSICAL_KINDS,
    KERNEL_KINDS,
    KernelSpec,
    gram_matrix,
    min_eigenvalue,
    symmetry_residual,
)
from .metrics import confusion, indicators
from .serialize import (
    ensure_dir,
    qvk_model_doc,
    svm_model_doc,
    var_model_doc,
    write_gram_csv,
    write_json,
    write_trace_csv,
)
from .svm import TrainConfig, decision_function_batch, smo_train
from .variational import FitConfig, qv_scores_batch, train_qv

MODEL_KINDS = ("qk", "qv", "qvk", "classical")

_DEFAULTS = {
    "dataset": None,
    "classes": "versicolor,virginica",
    "test_fraction": 0.3,
    "seed": 42,
    "limit": None,
    "model": "qk",
    "kernel": None,
    "swap_test": False,
    "refit_svm": False,
    "scaler": "standard",
    "angle_scale": DEFAULT_ANGLE_SCALE,
    "layers": 2,
    "lr": 0.1,
    "epochs": 60,
    "batch": None,
    "init_scale": 0.01,
    "c": 1.0,
    "tolerance": 1e-3,
    "max_passes": 50,
    "gamma": 0.5,
    "degree": 2,
    "coef0": 1.0,
    "slope": 1.0,
    "sigmoid_exponent": 1,
    "out": "qsvm-run",
}

# config.json key order per subcommand; also the set of accepted fields
_FIELDS = {
    "train": (
        "subcommand", "dataset", "classes", "test_fraction", "seed", "limit",
        "model", "kernel", "swap_test", "refit_svm", "scaler", "angle_scale",
        "layers", "lr", "epochs", "batch", "init_scale",
        "c", "tolerance", "max_passes",
        "gamma", "degree", "coef0", "slope", "sigmoid_exponent", "out",
    ),
    "kernel-matrix": (
        "subcommand", "dataset", "classes", "seed", "limit",
        "kernel", "swap_test", "scaler", "angle_scale",
        "gamma", "degree", "coef0", "slope", "sigmoid_exponent", "out",
    ),
    "compare": (
        "subcommand", "dataset", "classes", "test_fraction", "seed", "limit",
        "swap_test", "scaler", "angle_scale",
        "layers", "lr", "epochs", "batch", "init_scale",
        "c", "tolerance", "max_passes", "out",
    ),
}

_INT_FIELDS = ("seed", "layers", "epochs", "degree", "sigmoid_exponent", "max_passes")
_FLOAT_FIELDS = (
    "test_fraction", "angle_scale", "lr", "init_scale", "c", "tolerance",
    "gamma", "coef0", "slope",
)
_OPTIONAL_INT_FIELDS = ("batch", "limit")
_BOOL_FIELDS = ("swap_test", "refit_svm")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsvm-lab",
        description="Quantum-kernel and variational SVM experiments on Iris.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(p, flag, **kw):
        p.add_argument(flag, default=argparse.SUPPRESS, **kw)

    def add_common(p):
        add(p, "--config", help="config.json from a previous run to replay")
        add(p, "--dataset", help="CSV dataset path (default: bundled Iris)")
        add(p, "--classes", help="positive,negative species names")
        add(p, "--seed", type=int, help="RNG seed for split and training")
        add(p, "--limit", type=int,
            help="keep only the first N rows, alternating classes")
        add(p, "--scaler", choices=SCALER_KINDS, help="feature scaler kind")
        add(p, "--angle-scale", type=float,
            help="radians per standardized unit (standard scaler)")
        add(p, "--out", help="output directory")

    def add_kernel_params(p):
        add(p, "--gamma", type=float, help="rbf width parameter")
        add(p, "--degree", type=int, help="polynomial degree")
        add(p, "--coef0", type=float,
            help="additive constant (poly_inhomogeneous, sigmoid)")
        add(p, "--slope", type=float, help="sigmoid slope")
        add(p, "--sigmoid-exponent", type=int, help="sigmoid output exponent")

    def add_fit_params(p):
        add(p, "--layers", type=int, help="ansatz layer count")
        add(p, "--lr", type=float, help="gradient-descent learning rate")
        add(p, "--epochs", type=int, help="training epochs")
        add(p, "--batch", type=int, help="minibatch size (default: full batch)")
        add(p, "--init-scale", type=float,
            help="half-width of the uniform theta initialization")
        add(p, "--c", type=float, help="SVM box constraint")
        add(p, "--tolerance", type=float, help="KKT tolerance for SMO")
        add(p, "--max-passes", type=int,
            help="SMO passes without progress before stopping")

    p_train = sub.add_parser("train", help="train one model and report test metrics")
    add_common(p_train)
    add(p_train, "--test-fraction", type=float, help="held-out fraction per class")
    add(p_train, "--model", choices=MODEL_KINDS, help="model kind")
    add(p_train, "--kernel", choices=KERNEL_KINDS, help="kernel kind")
    add(p_train, "--swap-test", action="store_true",
        help="use the SWAP-test kernel instead of the inversion test")
    add(p_train, "--refit-svm", action="store_true",
        help="after QVK training, refit the classifier by solving the SVM dual")
    add_fit_params(p_train)
    add_kernel_params(p_train)

    p_km = sub.add_parser("kernel-matrix", help="write a Gram matrix and PSD summary")
    add_common(p_km)
    add(p_km, "--kernel", choices=KERNEL_KINDS, help="kernel kind")
    add(p_km, "--swap-test", action="store_true",
        help="use the SWAP-test kernel instead of the inversion test")
    add_kernel_params(p_km)

    p_cmp = sub.add_parser("compare", help="train qk, qv, qvk on one split")
    add_common(p_cmp)
    add(p_cmp, "--test-fraction", type=float, help="held-out fraction per class")
    add(p_cmp, "--swap-test", action="store_true",
        help="use the SWAP-test kernel for the qk column")
    add_fit_params(p_cmp)

    return parser


def _parse_classes(value) -> list[str]:
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",")]
    elif isinstance(value, (list, tuple)):
        parts = [str(p).strip() for p in value]
    else:
        raise ConfigurationError(f"cannot parse classes from {value!r}")
    if len(parts) != 2 or not all(parts):
        raise ConfigurationError(
            f"--classes expects two comma-separated names, got {value!r}"
        )
    if parts[0] == parts[1]:
        raise ConfigurationError(f"classes must differ, got {parts[0]!r} twice")
    return parts


def _coerce(cfg: dict) -> None:
    def convert(key, fn):
        try:
            cfg[key] = fn(cfg[key])
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad value for {key}: {cfg[key]!r}") from exc

    for key in _INT_FIELDS:
        if key in cfg:
            convert(key, int)
    for key in _FLOAT_FIELDS:
        if key in cfg:
            convert(key, float)
    for key in _OPTIONAL_INT_FIELDS:
        if key in cfg and cfg[key] is not None:
            convert(key, int)
    for key in _BOOL_FIELDS:
        if key in cfg:
            cfg[key] = bool(cfg[key])
    if "dataset" in cfg and cfg["dataset"] is not None:
        cfg["dataset"] = str(cfg["dataset"])
    if "out" in cfg:
        cfg["out"] = str(cfg["out"])


def _validate_ranges(cfg: dict) -> None:
    checks = (
        ("layers", lambda v: v >= 1, ">= 1"),
        ("epochs", lambda v: v >= 0, ">= 0"),
        ("lr", lambda v: v > 0, "> 0"),
        ("init_scale", lambda v: v >= 0, ">= 0"),
        ("c", lambda v: v > 0, "> 0"),
        ("tolerance", lambda v: v > 0, "> 0"),
        ("max_passes", lambda v: v >= 1, ">= 1"),
        ("batch", lambda v: v is None or v >= 1, ">= 1"),
        ("limit", lambda v: v is None or v >= 1, ">= 1"),
        ("angle_scale", lambda v: v > 0, "> 0"),
    )
    for key, ok, wording in checks:
        if key in cfg and not ok(cfg[key]):
            raise ConfigurationError(f"{key} must be {wording}, got {cfg[key]}")
    if "scaler" in cfg and cfg["scaler"] not in SCALER_KINDS:
        raise ConfigurationError(f"unknown scaler kind {cfg['scaler']!r}")
    if "model" in cfg and cfg["model"] not in MODEL_KINDS:
        raise ConfigurationError(f"unknown model kind {cfg['model']!r}")


def _resolve_kernel(cfg: dict) -> None:
    """Fill cfg['kernel'] from the model kind and --swap-test."""
    if cfg["subcommand"] == "compare":
        return  # each model picks its own kernel; swap_test only steers qk
    swap = cfg.get("swap_test", False)
    explicit = cfg.get("kernel")
    if cfg["subcommand"] == "kernel-matrix":
        kind = explicit or ("quantum_swap" if swap else "quantum_inversion")
        if swap and explicit not in (None, "quantum_swap"):
            raise ConfigurationError(
                f"--swap-test conflicts with --kernel {explicit}"
            )
        cfg["kernel"] = kind
        return
    model = cfg["model"]
    if model == "qk":
        kind = explicit or ("quantum_swap" if swap else "quantum_inversion")
        if swap and kind != "quantum_swap":
            raise ConfigurationError(f"--swap-test conflicts with --kernel {kind}")
        if kind not in ("quantum_inversion", "quantum_swap"):
            raise ConfigurationError(
                f"model qk expects a fixed quantum kernel, got {kind!r}"
            )
    elif model == "classical":
        kind = explicit or "rbf"
        if swap:
            raise ConfigurationError("--swap-test applies to quantum kernels only")
        if kind not in CLASSICAL_KINDS:
            raise ConfigurationError(
                f"model classical expects a classical kernel, got {kind!r}"
            )
    elif model == "qv":
        if explicit is not None:
            raise ConfigurationError("model qv does not use a kernel")
        if swap:
            raise ConfigurationError("--swap-test does not apply to model qv")
        kind = None
    else:  # qvk
        kind = explicit or "quantum_trainable"
        if swap:
            raise ConfigurationError("--swap-test does not apply to model qvk")
        if kind != "quantum_trainable":
            raise ConfigurationError(
                f"model qvk uses the trainable kernel, got {kind!r}"
            )
    if cfg.get("refit_svm") and model != "qvk":
        raise ConfigurationError("--refit-svm applies to model qvk only")
    cfg["kernel"] = kind


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot open config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: expected a JSON object at top level")
    return doc


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults <- config file <- explicit flags, then validate."""
    sub = args.subcommand
    fields = _FIELDS[sub]
    cfg = {key: _DEFAULTS.get(key) for key in fields}
    cfg["subcommand"] = sub
    flags = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config")}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        doc = _load_config_file(config_path)
        file_sub = doc.get("subcommand")
        if file_sub is not None and file_sub != sub:
            raise ConfigurationError(
                f"config {config_path!r} is for subcommand {file_sub!r}, "
                f"not {sub!r}"
            )
        for key, value in doc.items():
            if key == "subcommand":
                continue
            if key not in fields:
                raise ConfigurationError(
                    f"config {config_path!r} has unknown field {key!r}"
                )
            cfg[key] = value
    cfg.update(flags)
    cfg["classes"] = _parse_classes(cfg["classes"])
    _coerce(cfg)
    _validate_ranges(cfg)
    _resolve_kernel(cfg)
    return cfg


def _config_doc(cfg: dict) -> dict:
    return {key: cfg[key] for key in _FIELDS[cfg["subcommand"]]}


def _load_selected(cfg: dict) -> Dataset:
    path = cfg["dataset"] if cfg["dataset"] is not None else default_dataset_path()
    ds = load_iris(path)
    positive, negative = cfg["classes"]
    selected = select_binary(ds, positive, negative)
    if cfg["limit"] is not None:
        selected = stratified_head(selected, cfg["limit"])
    return selected


def _kernel_spec(cfg: dict, n_features: int, theta=None) -> KernelSpec:
    kind = cfg["kernel"]
    if kind in CLASSICAL_KINDS:
        return KernelSpec(
            kind=kind,
            degree=cfg["degree"],
            coef0=cfg["coef0"],
            gamma=cfg["gamma"],
            slope=cfg["slope"],
            sigmoid_exponent=cfg["sigmoid_exponent"],
        )
    embedding = EmbeddingSpec(n_features=n_features)
    if kind == "quantum_trainable":
        ansatz = AnsatzSpec(n_layers=cfg["layers"], n_qubits=n_features)
        return KernelSpec(
            kind=kind, embedding=embedding, ansatz=ansatz, theta=theta
        )
    return KernelSpec(kind=kind, embedding=embedding)


def _indicator_doc(values: dict) -> dict:
    return {k: ("undefined" if v is None else v) for k, v in values.items()}


def _report_entry(model_name: str, y_true: np.ndarray, scores: np.ndarray) -> dict:
    predictions = np.where(scores >= 0.0, 1, -1)
    cm = confusion(y_true, predictions)
    return {
        "model": model_name,
        "indicators": _indicator_doc(indicators(cm)),
        "confusion": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
    }


def _prepared_split(cfg: dict):
    selected = _load_selected(cfg)
    train_idx, test_idx = split_indices(selected, cfg["test_fraction"], cfg["seed"])
    train_ds = selected.take(train_idx)
    test_ds = selected.take(test_idx)
    scaler = fit_scaler(train_ds.x, cfg["scaler"], cfg["angle_scale"])
    x_train = apply_scaler(scaler, train_ds.x)
    x_test = apply_scaler(scaler, test_ds.x)
    split_doc = {
        "classes": list(cfg["classes"]),
        "test_fraction": cfg["test_fraction"],
        "seed": cfg["seed"],
        "train_indices": [int(i) for i in train_idx],
        "test_indices": [int(i) for i in test_idx],
    }
    return x_train, train_ds.y.astype(np.float64), x_test, test_ds.y.astype(
        np.float64
    ), split_doc


def _fit_config(cfg: dict) -> FitConfig:
    return FitConfig(
        learning_rate=cfg["lr"],
        epochs=cfg["epochs"],
        layers=cfg["layers"],
        batch=cfg["batch"],
        seed=cfg["seed"],
        init_scale=cfg["init_scale"],
    )


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        c=cfg["c"],
        tolerance=cfg["tolerance"],
        max_passes=cfg["max_passes"],
        seed=cfg["seed"],
    )


def run_train(cfg: dict) -> int:
    x_train, y_train, x_test, y_test, split_doc = _prepared_split(cfg)
    n_features = x_train.shape[1]
    model_kind = cfg["model"]
    trace = None
    if model_kind in ("qk", "classical"):
        spec = _kernel_spec(cfg, n_features)
        gram = gram_matrix(x_train, spec)
        model = smo_train(
            gram, y_train, _train_config(cfg), training_x=x_train, kernel=spec
        )
        test_scores = decision_function_batch(model, x_test)
        model_doc = svm_model_doc(model)
    elif model_kind == "qv":
        model, trace = train_qv(x_train, y_train, x_test, y_test, _fit_config(cfg))
        test_scores = qv_scores_batch(model, x_test)
        model_doc = var_model_doc(model)
    else:  # qvk
        model, trace = train_qvk(x_train, y_train, x_test, y_test, _fit_config(cfg))
        if cfg["refit_svm"]:
            svm_model = refit_svm(model, _train_config(cfg))
            test_scores = decision_function_batch(svm_model, x_test)
            model_doc = svm_model_doc(svm_model)
        else:
            test_scores = qvk_scores_batch(model, x_test)
            model_doc = qvk_model_doc(model)
    entry = _report_entry(model_kind, y_test, test_scores)
    report = {
        "model": entry["model"],
        "split_seed": cfg["seed"],
        "indicators": entry["indicators"],
        "confusion": entry["confusion"],
    }
    out = cfg["out"]
    ensure_dir(out)
    write_json(os.path.join(out, "config.json"), _config_doc(cfg))
    write_json(os.path.join(out, "split.json"), split_doc)
    write_json(os.path.join(out, "model.json"), model_doc)
    if model_kind in ("qv", "qvk"):
        write_trace_csv(os.path.join(out, "trace.csv"), trace)
    write_json(os.path.join(out, "report.json"), report)
    return 0


def run_kernel_matrix(cfg: dict) -> int:
    selected = _load_selected(cfg)
    x = selected.x
    if x.shape[0] >= 2:
        scaler = fit_scaler(x, cfg["scaler"], cfg["angle_scale"])
        x = apply_scaler(scaler, x)
    spec = _kernel_spec(cfg, x.shape[1])
    gram = gram_matrix(x, spec)
    psd = {
        "min_eigenvalue": min_eigenvalue(gram),
        "symmetry_residual": symmetry_residual(gram.values),
    }
    out = cfg["out"]
    ensure_dir(out)
    write_json(os.path.join(out, "config.json"), _config_doc(cfg))
    write_gram_csv(os.path.join(out, "gram.csv"), gram)
    write_json(os.path.join(out, "psd.json"), psd)
    return 0


def run_compare(cfg: dict) -> int:
    x_train, y_train, x_test, y_test, split_doc = _prepared_split(cfg)
    n_features = x_train.shape[1]
    qk_kind = "quantum_swap" if cfg.get("swap_test") else "quantum_inversion"
    qk_spec = KernelSpec(kind=qk_kind, embedding=EmbeddingSpec(n_features=n_features))
    qk_gram = gram_matrix(x_train, qk_spec)
    qk_model = smo_train(
        qk_gram, y_train, _train_config(cfg), training_x=x_train, kernel=qk_spec
    )
    qk_scores = decision_function_batch(qk_model, x_test)
    fit_cfg = _fit_config(cfg)
    qv_model, _ = train_qv(x_train, y_train, x_test, y_test, fit_cfg)
    qv_scores = qv_scores_batch(qv_model, x_test)
    qvk_model, _ = train_qvk(x_train, y_train, x_test, y_test, fit_cfg)
    qvk_scores = qvk_scores_batch(qvk_model, x_test)
    models = []
    for name, scores in (("qk", qk_scores), ("qv", qv_scores), ("qvk", qvk_scores)):
        models.append(_report_entry(name, y_test, scores))
    comparison = {"split_seed": cfg["seed"], "models": models}
    out = cfg["out"]
    ensure_dir(out)
    write_json(os.path.join(out, "config.json"), _config_doc(cfg))
    write_json(os.path.join(out, "split.json"), split_doc)
    write_json(os.path.join(out, "comparison.json"), comparison)
    return 0


_DISPATCH = {
    "train": run_train,
    "kernel-matrix": run_kernel_matrix,
    "compare": run_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _DISPATCH[cfg["subcommand"]](cfg)
    except (ConfigurationError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QsvmLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
