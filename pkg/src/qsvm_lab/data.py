"""Iris ingestion, label binarization, stratified splitting, and scaling.

The canonical 150-row CSV ships with the package (datasets/iris.csv);
``default_dataset_path`` points at it. Features are standardized on the
training split only and multiplied by an angle scale so they land in a
range where one rotation per qubit discriminates well; a min-max variant
mapping each feature to [0, pi] is selectable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from math import floor, pi

import numpy as np

from .errors import ConfigurationError, DataError, IngestionError

IRIS_HEADER = ("sepal_length", "sepal_width", "petal_length", "petal_width", "species")
DEFAULT_POSITIVE = "versicolor"
DEFAULT_NEGATIVE = "virginica"
DEFAULT_ANGLE_SCALE = pi / 4.0
SCALER_KINDS = ("standard", "minmax")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with raw species names and, once binarized, +/-1 labels."""

    x: np.ndarray
    species: tuple[str, ...]
    y: np.ndarray | None = None

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "species", tuple(self.species))
        if x.shape[0] != len(self.species):
            raise DataError(
                f"{x.shape[0]} feature rows but {len(self.species)} species labels"
            )
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.int64).reshape(-1)
            if y.shape[0] != x.shape[0]:
                raise DataError("label vector length does not match features")
            if not np.all(np.isin(y, (-1, 1))):
                raise DataError("binarized labels must be +1/-1")
            object.__setattr__(self, "y", y)

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.x[idx],
            tuple(self.species[i] for i in idx),
            None if self.y is None else self.y[idx],
        )


def default_dataset_path() -> str:
    """Path of the bundled canonical Iris CSV."""
    return str(resources.files("qsvm_lab").joinpath("datasets/iris.csv"))


def load_iris(path: str) -> Dataset:
    """Parse the 5-column CSV; errors carry 1-based line numbers."""
    rows: list[list[float]] = []
    species: list[str] = []
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open dataset {path!r}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: file is empty") from None
        if tuple(h.strip() for h in header) != IRIS_HEADER:
            raise IngestionError(
                f"{path}, line 1: header must be {','.join(IRIS_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # tolerate a trailing blank line
            if len(row) != 5:
                raise IngestionError(
                    f"{path}, line {lineno}: expected 5 fields, got {len(row)}"
                )
            values = []
            for col, cell in zip(IRIS_HEADER[:4], row[:4]):
                try:
                    value = float(cell)
                except ValueError:
                    raise IngestionError(
                        f"{path}, line {lineno}: {col} value {cell!r} is not a number"
                    ) from None
                if not np.isfinite(value):
                    raise IngestionError(
                        f"{path}, line {lineno}: {col} value {cell!r} is not finite"
                    )
                values.append(value)
            name = row[4].strip()
            if not name:
                raise IngestionError(f"{path}, line {lineno}: empty species name")
            rows.append(values)
            species.append(name)
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    return Dataset(np.asarray(rows, dtype=np.float64), tuple(species))


def select_binary(ds: Dataset, positive: str, negative: str) -> Dataset:
    """Keep two species; positive maps to +1, negative to -1."""
    if positive == negative:
        raise ConfigurationError(f"classes must differ, got {positive!r} twice")
    present = set(ds.species)
    for name in (positive, negative):
        if name not in present:
            known = ", ".join(sorted(present))
            raise ConfigurationError(
                f"unknown class {name!r}; dataset contains: {known}"
            )
    keep = [i for i, s in enumerate(ds.species) if s in (positive, negative)]
    labels = np.asarray(
        [1 if ds.species[i] == positive else -1 for i in keep], dtype=np.int64
    )
    subset = ds.take(keep)
    return Dataset(subset.x, subset.species, labels)


def stratified_head(ds: Dataset, limit: int) -> Dataset:
    """First ``limit`` rows taken alternately from each class in file order.

    Keeps small subsets label-balanced (a plain head of the bundled file
    would be single-class, since species arrive in blocks).
    """
    if ds.y is None:
        raise DataError("dataset must be binarized before limiting")
    if limit < 1:
        raise ConfigurationError(f"limit must be >= 1, got {limit}")
    positive = np.flatnonzero(ds.y == 1)
    negative = np.flatnonzero(ds.y == -1)
    picked: list[int] = []
    rank = 0
    while len(picked) < limit and (rank < positive.size or rank < negative.size):
        if rank < positive.size:
            picked.append(int(positive[rank]))
        if len(picked) < limit and rank < negative.size:
            picked.append(int(negative[rank]))
        rank += 1
    return ds.take(sorted(picked))


def split_indices(ds: Dataset, test_fraction: float, seed: int):
    """Stratified (train, test) index arrays; floor of the fraction per class
    goes to test, the remainder to train."""
    if ds.y is None:
        raise DataError("dataset must be binarized before splitting")
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(
            f"test_fraction must lie in (0, 1), got {test_fraction}"
        )
    rng = np.random.default_rng(seed)
    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for label in (1, -1):
        members = np.flatnonzero(ds.y == label)
        order = members[rng.permutation(members.shape[0])]
        n_test = floor(test_fraction * members.shape[0])
        test_parts.append(order[:n_test])
        train_parts.append(order[n_test:])
    train = np.concatenate(train_parts)
    test = np.concatenate(test_parts)
    if train.size == 0 or test.size == 0:
        raise DataError(
            f"split with fraction {test_fraction} left an empty side "
            f"({train.size} train / {test.size} test)"
        )
    return train, test


def split(ds: Dataset, test_fraction: float, seed: int):
    """Stratified (train, test) datasets; see split_indices."""
    train_idx, test_idx = split_indices(ds, test_fraction, seed)
    return ds.take(train_idx), ds.take(test_idx)


@dataclass(frozen=True)
class Scaler:
    """Affine feature map fit on the training split only.

    standard: (x - mean) / std * gain, with gain the angle scale.
    minmax:   (x - min) / (max - min) * gain, with gain = pi.
    """

    kind: str
    center: np.ndarray
    spread: np.ndarray
    gain: float

    def __post_init__(self) -> None:
        if self.kind not in SCALER_KINDS:
            raise ConfigurationError(f"unknown scaler kind {self.kind!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "spread", np.asarray(self.spread, dtype=np.float64))


def fit_scaler(
    x, kind: str = "standard", angle_scale: float = DEFAULT_ANGLE_SCALE
) -> Scaler:
    """Fit per-feature statistics; population std (ddof=0) for standard."""
    if kind not in SCALER_KINDS:
        raise ConfigurationError(f"unknown scaler kind {kind!r}")
    if angle_scale <= 0:
        raise ConfigurationError(f"angle_scale must be positive, got {angle_scale}")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[0] == 0:
        raise DataError("cannot fit a scaler on zero samples")
    if kind == "standard":
        center = x.mean(axis=0)
        spread = x.std(axis=0)
        gain = angle_scale
    else:
        center = x.min(axis=0)
        spread = x.max(axis=0) - center
        gain = pi
    degenerate = np.flatnonzero(spread < 1e-12)
    if degenerate.size:
        raise DataError(
            f"feature(s) {degenerate.tolist()} are constant on the training "
            "split; cannot scale"
        )
    return Scaler(kind, center, spread, gain)


def apply_scaler(scaler: Scaler, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != scaler.center.shape[0]:
        raise DataError(
            f"scaler was fit on {scaler.center.shape[0]} features, got {x.shape[1]}"
        )
    return (x - scaler.center) / scaler.spread * scaler.gain
