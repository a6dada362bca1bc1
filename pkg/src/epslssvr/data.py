"""Datasets: CSV ingestion, standardization, splitting and the sinc generator."""

import csv
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Dataset:
    """Regression corpus: ``inputs`` of shape (N, D) and ``targets`` of length N."""

    inputs: np.ndarray
    targets: np.ndarray
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.array(self.inputs, dtype=float)
        y = np.array(self.targets, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidArgumentError(f"inputs must be a non-empty (N, D) array, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise InvalidArgumentError(
                f"inputs have {X.shape[0]} rows but targets have length {y.shape[0]}"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("dataset contains non-finite values")
        names = self.feature_names
        if names is not None:
            names = tuple(str(n) for n in names)
            if len(names) != X.shape[1]:
                raise InvalidArgumentError(
                    f"{len(names)} feature names given for {X.shape[1]} features"
                )
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def d(self):
        return self.inputs.shape[1]

    def __len__(self):
        return self.n


def _parse_float(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise InvalidArgumentError(f"row {row}, column {col}: cannot parse {text!r} as a number") from None
    if not np.isfinite(value):
        raise InvalidArgumentError(f"row {row}, column {col}: non-finite value {text!r}")
    return value


def read_matrix(path, has_header=True):
    """Read a comma-separated numeric table; returns ``(header, rows)``.

    Row numbers in error messages are 1-based file lines. Empty cells are
    reported as errors; there is no imputation.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    header = None
    if has_header:
        if not lines:
            raise InvalidArgumentError(f"{path}: empty file")
        header = [h.strip() for h in lines[0]]
        lines = lines[1:]
        offset = 2
    else:
        offset = 1
    if not lines:
        raise InvalidArgumentError(f"{path}: no data rows")
    width = len(header) if header is not None else len(lines[0])
    rows = []
    for i, raw in enumerate(lines):
        lineno = i + offset
        if len(raw) != width:
            raise InvalidArgumentError(f"{path}: row {lineno} has {len(raw)} fields, expected {width}")
        values = []
        for j, cell in enumerate(raw):
            cell = cell.strip()
            if not cell:
                raise InvalidArgumentError(f"{path}: row {lineno}, column {j}: missing value")
            values.append(_parse_float(cell, lineno, j))
        rows.append(values)
    return header, np.array(rows, dtype=float)


def _resolve_column(target, header, width):
    if isinstance(target, str):
        if header is not None and target in header:
            return header.index(target)
        try:
            target = int(target)
        except ValueError:
            raise InvalidArgumentError(f"target column {target!r} not found in header") from None
    idx = int(target)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise InvalidArgumentError(f"target column index {target} out of range for {width} columns")
    return idx


def load_csv(path, target_column: Union[str, int] = -1, has_header: bool = True) -> Dataset:
    """Load a dataset, taking `target_column` (name or index) as the targets.

    The remaining columns become the inputs, in file order.
    """
    header, table = read_matrix(path, has_header=has_header)
    width = table.shape[1]
    if width < 2:
        raise InvalidArgumentError(f"{path}: need at least one input column and one target column")
    t = _resolve_column(target_column, header, width)
    keep = [j for j in range(width) if j != t]
    names = tuple(header[j] for j in keep) if header is not None else None
    return Dataset(table[:, keep], table[:, t], names)


@dataclass(frozen=True)
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray
    target_mean: Optional[float] = None
    target_std: Optional[float] = None

    def transform_inputs(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def inverse_inputs(self, Z):
        return np.asarray(Z, dtype=float) * self.std + self.mean

    def transform_targets(self, y):
        if self.target_mean is None:
            return np.asarray(y, dtype=float)
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_std

    def inverse_targets(self, t):
        if self.target_mean is None:
            return np.asarray(t, dtype=float)
        return np.asarray(t, dtype=float) * self.target_std + self.target_mean

    def apply(self, dataset: Dataset) -> Dataset:
        return Dataset(
            self.transform_inputs(dataset.inputs),
            self.transform_targets(dataset.targets),
            dataset.feature_names,
        )

    def invert(self, dataset: Dataset) -> Dataset:
        return Dataset(
            self.inverse_inputs(dataset.inputs),
            self.inverse_targets(dataset.targets),
            dataset.feature_names,
        )


def _moments(values, strict, what):
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    flat = values.max(axis=0) == values.min(axis=0)
    if np.any(flat):
        if strict:
            raise InvalidArgumentError(f"{what} has zero variance; cannot standardize")
        # lenient: constant columns pass through untouched
        mean = np.where(flat, 0.0, mean)
        std = np.where(flat, 1.0, std)
    return mean, std


def standardize(dataset: Dataset, fit_on: Optional[Dataset] = None, *,
                targets: bool = False, strict: bool = True):
    """Z-score the features of `dataset` using statistics of `fit_on`.

    Parameters
    ----------
    dataset : Dataset
        Data to transform.
    fit_on : Dataset, optional
        Source of the mean/std statistics; defaults to `dataset` itself.
    targets : bool
        Also standardize the targets.
    strict : bool
        Raise on zero-variance columns. When False such columns are
        recorded with mean 0 and std 1 and pass through unchanged.

    Returns
    -------
    (Dataset, StandardizationParams)
    """
    ref = dataset if fit_on is None else fit_on
    if ref.n < 2:
        raise InvalidArgumentError("standardization needs at least 2 rows")
    mean, std = _moments(ref.inputs, strict, "an input feature")
    t_mean = t_std = None
    if targets:
        t_mean, t_std = (float(v) for v in _moments(ref.targets, strict, "the target"))
    params = StandardizationParams(mean, std, t_mean, t_std)
    return params.apply(dataset), params


def sinc(x):
    """Normalized sinc ``sin(pi x) / (pi x)`` with value 1 at the origin."""
    return np.sinc(np.asarray(x, dtype=float))


def gen_sinc(n: int, lo: float, hi: float, seed: int) -> Dataset:
    """`n` inputs drawn uniformly on ``[lo, hi]`` with sinc targets."""
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"sample count must be a positive integer, got {n!r}")
    lo, hi = float(lo), float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise InvalidArgumentError(f"invalid sampling range [{lo}, {hi}]")
    if int(seed) != seed or not 0 <= seed < 2**64:
        raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    rng = np.random.default_rng(int(seed))
    x = rng.uniform(lo, hi, size=int(n))
    return Dataset(x[:, None], sinc(x), ("x",))


def grid(lo: float, hi: float, m: int) -> np.ndarray:
    """`m` equally spaced points on ``[lo, hi]`` as an (m, 1) array."""
    lo, hi = float(lo), float(hi)
    if int(m) != m or m < 2:
        raise InvalidArgumentError(f"grid needs at least 2 points, got {m!r}")
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise InvalidArgumentError(f"invalid grid range [{lo}, {hi}]")
    return np.linspace(lo, hi, int(m))[:, None]


def split(dataset: Dataset, test_fraction: float, seed: int):
    """Seeded random train/test split; returns ``(train, test)``."""
    if not 0 < test_fraction < 1:
        raise InvalidArgumentError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = int(round(dataset.n * test_fraction))
    if n_test < 1 or n_test >= dataset.n:
        raise InvalidArgumentError(f"cannot split {dataset.n} rows with fraction {test_fraction}")
    perm = np.random.default_rng(seed).permutation(dataset.n)
    te, tr = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    names = dataset.feature_names
    return (Dataset(dataset.inputs[tr], dataset.targets[tr], names),
            Dataset(dataset.inputs[te], dataset.targets[te], names))
