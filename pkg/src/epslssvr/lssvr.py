"""Least-squares support vector regression in the dual.

Training solves the bordered saddle-point system::

    [ 0   1^T             ] [ b     ]   [ 0 ]
    [ 1   Omega + I/gamma ] [ alpha ] = [ y ]

whose first row is the KKT condition ``sum(alpha) = 0`` and whose
remaining rows combine ``alpha_i = gamma * e_i`` with the constraint
``y_i = f(x_i) + e_i``. The matrix is symmetric indefinite, so it is
factorized with partial pivoting (LU), never Cholesky, and never inverted.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .data import Dataset
from .errors import InvalidArgumentError, SingularSystemError
from .kernel import KernelConfig, cross_gram, gram


@dataclass(frozen=True)
class LssvrConfig:
    gamma: float
    kernel: KernelConfig

    def __post_init__(self):
        g = float(self.gamma)
        if not np.isfinite(g) or g <= 0:
            raise InvalidArgumentError(f"gamma must be positive, got {self.gamma!r}")
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class SaddleSystem:
    psi: np.ndarray
    rhs: np.ndarray


@dataclass(frozen=True)
class LssvrModel:
    """Fitted dual parameters ``theta = (b, alpha)``.

    `train_targets` is kept so the KKT diagnostics can be recomputed from
    the model alone; it is optional for models built by hand.
    """

    b: float
    alpha: np.ndarray
    train_inputs: np.ndarray
    config: LssvrConfig
    train_targets: Optional[np.ndarray] = None

    @property
    def theta(self):
        return np.concatenate(([self.b], self.alpha))

    @property
    def n(self):
        return self.alpha.shape[0]

    @property
    def d(self):
        return self.train_inputs.shape[1]


def bordered_matrix(omega, gamma):
    """``Psi = [[0, 1^T], [1, Omega + I/gamma]]`` for a given Gram matrix."""
    n = omega.shape[0]
    psi = np.empty((n + 1, n + 1))
    psi[0, 0] = 0.0
    psi[0, 1:] = 1.0
    psi[1:, 0] = 1.0
    psi[1:, 1:] = omega
    psi[np.arange(1, n + 1), np.arange(1, n + 1)] += 1.0 / gamma
    return psi


def design_matrix(omega):
    """``Phi = [1  Omega]``: row i maps ``(b, alpha)`` to the network output at x_i."""
    return np.hstack((np.ones((omega.shape[0], 1)), omega))


def build_system(dataset: Dataset, config: LssvrConfig) -> SaddleSystem:
    omega = gram(dataset.inputs, config.kernel)
    psi = bordered_matrix(omega, config.gamma)
    rhs = np.concatenate(([0.0], dataset.targets))
    return SaddleSystem(psi, rhs)


class SaddleFactor:
    """Pivoted LU factorization of ``Psi`` with a condition estimate.

    Raises `SingularSystemError` when the reciprocal condition estimate is
    below ``n * machine epsilon``.
    """

    def __init__(self, psi):
        psi = np.asarray(psi, dtype=float)
        n = psi.shape[0]
        anorm = np.linalg.norm(psi, 1)
        try:
            lu, piv, info = linalg.lapack.dgetrf(psi)
        except ValueError as exc:  # pragma: no cover - shape errors only
            raise SingularSystemError(str(exc)) from exc
        if info > 0:
            raise SingularSystemError(f"saddle matrix is exactly singular (zero pivot {info})")
        rcond, _ = linalg.lapack.dgecon(lu, anorm, norm="1")
        self.condition = float(np.inf) if rcond == 0 else 1.0 / rcond
        if not rcond >= n * np.finfo(float).eps:
            raise SingularSystemError(
                f"saddle matrix is numerically singular (condition estimate {self.condition:.3e})",
                self.condition,
            )
        self._lu = (lu, piv)

    def solve(self, rhs):
        return linalg.lu_solve(self._lu, rhs, check_finite=False)

    def solve_transposed(self, rhs):
        return linalg.lu_solve(self._lu, rhs, trans=1, check_finite=False)


def fit(dataset: Dataset, config: LssvrConfig) -> LssvrModel:
    system = build_system(dataset, config)
    theta = SaddleFactor(system.psi).solve(system.rhs)
    return LssvrModel(
        b=float(theta[0]),
        alpha=theta[1:],
        train_inputs=np.array(dataset.inputs),
        config=config,
        train_targets=np.array(dataset.targets),
    )


def _check_dim(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :] if X.shape[0] == model.d else X[:, None]
    if X.ndim != 2 or X.shape[1] != model.d:
        raise InvalidArgumentError(
            f"model expects inputs of dimension {model.d}, got shape {np.shape(X)}"
        )
    return X


def predict(model: LssvrModel, x) -> float:
    """``f(x) = sum_i alpha_i k(x, x_i) + b`` at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != model.d:
        raise InvalidArgumentError(f"model expects a point of dimension {model.d}, got shape {x.shape}")
    return float(predict_many(model, x[None, :])[0])


def predict_many(model: LssvrModel, X) -> np.ndarray:
    X = _check_dim(model, X)
    K = cross_gram(X, model.train_inputs, model.config.kernel)
    return K @ model.alpha + model.b


def fit_rbf_ls(dataset: Dataset, config: LssvrConfig) -> LssvrModel:
    """Plain least-squares RBF network on all training points as centres.

    ``[1 Omega]`` has one more column than rows, so the normal equations
    are always singular; the minimum-norm least-squares solution is
    returned instead (complete orthogonal decomposition, LAPACK gelsy).
    `config.gamma` is carried along but plays no role here.
    """
    omega = gram(dataset.inputs, config.kernel)
    phi = design_matrix(omega)
    theta, *_ = linalg.lstsq(phi, dataset.targets, lapack_driver="gelsy")
    return LssvrModel(
        b=float(theta[0]),
        alpha=theta[1:],
        train_inputs=np.array(dataset.inputs),
        config=config,
        train_targets=np.array(dataset.targets),
    )


def model_to_dict(model: LssvrModel) -> dict:
    doc = {
        "gamma": model.config.gamma,
        "c": model.config.kernel.c,
        "b": model.b,
        "alpha": [float(a) for a in model.alpha],
        "train_inputs": [[float(v) for v in row] for row in model.train_inputs],
    }
    if model.train_targets is not None:
        doc["train_targets"] = [float(v) for v in model.train_targets]
    return doc


def model_from_dict(doc: dict) -> LssvrModel:
    try:
        config = LssvrConfig(doc["gamma"], KernelConfig(doc["c"]))
        alpha = np.asarray(doc["alpha"], dtype=float).reshape(-1)
        X = np.asarray(doc["train_inputs"], dtype=float)
        b = float(doc["b"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed model document: {exc}") from None
    if X.ndim != 2 or X.shape[0] != alpha.shape[0]:
        raise InvalidArgumentError(
            f"model document has {alpha.shape[0]} weights but train_inputs of shape {X.shape}"
        )
    targets = doc.get("train_targets")
    if targets is not None:
        targets = np.asarray(targets, dtype=float).reshape(-1)
        if targets.shape[0] != alpha.shape[0]:
            raise InvalidArgumentError("train_targets length does not match alpha")
    return LssvrModel(b, alpha, X, config, targets)


def dumps_model(model: LssvrModel) -> str:
    # repr-based float formatting in json is shortest-round-trip, hence lossless
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def loads_model(text: str) -> LssvrModel:
    return model_from_dict(json.loads(text))
