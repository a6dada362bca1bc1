"""Bayesian epsilon-LS-SVR: a Gaussian-prior RBF network over ``theta = (b, alpha)``.

The prior precision is::

    P = [[eps,          1^T / gamma                            ],
         [1 / gamma,    1 1^T + 2 Omega / gamma + I / gamma**2 ]]

with natural shift ``P mu = (0, y) / gamma``. Identically,
``P = Psi^T Psi + eps s1 s1^T - Phi^T Phi`` where ``Phi = [1 Omega]`` and
``s1`` is the first unit vector. With unit noise variance the posterior
precision is therefore ``Psi^T Psi + eps s1 s1^T``, which stays positive
definite even for ``eps = 0`` where the prior itself is improper. All
computations stay in natural parameters and the prior precision is never
inverted.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import linalg

from .data import Dataset
from .errors import InvalidArgumentError, SingularSystemError
from .kernel import KernelConfig, cross_gram, gram
from .lssvr import LssvrConfig, SaddleFactor, bordered_matrix, design_matrix


@dataclass(frozen=True)
class EpsLssvrConfig:
    """Hyperparameters of the epsilon-LS-SVR.

    ``epsilon`` is the prior precision of the bias. ``sigma2`` is the
    observation noise variance; the LS-SVR correspondence holds at the
    default of 1, other values reweight the likelihood by ``1 / sigma2``.
    """

    epsilon: float
    gamma: float
    kernel: KernelConfig
    sigma2: float = 1.0

    def __post_init__(self):
        eps, g, s2 = float(self.epsilon), float(self.gamma), float(self.sigma2)
        if not np.isfinite(eps) or eps < 0:
            raise InvalidArgumentError(f"epsilon must be nonnegative, got {self.epsilon!r}")
        if not np.isfinite(g) or g <= 0:
            raise InvalidArgumentError(f"gamma must be positive, got {self.gamma!r}")
        if not np.isfinite(s2) or s2 <= 0:
            raise InvalidArgumentError(f"sigma2 must be positive, got {self.sigma2!r}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "sigma2", s2)

    @property
    def lssvr(self):
        return LssvrConfig(self.gamma, self.kernel)

    def with_epsilon(self, epsilon):
        return EpsLssvrConfig(epsilon, self.gamma, self.kernel, self.sigma2)


@dataclass(frozen=True)
class PriorSpec:
    precision: np.ndarray
    shift: np.ndarray


def prior_precision(omega, gamma, epsilon):
    """Explicit block form of the prior precision."""
    n = omega.shape[0]
    ig = 1.0 / gamma
    P = np.empty((n + 1, n + 1))
    P[0, 0] = epsilon
    P[0, 1:] = ig
    P[1:, 0] = ig
    P[1:, 1:] = 1.0 + 2.0 * ig * omega
    P[np.arange(1, n + 1), np.arange(1, n + 1)] += ig * ig
    return P


def prior_precision_structural(psi, phi, epsilon):
    """``Psi^T Psi + eps s1 s1^T - Phi^T Phi``, assembled from its factors."""
    P = psi.T @ psi - phi.T @ phi
    P[0, 0] += epsilon
    return P


def build_prior(dataset: Dataset, config: EpsLssvrConfig) -> PriorSpec:
    omega = gram(dataset.inputs, config.kernel)
    precision = prior_precision(omega, config.gamma, config.epsilon)
    shift = np.concatenate(([0.0], dataset.targets)) / config.gamma
    return PriorSpec(precision, shift)


@dataclass(eq=False)
class GaussianPosterior:
    """Gaussian posterior over ``(b, alpha)``.

    The covariance is materialized lazily from the Cholesky factor of the
    precision, since mean-only workflows never need it.
    """

    mean: np.ndarray
    precision: Optional[np.ndarray]
    config: EpsLssvrConfig
    train_inputs: np.ndarray
    _chol: Optional[tuple] = field(default=None, repr=False)
    _covariance: Optional[np.ndarray] = field(default=None, repr=False)

    @cached_property
    def covariance(self):
        if self._covariance is not None:
            return self._covariance
        if self.precision is None:
            raise InvalidArgumentError("posterior carries neither covariance nor precision")
        if self._chol is None:
            self._chol = _cholesky(self.precision)
        cov = linalg.cho_solve(self._chol, np.eye(self.precision.shape[0]), check_finite=False)
        return 0.5 * (cov + cov.T)

    @property
    def dim(self):
        return self.mean.shape[0]


def _cholesky(matrix):
    try:
        return linalg.cho_factor(matrix, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularSystemError(f"posterior precision is not positive definite: {exc}") from None


class PosteriorPath:
    """Posterior family over epsilon for a fixed dataset and (gamma, kernel, sigma2).

    Everything that depends only on the data is assembled once; `at`
    adds the rank-one bias term for a given epsilon and factorizes.
    """

    def __init__(self, dataset: Dataset, config: EpsLssvrConfig):
        self.config = config
        self.train_inputs = np.array(dataset.inputs)
        omega = gram(dataset.inputs, config.kernel)
        psi = bordered_matrix(omega, config.gamma)
        r = np.concatenate(([0.0], dataset.targets))
        # Psi^T Psi = P(eps=0) + Phi^T Phi
        base = psi.T @ psi
        rhs = psi.T @ r
        if config.sigma2 != 1.0:
            phi = design_matrix(omega)
            w = 1.0 / config.sigma2 - 1.0
            base = base + w * (phi.T @ phi)
            rhs = rhs + w * (phi.T @ dataset.targets)
        self._base = 0.5 * (base + base.T)
        self._rhs = rhs

    def at(self, epsilon) -> GaussianPosterior:
        cfg = self.config.with_epsilon(epsilon)
        precision = self._base.copy()
        precision[0, 0] += cfg.epsilon
        chol = _cholesky(precision)
        mean = linalg.cho_solve(chol, self._rhs, check_finite=False)
        return GaussianPosterior(mean, precision, cfg, self.train_inputs, _chol=chol)


def posterior(dataset: Dataset, config: EpsLssvrConfig) -> GaussianPosterior:
    return PosteriorPath(dataset, config).at(config.epsilon)


def posterior_covariance_sm(dataset: Dataset, config: EpsLssvrConfig) -> np.ndarray:
    """Posterior covariance by a rank-one update of ``(Psi^T Psi)^-1``.

    ``(Psi^T Psi)^-1 = Psi^-1 Psi^-T`` is formed from the pivoted LU of
    ``Psi``; with ``u`` its first column and ``q = u[0]``::

        Sigma = (Psi^T Psi)^-1 - eps / (1 + eps q) * u u^T

    Only defined for unit noise variance, where the posterior precision is
    exactly a rank-one update of ``Psi^T Psi``.
    """
    if config.sigma2 != 1.0:
        raise InvalidArgumentError("the rank-one covariance route requires sigma2 = 1")
    omega = gram(dataset.inputs, config.kernel)
    psi = bordered_matrix(omega, config.gamma)
    factor = SaddleFactor(psi)
    psi_inv = factor.solve(np.eye(psi.shape[0]))
    base_inv = psi_inv @ psi_inv.T
    base_inv = 0.5 * (base_inv + base_inv.T)
    eps = config.epsilon
    if eps == 0.0:
        return base_inv
    u = base_inv[:, 0]
    q = u[0]
    return base_inv - (eps / (1.0 + eps * q)) * np.outer(u, u)


def map_estimate(post: GaussianPosterior) -> np.ndarray:
    # Gaussian: mode == mean
    return post.mean.copy()


@dataclass(frozen=True)
class PredictiveMoments:
    """Moments of ``f(x) = phi(x)^T theta`` under the posterior.

    ``variance_full`` is the complete quadratic form ``phi^T Sigma phi``.
    ``variance_paper`` keeps only the kernel (alpha) block of Sigma and
    drops the bias row and column; it vanishes far from the data, whereas
    the full form tends to the bias variance there.
    """

    mean: float
    variance_full: float
    variance_paper: float


@dataclass(frozen=True)
class PredictiveTable:
    mean: np.ndarray
    variance_full: np.ndarray
    variance_paper: np.ndarray
    cross_term: np.ndarray
    bias_variance: float


def feature_rows(X, train_inputs, kernel_cfg):
    """Rows ``phi(x) = (1, k(x, x_1), ..., k(x, x_N))``."""
    K = cross_gram(X, train_inputs, kernel_cfg)
    return np.hstack((np.ones((K.shape[0], 1)), K))


def predictive_table(post: GaussianPosterior, X, train_inputs=None, kernel_cfg=None) -> PredictiveTable:
    """Vectorized predictive moments at the rows of `X`.

    Also returns the pieces of the block decomposition
    ``full = paper + 2 * cross_term + bias_variance``.
    """
    train_inputs = post.train_inputs if train_inputs is None else np.asarray(train_inputs, dtype=float)
    kernel_cfg = post.config.kernel if kernel_cfg is None else kernel_cfg
    if train_inputs.ndim == 1:
        train_inputs = train_inputs[:, None]
    if train_inputs.shape[0] + 1 != post.dim:
        raise InvalidArgumentError(
            f"posterior has {post.dim} parameters but {train_inputs.shape[0]} training inputs were given"
        )
    phi = feature_rows(X, train_inputs, kernel_cfg)
    S = post.covariance
    mean = phi @ post.mean
    full = np.sum((phi @ S) * phi, axis=1)
    k = phi[:, 1:]
    paper = np.sum((k @ S[1:, 1:]) * k, axis=1)
    cross = k @ S[1:, 0]
    return PredictiveTable(mean, full, paper, cross, float(S[0, 0]))


def predictive(post: GaussianPosterior, x, train_inputs=None, kernel_cfg=None) -> PredictiveMoments:
    train = post.train_inputs if train_inputs is None else np.asarray(train_inputs, dtype=float)
    if train.ndim == 1:
        train = train[:, None]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != train.shape[1]:
        raise InvalidArgumentError(
            f"expected a point of dimension {train.shape[1]}, got shape {x.shape}"
        )
    t = predictive_table(post, x[None, :], train, kernel_cfg)
    return PredictiveMoments(float(t.mean[0]), float(t.variance_full[0]), float(t.variance_paper[0]))


def posterior_to_dict(post: GaussianPosterior, include_covariance=True) -> dict:
    cfg = post.config
    doc = {
        "epsilon": cfg.epsilon,
        "gamma": cfg.gamma,
        "c": cfg.kernel.c,
        "sigma2": cfg.sigma2,
        "mean": [float(v) for v in post.mean],
    }
    if include_covariance:
        doc["covariance"] = [[float(v) for v in row] for row in post.covariance]
    doc["train_inputs"] = [[float(v) for v in row] for row in post.train_inputs]
    return doc


def posterior_from_dict(doc: dict) -> GaussianPosterior:
    """Rebuild a posterior from its JSON document.

    Without a stored covariance the result supports mean predictions
    only; asking for its covariance raises.
    """
    try:
        cfg = EpsLssvrConfig(doc["epsilon"], doc["gamma"], KernelConfig(doc["c"]), doc.get("sigma2", 1.0))
        mean = np.asarray(doc["mean"], dtype=float).reshape(-1)
        X = np.asarray(doc["train_inputs"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed posterior document: {exc}") from None
    if X.ndim != 2 or X.shape[0] + 1 != mean.shape[0]:
        raise InvalidArgumentError("posterior mean length does not match train_inputs")
    cov = doc.get("covariance")
    if cov is not None:
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise InvalidArgumentError(f"covariance has shape {cov.shape}, expected {(mean.shape[0],) * 2}")
    return GaussianPosterior(mean, None, cfg, X, _covariance=cov)


def dumps_posterior(post: GaussianPosterior, include_covariance=True) -> str:
    return json.dumps(posterior_to_dict(post, include_covariance), indent=2) + "\n"


def loads_posterior(text: str) -> GaussianPosterior:
    return posterior_from_dict(json.loads(text))
