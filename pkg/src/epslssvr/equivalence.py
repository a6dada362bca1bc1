"""How far the epsilon-LS-SVR posterior mean sits from the LS-SVR solution.

Writing ``A = Psi^T Psi``, ``u = A^-1 s1`` and ``q = u[0]``, the gap
between the LS-SVR parameters and the posterior mean is exactly::

    theta_LS - mu(eps) = eps * b_LS / (1 + eps * q) * u

so it is linear in ``eps`` to first order and vanishes at ``eps = 0``.
This module evaluates that expression, the same gap by two independent
solves, the prediction discrepancy between both estimators, and sweeps
over a log-spaced epsilon grid.
"""

import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import bayes, lssvr
from .data import Dataset
from .errors import InvalidArgumentError, SingularSystemError
from .kernel import gram
from .lssvr import LssvrModel, SaddleFactor, bordered_matrix

DEFAULT_EXPONENTS = tuple(0.5 * k for k in range(11))


def _lssvr_config(config):
    if isinstance(config, lssvr.LssvrConfig):
        return config
    return lssvr.LssvrConfig(config.gamma, config.kernel)


def _check_epsilon(epsilon):
    eps = float(epsilon)
    if not np.isfinite(eps) or eps < 0:
        raise InvalidArgumentError(f"epsilon must be nonnegative and finite, got {epsilon!r}")
    return eps


class _GapTerms:
    """``theta_LS``, ``u = (Psi^T Psi)^-1 s1`` and ``q`` from one LU of Psi."""

    def __init__(self, dataset, config):
        omega = gram(dataset.inputs, config.kernel)
        self.psi = bordered_matrix(omega, config.gamma)
        factor = SaddleFactor(self.psi)
        self.rhs = np.concatenate(([0.0], dataset.targets))
        self.theta = factor.solve(self.rhs)
        s1 = np.zeros(self.psi.shape[0])
        s1[0] = 1.0
        # (Psi^T Psi)^-1 = Psi^-1 Psi^-T
        self.u = factor.solve(factor.solve_transposed(s1))
        self.q = float(self.u[0])

    @property
    def b(self):
        return float(self.theta[0])

    def gap(self, eps):
        # s1^T Psi^-1 (0, y) is b_LS
        return (eps * self.b / (1.0 + eps * self.q)) * self.u


def gap_closed_form(dataset: Dataset, config, epsilon) -> np.ndarray:
    eps = _check_epsilon(epsilon)
    return _GapTerms(dataset, _lssvr_config(config)).gap(eps)


def gap_direct(dataset: Dataset, config, epsilon) -> np.ndarray:
    """``theta_LS - mu(eps)`` from an LU solve and a separate Cholesky solve."""
    eps = _check_epsilon(epsilon)
    cfg = _lssvr_config(config)
    theta = lssvr.fit(dataset, cfg).theta
    post = bayes.posterior(dataset, bayes.EpsLssvrConfig(eps, cfg.gamma, cfg.kernel))
    return theta - post.mean


def arse(pred_a, pred_b) -> float:
    """Mean absolute difference ``mean(|a - b|)`` between two prediction vectors.

    The name (average root square error) is kept for continuity with the
    literature this metric comes from, although the formula has no square
    or root in it.
    """
    a = np.asarray(pred_a, dtype=float).reshape(-1)
    b = np.asarray(pred_b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.size == 0:
        raise InvalidArgumentError("arse needs at least one prediction")
    return float(np.mean(np.abs(a - b)))


@dataclass(frozen=True)
class GapReport:
    epsilon: float
    gap_closed_form: np.ndarray
    gap_direct: np.ndarray
    gap_norm: float
    arse: float

    @property
    def neg_log10_eps(self):
        return math.inf if self.epsilon == 0 else -math.log10(self.epsilon)

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "neg_log10_eps": _json_float(self.neg_log10_eps),
            "gap_closed_form": [float(v) for v in self.gap_closed_form],
            "gap_direct": [float(v) for v in self.gap_direct],
            "gap_norm": self.gap_norm,
            "arse": self.arse,
        }


def _json_float(v):
    # JSON has no infinity; epsilon = 0 maps to null
    return None if math.isinf(v) else v


def fmt17(v):
    return format(float(v), ".17g")


@dataclass(frozen=True)
class GapSweepReport:
    records: tuple
    exponents: tuple
    b_ls: float
    q: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("neg_log10_eps,gap_norm,arse\n")
        for exp, rec in zip(self.exponents, self.records):
            buf.write(f"{fmt17(exp)},{fmt17(rec.gap_norm)},{fmt17(rec.arse)}\n")
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "grid": {"base": 10, "neg_log10_eps": [_json_float(float(e)) for e in self.exponents]},
            "b_ls": self.b_ls,
            "q": self.q,
            "records": [r.to_dict() for r in self.records],
        }
        return json.dumps(doc, indent=2) + "\n"

    @property
    def gap_norms(self):
        return np.array([r.gap_norm for r in self.records])

    @property
    def arses(self):
        return np.array([r.arse for r in self.records])


def _normalize_exponents(exponents):
    exps = [float(e) for e in exponents]
    if not exps:
        raise InvalidArgumentError("at least one exponent is required")
    for e in exps:
        if math.isnan(e) or e < 0:
            raise InvalidArgumentError(f"exponents must be nonnegative, got {e!r}")
    exps.sort()
    if any(a == b for a, b in zip(exps, exps[1:])):
        raise InvalidArgumentError("exponents must be distinct")
    return tuple(exps)


def sweep(dataset: Dataset, config, exponents: Sequence[float] = DEFAULT_EXPONENTS,
          eval_inputs: Optional[np.ndarray] = None) -> GapSweepReport:
    """Gap and prediction discrepancy at ``eps = 10**-t`` for each exponent ``t``.

    Records come out in strictly decreasing epsilon; an infinite exponent
    stands for ``eps = 0``. Predictions are compared on the training
    inputs unless `eval_inputs` is given. The LU of ``Psi`` and
    ``Psi^T Psi`` are built once; each epsilon costs one Cholesky.
    """
    exps = _normalize_exponents(exponents)
    cfg = _lssvr_config(config)
    terms = _GapTerms(dataset, cfg)
    model = LssvrModel(terms.b, terms.theta[1:], np.array(dataset.inputs), cfg,
                       np.array(dataset.targets))
    X_eval = dataset.inputs if eval_inputs is None else np.asarray(eval_inputs, dtype=float)
    f_ls = lssvr.predict_many(model, X_eval)
    phi_eval = bayes.feature_rows(X_eval, dataset.inputs, cfg.kernel)
    path = bayes.PosteriorPath(dataset, bayes.EpsLssvrConfig(0.0, cfg.gamma, cfg.kernel))
    records = []
    for t in exps:
        eps = 0.0 if math.isinf(t) else 10.0 ** (-t)
        try:
            post = path.at(eps)
        except SingularSystemError as exc:
            raise SingularSystemError(f"at epsilon={eps!r}: {exc}", exc.condition) from exc
        direct = terms.theta - post.mean
        records.append(GapReport(
            epsilon=eps,
            gap_closed_form=terms.gap(eps),
            gap_direct=direct,
            gap_norm=float(np.linalg.norm(direct)),
            arse=arse(phi_eval @ post.mean, f_ls),
        ))
    return GapSweepReport(tuple(records), exps, terms.b, terms.q)


@dataclass(frozen=True)
class KktDiagnostics:
    """Raw optimality residuals of a fitted LS-SVR.

    ``sum_alpha`` is ``|sum(alpha)|``, ``complementarity`` is
    ``max |alpha_i - gamma * (y_i - f(x_i))|`` and ``residual`` is the
    2-norm of ``Psi theta - (0, y)``.
    """

    sum_alpha: float
    complementarity: float
    residual: float
    alpha_l1: float
    alpha_max: float
    target_norm: float

    def passes(self, tol=1e-8):
        return (self.sum_alpha <= tol * max(1.0, self.alpha_l1)
                and self.complementarity <= tol * max(1.0, self.alpha_max)
                and self.residual <= tol * self.target_norm)


def kkt_check(model: LssvrModel) -> KktDiagnostics:
    if model.train_targets is None:
        raise InvalidArgumentError("model carries no training targets; KKT residuals need them")
    cfg = model.config
    y = model.train_targets
    omega = gram(model.train_inputs, cfg.kernel)
    psi = bordered_matrix(omega, cfg.gamma)
    theta = model.theta
    fitted = omega @ model.alpha + model.b
    resid = psi @ theta - np.concatenate(([0.0], y))
    return KktDiagnostics(
        sum_alpha=float(abs(np.sum(model.alpha))),
        complementarity=float(np.max(np.abs(model.alpha - cfg.gamma * (y - fitted)))),
        residual=float(np.linalg.norm(resid)),
        alpha_l1=float(np.sum(np.abs(model.alpha))),
        alpha_max=float(np.max(np.abs(model.alpha))),
        target_norm=float(np.linalg.norm(y)),
    )
