"""Gaussian (RBF) kernel and Gram matrices.

The kernel is ``k(x, z) = exp(-c**2 * ||x - z||**2)``. Squared distances
are formed by summing squared coordinate differences directly rather than
through the ``|x|^2 + |z|^2 - 2 x.z`` expansion, which loses all accuracy
for nearby points.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class KernelConfig:
    """RBF width parameter ``c`` (the kernel uses ``c**2``)."""

    c: float

    def __post_init__(self):
        c = float(self.c)
        if not np.isfinite(c) or c <= 0:
            raise InvalidArgumentError(f"kernel width c must be positive, got {self.c!r}")
        object.__setattr__(self, "c", c)

    @classmethod
    def from_c2(cls, c2):
        c2 = float(c2)
        if not np.isfinite(c2) or c2 <= 0:
            raise InvalidArgumentError(f"c^2 must be positive, got {c2!r}")
        return cls(float(np.sqrt(c2)))

    @property
    def c2(self):
        return self.c * self.c


def _as_points(X, name):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidArgumentError(f"{name} must be an (n, d) array, got shape {X.shape}")
    return X


def rbf(x, z, cfg: KernelConfig) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if x.ndim != 1 or x.shape != z.shape or x.size == 0:
        raise InvalidArgumentError(
            f"rbf needs two vectors of the same dimension, got {x.shape} and {z.shape}"
        )
    d = x - z
    return float(np.exp(-cfg.c2 * np.sum(d * d)))


def _sqdist(A, B):
    # (m, n) squared distances by direct summation over coordinates
    out = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k, None] - B[None, :, k]
        out += diff * diff
    return out


def gram(X, cfg: KernelConfig) -> np.ndarray:
    """Kernel matrix ``Omega[i, j] = k(x_i, x_j)`` on the rows of `X`.

    Only the strict upper triangle is evaluated; it is mirrored into the
    lower triangle so the result is exactly symmetric with a unit
    diagonal.
    """
    X = _as_points(X, "X")
    n = X.shape[0]
    if n < 1:
        raise InvalidArgumentError("gram needs at least one point")
    iu, ju = np.triu_indices(n, k=1)
    sq = np.zeros(iu.size)
    for k in range(X.shape[1]):
        diff = X[iu, k] - X[ju, k]
        sq += diff * diff
    omega = np.eye(n)
    vals = np.exp(-cfg.c2 * sq)
    omega[iu, ju] = vals
    omega[ju, iu] = vals
    return omega


def cross_gram(Xtest, Xtrain, cfg: KernelConfig) -> np.ndarray:
    """``(M, N)`` matrix of kernel values between test and training points."""
    Xtest = _as_points(Xtest, "Xtest")
    Xtrain = _as_points(Xtrain, "Xtrain")
    if Xtest.shape[1] != Xtrain.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: test points have D={Xtest.shape[1]}, "
            f"training points have D={Xtrain.shape[1]}"
        )
    return np.exp(-cfg.c2 * _sqdist(Xtest, Xtrain))
