"""Dense linear-algebra primitives, the RMS norm and dataset standardization.

Every norm in this package is the root-mean-square norm

    norm2(v) = sqrt(mean(v ** 2))

and not the Euclidean one. A centered response rescaled to unit RMS norm
therefore has ``norm2(Y) == 1``, which is what the criterion relies on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import lapack

from ._errors import DegenerateDataError, InvalidInputError, NumericalError

__all__ = [
    "Dataset",
    "StandardizationMeta",
    "norm2",
    "ridge_solve",
    "cholesky_factor",
    "cholesky_solve",
    "standardize",
]


def _as_finite(a, name):
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def norm2(v, axis=None):
    """RMS norm of ``v``; with ``axis`` set, computed along that axis."""
    v = _as_finite(v, "v")
    if v.size == 0:
        raise InvalidInputError("norm2 of an empty vector")
    return np.sqrt(np.mean(v * v, axis=axis))


def cholesky_factor(A):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises NumericalError carrying the 1-based pivot of the first
    non-positive leading minor.
    """
    A = _as_finite(A, "A")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    L, info = lapack.dpotrf(A, lower=1, clean=1)
    if info > 0:
        raise NumericalError(
            f"matrix is not positive definite (leading minor {info})", pivot=int(info)
        )
    if info < 0:
        raise InvalidInputError(f"illegal argument {-info} passed to dpotrf")
    return L


def cholesky_solve(L, b):
    """Solve ``(L L^T) x = b`` for one or several right-hand sides."""
    x, info = lapack.dpotrs(L, np.asarray(b, dtype=float), lower=1)
    if info != 0:
        raise InvalidInputError(f"illegal argument {-info} passed to dpotrs")
    return x


def ridge_solve(A, b):
    """Solve the SPD system ``A x = b`` through a Cholesky factorization.

    ``b`` may be a vector or a matrix of stacked right-hand sides.
    """
    b = _as_finite(b, "b")
    L = cholesky_factor(A)
    if b.shape[0] != L.shape[0]:
        raise InvalidInputError(f"dimension mismatch: A is {L.shape}, b is {b.shape}")
    return cholesky_solve(L, b)


@dataclass(frozen=True)
class StandardizationMeta:
    """Means and population scales used to standardize a dataset.

    ``x_mean``/``x_scale`` are zeros/ones when X was left untouched.
    """

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float

    @classmethod
    def identity(cls, p):
        return cls(np.zeros(p), np.ones(p), 0.0, 1.0)

    def transform_X(self, X):
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_scale

    def transform_y(self, Y):
        return (np.asarray(Y, dtype=float) - self.y_mean) / self.y_scale

    def inverse_y(self, Y_std):
        return np.asarray(Y_std, dtype=float) * self.y_scale + self.y_mean

    def to_dict(self):
        return {
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
            "y_mean": float(self.y_mean),
            "y_scale": float(self.y_scale),
        }


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    name: str = "dataset"
    feature_names: Optional[Sequence[str]] = None
    n_dropped: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.asarray(self.Y, dtype=float).ravel()
        if self.X.shape[0] != self.Y.shape[0]:
            raise InvalidInputError(
                f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]} entries"
            )

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def standardize(D: Dataset, standardize_X: bool = True):
    """Center Y and scale it to unit RMS norm; optionally do the same to X.

    Uses the population (divide-by-n) standard deviation so the returned
    response has ``norm2(Y) == 1``. Returns ``(standardized, meta)``.
    """
    X = _as_finite(D.X, "X")
    Y = _as_finite(D.Y, "Y")
    n, p = X.shape
    if n < 2:
        raise DegenerateDataError(f"need at least 2 observations, got {n}")

    y_mean = float(np.mean(Y))
    y_scale = float(np.std(Y))
    if not y_scale > 0 or y_scale <= 1e-12 * max(1.0, abs(y_mean)):
        raise DegenerateDataError("response Y is constant")

    if standardize_X:
        x_mean = X.mean(axis=0)
        x_scale = X.std(axis=0)
        bad = np.flatnonzero(~(x_scale > 1e-12 * np.maximum(1.0, np.abs(x_mean))))
        if bad.size:
            j = int(bad[0])
            label = D.feature_names[j] if D.feature_names is not None else f"column {j}"
            raise DegenerateDataError(f"feature {label!r} is constant")
    else:
        x_mean, x_scale = np.zeros(p), np.ones(p)

    meta = StandardizationMeta(x_mean, x_scale, y_mean, y_scale)
    out = Dataset(
        meta.transform_X(X),
        meta.transform_y(Y),
        name=D.name,
        feature_names=D.feature_names,
        n_dropped=D.n_dropped,
        extra=dict(D.extra),
    )
    return out, meta
