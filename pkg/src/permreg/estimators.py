"""Closed-form estimator families indexed by a regularization bundle.

Three families are provided:

``ridge``       beta = (X'X + lam I)^-1 X'Y
``sparse``      beta = S (XS'XS + lam I)^-1 (XS)'Y with XS = X S, where S is a
                diagonal of per-feature sigmoid gates driven by (kappa, gamma)
``aggregated``  beta = sigmoid(mu) * beta_ridge + (1 - sigmoid(mu)) * beta_sparse

All functions accept a response matrix with one column per right-hand side
as well as a single response vector; the factorization is shared across
columns.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from ._errors import InvalidInputError
from .core import StandardizationMeta, cholesky_factor, cholesky_solve

__all__ = [
    "Family",
    "RegParams",
    "sigmoid",
    "gate_values",
    "sparsifier",
    "beta_ridge",
    "beta_sparse",
    "beta_aggregated",
    "fit_family",
    "predict",
    "selection_counts",
]

SIGMOID_CLAMP = 500.0
SPARSIFIER_OFFSET = 1e-2


class Family(str, enum.Enum):
    RIDGE = "bkk"
    SPARSE = "sbkk"
    AGGREGATED = "abkk"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"ridge": cls.RIDGE, "sparse": cls.SPARSE, "sparseridge": cls.SPARSE,
                   "aggregated": cls.AGGREGATED}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidInputError(f"unknown estimator family {value!r}") from None

    @property
    def active(self):
        """Names of the regularization components this family reads."""
        return {
            Family.RIDGE: ("lam",),
            Family.SPARSE: ("lam", "kappa", "gamma"),
            Family.AGGREGATED: ("lam", "kappa", "gamma", "mu"),
        }[self]


@dataclass(frozen=True)
class RegParams:
    lam: float = 1e3
    kappa: float = 0.1
    gamma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float).ravel())
        vals = [self.lam, self.kappa, self.mu, *self.gamma]
        if not all(np.isfinite(vals)):
            raise InvalidInputError("regularization parameters must be finite")
        if not self.lam > 0:
            raise InvalidInputError(f"lam must be positive, got {self.lam}")
        if not self.kappa > 0:
            raise InvalidInputError(f"kappa must be positive, got {self.kappa}")

    @classmethod
    def initial(cls, p, lam=1e3, kappa=0.1, mu=0.0):
        """Default starting point: lam=1e3, kappa=0.1, gamma=0, mu=0."""
        return cls(lam=lam, kappa=kappa, gamma=np.zeros(p), mu=mu)

    def with_(self, **changes):
        return replace(self, **changes)

    def to_vector(self, family):
        """Flatten the active components in the order lam, kappa, gamma..., mu."""
        family = Family.parse(family)
        parts = [[self.lam]]
        if "kappa" in family.active:
            parts += [[self.kappa], self.gamma]
        if "mu" in family.active:
            parts.append([self.mu])
        return np.concatenate([np.asarray(p_, dtype=float) for p_ in parts])

    def from_vector(self, family, vec):
        family = Family.parse(family)
        vec = np.asarray(vec, dtype=float)
        p = self.gamma.size
        changes = {"lam": float(vec[0])}
        if "kappa" in family.active:
            changes["kappa"] = float(vec[1])
            changes["gamma"] = vec[2 : 2 + p].copy()
        if "mu" in family.active:
            changes["mu"] = float(vec[2 + p])
        return replace(self, **changes)

    def component_names(self, family):
        family = Family.parse(family)
        names = ["lam"]
        if "kappa" in family.active:
            names += ["kappa"] + [f"gamma[{j}]" for j in range(self.gamma.size)]
        if "mu" in family.active:
            names.append("mu")
        return names

    def to_dict(self):
        return {"lam": float(self.lam), "kappa": float(self.kappa),
                "gamma": self.gamma.tolist(), "mu": float(self.mu)}


def sigmoid(z):
    # Clamped so that extreme arguments never produce overflow warnings or NaN.
    z = np.clip(np.asarray(z, dtype=float), -SIGMOID_CLAMP, SIGMOID_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


def _gate_spread(gamma, normalized):
    d = gamma - gamma.mean()
    ss = float(np.sum(d * d))
    if normalized:
        ss /= gamma.size
    return d, ss


def gate_values(kappa, gamma, normalized_spread=False):
    """Diagonal of the quasi-sparsifying matrix as a vector.

    ``normalized_spread`` divides the sum of squared deviations of gamma by p
    (a variance); the default keeps the unnormalized sum.
    """
    gamma = np.asarray(gamma, dtype=float).ravel()
    if not kappa > 0:
        raise InvalidInputError(f"kappa must be positive, got {kappa}")
    if not np.all(np.isfinite(gamma)):
        raise InvalidInputError("gamma contains non-finite entries")
    d, spread = _gate_spread(gamma, normalized_spread)
    return sigmoid(kappa * (spread + SPARSIFIER_OFFSET) * d)


def sparsifier(kappa, gamma, normalized_spread=False):
    """The p x p diagonal quasi-sparsifying matrix S(kappa, gamma)."""
    return np.diag(gate_values(kappa, gamma, normalized_spread))


def _check_xy(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError(f"X must be 2-D, got shape {X.shape}")
    if Y.shape[0] != X.shape[0]:
        raise InvalidInputError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    return X, Y


def _ridge_factor(X, lam):
    p = X.shape[1]
    A = X.T @ X
    A[np.diag_indices(p)] += lam
    return cholesky_factor(A)


def beta_ridge(lam, X, Y):
    """Ridge estimator (X'X + lam I)^-1 X'Y."""
    X, Y = _check_xy(X, Y)
    if not lam > 0:
        raise InvalidInputError(f"lam must be positive, got {lam}")
    return cholesky_solve(_ridge_factor(X, lam), X.T @ Y)


def beta_sparse(lam, kappa, gamma, X, Y, normalized_spread=False):
    X, Y = _check_xy(X, Y)
    s = gate_values(kappa, gamma, normalized_spread)
    if s.size != X.shape[1]:
        raise InvalidInputError(f"gamma has length {s.size}, X has {X.shape[1]} columns")
    b = beta_ridge(lam, X * s, Y)
    return s[:, None] * b if b.ndim == 2 else s * b


def beta_aggregated(lam, kappa, gamma, mu, X, Y, normalized_spread=False):
    a = float(sigmoid(mu))
    bR = beta_ridge(lam, X, Y)
    bS = beta_sparse(lam, kappa, gamma, X, Y, normalized_spread)
    return a * bR + (1.0 - a) * bS


def fit_family(family, theta: RegParams, X, Y, normalized_spread=False):
    """Dispatch to the estimator of ``family`` at ``theta``."""
    family = Family.parse(family)
    if family is Family.RIDGE:
        return beta_ridge(theta.lam, X, Y)
    if family is Family.SPARSE:
        return beta_sparse(theta.lam, theta.kappa, theta.gamma, X, Y, normalized_spread)
    return beta_aggregated(theta.lam, theta.kappa, theta.gamma, theta.mu, X, Y,
                           normalized_spread)


def predict(beta, X, meta: StandardizationMeta | None = None):
    """Predictions on the original response scale.

    ``beta`` lives on the standardized scale described by ``meta``; raw ``X``
    is standardized with the same meta before applying it.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != beta.size:
        raise InvalidInputError(f"X has {X.shape[1]} columns, beta has {beta.size}")
    if meta is None:
        return X @ beta
    return meta.inverse_y(meta.transform_X(X) @ beta)


def selection_counts(kappa, gamma, threshold=1e-6, normalized_spread=False):
    """Count gates numerically switched off / on: ``(n_out, n_in)``."""
    s = gate_values(kappa, gamma, normalized_spread)
    return int(np.sum(s < threshold)), int(np.sum(s > 1.0 - threshold))
