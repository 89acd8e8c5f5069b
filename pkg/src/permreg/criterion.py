"""Permutation-augmented risk and its exact gradient.

For a standardized response ``Y`` (mean 0, unit RMS norm) and a fixed set of
T label permutations, the criterion of a family at ``theta`` is

    f(Y) + (1/T) * sum_t | 1 - f(pi_t(Y)) |,

where ``f(y) = norm2(y - X beta(theta, X, y))`` refits the estimator on every
response it is given. The first term rewards fit; the second penalizes any
fit that beats the intercept-only model on data whose link to X has been
destroyed.

All T + 1 responses share one Cholesky factorization per evaluation, and the
gradient reuses it: each family is a short chain of explicit formulas, so
differentiating through the linear solve by adjoint equations costs one
extra batched triangular solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._errors import ContractViolationError, InvalidInputError, NondifferentiableError
from .core import cholesky_factor, cholesky_solve, norm2
from .estimators import (
    SPARSIFIER_OFFSET,
    Family,
    RegParams,
    fit_family,
    gate_values,
    sigmoid,
)

__all__ = [
    "PermutationSet",
    "CriterionSpec",
    "WorkCounter",
    "Evaluation",
    "make_permutations",
    "evaluate",
    "bkks_value",
    "criterion_gradient",
    "erg_value",
    "sqrt_loss_risk",
    "intercept_design",
]

DEFAULT_GUARD_EPS = 1e-12
STANDARDIZATION_TOL = 1e-6


@dataclass(frozen=True)
class PermutationSet:
    n: int
    seed: int
    perms: np.ndarray  # shape (T, n), each row a permutation of range(n)

    @property
    def T(self):
        return self.perms.shape[0]

    def apply(self, Y):
        """Stack ``[Y, pi_1(Y), ..., pi_T(Y)]`` as columns of an n x (T+1) matrix."""
        Y = np.asarray(Y, dtype=float)
        if Y.shape[0] != self.n:
            raise InvalidInputError(f"permutations are over {self.n} points, Y has {Y.shape[0]}")
        return np.column_stack([Y] + [Y[perm] for perm in self.perms])


def make_permutations(n, T, seed):
    """T uniform permutations of ``range(n)``, reproducible from ``seed``."""
    if n < 2:
        raise InvalidInputError(f"need n >= 2 to permute, got {n}")
    if T < 0:
        raise InvalidInputError(f"T must be non-negative, got {T}")
    rng = np.random.default_rng(seed)
    perms = np.empty((T, n), dtype=np.int64)
    for t in range(T):
        perms[t] = rng.permutation(n)
    perms.setflags(write=False)
    return PermutationSet(n=n, seed=seed, perms=perms)


@dataclass(frozen=True)
class CriterionSpec:
    family: Family
    perms: PermutationSet
    guard_eps: float = DEFAULT_GUARD_EPS
    subgradient: bool = False
    normalized_spread: bool = False

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if not self.guard_eps > 0:
            raise InvalidInputError("guard_eps must be positive")

    @property
    def T(self):
        return self.perms.T


@dataclass
class WorkCounter:
    """Tallies estimator work across evaluations.

    ``fits`` counts family fits, one per response column per evaluation;
    ``adjoint_solves`` counts the matched gradient solves.
    """

    evaluations: int = 0
    fits: int = 0
    adjoint_solves: int = 0
    factorizations: int = 0


@dataclass
class Evaluation:
    value: float
    residual_norms: np.ndarray  # f for [Y, pi_1 Y, ..., pi_T Y]
    gradient: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def _check_standardized(Y):
    r = float(norm2(Y))
    if abs(r - 1.0) > STANDARDIZATION_TOL:
        raise ContractViolationError(
            f"criterion requires a standardized response (norm2(Y) = 1), got {r:.6g}"
        )


def _combine(f, T):
    if T == 0:
        return float(f[0])
    return float(f[0] + np.sum(np.abs(1.0 - f[1:])) / T)


class _RidgeBlock:
    """Ridge fits of every column of ``Yall`` at a shared factorization."""

    def __init__(self, X, lam, Yall, counter):
        p = X.shape[1]
        A = X.T @ X
        A[np.diag_indices(p)] += lam
        self.L = cholesky_factor(A)
        self.B = cholesky_solve(self.L, X.T @ Yall)
        if counter is not None:
            counter.factorizations += 1

    def lam_grad(self, G):
        """Per-column d f / d lam given adjoints ``G`` = d f / d beta."""
        W = cholesky_solve(self.L, G)
        return -np.sum(W * self.B, axis=0)


class _SparseBlock:
    def __init__(self, X, lam, s, Yall, counter):
        self.s = s
        Xs = X * s
        p = X.shape[1]
        A = Xs.T @ Xs
        A[np.diag_indices(p)] += lam
        self.L = cholesky_factor(A)
        self.Bb = cholesky_solve(self.L, Xs.T @ Yall)
        self.B = s[:, None] * self.Bb
        if counter is not None:
            counter.factorizations += 1

    def grads(self, gram, G, XtR):
        """Per-column d f / d lam and d f / d s, given adjoints on beta."""
        s = self.s
        W = cholesky_solve(self.L, s[:, None] * G)
        d_lam = -np.sum(W * self.Bb, axis=0)
        d_s = G * self.Bb + W * XtR - self.Bb * (gram @ (s[:, None] * W))
        return d_lam, d_s


def evaluate(spec: CriterionSpec, theta: RegParams, X, Y, *, gradient=False,
             counter: WorkCounter | None = None, check=True):
    """Criterion value, and optionally its gradient w.r.t. the active components.

    The gradient is over ``theta.to_vector(spec.family)`` in natural
    coordinates (lam, kappa, gamma_1..gamma_p, mu).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise InvalidInputError(f"shape mismatch: X {X.shape}, Y {Y.shape}")
    if check:
        _check_standardized(Y)
    fam = spec.family
    n, p = X.shape
    T = spec.T
    if fam is not Family.RIDGE and theta.gamma.size != p:
        raise InvalidInputError(f"gamma has length {theta.gamma.size}, X has {p} columns")

    Yall = spec.perms.apply(Y)

    ridge = sparse = None
    if fam in (Family.RIDGE, Family.AGGREGATED):
        ridge = _RidgeBlock(X, theta.lam, Yall, counter)
    if fam in (Family.SPARSE, Family.AGGREGATED):
        s = gate_values(theta.kappa, theta.gamma, spec.normalized_spread)
        sparse = _SparseBlock(X, theta.lam, s, Yall, counter)

    if fam is Family.RIDGE:
        B = ridge.B
    elif fam is Family.SPARSE:
        B = sparse.B
    else:
        a = float(sigmoid(theta.mu))
        B = a * ridge.B + (1.0 - a) * sparse.B

    R = Yall - X @ B
    f = np.sqrt(np.mean(R * R, axis=0))
    value = _combine(f, T)
    if counter is not None:
        counter.evaluations += 1
        counter.fits += T + 1
    out = Evaluation(value=value, residual_norms=f)
    if not gradient:
        return out

    eps = spec.guard_eps
    gap = 1.0 - f[1:]
    if not spec.subgradient:
        if np.any(f < eps):
            raise NondifferentiableError(
                f"residual norm {float(f.min()):.3g} below guard {eps:g}: exact interpolation"
            )
        if np.any(np.abs(gap) < eps):
            raise NondifferentiableError(
                "a permuted residual norm equals 1 within the guard; |.| is not differentiable"
            )
    # Column weights of the total derivative: the fit term, then each |1 - f_t| / T.
    c = np.empty(T + 1)
    c[0] = 1.0
    if T:
        sgn = np.sign(gap)
        sgn[np.abs(gap) < eps] = 0.0
        c[1:] = -sgn / T

    XtR = X.T @ R
    safe_f = np.where(f < eps, np.inf, f)
    G = -XtR / (n * safe_f)  # d f / d beta, one column per response

    grads = {}
    if fam is Family.RIDGE:
        grads["lam"] = ridge.lam_grad(G) @ c
    else:
        gram = X.T @ X
        if fam is Family.SPARSE:
            d_lam_s, d_s = sparse.grads(gram, G, XtR)
            d_lam = d_lam_s
        else:
            d_lam_r = ridge.lam_grad(a * G)
            # the implicit derivative of the sparse fit involves its own residual
            XtR_sparse = X.T @ (Yall - X @ sparse.B)
            d_lam_s, d_s = sparse.grads(gram, (1.0 - a) * G, XtR_sparse)
            d_lam = d_lam_r + d_lam_s
            d_mu = a * (1.0 - a) * np.sum(G * (ridge.B - sparse.B), axis=0)
            grads["mu"] = float(d_mu @ c)
        grads["lam"] = d_lam @ c
        s = sparse.s
        u = (d_s * (s * (1.0 - s))[:, None]) @ c  # d criterion / d z
        d = theta.gamma - theta.gamma.mean()
        spread = float(np.sum(d * d))
        spread_scale = 1.0
        if spec.normalized_spread:
            spread /= p
            spread_scale = 1.0 / p
        width = spread + SPARSIFIER_OFFSET
        ud = float(u @ d)
        grads["kappa"] = width * ud
        grads["gamma"] = theta.kappa * (2.0 * spread_scale * d * ud + width * (u - u.mean()))

    if counter is not None:
        counter.adjoint_solves += T + 1

    vec = [np.atleast_1d(float(grads["lam"]))]
    if "kappa" in fam.active:
        vec += [np.atleast_1d(float(grads["kappa"])), np.asarray(grads["gamma"], dtype=float)]
    if "mu" in fam.active:
        vec.append(np.atleast_1d(grads["mu"]))
    out.gradient = np.concatenate(vec)
    return out


def bkks_value(spec: CriterionSpec, theta: RegParams, X, Y, counter=None):
    return evaluate(spec, theta, X, Y, gradient=False, counter=counter).value


def criterion_gradient(spec: CriterionSpec, theta: RegParams, X, Y, counter=None):
    """Exact gradient over the active components, ordered as ``theta.to_vector``."""
    return evaluate(spec, theta, X, Y, gradient=True, counter=counter).gradient


def intercept_design(n, p):
    """The intercept-only design: a column of ones followed by zero columns."""
    X0 = np.zeros((n, p))
    X0[:, 0] = 1.0
    return X0


def erg_value(er, theta, X, Y, perms: PermutationSet):
    """Generic permutation-augmented risk for an arbitrary risk function.

    ``er(X, Y, theta)`` must be deterministic and non-negative. The reference
    risk is that of the intercept-only design on the unpermuted response.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    base = float(er(X, Y, theta))
    if perms.T == 0:
        return base
    ref = float(er(intercept_design(*X.shape), Y, theta))
    total = 0.0
    for perm in perms.perms:
        total += abs(ref - float(er(X, Y[perm], theta)))
    return base + total / perms.T


def sqrt_loss_risk(family, normalized_spread=False):
    """Square-root quadratic risk ``norm2(Y - X beta_family(theta, X, Y))``."""
    family = Family.parse(family)

    def er(X, Y, theta):
        beta = fit_family(family, theta, X, Y, normalized_spread)
        return float(norm2(Y - X @ beta))

    return er
