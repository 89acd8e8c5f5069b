"""ADAM training of the regularization bundle on the permutation criterion.

lam and kappa are optimized through their logarithms so they stay positive
without projection; gamma and mu are updated directly.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._errors import DivergedError, InvalidInputError, NondifferentiableError
from .core import Dataset, StandardizationMeta, standardize
from .criterion import CriterionSpec, WorkCounter, evaluate, make_permutations
from .estimators import Family, RegParams, fit_family, predict, selection_counts

__all__ = [
    "AdamConfig",
    "AdamState",
    "FitResult",
    "adam_step",
    "perturb_retry",
    "train",
    "MAX_RETRIES",
]

log = logging.getLogger(__name__)

MAX_RETRIES = 5
PERTURB_SCALE = 1e-6
STOPPING_RULES = ("value", "gradient", "step")


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.5
    beta1: float = 0.5
    beta2: float = 0.9
    eps: float = 1e-8
    max_iter: int = 1000
    tolerance: float = 1e-4
    stopping: str = "value"  # "gradient" and "step" are experimental alternatives

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidInputError("beta1 and beta2 must lie in [0, 1)")
        if not self.tolerance > 0:
            raise InvalidInputError("tolerance must be positive")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be at least 1")
        if self.stopping not in STOPPING_RULES:
            raise InvalidInputError(f"stopping must be one of {STOPPING_RULES}")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros(dim), np.zeros(dim))


def adam_step(state: AdamState, grad, cfg: AdamConfig, t: int):
    """One bias-corrected ADAM update. Returns ``(new_state, delta)``."""
    grad = np.asarray(grad, dtype=float)
    if t < 1:
        raise InvalidInputError(f"step index must be >= 1, got {t}")
    if grad.shape != state.m.shape:
        raise InvalidInputError(f"gradient shape {grad.shape} != state shape {state.m.shape}")
    if not np.all(np.isfinite(grad)):
        raise DivergedError("non-finite gradient")
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    delta = -cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return AdamState(m, v), delta


def perturb_retry(theta: RegParams, family, attempt: int, seed: int) -> RegParams:
    """Jitter every active component by a relative factor ``1 + u * 1e-6``.

    ``u`` is uniform on [-1, 1] and drawn from a stream keyed on
    ``(seed, attempt)``, so the result is reproducible.
    """
    if attempt > MAX_RETRIES:
        raise DivergedError(f"still at a nondifferentiable point after {MAX_RETRIES} retries")
    family = Family.parse(family)
    vec = theta.to_vector(family)
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 0x5EED, int(attempt)])
    u = rng.uniform(-1.0, 1.0, size=vec.size)
    return theta.from_vector(family, vec * (1.0 + u * PERTURB_SCALE))


# Optimizer coordinates: log(lam), log(kappa), gamma, mu.
def _to_internal(theta, family):
    x = theta.to_vector(family)
    x[0] = math.log(x[0])
    if "kappa" in family.active:
        x[1] = math.log(x[1])
    return x


def _from_internal(x, template, family):
    nat = np.array(x, dtype=float)
    nat[0] = math.exp(nat[0])
    if "kappa" in family.active:
        nat[1] = math.exp(nat[1])
    return template.from_vector(family, nat)


def _internal_grad(grad, theta, family):
    g = np.array(grad, dtype=float)
    g[0] *= theta.lam
    if "kappa" in family.active:
        g[1] *= theta.kappa
    return g


@dataclass
class FitResult:
    family: Family
    theta_hat: RegParams
    beta_hat: np.ndarray
    criterion_trace: list
    iterations: int
    converged: bool
    wall_time: float
    seed: int
    T: int
    meta: StandardizationMeta
    work: WorkCounter = field(default_factory=WorkCounter)
    retries: int = 0
    normalized_spread: bool = False

    def predict(self, X):
        """Predictions on the original response scale for raw features ``X``."""
        return predict(self.beta_hat, X, self.meta)

    @property
    def n_selected(self):
        """Number of features whose gate is not numerically closed (None for ridge)."""
        if self.family is Family.RIDGE:
            return None
        n_out, _ = selection_counts(self.theta_hat.kappa, self.theta_hat.gamma,
                                    normalized_spread=self.normalized_spread)
        return self.beta_hat.size - n_out

    def to_dict(self, include_timing=True):
        d = {
            "family": self.family.value,
            "theta_hat": self.theta_hat.to_dict(),
            "beta_hat": self.beta_hat.tolist(),
            "criterion_trace": [float(v) for v in self.criterion_trace],
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "T": self.T,
            "retries": self.retries,
            "n_selected": self.n_selected,
            "work": {
                "evaluations": self.work.evaluations,
                "fits": self.work.fits,
                "adjoint_solves": self.work.adjoint_solves,
                "factorizations": self.work.factorizations,
            },
            "standardization": self.meta.to_dict(),
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


def _converged(cfg, trace, delta, grad):
    if cfg.stopping == "value":
        return abs(trace[-1] - trace[-2]) < cfg.tolerance
    if cfg.stopping == "gradient":
        return float(np.linalg.norm(grad)) < cfg.tolerance
    return float(np.max(np.abs(delta))) < cfg.tolerance


def train(family, X, Y, cfg: AdamConfig | None = None, T: int = 30, seed: int = 0, *,
          init: RegParams | None = None, standardize_X: bool = True,
          normalized_spread: bool = False, subgradient: bool = False) -> FitResult:
    """Fit ``family`` by minimizing the permutation criterion with ADAM.

    ``X`` and ``Y`` are on their raw scale; they are standardized internally
    and the returned ``beta_hat`` lives on the standardized scale, with
    ``meta`` attached for predictions.
    """
    family = Family.parse(family)
    cfg = cfg or AdamConfig()
    start = time.perf_counter()

    D, meta = standardize(Dataset(X, Y), standardize_X=standardize_X)
    Xs, Ys = D.X, D.Y
    n, p = Xs.shape
    perms = make_permutations(n, T, seed)
    spec = CriterionSpec(family, perms, subgradient=subgradient,
                         normalized_spread=normalized_spread)
    theta = init if init is not None else RegParams.initial(p)
    if theta.gamma.size != p:
        theta = theta.with_(gamma=np.zeros(p))
    counter = WorkCounter()
    retries = 0

    def value_and_grad(th):
        nonlocal retries
        attempt = 0
        while True:
            try:
                ev = evaluate(spec, th, Xs, Ys, gradient=True, counter=counter)
                break
            except NondifferentiableError as exc:
                attempt += 1
                retries += 1
                log.debug("nondifferentiable point (%s); perturbing, attempt %d", exc, attempt)
                th = perturb_retry(th, family, attempt, seed)
        if not (math.isfinite(ev.value) and np.all(np.isfinite(ev.gradient))):
            raise DivergedError(f"non-finite criterion at {th}")
        return th, ev.value, ev.gradient

    theta, value, grad = value_and_grad(theta)
    trace = [value]
    state = AdamState.zeros(grad.size)
    x = _to_internal(theta, family)
    converged = False
    k = 0
    while k < cfg.max_iter:
        k += 1
        state, delta = adam_step(state, _internal_grad(grad, theta, family), cfg, k)
        x = x + delta
        if not np.all(np.isfinite(x)) or x[0] > 700 or x[0] < -700:
            raise DivergedError(f"parameters left the representable range at iteration {k}")
        theta, value, grad = value_and_grad(_from_internal(x, theta, family))
        x = _to_internal(theta, family)
        trace.append(value)
        if _converged(cfg, trace, delta, grad):
            converged = True
            break

    beta = fit_family(family, theta, Xs, Ys, normalized_spread)
    return FitResult(
        family=family,
        theta_hat=theta,
        beta_hat=np.asarray(beta, dtype=float),
        criterion_trace=trace,
        iterations=k,
        converged=converged,
        wall_time=time.perf_counter() - start,
        seed=seed,
        T=T,
        meta=meta,
        work=counter,
        retries=retries,
        normalized_spread=normalized_spread,
    )
