"""Finite-difference verification of the analytic criterion gradient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, standardize
from .criterion import CriterionSpec, evaluate, make_permutations
from .estimators import Family, RegParams

__all__ = ["GradcheckRow", "random_instance", "random_theta", "central_difference",
           "relative_errors", "check_gradients", "GRADCHECK_TOL"]

GRADCHECK_TOL = 1e-3
REL_FLOOR = 1e-6  # components smaller than this are compared in absolute terms


@dataclass
class GradcheckRow:
    draw: int
    names: list
    analytic: np.ndarray
    numeric: np.ndarray
    rel_error: np.ndarray
    skipped: bool = False

    @property
    def worst(self):
        return float(np.max(self.rel_error)) if self.rel_error.size else 0.0


def random_instance(n=30, p=6, seed=0):
    """A standardized (X, Y) pair with a linear signal plus noise."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    Y = X @ rng.standard_normal(p) + rng.standard_normal(n)
    D, _ = standardize(Dataset(X, Y))
    return D.X, D.Y


def random_theta(p, rng):
    return RegParams(
        lam=float(10 ** rng.uniform(-1, 2)),
        kappa=float(10 ** rng.uniform(-1.3, 0.3)),
        gamma=rng.standard_normal(p),
        mu=float(rng.normal(0.0, 2.0)),
    )


def central_difference(spec, theta, X, Y):
    """Central differences with step ``1e-5 * (1 + |theta_i|)`` per component."""
    fam = spec.family
    vec = theta.to_vector(fam)
    out = np.empty_like(vec)
    for i in range(vec.size):
        h = 1e-5 * (1.0 + abs(vec[i]))
        up, dn = vec.copy(), vec.copy()
        up[i] += h
        dn[i] -= h
        f_up = evaluate(spec, theta.from_vector(fam, up), X, Y).value
        f_dn = evaluate(spec, theta.from_vector(fam, dn), X, Y).value
        out[i] = (f_up - f_dn) / (2.0 * h)
    return out


def relative_errors(analytic, numeric):
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return np.abs(analytic - numeric) / scale


def check_gradients(family, draws=20, seed=0, n=30, p=6, T=30, corrupt=None):
    """Compare analytic and numeric gradients at ``draws`` random points.

    Draws within ``10 * guard_eps`` of a kink are marked skipped. ``corrupt``
    is an optional callable applied to the analytic gradient (negative
    control for the checker itself).
    """
    family = Family.parse(family)
    X, Y = random_instance(n, p, seed)
    spec = CriterionSpec(family, make_permutations(n, T, seed + 1))
    rng = np.random.default_rng([seed, 2])
    rows = []
    for k in range(draws):
        theta = random_theta(p, rng)
        names = theta.component_names(family)
        ev = evaluate(spec, theta, X, Y)
        margin = 10 * spec.guard_eps
        near_kink = ev.residual_norms.min() < margin or (
            T > 0 and np.abs(1.0 - ev.residual_norms[1:]).min() < margin)
        if near_kink:
            empty = np.zeros(0)
            rows.append(GradcheckRow(k, names, empty, empty, empty, skipped=True))
            continue
        analytic = evaluate(spec, theta, X, Y, gradient=True).gradient
        if corrupt is not None:
            analytic = corrupt(analytic)
        numeric = central_difference(spec, theta, X, Y)
        rows.append(GradcheckRow(k, names, analytic, numeric,
                                 relative_errors(analytic, numeric)))
    return rows
