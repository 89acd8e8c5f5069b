"""Synthetic scenarios, CSV ingestion and random train/test splitting."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._errors import CSVParseError, InvalidInputError
from .core import Dataset

__all__ = ["Dataset", "ScenarioConfig", "generate_scenario", "ar1_covariance",
           "load_csv", "save_csv", "split"]

log = logging.getLogger(__name__)

SCENARIOS = ("A", "B", "C")


@dataclass(frozen=True)
class ScenarioConfig:
    """Synthetic regression setup.

    A: AR(1)-correlated features (rho = 0.9), every coefficient equal to 1.
    B: independent features, ``sparsity`` coefficients equal to 10.
    C: AR(1)-correlated features with ``sparsity`` coefficients equal to 10
       placed on a contiguous (hence correlated) block.

    ``rho`` and ``signal`` default per scenario when left as None. ``wide``
    replaces p by ``wide_factor * n_train`` to get an n < p design.
    """

    scenario: str = "A"
    n_train: int = 100
    n_test: int = 1000
    p: int = 80
    sigma: float = 10.0
    rho: float | None = None
    sparsity: int = 10
    signal: float | None = None
    seed: int = 0
    wide: bool = False
    wide_factor: int = 4

    def __post_init__(self):
        object.__setattr__(self, "scenario", str(self.scenario).upper())
        if self.scenario not in SCENARIOS:
            raise InvalidInputError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.n_train < 2 or self.n_test < 1 or self.p < 1:
            raise InvalidInputError("need n_train >= 2, n_test >= 1 and p >= 1")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be non-negative")
        if not 0 <= self.resolved_rho < 1:
            raise InvalidInputError("rho must lie in [0, 1)")
        if self.scenario != "A" and not 0 <= self.sparsity <= self.n_features:
            raise InvalidInputError("sparsity must lie in [0, p]")

    @property
    def n_features(self):
        return self.wide_factor * self.n_train if self.wide else self.p

    @property
    def resolved_rho(self):
        if self.rho is not None:
            return float(self.rho)
        return 0.0 if self.scenario == "B" else 0.9

    @property
    def resolved_signal(self):
        if self.signal is not None:
            return float(self.signal)
        return 1.0 if self.scenario == "A" else 10.0

    def with_(self, **changes):
        return replace(self, **changes)


def ar1_covariance(p, rho):
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _beta_star(cfg):
    p = cfg.n_features
    beta = np.zeros(p)
    if cfg.scenario == "A":
        beta[:] = cfg.resolved_signal
    else:
        beta[: cfg.sparsity] = cfg.resolved_signal
    return beta


def generate_scenario(cfg: ScenarioConfig):
    """Draw ``(train, test, beta_star)`` for one repetition.

    Train and test use disjoint child streams of ``cfg.seed``.
    """
    p = cfg.n_features
    beta = _beta_star(cfg)
    rho = cfg.resolved_rho
    chol = np.linalg.cholesky(ar1_covariance(p, rho)) if rho > 0 else None
    train_ss, test_ss = np.random.SeedSequence(cfg.seed).spawn(2)

    def draw(ss, n, name):
        rng = np.random.default_rng(ss)
        Z = rng.standard_normal((n, p))
        X = Z @ chol.T if chol is not None else Z
        eps = rng.standard_normal(n)
        Y = X @ beta + cfg.sigma * eps
        return Dataset(X, Y, name=name, feature_names=[f"x{j}" for j in range(p)])

    label = f"scenario{cfg.scenario}"
    return (draw(train_ss, cfg.n_train, f"{label}-train"),
            draw(test_ss, cfg.n_test, f"{label}-test"),
            beta)


def load_csv(path, target_column, delimiter=","):
    """Read a headered numeric CSV; the target column becomes Y.

    Rows with an empty cell are dropped and counted in ``Dataset.n_dropped``.
    Row numbers in errors are 1-based data rows (the header is row 0).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such CSV file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CSVParseError(f"{path} is empty") from None
        if target_column not in header:
            raise CSVParseError(f"target column {target_column!r} not in header {header}",
                                column=target_column)
        target = header.index(target_column)
        rows, dropped = [], 0
        for i, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise CSVParseError(f"row {i} has {len(raw)} cells, expected {len(header)}",
                                    row=i)
            if any(not c.strip() for c in raw):
                dropped += 1
                continue
            vals = []
            for j, cell in enumerate(raw):
                try:
                    v = float(cell)
                except ValueError:
                    raise CSVParseError(
                        f"non-numeric cell {cell!r} at row {i}, column {header[j]!r}",
                        row=i, column=header[j]) from None
                if not math.isfinite(v):
                    raise CSVParseError(f"non-finite cell at row {i}, column {header[j]!r}",
                                        row=i, column=header[j])
                vals.append(v)
            rows.append(vals)
    if dropped:
        log.warning("%s: dropped %d row(s) with missing values", path, dropped)
    if not rows:
        raise CSVParseError(f"{path} contains no complete data rows")
    data = np.array(rows, dtype=float)
    features = [h for j, h in enumerate(header) if j != target]
    X = np.delete(data, target, axis=1)
    return Dataset(X, data[:, target], name=path.stem, feature_names=features,
                   n_dropped=dropped)


def save_csv(D: Dataset, path, target_column="y", delimiter=","):
    names = list(D.feature_names) if D.feature_names is not None else [
        f"x{j}" for j in range(D.p)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(names + [target_column])
        for row, y in zip(D.X, D.Y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def split(D: Dataset, test_fraction=0.2, seed=0):
    """Uniform random partition; the test part gets ``round(n * test_fraction)`` rows."""
    if not 0 < test_fraction < 1:
        raise InvalidInputError("test_fraction must lie in (0, 1)")
    n = D.n
    n_test = int(round(n * test_fraction))
    if n_test < 2 or n - n_test < 2:
        raise InvalidInputError(
            f"split of {n} rows at fraction {test_fraction} leaves a part with < 2 rows")
    order = np.random.default_rng(seed).permutation(n)
    test_idx, train_idx = np.sort(order[:n_test]), np.sort(order[n_test:])

    def part(idx, suffix):
        return Dataset(D.X[idx], D.Y[idx], name=f"{D.name}-{suffix}",
                       feature_names=D.feature_names)

    return part(train_idx, "train"), part(test_idx, "test")
