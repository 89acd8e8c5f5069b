"""Scoring, rank tests, the cross-validated ridge baseline and the benchmark loop."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from functools import lru_cache
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from ._errors import DegenerateDataError, InvalidInputError, PermregError
from .core import Dataset, norm2, standardize
from .data import ScenarioConfig, generate_scenario, split
from .estimators import Family, beta_ridge, predict
from .optim import AdamConfig, train

__all__ = [
    "r2_score",
    "MannWhitneyResult",
    "mann_whitney",
    "exact_u_pvalue",
    "default_lambda_grid",
    "ridge_cv_baseline",
    "MethodScore",
    "BenchmarkReport",
    "run_benchmark",
    "METHODS",
]

log = logging.getLogger(__name__)

METHODS = ("bkk", "sbkk", "abkk", "ridgecv", "ols")
EXACT_MAX_SIZE = 8
SIGNIFICANCE = 0.05


def r2_score(Y_test, Y_pred, conventional=False):
    """Unsquared R^2: ``1 - norm2(Y - Y_pred) / norm2(Y - mean(Y))``.

    With ``conventional=True`` the usual ratio of squared norms is used.
    """
    Y_test = np.asarray(Y_test, dtype=float).ravel()
    Y_pred = np.asarray(Y_pred, dtype=float).ravel()
    if Y_test.shape != Y_pred.shape:
        raise InvalidInputError(f"length mismatch: {Y_test.size} vs {Y_pred.size}")
    spread = float(norm2(Y_test - Y_test.mean()))
    if spread <= 1e-12 * max(1.0, abs(float(Y_test.mean()))):
        raise DegenerateDataError("Y_test is constant; R^2 is undefined")
    ratio = float(norm2(Y_test - Y_pred)) / spread
    return 1.0 - (ratio * ratio if conventional else ratio)


MannWhitneyResult = namedtuple("MannWhitneyResult", ("statistic", "pvalue", "method"))


@lru_cache(maxsize=None)
def _u_counts(u, m, n):
    # number of arrangements of m a's and n b's with exactly u (a > b) pairs
    if u < 0 or u > m * n:
        return 0
    if m == 0 or n == 0:
        return 1 if u == 0 else 0
    return _u_counts(u - n, m - 1, n) + _u_counts(u, m, n - 1)


def exact_u_pvalue(u, m, n):
    """Two-sided exact p-value of U for untied samples of sizes m and n."""
    k = int(math.floor(min(u, m * n - u)))
    tail = sum(_u_counts(i, m, n) for i in range(k + 1))
    return min(1.0, 2.0 * tail / math.comb(m + n, m))


def mann_whitney(a, b, method="auto"):
    """Two-sided Mann-Whitney U test.

    ``statistic`` is U for ``a`` (pairs with a > b, ties counting 1/2).
    ``method`` is "exact", "asymptotic" or "auto"; auto uses the exact null
    distribution when both samples have at most 8 points and there are no
    ties, and the tie-corrected normal approximation with continuity
    correction otherwise.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise InvalidInputError("Mann-Whitney needs two non-empty samples")
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    _, tie_sizes = np.unique(pooled, return_counts=True)
    has_ties = bool(np.any(tie_sizes > 1))

    if method == "auto":
        method = "exact" if (max(n1, n2) <= EXACT_MAX_SIZE and not has_ties) else "asymptotic"
    if method == "exact":
        if has_ties:
            raise InvalidInputError("exact Mann-Whitney p-value requires untied samples")
        return MannWhitneyResult(u, exact_u_pvalue(u, n1, n2), "exact")
    if method != "asymptotic":
        raise InvalidInputError(f"unknown method {method!r}")

    N = n1 + n2
    tie_term = float(np.sum(tie_sizes**3 - tie_sizes)) / (N * (N - 1)) if N > 1 else 0.0
    var = n1 * n2 / 12.0 * ((N + 1) - tie_term)
    if var <= 0:
        return MannWhitneyResult(u, 1.0, "asymptotic")
    big_u = max(u, n1 * n2 - u)
    z = (big_u - n1 * n2 / 2.0 - 0.5) / math.sqrt(var)
    p = min(1.0, math.erfc(max(z, 0.0) / math.sqrt(2.0)))
    return MannWhitneyResult(u, p, "asymptotic")


def default_lambda_grid():
    return np.logspace(-4, 4, 25)


def ridge_cv_baseline(D_train: Dataset, k=5, lambda_grid=None, seed=0, standardize_X=True):
    """k-fold cross-validated ridge over a lambda grid.

    Returns ``(lambda_star, beta, runtime, meta)``; ``beta`` is on the
    standardized scale described by ``meta``.
    """
    start = time.perf_counter()
    grid = np.unique(np.asarray(default_lambda_grid() if lambda_grid is None else lambda_grid,
                                dtype=float))
    if grid.size == 0:
        raise InvalidInputError("lambda grid is empty")
    if np.any(grid <= 0):
        raise InvalidInputError("lambda grid must be positive")
    if k < 2:
        raise InvalidInputError("need at least 2 folds")
    D, meta = standardize(D_train, standardize_X=standardize_X)
    n = D.n
    if n < k:
        raise InvalidInputError(f"{k} folds over {n} rows leaves an empty fold")
    folds = np.array_split(np.random.default_rng(seed).permutation(n), k)

    errors = np.zeros(grid.size)
    for hold in folds:
        mask = np.ones(n, dtype=bool)
        mask[hold] = False
        Xtr, Ytr, Xva, Yva = D.X[mask], D.Y[mask], D.X[hold], D.Y[hold]
        for i, lam in enumerate(grid):
            beta = beta_ridge(lam, Xtr, Ytr)
            errors[i] += float(norm2(Yva - Xva @ beta))
    errors /= k
    lam_star = float(grid[int(np.argmin(errors))])
    beta = beta_ridge(lam_star, D.X, D.Y)
    return lam_star, beta, time.perf_counter() - start, meta


def _ols(D_train, standardize_X=True):
    start = time.perf_counter()
    D, meta = standardize(D_train, standardize_X=standardize_X)
    beta, *_ = np.linalg.lstsq(D.X, D.Y, rcond=None)
    return beta, time.perf_counter() - start, meta


@dataclass
class MethodScore:
    method: str
    r2: float
    runtime: float
    iterations: int | None = None
    sparsity_selected: int | None = None
    r2_conventional: float | None = None


@dataclass
class BenchmarkReport:
    dataset: str
    M: int
    methods: list
    scores: dict  # method -> list of M R^2 values
    runtimes: dict
    iterations: dict
    selected: dict
    mw_scores: dict  # "a|b" -> p-value
    mw_runtimes: dict
    winners_score: list
    winners_runtime: list
    config: dict = field(default_factory=dict)
    scores_conventional: dict | None = None

    def mean_score(self, method):
        return float(np.mean(self.scores[method]))

    def to_dict(self, include_timing=True):
        d = {
            "dataset": self.dataset,
            "M": self.M,
            "methods": list(self.methods),
            "scores": [self.scores[m] for m in self.methods],
            "iterations": [self.iterations[m] for m in self.methods],
            "selected": [self.selected[m] for m in self.methods],
            "mw": dict(self.mw_scores),
            "winners": list(self.winners_score),
            "config": self.config,
        }
        if self.scores_conventional is not None:
            d["scores_conventional"] = [self.scores_conventional[m] for m in self.methods]
        if include_timing:
            # runtimes are wall-clock measurements and vary between otherwise identical runs
            d["timing"] = {
                "runtimes": [self.runtimes[m] for m in self.methods],
                "mw": dict(self.mw_runtimes),
                "winners": list(self.winners_runtime),
            }
        return d

    def to_json(self, include_timing=True):
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=False) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["dataset", "repetition", "method", "r2", "runtime", "iterations", "selected"]
        if self.scores_conventional is not None:
            header.append("r2_conventional")
        w.writerow(header)
        for rep in range(self.M):
            for m in self.methods:
                row = [self.dataset, rep, m, repr(self.scores[m][rep]),
                       repr(self.runtimes[m][rep]),
                       "" if self.iterations[m][rep] is None else self.iterations[m][rep],
                       "" if self.selected[m][rep] is None else self.selected[m][rep]]
                if self.scores_conventional is not None:
                    row.append(repr(self.scores_conventional[m][rep]))
                w.writerow(row)
        return buf.getvalue()

    def write(self, out_dir, stem="report"):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{stem}.json").write_text(self.to_json())
        (out_dir / f"{stem}.csv").write_text(self.to_csv())
        return out_dir / f"{stem}.json", out_dir / f"{stem}.csv"


def _derive_seed(master, *keys):
    return int(np.random.SeedSequence([int(master), *keys]).generate_state(1, np.uint64)[0])


def _fit_method(method, train_set, test_set, seed, opts):
    conventional = opts["conventional_r2"]
    if method in ("bkk", "sbkk", "abkk"):
        res = train(Family.parse(method), train_set.X, train_set.Y, cfg=opts["cfg"],
                    T=opts["T"], seed=seed, standardize_X=opts["standardize_X"],
                    normalized_spread=opts["normalized_spread"])
        pred = res.predict(test_set.X)
        runtime, iters, sel = res.wall_time, res.iterations, res.n_selected
    elif method == "ridgecv":
        _, beta, runtime, meta = ridge_cv_baseline(
            train_set, k=opts["cv_folds"], lambda_grid=opts["lambda_grid"], seed=seed,
            standardize_X=opts["standardize_X"])
        pred = predict(beta, test_set.X, meta)
        iters = sel = None
    elif method == "ols":
        beta, runtime, meta = _ols(train_set, opts["standardize_X"])
        pred = predict(beta, test_set.X, meta)
        iters = sel = None
    else:
        raise InvalidInputError(f"unknown method {method!r}; choose from {METHODS}")
    return MethodScore(
        method=method,
        r2=r2_score(test_set.Y, pred),
        runtime=float(runtime),
        iterations=iters,
        sparsity_selected=sel,
        r2_conventional=r2_score(test_set.Y, pred, conventional=True) if conventional else None,
    )


def _run_repetition(args):
    rep, methods, source, master_seed, opts = args
    data_seed = _derive_seed(master_seed, rep, 0)
    fit_seed = _derive_seed(master_seed, rep, 1)
    if isinstance(source, ScenarioConfig):
        train_set, test_set, _ = generate_scenario(source.with_(seed=data_seed))
    else:
        train_set, test_set = split(source, opts["test_fraction"], data_seed)
    out = []
    for method in methods:
        try:
            out.append(_fit_method(method, train_set, test_set, fit_seed, opts))
        except PermregError as exc:
            raise PermregError(f"method {method!r}, repetition {rep}: {exc}") from exc
    return out


def _winners(samples, higher_is_better):
    means = {m: float(np.mean(v)) for m, v in samples.items()}
    best = (max if higher_is_better else min)(means, key=means.get)
    winners = [best]
    for m, v in samples.items():
        if m != best and mann_whitney(samples[best], v).pvalue >= SIGNIFICANCE:
            winners.append(m)
    return [m for m in samples if m in winners]


def _jsonable(obj):
    if is_dataclass(obj):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def run_benchmark(methods, source, M=100, seed=0, *, T=30, cfg: AdamConfig | None = None,
                  cv_folds=5, lambda_grid=None, test_fraction=0.2, standardize_X=True,
                  normalized_spread=False, conventional_r2=False, jobs=1, name=None):
    """Fit every method on M fresh train/test pairs and compare them.

    ``source`` is a ScenarioConfig (a new draw per repetition) or a Dataset
    (a new random split per repetition). Everything except wall-clock
    runtimes is a deterministic function of ``seed``.
    """
    methods = list(dict.fromkeys(m.lower() for m in methods))
    for m in methods:
        if m not in METHODS:
            raise InvalidInputError(f"unknown method {m!r}; choose from {METHODS}")
    if M < 2:
        raise InvalidInputError("M must be at least 2 for the Mann-Whitney comparison")
    cfg = cfg or AdamConfig()
    grid = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, float)
    opts = dict(cfg=cfg, T=T, cv_folds=cv_folds, lambda_grid=grid,
                test_fraction=test_fraction, standardize_X=standardize_X,
                normalized_spread=normalized_spread, conventional_r2=conventional_r2)
    tasks = [(rep, methods, source, seed, opts) for rep in range(M)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_repetition, tasks))
    else:
        results = [_run_repetition(t) for t in tasks]

    scores = {m: [] for m in methods}
    runtimes = {m: [] for m in methods}
    iterations = {m: [] for m in methods}
    selected = {m: [] for m in methods}
    conv = {m: [] for m in methods} if conventional_r2 else None
    for rep_scores in results:
        for s in rep_scores:
            scores[s.method].append(s.r2)
            runtimes[s.method].append(s.runtime)
            iterations[s.method].append(s.iterations)
            selected[s.method].append(s.sparsity_selected)
            if conv is not None:
                conv[s.method].append(s.r2_conventional)

    mw_scores, mw_runtimes = {}, {}
    for a, b in combinations(methods, 2):
        mw_scores[f"{a}|{b}"] = mann_whitney(scores[a], scores[b]).pvalue
        mw_runtimes[f"{a}|{b}"] = mann_whitney(runtimes[a], runtimes[b]).pvalue

    if name is None:
        name = (f"scenario{source.scenario}" if isinstance(source, ScenarioConfig)
                else source.name)
    config = {
        "seed": int(seed), "T": int(T), "adam": _jsonable(cfg), "cv_folds": int(cv_folds),
        "lambda_grid": _jsonable(grid), "standardize_X": standardize_X,
        "normalized_spread": normalized_spread,
        "source": _jsonable(source) if isinstance(source, ScenarioConfig)
        else {"dataset": source.name, "n": source.n, "p": source.p,
              "test_fraction": test_fraction},
    }
    return BenchmarkReport(
        dataset=name, M=M, methods=methods, scores=scores, runtimes=runtimes,
        iterations=iterations, selected=selected, mw_scores=mw_scores,
        mw_runtimes=mw_runtimes, winners_score=_winners(scores, True),
        winners_runtime=_winners(runtimes, False), config=config,
        scores_conventional=conv,
    )
