"""Validation-free tuning of regularized linear regression.

Ridge, gated sparse-ridge and aggregated estimators are fitted by running
ADAM on a permutation-augmented empirical risk over the training set alone.
"""
from ._errors import (
    ContractViolationError,
    CSVParseError,
    DegenerateDataError,
    DivergedError,
    InvalidInputError,
    NondifferentiableError,
    NumericalError,
    PermregError,
)
from .core import Dataset, StandardizationMeta, norm2, ridge_solve, standardize
from .criterion import (
    CriterionSpec,
    PermutationSet,
    WorkCounter,
    bkks_value,
    criterion_gradient,
    erg_value,
    evaluate,
    make_permutations,
    sqrt_loss_risk,
)
from .data import ScenarioConfig, generate_scenario, load_csv, split
from .estimators import (
    Family,
    RegParams,
    beta_aggregated,
    beta_ridge,
    beta_sparse,
    fit_family,
    predict,
    selection_counts,
    sparsifier,
)
from .evaluation import (
    BenchmarkReport,
    mann_whitney,
    r2_score,
    ridge_cv_baseline,
    run_benchmark,
)
from .optim import AdamConfig, FitResult, adam_step, perturb_retry, train

__version__ = "0.1.0"
