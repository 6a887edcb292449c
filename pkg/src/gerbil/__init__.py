"""Joint multiple imputation of mixed continuous/binary/ordinal/categorical
data through a latent Gaussian model, plus the synthetic evaluation harness.
"""

__version__ = "0.1.0"

from .data_model import (
    MixedDataset,
    PredictorPolicy,
    VariableSpec,
    default_predictor_policy,
    load_csv,
    read_schema_file,
    save_csv,
    write_schema_file,
)
from .encoding import ExpandedDataset, collapse, expand
from .engine import ImputationConfig, impute, run_chain, truncated_normal
from .errors import GerbilError
from .imputer import GerbilImputer
from .marginal import fit_continuous, fit_cutpoints
from .metrics import ci_covers, fit_linear, fit_logistic, pool, rmse
from .simulation import SimConfig, StudyReport, run_study

__all__ = [
    "__version__",
    "MixedDataset",
    "PredictorPolicy",
    "VariableSpec",
    "default_predictor_policy",
    "load_csv",
    "save_csv",
    "read_schema_file",
    "write_schema_file",
    "ExpandedDataset",
    "expand",
    "collapse",
    "ImputationConfig",
    "impute",
    "run_chain",
    "truncated_normal",
    "GerbilError",
    "GerbilImputer",
    "fit_continuous",
    "fit_cutpoints",
    "pool",
    "ci_covers",
    "rmse",
    "fit_linear",
    "fit_logistic",
    "SimConfig",
    "StudyReport",
    "run_study",
]
