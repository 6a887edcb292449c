"""Exception types shared across the package."""


class GerbilError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(GerbilError):
    """A variable specification or schema file is invalid."""


class DataError(GerbilError):
    """Input data violate their schema (bad cell, unusable column, ...)."""


class PolicyError(GerbilError):
    """A predictor policy is malformed or infeasible for the data."""


class SingularPivotError(GerbilError):
    """A sweep pivot is too close to zero, which usually signals collinear
    predictors; the remedy is to shrink the predictor policy."""

    def __init__(self, column: int, pivot: float):
        self.column = column
        self.pivot = pivot
        super().__init__(
            f"near-zero pivot {pivot:.3e} in column {column}: "
            "predictors appear collinear; drop a predictor from the policy"
        )


class EstimationError(GerbilError):
    """A model fit failed (rank deficiency, separation, non-convergence)."""


class ChainError(GerbilError):
    """An MCMC chain aborted; carries chain/iteration/column context."""

    def __init__(self, message: str, chain: int, iteration: int, column=None):
        self.chain = chain
        self.iteration = iteration
        self.column = column
        where = f"chain {chain}, iteration {iteration}"
        if column is not None:
            where += f", column {column}"
        super().__init__(f"{message} ({where})")
