"""Symmetric sweep and reverse-sweep operators plus regression extraction.

Sweeping column ``k`` of a symmetric matrix performs one step of in-place
Gaussian elimination on the pivot ``(k, k)``.  The sign convention is fixed
so that sweeping every column of a positive-definite matrix yields the
negated inverse; under that convention, sweeping the predictor columns of a
cross-product matrix leaves the least-squares coefficients, the residual sum
of squares, and the negated ``(X'X)^{-1}`` block sitting in the matrix.
Columns may be swept in any order, and the reverse sweep undoes a sweep
exactly, which is what makes one pass over the columns serve every
regression at once.
"""

from __future__ import annotations

import numpy as np

from .errors import EstimationError, SingularPivotError

__all__ = ["SymMatrix", "extract_regression", "cholesky_lower", "PIVOT_TOL"]

PIVOT_TOL = 1e-12


class SymMatrix:
    """Dense symmetric matrix with per-column sweep state.

    Operations mutate the instance and return it, so calls chain; use
    :meth:`copy` to keep the original.  Instances own their storage and hold
    no global state.
    """

    def __init__(self, values, copy: bool = True):
        a = np.array(values, dtype=float, copy=copy)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("need a square matrix")
        scale = np.abs(a).max()
        if scale > 0 and np.abs(a - a.T).max() > 1e-12 * scale:
            raise ValueError("matrix is not symmetric")
        self.values = a
        self.swept = np.zeros(a.shape[0], dtype=bool)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def swept_columns(self) -> np.ndarray:
        return np.flatnonzero(self.swept)

    def copy(self) -> "SymMatrix":
        out = SymMatrix.__new__(SymMatrix)
        out.values = self.values.copy()
        out.swept = self.swept.copy()
        return out

    def _pivot(self, k: int) -> float:
        d = self.values[k, k]
        if abs(d) <= PIVOT_TOL:
            raise SingularPivotError(k, d)
        return d

    def sweep(self, k: int) -> "SymMatrix":
        """Sweep column ``k`` in; fails on a near-zero pivot or a re-sweep."""
        if self.swept[k]:
            raise ValueError(f"column {k} is already swept")
        d = self._pivot(k)
        a = self.values
        col = a[:, k].copy()
        a -= np.outer(col, col) / d
        a[k, :] = col / d
        a[:, k] = col / d
        a[k, k] = -1.0 / d
        self.swept[k] = True
        return self

    def reverse_sweep(self, k: int) -> "SymMatrix":
        """Sweep column ``k`` back out; the exact algebraic inverse of sweep."""
        if not self.swept[k]:
            raise ValueError(f"column {k} is not swept")
        d = self._pivot(k)
        a = self.values
        col = a[:, k].copy()
        a -= np.outer(col, col) / d
        a[k, :] = -col / d
        a[:, k] = -col / d
        a[k, k] = -1.0 / d
        self.swept[k] = False
        return self

    def sweep_all(self) -> "SymMatrix":
        for k in range(self.dim):
            if not self.swept[k]:
                self.sweep(k)
        return self


def extract_regression(b: SymMatrix, target: int, n: int, predictors=None):
    """Read one regression off a cross-product matrix swept on its predictors.

    ``b`` must be the cross-product matrix of the full column set with
    exactly the predictor columns of ``target`` swept in.  Returns the
    coefficient vector (ordered as the swept columns), the residual variance
    ``rss / (n - kappa)``, and ``(X'X)^{-1}`` for the swept predictor block.
    ``predictors`` may pass the swept column indices when the caller already
    has them.
    """
    if b.swept[target]:
        raise ValueError(f"target column {target} must not be swept")
    pred = b.swept_columns if predictors is None else predictors
    kappa = len(pred)
    if n - kappa <= 0:
        raise EstimationError(
            f"{kappa} regression parameters with only {n} cases leaves no "
            "residual degrees of freedom"
        )
    beta = b.values[pred, target].copy()
    rss = max(b.values[target, target], 0.0)
    s2 = rss / (n - kappa)
    xtx_inv = -b.values[np.ix_(pred, pred)]
    return beta, s2, xtx_inv


def cholesky_lower(a) -> np.ndarray:
    """Lower-triangular factor ``L`` with ``L @ L.T`` equal to ``a``."""
    try:
        return np.linalg.cholesky(np.asarray(a, dtype=float))
    except np.linalg.LinAlgError:
        raise EstimationError("matrix is not positive definite") from None
