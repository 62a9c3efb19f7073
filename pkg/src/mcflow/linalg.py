"""Dense LU with row/column equilibration and a relative pivot floor."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass
class Factorization:
    lu: np.ndarray
    piv: np.ndarray
    row_scale: np.ndarray
    col_scale: np.ndarray
    pivot_ratio: float
    singular: bool

    @property
    def condition_estimate(self) -> float:
        return np.inf if self.pivot_ratio == 0 else 1.0 / self.pivot_ratio

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.singular:
            raise np.linalg.LinAlgError("matrix is singular to working precision")
        if len(rhs) == 0:
            return np.zeros(0)
        y = scipy.linalg.lu_solve((self.lu, self.piv), self.row_scale * rhs)
        return self.col_scale * y


def _inverse_max(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(np.abs(a), axis=axis) if a.size else np.zeros(a.shape[1 - axis])
    return np.where(m > 0, 1.0 / np.where(m > 0, m, 1.0), 1.0)


def factorize(J: np.ndarray, min_pivot: float = 1e-12) -> Factorization:
    """LU-factorize ``J`` after scaling rows, then columns, to unit max-norm.

    The matrix counts as singular when the smallest pivot magnitude falls
    below ``min_pivot`` times the largest one.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {J.shape}")
    if J.shape[0] == 0:
        return Factorization(J, np.zeros(0, dtype=int), np.ones(0), np.ones(0), 1.0, False)
    r = _inverse_max(J, axis=1)
    A = r[:, None] * J
    c = _inverse_max(A, axis=0)
    A = A * c[None, :]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    d = np.abs(np.diag(lu))
    ratio = float(d.min() / d.max()) if d.max() > 0 else 0.0
    return Factorization(lu, piv, r, c, ratio, ratio < min_pivot)
