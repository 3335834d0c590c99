"""Poisson log-likelihoods for shifted-log factor models.

A model predicts counts through lambda_ij = c_i * expm1(b_ij / alpha_i) with
b = L F^T, c_i = c * s_i, alpha_i = max(1, c_i). The exact objective drops the
data-only constant sum_i (rowsum_i * log c_i + m * c_i) unless asked to restore
it; the approximate objective replaces the dense exp term with a quadratic so
that only stored entries and K x K grams are touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .countmat import CountMatrix
from .quadapprox import QuadApprox


def _as_matrix(a, name):
    out = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if out.ndim != 2:
        raise ValueError("%s must be 2-d" % name)
    if not np.all(np.isfinite(out)):
        raise ValueError("%s contains non-finite entries" % name)
    if np.any(out < 0):
        raise ValueError("%s contains negative entries" % name)
    return out


@dataclass
class FactorModel:
    """Non-negative loadings L (n x K), factors F (m x K), shift c, size factors s."""

    L: np.ndarray
    F: np.ndarray
    c: float
    s: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.L = _as_matrix(self.L, "L")
        self.F = _as_matrix(self.F, "F")
        if self.L.shape[1] != self.F.shape[1]:
            raise ValueError(
                "rank mismatch: L has %d columns, F has %d"
                % (self.L.shape[1], self.F.shape[1])
            )
        self.c = float(self.c)
        if not np.isfinite(self.c) or self.c <= 0:
            raise ValueError("c must be a finite positive number")
        if self.s is None:
            self.s = np.ones(self.L.shape[0], dtype=np.float64)
        else:
            self.s = np.ascontiguousarray(np.asarray(self.s, dtype=np.float64))
            if self.s.shape != (self.L.shape[0],):
                raise ValueError("s must have one entry per row of L")
            if not np.all(np.isfinite(self.s)) or np.any(self.s <= 0):
                raise ValueError("size factors must be finite and positive")

    @property
    def rank(self) -> int:
        return int(self.L.shape[1])

    def c_per_row(self):
        return self.c * self.s

    def alpha_per_row(self):
        return np.maximum(1.0, self.c_per_row())


def _check_shapes(Y: CountMatrix, model: FactorModel):
    if Y.shape != (model.L.shape[0], model.F.shape[0]):
        raise ValueError(
            "matrix is %d x %d but model predicts %d x %d"
            % (Y.n_rows, Y.n_cols, model.L.shape[0], model.F.shape[0])
        )


def data_constant(Y: CountMatrix, model: FactorModel) -> float:
    """sum_i (rowsum_i * log c_i + m * c_i); depends on the data and c only."""
    _check_shapes(Y, model)
    c_row = model.c_per_row()
    return float(Y.row_sums() @ np.log(c_row) + Y.n_cols * c_row.sum())


def exact_loglik(Y: CountMatrix, model: FactorModel, include_constants: bool = False) -> float:
    """Poisson log-likelihood of the model, up to the log(y!) terms.

    With include_constants=False the data-only constant is dropped, which is
    the quantity the fitter maximizes. Overflow (lambda too large to represent)
    yields -inf rather than nan.
    """
    _check_shapes(Y, model)
    c_row = model.c_per_row()
    per_row = backend.kernels.exact_loglik_rows(
        model.L, model.F, Y.row_ptr, Y.row_idx, Y.row_val_f, c_row
    )
    total = float(np.sum(per_row))
    if include_constants:
        total += data_constant(Y, model)
    if np.isnan(total):
        return float("-inf")
    return total


def identity_loglik(Y: CountMatrix, L, F, s=None) -> float:
    """Poisson log-likelihood (minus log(y!) terms) for lambda = s_i (L F^T)_ij.

    The linear-rate analogue for comparing against classical factorizations;
    a zero rate under a positive count gives -inf.
    """
    L = _as_matrix(L, "L")
    F = _as_matrix(F, "F")
    if L.shape[1] != F.shape[1]:
        raise ValueError("rank mismatch between L and F")
    if Y.shape != (L.shape[0], F.shape[0]):
        raise ValueError("matrix shape does not match factors")
    if s is None:
        s = np.ones(L.shape[0], dtype=np.float64)
    else:
        s = np.asarray(s, dtype=np.float64)
    rows = Y.nz_rows()
    lam_nz = s[rows] * np.einsum("ij,ij->i", L[rows], F[Y.row_idx])
    with np.errstate(divide="ignore"):
        pos = float(Y.row_val_f @ np.log(lam_nz))
    total_rate = float(s @ (L @ F.sum(axis=0)))
    out = pos - total_rate
    if np.isnan(out):
        return float("-inf")
    return out


def approx_loglik(Y: CountMatrix, model: FactorModel, quad: QuadApprox) -> float:
    """Exact objective with the dense exp sum replaced by quad's quadratic.

    Stored entries keep their exact terms; the quadratic's constant coefficient
    drops out (it does not depend on the factors). Touches O(nnz * K) memory
    plus K x K grams instead of the dense n x m product.
    """
    _check_shapes(Y, model)
    c_row = model.c_per_row()
    a_row = np.maximum(1.0, c_row)
    per_row = backend.kernels.approx_nz_rows(
        model.L, model.F, Y.row_ptr, Y.row_idx, Y.row_val_f, c_row,
        quad.eta1, quad.eta2,
    )
    w1 = c_row / a_row
    w2 = c_row / (a_row * a_row)
    S_F = model.F.sum(axis=0)
    G_F = model.F.T @ model.F
    M = model.L.T @ (model.L * w2[:, None])
    total = (
        float(np.sum(per_row))
        - quad.eta1 * float((w1 @ model.L) @ S_F)
        - quad.eta2 * float(np.sum(G_F * M))
    )
    if np.isnan(total):
        return float("-inf")
    return total
