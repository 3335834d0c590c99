"""Non-negative Poisson regression with the shifted-log link.

One problem: counts y_t ~ Poisson(c * expm1(x_t . beta / alpha)) with
alpha = max(1, c) and beta >= 0. Solved by cyclic coordinate ascent, one
projected Newton step per coordinate per cycle with step-halving. The
approximate variant replaces the dense exp sum with a quadratic so zero-count
observations enter only through X's column sums and X^T X.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .quadapprox import QuadApprox


@dataclass(frozen=True)
class Gram:
    """Design summaries reused across solves: column sums of X and X^T X.

    The eta1 weighting of the linear part is applied at use, so one Gram
    serves any quadratic coefficients.
    """

    colsum: np.ndarray
    xtx: np.ndarray


def precompute_gram(X) -> Gram:
    X = np.asarray(X, dtype=np.float64)
    return Gram(colsum=X.sum(axis=0), xtx=X.T @ X)


@dataclass
class RegressionProblem:
    """Design X (N x q, non-negative), integer counts y (N,), scalar c_eff > 0.

    c_eff is the shift already scaled by any size factor. zero_set and the
    nonzero view are derived; gram is optional and validated against X.
    """

    X: np.ndarray
    y: np.ndarray
    c_eff: float
    gram: Gram | None = None
    zero_set: np.ndarray = field(init=False)
    nz_idx: np.ndarray = field(init=False)
    nz_val: np.ndarray = field(init=False)

    def __post_init__(self):
        self.X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        if self.X.ndim != 2 or self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise ValueError("X must be a non-empty 2-d design")
        if not np.all(np.isfinite(self.X)) or np.any(self.X < 0):
            raise ValueError("X must be finite and non-negative")
        y = np.asarray(self.y)
        yf = np.asarray(y, dtype=np.float64)
        if yf.ndim != 1 or yf.shape[0] != self.X.shape[0]:
            raise ValueError("y must be 1-d with one entry per row of X")
        if np.any(yf < 0) or np.any(yf != np.floor(yf)):
            raise ValueError("y must hold non-negative integers")
        self.y = y.astype(np.int64)
        self.c_eff = float(self.c_eff)
        if not np.isfinite(self.c_eff) or self.c_eff <= 0:
            raise ValueError("c_eff must be a finite positive scalar")
        self.zero_set = np.flatnonzero(self.y == 0).astype(np.int64)
        self.nz_idx = np.flatnonzero(self.y > 0).astype(np.int64)
        self.nz_val = self.y[self.nz_idx].astype(np.float64)
        if self.gram is not None:
            if self.gram.colsum.shape != (self.n_coef,) or self.gram.xtx.shape != (
                self.n_coef,
                self.n_coef,
            ):
                raise ValueError("gram shapes do not match the design")

    @property
    def n_obs(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_coef(self) -> int:
        return int(self.X.shape[1])

    @property
    def alpha(self) -> float:
        return max(1.0, self.c_eff)

    def with_gram(self) -> "RegressionProblem":
        if self.gram is not None:
            return self
        return RegressionProblem(self.X, self.y, self.c_eff, gram=precompute_gram(self.X))


def _check_beta(P: RegressionProblem, beta) -> np.ndarray:
    b = np.ascontiguousarray(np.asarray(beta, dtype=np.float64))
    if b.shape != (P.n_coef,):
        raise ValueError("beta must have one entry per design column")
    if not np.all(np.isfinite(b)) or np.any(b < 0):
        raise ValueError("beta must be finite and non-negative")
    return b


def reg_loglik(P: RegressionProblem, beta) -> float:
    """Objective with data-only constants dropped:
    sum_nz y log(expm1(b/alpha)) - c * sum_all exp(b/alpha).

    A zero linear predictor under a positive count yields -inf.
    """
    beta = _check_beta(P, beta)
    z = (P.X @ beta) / P.alpha
    total = -P.c_eff * float(np.sum(np.exp(z)))
    with np.errstate(divide="ignore"):
        total += float(P.nz_val @ np.log(np.expm1(z[P.nz_idx])))
    if np.isnan(total):
        return float("-inf")
    return total


def reg_loglik_approx(P: RegressionProblem, quad: QuadApprox, beta) -> float:
    """Objective with exp replaced by quad's quadratic at zero-count rows.

    Nonzero rows keep their exact terms; the quadratic's constant coefficient
    is dropped (independent of beta).
    """
    beta = _check_beta(P, beta)
    c, a = P.c_eff, P.alpha
    b = P.X @ beta
    z = b / a
    bn = b[P.nz_idx]
    zn = z[P.nz_idx]
    with np.errstate(divide="ignore"):
        total = float(P.nz_val @ np.log(np.expm1(zn)))
    total -= c * float(np.sum(np.exp(zn)))
    total += (c * quad.eta1 / a) * float(np.sum(bn))
    total += (c * quad.eta2 / (a * a)) * float(bn @ bn)
    total -= quad.eta1 * (c / a) * float(np.sum(b))
    total -= quad.eta2 * (c / (a * a)) * float(b @ b)
    if np.isnan(total):
        return float("-inf")
    return total


def coordinate_derivatives(P: RegressionProblem, beta, j: int, quad: QuadApprox | None = None):
    """Analytic (gradient, second derivative) of the objective in beta_j.

    With quad=None these are the exact objective's partials; otherwise the
    approximate objective's. The second derivative is <= 0 on the domain.
    Boundary evaluations (zero predictor under a positive count) propagate
    inf sentinels rather than raising.
    """
    beta = _check_beta(P, beta)
    if not 0 <= j < P.n_coef:
        raise IndexError("coordinate out of range")
    c, a = P.c_eff, P.alpha
    b = P.X @ beta
    z = b / a
    xj = P.X[:, j]
    idx, v = P.nz_idx, P.nz_val
    xn = xj[idx]
    En = np.exp(z[idx])
    with np.errstate(divide="ignore"):
        ratio = En / np.expm1(z[idx])
    g = float((v * xn / a) @ ratio)
    h = -float((v * xn * xn / (a * a)) @ (ratio * ratio / En))
    if quad is None:
        E = np.exp(z)
        g -= (c / a) * float(xj @ E)
        h -= (c / (a * a)) * float((xj * xj) @ E)
        return g, h
    # Approximate objective: exp terms stay exact only at nonzero rows; the
    # quadratic covers every row through colsum and X^T X.
    e1, e2 = quad.eta1, quad.eta2
    g -= (c / a) * float(xn @ En)
    h -= (c / (a * a)) * float((xn * xn) @ En)
    g += (c * e1 / a) * float(np.sum(xn)) + 2.0 * (c * e2 / (a * a)) * float(xn @ b[idx])
    h += 2.0 * (c * e2 / (a * a)) * float(xn @ xn)
    g -= (c * e1 / a) * float(np.sum(xj)) + 2.0 * (c * e2 / (a * a)) * float(xj @ b)
    h -= 2.0 * (c * e2 / (a * a)) * float(xj @ xj)
    return g, h


def _default_beta0(q: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return 1e-2 * rng.uniform(0.0, 1.0, size=q)


def _feasible_or_raise(obj: float):
    if not np.isfinite(obj):
        raise ValueError(
            "objective is non-finite at beta0; re-initialize with strictly "
            "positive coefficients so every positive count has a positive rate"
        )


def solve_exact(P: RegressionProblem, beta0=None, cycles: int = 3,
                max_halvings: int = 30, seed=0):
    """Cyclic coordinate ascent on the exact objective.

    Returns (beta, trace); trace[0] is the objective at beta0 and one entry
    follows per completed sweep. The trace is non-decreasing.
    """
    if cycles < 1:
        raise ValueError("cycles must be at least 1")
    beta = _default_beta0(P.n_coef, seed) if beta0 is None else _check_beta(P, beta0)
    obj0 = reg_loglik(P, beta)
    _feasible_or_raise(obj0)
    Beta = beta.reshape(1, -1).copy()
    indptr = np.array([0, P.nz_idx.size], dtype=np.int64)
    c_prob = np.array([1.0])
    c_obs = np.full(P.n_obs, P.c_eff)
    trace = [obj0]
    for _ in range(cycles):
        objs = backend.kernels.solve_block_exact(
            Beta, P.X, indptr, P.nz_idx, P.nz_val, c_prob, c_obs,
            1, max_halvings,
        )
        trace.append(float(objs[0]))
    return Beta[0].copy(), np.asarray(trace)


def solve_approx(P: RegressionProblem, quad: QuadApprox, beta0=None, cycles: int = 3,
                 max_halvings: int = 30, seed=0):
    """Coordinate ascent on the approximate objective; requires P.gram.

    Zero-count observations are summarized by the gram, so each sweep costs
    O(nnz(y) * q + q^2). Returns (beta, trace) of approximate objectives.
    """
    if P.gram is None:
        raise ValueError("missing gram: build the problem with precompute_gram(X)")
    if quad.eta2 < 0:
        raise ValueError("eta2 must be non-negative for a concave approximation")
    if cycles < 1:
        raise ValueError("cycles must be at least 1")
    beta = _default_beta0(P.n_coef, seed) if beta0 is None else _check_beta(P, beta0)
    obj0 = reg_loglik_approx(P, quad, beta)
    _feasible_or_raise(obj0)
    Beta = beta.reshape(1, -1).copy()
    indptr = np.array([0, P.nz_idx.size], dtype=np.int64)
    c_prob = np.array([1.0])
    c_obs = np.full(P.n_obs, P.c_eff)
    a = P.alpha
    w1 = np.array([P.c_eff / a])
    w2 = np.array([P.c_eff / (a * a)])
    trace = [obj0]
    for _ in range(cycles):
        objs = backend.kernels.solve_block_approx(
            Beta, P.X, indptr, P.nz_idx, P.nz_val, c_prob, c_obs,
            P.gram.colsum, P.gram.xtx, w1, w2, quad.eta1, quad.eta2,
            1, max_halvings,
        )
        trace.append(float(objs[0]))
    return Beta[0].copy(), np.asarray(trace)
