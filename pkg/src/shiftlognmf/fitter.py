"""Alternating block coordinate ascent for shifted-log Poisson factorization.

Each outer iteration solves one non-negative regression per row of Y (updating
L against fixed F), then one per column (updating F against fixed L); both
blocks run through the backend kernels, so the per-problem objective sums give
the global objective for free. Approximate modes replace the dense exp sum
with a quadratic, making a half-iteration O(nnz * K + (n + m) * K^2).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import backend
from .countmat import CountMatrix
from .likelihood import FactorModel
from .quadapprox import QuadApprox, chebyshev_on, taylor_about_zero

OBJECTIVES = ("exact", "approx-taylor", "approx-chebyshev")


@dataclass(frozen=True)
class FitConfig:
    k: int
    c: float
    objective: str = "exact"
    max_outer_iters: int = 100
    rel_tol: float = 1e-6
    inner_cycles: int = 3
    max_halvings: int = 30
    seed: int = 0
    use_size_factors: bool = False
    n_threads: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        object.__setattr__(self, "k", int(self.k))
        c = float(self.c)
        if math.isnan(c) or c <= 0:
            raise ValueError("c must be positive (inf allowed)")
        object.__setattr__(self, "c", c)
        if self.objective not in OBJECTIVES:
            raise ValueError("objective must be one of %s" % (OBJECTIVES,))
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if not (self.rel_tol > 0):
            raise ValueError("rel_tol must be positive")
        if self.inner_cycles < 1:
            raise ValueError("inner_cycles must be at least 1")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be non-negative")
        if self.n_threads < 0:
            raise ValueError("n_threads must be non-negative (0 = library default)")


@dataclass
class FitReport:
    loglik_trace: np.ndarray
    converged: bool
    iterations: int
    wall_time: float
    config: FitConfig
    effective_c: float
    objective_value: float
    empty_factors: list = field(default_factory=list)
    backend: str = ""


# c = inf requests the identity link; a huge shift makes the shifted-log
# model agree with it to high accuracy while keeping a single solver path.
_INF_C = 1e8


def effective_shift(c: float) -> float:
    return _INF_C if math.isinf(c) else float(c)


def make_quad(objective: str, c_eff: float) -> QuadApprox | None:
    """Quadratic coefficients for the requested objective, None for exact.

    The Chebyshev interval [0, log(1 + 1/c)] spans the linear-predictor values
    of entries with rates up to c's own scale, where most counts live.
    """
    if objective == "exact":
        return None
    if objective == "approx-taylor":
        return taylor_about_zero()
    return chebyshev_on(0.0, math.log1p(1.0 / c_eff))


def compute_size_factors(Y: CountMatrix):
    """s_i = rowsum_i / mean(rowsums); mean(s) = 1. Zero-sum rows are refused."""
    rs = Y.row_sums().astype(np.float64)
    bad = np.flatnonzero(rs == 0)
    if bad.size:
        raise ValueError(
            "row %d has zero total count; filter empty rows before computing "
            "size factors" % int(bad[0])
        )
    return rs / rs.mean()


def _abort_if_nonfinite(objs, iteration: int, kind: str):
    bad = np.flatnonzero(~np.isfinite(objs))
    if bad.size:
        raise RuntimeError(
            "non-finite objective at outer iteration %d while updating %s %d "
            "(of %d non-finite %ss); the factorization diverged"
            % (iteration, kind, int(bad[0]), bad.size, kind)
        )


def _alternate(Y: CountMatrix, L, F, c_row, quad, config: FitConfig):
    """Run outer iterations in place; returns (trace, converged, iterations).

    The trace records the optimized objective once per outer iteration, taken
    as the sum of the column-block subproblem objectives after the F-update.
    Convergence compares successive changes against the constants-restored
    log-likelihood: the stored objective rides on an additive data constant
    near -n*m*c, which at large shifts would otherwise swallow every real
    improvement and stop the loop immediately.
    """
    a_row = np.maximum(1.0, c_row)
    n, m = Y.shape
    ones_m = np.ones(m)
    cyc, hal = config.inner_cycles, config.max_halvings
    if quad is not None:
        w1 = c_row / a_row
        w2 = c_row / (a_row * a_row)
    const = float(Y.row_sums() @ np.log(c_row) + m * c_row.sum())
    trace = []
    prev = None
    converged = False
    for t in range(1, config.max_outer_iters + 1):
        if quad is None:
            objs = backend.kernels.solve_block_exact(
                L, F, Y.row_ptr, Y.row_idx, Y.row_val_f, c_row, ones_m, cyc, hal
            )
        else:
            S = F.sum(axis=0)
            G = F.T @ F
            objs = backend.kernels.solve_block_approx(
                L, F, Y.row_ptr, Y.row_idx, Y.row_val_f, c_row, ones_m,
                S, G, w1, w2, quad.eta1, quad.eta2, cyc, hal,
            )
        _abort_if_nonfinite(objs, t, "row")
        if quad is None:
            objs = backend.kernels.solve_block_exact(
                F, L, Y.col_ptr, Y.col_idx, Y.col_val_f, ones_m, c_row, cyc, hal
            )
        else:
            S = L.T @ w1
            G = L.T @ (L * w2[:, None])
            objs = backend.kernels.solve_block_approx(
                F, L, Y.col_ptr, Y.col_idx, Y.col_val_f, ones_m, c_row,
                S, G, ones_m, ones_m, quad.eta1, quad.eta2, cyc, hal,
            )
        _abort_if_nonfinite(objs, t, "column")
        ll = float(np.sum(objs))
        trace.append(ll)
        if prev is not None and abs(ll - prev) <= config.rel_tol * (1.0 + abs(ll + const)):
            converged = True
            break
        prev = ll
    return np.asarray(trace), converged, len(trace)


def init_expand(l, f, K: int, seed):
    """Append K-1 columns of i.i.d. uniform(1e-8, 1e-6) noise to the rank-1 pair.

    seed may be an integer or a live Generator (the fitter passes its own so
    the whole run consumes one stream).
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    l = np.asarray(l, dtype=np.float64).reshape(-1)
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    if K == 1:
        return l[:, None].copy(), f[:, None].copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    U = rng.uniform(1e-8, 1e-6, size=(l.size, K - 1))
    V = rng.uniform(1e-8, 1e-6, size=(f.size, K - 1))
    L0 = np.ascontiguousarray(np.column_stack([l, U]))
    F0 = np.ascontiguousarray(np.column_stack([f, V]))
    return L0, F0


def _rescale_inplace(L, F):
    zero_cols = []
    for k in range(L.shape[1]):
        a = L[:, k].max()
        if a <= 0.0:
            zero_cols.append(k)
            continue
        L[:, k] /= a
        F[:, k] *= a
    return zero_cols


def rescale(model: FactorModel) -> FactorModel:
    """Scale each factor so max_i L_ik = 1; L F^T is unchanged.

    Columns of L that are entirely zero are left as they are (a warning names
    them); everything else is divided by its column maximum, with the inverse
    applied to F.
    """
    L = model.L.copy()
    F = model.F.copy()
    zero_cols = _rescale_inplace(L, F)
    if zero_cols:
        warnings.warn("factors %s have all-zero loadings; left unscaled" % zero_cols)
    return FactorModel(L=L, F=F, c=model.c, s=model.s.copy())


def fit(Y: CountMatrix, config: FitConfig):
    """Fit the K-factor model; returns (FactorModel, FitReport).

    Initialization fits K=1 to convergence from uniform(0.1, 1) starts, then
    pads with tiny positive columns. The report's trace covers the K-factor
    stage (for K=1 they are the same stage); it is non-decreasing.
    """
    if not isinstance(Y, CountMatrix):
        raise TypeError("Y must be a CountMatrix")
    if config.n_threads >= 1:
        backend.set_num_threads(config.n_threads)
    t0 = time.perf_counter()
    c_eff = effective_shift(config.c)
    s = compute_size_factors(Y) if config.use_size_factors else np.ones(Y.n_rows)
    c_row = c_eff * s
    quad = make_quad(config.objective, c_eff)
    rng = np.random.default_rng(config.seed)

    L = np.ascontiguousarray(rng.uniform(0.1, 1.0, size=Y.n_rows)[:, None])
    F = np.ascontiguousarray(rng.uniform(0.1, 1.0, size=Y.n_cols)[:, None])
    trace, converged, iters = _alternate(Y, L, F, c_row, quad, config)
    if config.k > 1:
        L, F = init_expand(L[:, 0], F[:, 0], config.k, rng)
        trace, converged, iters = _alternate(Y, L, F, c_row, quad, config)

    empty = _rescale_inplace(L, F)
    model = FactorModel(L=L, F=F, c=c_eff, s=s)
    report = FitReport(
        loglik_trace=trace,
        converged=converged,
        iterations=iters,
        wall_time=time.perf_counter() - t0,
        config=config,
        effective_c=c_eff,
        objective_value=float(trace[-1]),
        empty_factors=empty,
        backend=backend.BACKEND_NAME,
    )
    return model, report


def init_rank1(Y: CountMatrix, c: float, config: FitConfig):
    """Converged K=1 solution (l, f) under config's tolerances and seed."""
    model, _ = fit(Y, replace(config, k=1, c=c))
    return model.L[:, 0].copy(), model.F[:, 0].copy()
