"""Pure-numpy reference kernels.

These four functions define the backend contract; ``_kernels_numba`` mirrors
them loop-for-loop under ``@njit``. Shapes and conventions:

* ``L`` is n x K, ``F`` is m x K, both float64 and non-negative.
* Sparse counts arrive as compressed slices: problem/row ``p`` owns
  ``indices[indptr[p]:indptr[p+1]]`` (observation indices) and the matching
  ``vals`` (counts, already float64).
* The effective shift for problem ``p`` at observation ``t`` is
  ``c_prob[p] * c_obs[t]`` and its scale is ``alpha = max(1, c)``. Row
  regressions pass a per-problem shift and all-ones ``c_obs``; column
  regressions pass all-ones ``c_prob`` and the per-row shifts, which is how
  size factors enter every term.

``solve_block_exact`` and ``solve_block_approx`` run cyclic coordinate ascent
with one projected Newton step per coordinate per cycle: step to
``max(0, beta_k - g/h)``, halve on failure to improve, give up after
``max_halvings`` halvings. A coordinate is skipped when its KKT condition
already holds (gradient <= 0 at the boundary, |gradient| below GRAD_TOL in
the interior). Both return each problem's final objective, so a caller can
read the block objective as the sum without a second pass.
"""

from __future__ import annotations

import functools

import numpy as np

# Interior stall threshold for coordinate skipping.
GRAD_TOL = 1e-12
# Restart value for a subproblem whose objective came in non-finite: small
# enough not to disturb the rest of the factorization, large enough that the
# predictors at stored counts are strictly positive again.
RESET_BETA = 1e-6


def _quiet(fn):
    """Boundary and overflow states are legitimate here: log(0) and exp
    overflow produce -inf/inf objectives that the line search rejects, so the
    corresponding floating-point warnings are noise."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return fn(*args, **kwargs)

    return wrapper

# Cap on the number of temporarily materialized dense entries per chunk.
_CHUNK_ENTRIES = 4_000_000


@_quiet
def exact_loglik_rows(L, F, indptr, indices, vals, c_row):
    """Per-row partial sums of the exact shifted-log Poisson objective.

    Row i contributes
    ``sum_{j in nz(i)} y_ij log(exp(b_ij/a_i) - 1) - c_i sum_j exp(b_ij/a_i)``
    with ``b = L F^T`` and ``a_i = max(1, c_i)``. Rows where some positive
    count sits at b == 0 come back -inf.
    """
    n = L.shape[0]
    m = F.shape[0]
    a_row = np.maximum(1.0, c_row)
    out = np.empty(n)
    chunk = max(1, _CHUNK_ENTRIES // max(m, 1))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        B = L[lo:hi] @ F.T
        np.divide(B, a_row[lo:hi, None], out=B)
        np.exp(B, out=B)
        out[lo:hi] = -c_row[lo:hi] * B.sum(axis=1)
    for i in range(n):
        s, e = indptr[i], indptr[i + 1]
        if s == e:
            continue
        b = F[indices[s:e]] @ L[i]
        out[i] += vals[s:e] @ np.log(np.expm1(b / a_row[i]))
    return out


@_quiet
def approx_nz_rows(L, F, indptr, indices, vals, c_row, eta1, eta2):
    """Per-row sums of the nonzero-entry terms of the sparse quadratic objective.

    Each stored count contributes its exact term plus the quadratic add-back
    ``c(eta1/a) b + c(eta2/a^2) b^2`` that cancels the global gram term at
    nonzero positions; the caller supplies the global term separately.
    """
    n = L.shape[0]
    if indices.shape[0] == 0:
        return np.zeros(n)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    b = np.einsum("ij,ij->i", L[rows], F[indices])
    c = c_row[rows]
    a = np.maximum(1.0, c)
    em1 = np.expm1(b / a)
    term = (
        vals * np.log(em1)
        - c * (em1 + 1.0)
        + (c * eta1 / a) * b
        + (c * eta2 / (a * a)) * (b * b)
    )
    return np.bincount(rows, weights=term, minlength=n)


def _exact_objective(b, inva, ce, idx, v):
    em1 = np.expm1(b * inva)
    obj = -(ce @ (em1 + 1.0))
    if idx.size:
        obj += v @ np.log(em1[idx])
    return obj


@_quiet
def solve_block_exact(Beta, X, indptr, indices, vals, c_prob, c_obs, cycles, max_halvings):
    """Cyclic coordinate ascent on P independent exact regressions.

    Beta (P x K) is updated in place; returns the final objectives (P,).
    """
    P, K = Beta.shape
    objs = np.empty(P)
    for p in range(P):
        beta = Beta[p]
        ce = c_prob[p] * c_obs
        inva = 1.0 / np.maximum(1.0, ce)
        s, e = indptr[p], indptr[p + 1]
        idx = indices[s:e]
        v = vals[s:e]
        b = X @ beta
        obj = _exact_objective(b, inva, ce, idx, v)
        if not np.isfinite(obj):
            # A count observation's predictor hit exactly zero (or overflowed),
            # which freezes every coordinate through the gradient guards.
            # Restart this problem from a small positive point.
            beta[:] = RESET_BETA
            b = X @ beta
            obj = _exact_objective(b, inva, ce, idx, v)
        for _ in range(cycles):
            for k in range(K):
                xk = X[:, k]
                em1 = np.expm1(b * inva)
                E = em1 + 1.0
                g = -np.dot(ce * inva * E, xk)
                h = -np.dot(ce * inva * inva * E, xk * xk)
                if idx.size:
                    Ei = E[idx]
                    em1i = em1[idx]
                    vi = v * inva[idx]
                    g += np.dot(vi * Ei / em1i, xk[idx])
                    h -= np.dot(vi * inva[idx] * Ei / (em1i * em1i), xk[idx] * xk[idx])
                bk = beta[k]
                if bk == 0.0 and g <= 0.0:
                    continue
                if bk > 0.0 and abs(g) < GRAD_TOL:
                    continue
                if not np.isfinite(g) or not (h < 0.0):
                    continue
                target = bk - g / h
                if target < 0.0:
                    target = 0.0
                delta = target - bk
                if delta == 0.0:
                    continue
                for _ls in range(max_halvings + 1):
                    bn = b + delta * xk
                    objn = _exact_objective(bn, inva, ce, idx, v)
                    if objn > obj:
                        beta[k] = bk + delta
                        b = bn
                        obj = objn
                        break
                    delta *= 0.5
        objs[p] = obj
    return objs


def _approx_objective(b, inva, ce, v, lin, qua, eta1, eta2, w1p, w2p, sb, qb):
    em1 = np.expm1(b * inva)
    obj = -(ce @ (em1 + 1.0)) + lin @ b + qua @ (b * b)
    if v.size:
        obj += v @ np.log(em1)
    return obj - eta1 * w1p * sb - eta2 * w2p * qb


@_quiet
def solve_block_approx(
    Beta, X, indptr, indices, vals, c_prob, c_obs, S, G, w1, w2, eta1, eta2, cycles, max_halvings
):
    """Cyclic coordinate ascent on P independent sparse quadratic regressions.

    S and G are shared gram pieces (column sums and X^T X, pre-weighted by the
    caller when observations carry different shifts); w1, w2 scale the gram
    terms per problem. Beta is updated in place; returns final objectives.
    """
    P, K = Beta.shape
    objs = np.empty(P)
    for p in range(P):
        beta = Beta[p]
        s_, e_ = indptr[p], indptr[p + 1]
        idx = indices[s_:e_]
        v = vals[s_:e_]
        Xn = X[idx]
        ce = c_prob[p] * c_obs[idx]
        inva = 1.0 / np.maximum(1.0, ce)
        lin = ce * eta1 * inva
        qua = ce * eta2 * inva * inva
        b = Xn @ beta
        gb = G @ beta
        sb = float(S @ beta)
        qb = float(beta @ gb)
        w1p = w1[p]
        w2p = w2[p]
        obj = _approx_objective(b, inva, ce, v, lin, qua, eta1, eta2, w1p, w2p, sb, qb)
        if not np.isfinite(obj):
            # Same restart as the exact solver: a zero predictor at a stored
            # count makes the objective -inf and freezes the sweeps.
            beta[:] = RESET_BETA
            b = Xn @ beta
            gb = G @ beta
            sb = float(S @ beta)
            qb = float(beta @ gb)
            obj = _approx_objective(b, inva, ce, v, lin, qua, eta1, eta2, w1p, w2p, sb, qb)
        for _ in range(cycles):
            for k in range(K):
                xk = Xn[:, k]
                em1 = np.expm1(b * inva)
                E = em1 + 1.0
                g = (
                    -np.dot(ce * inva * E, xk)
                    + np.dot(lin, xk)
                    + 2.0 * np.dot(qua * b, xk)
                    - eta1 * w1p * S[k]
                    - 2.0 * eta2 * w2p * gb[k]
                )
                h = (
                    -np.dot(ce * inva * inva * E, xk * xk)
                    + 2.0 * np.dot(qua, xk * xk)
                    - 2.0 * eta2 * w2p * G[k, k]
                )
                if v.size:
                    vi = v * inva
                    g += np.dot(vi * E / em1, xk)
                    h -= np.dot(vi * inva * E / (em1 * em1), xk * xk)
                bk = beta[k]
                if bk == 0.0 and g <= 0.0:
                    continue
                if bk > 0.0 and abs(g) < GRAD_TOL:
                    continue
                if not np.isfinite(g) or not (h < 0.0):
                    continue
                target = bk - g / h
                if target < 0.0:
                    target = 0.0
                delta = target - bk
                if delta == 0.0:
                    continue
                for _ls in range(max_halvings + 1):
                    bn = b + delta * xk
                    sbn = sb + delta * S[k]
                    qbn = qb + 2.0 * delta * gb[k] + delta * delta * G[k, k]
                    objn = _approx_objective(
                        bn, inva, ce, v, lin, qua, eta1, eta2, w1p, w2p, sbn, qbn
                    )
                    if objn > obj:
                        beta[k] = bk + delta
                        b = bn
                        sb = sbn
                        qb = qbn
                        gb = gb + delta * G[k]
                        obj = objn
                        break
                    delta *= 0.5
        objs[p] = obj
    return objs
