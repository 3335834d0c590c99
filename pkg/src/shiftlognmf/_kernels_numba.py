"""Numba-compiled kernels.

Same contract as ``_kernels_numpy`` (see that module for the semantics); the
bodies here are explicit loops so numba can compile them, with the
independent problems of a block dispatched across threads by ``prange``.
Each problem writes only its own row of Beta and its own output slot, so
results do not depend on the thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

GRAD_TOL = 1e-12
# Restart value for a subproblem whose objective came in non-finite; matches
# the plain-numpy kernels.
RESET_BETA = 1e-6


@njit(parallel=True, cache=True, error_model="numpy")
def exact_loglik_rows(L, F, indptr, indices, vals, c_row):
    n, K = L.shape
    m = F.shape[0]
    out = np.empty(n)
    for i in prange(n):
        c = c_row[i]
        a = c if c > 1.0 else 1.0
        acc = 0.0
        for j in range(m):
            b = 0.0
            for k in range(K):
                b += L[i, k] * F[j, k]
            acc -= c * np.exp(b / a)
        for t in range(indptr[i], indptr[i + 1]):
            j = indices[t]
            b = 0.0
            for k in range(K):
                b += L[i, k] * F[j, k]
            acc += vals[t] * np.log(np.expm1(b / a))
        out[i] = acc
    return out


@njit(parallel=True, cache=True, error_model="numpy")
def approx_nz_rows(L, F, indptr, indices, vals, c_row, eta1, eta2):
    n, K = L.shape
    out = np.zeros(n)
    for i in prange(n):
        c = c_row[i]
        a = c if c > 1.0 else 1.0
        acc = 0.0
        for t in range(indptr[i], indptr[i + 1]):
            j = indices[t]
            b = 0.0
            for k in range(K):
                b += L[i, k] * F[j, k]
            em1 = np.expm1(b / a)
            acc += (
                vals[t] * np.log(em1)
                - c * (em1 + 1.0)
                + (c * eta1 / a) * b
                + (c * eta2 / (a * a)) * (b * b)
            )
        out[i] = acc
    return out


@njit(cache=True, error_model="numpy")
def _obj_exact(b, X, k, delta, idx, v, cs, c_obs):
    # Objective at b + delta * X[:, k]; delta = 0 evaluates in place.
    N = b.shape[0]
    tot = 0.0
    for o in range(N):
        ce = cs * c_obs[o]
        a = ce if ce > 1.0 else 1.0
        tot -= ce * np.exp((b[o] + delta * X[o, k]) / a)
    for t in range(idx.shape[0]):
        o = idx[t]
        ce = cs * c_obs[o]
        a = ce if ce > 1.0 else 1.0
        tot += v[t] * np.log(np.expm1((b[o] + delta * X[o, k]) / a))
    return tot


@njit(cache=True, error_model="numpy")
def _solve_one_exact(beta, X, idx, v, cs, c_obs, cycles, max_halvings):
    N, K = X.shape
    b = np.dot(X, beta)
    obj = _obj_exact(b, X, 0, 0.0, idx, v, cs, c_obs)
    if not np.isfinite(obj):
        # A count observation's predictor hit exactly zero (or overflowed),
        # which freezes every coordinate through the gradient guards.
        # Restart this problem from a small positive point.
        for k in range(K):
            beta[k] = RESET_BETA
        b = np.dot(X, beta)
        obj = _obj_exact(b, X, 0, 0.0, idx, v, cs, c_obs)
    for _ in range(cycles):
        for k in range(K):
            g = 0.0
            h = 0.0
            for o in range(N):
                ce = cs * c_obs[o]
                a = ce if ce > 1.0 else 1.0
                E = np.exp(b[o] / a)
                x = X[o, k]
                g -= (ce / a) * E * x
                h -= (ce / (a * a)) * E * x * x
            for t in range(idx.shape[0]):
                o = idx[t]
                ce = cs * c_obs[o]
                a = ce if ce > 1.0 else 1.0
                em1 = np.expm1(b[o] / a)
                E = em1 + 1.0
                x = X[o, k]
                g += (v[t] / a) * (E / em1) * x
                h -= (v[t] / (a * a)) * (E / (em1 * em1)) * x * x
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
                objn = _obj_exact(b, X, k, delta, idx, v, cs, c_obs)
                if objn > obj:
                    beta[k] = bk + delta
                    for o in range(N):
                        b[o] += delta * X[o, k]
                    obj = objn
                    break
                delta *= 0.5
    return obj


@njit(parallel=True, cache=True, error_model="numpy")
def solve_block_exact(Beta, X, indptr, indices, vals, c_prob, c_obs, cycles, max_halvings):
    P = Beta.shape[0]
    objs = np.empty(P)
    for p in prange(P):
        objs[p] = _solve_one_exact(
            Beta[p],
            X,
            indices[indptr[p] : indptr[p + 1]],
            vals[indptr[p] : indptr[p + 1]],
            c_prob[p],
            c_obs,
            cycles,
            max_halvings,
        )
    return objs


@njit(cache=True, error_model="numpy")
def _obj_approx(b, Xn, k, delta, v, ce, lin, qua, sb, qb, eta1, eta2, w1p, w2p):
    w = b.shape[0]
    tot = -eta1 * w1p * sb - eta2 * w2p * qb
    for t in range(w):
        c = ce[t]
        a = c if c > 1.0 else 1.0
        bt = b[t] + delta * Xn[t, k]
        em1 = np.expm1(bt / a)
        tot += v[t] * np.log(em1) - c * (em1 + 1.0) + lin[t] * bt + qua[t] * bt * bt
    return tot


@njit(cache=True, error_model="numpy")
def _solve_one_approx(beta, Xn, v, ce, S, G, w1p, w2p, eta1, eta2, cycles, max_halvings):
    w, K = Xn.shape
    lin = np.empty(w)
    qua = np.empty(w)
    for t in range(w):
        c = ce[t]
        a = c if c > 1.0 else 1.0
        lin[t] = c * eta1 / a
        qua[t] = c * eta2 / (a * a)
    b = np.dot(Xn, beta)
    gb = np.dot(G, beta)
    sb = 0.0
    qb = 0.0
    for k in range(K):
        sb += S[k] * beta[k]
        qb += beta[k] * gb[k]
    obj = _obj_approx(b, Xn, 0, 0.0, v, ce, lin, qua, sb, qb, eta1, eta2, w1p, w2p)
    if not np.isfinite(obj):
        # Same restart as the exact solver: a zero predictor at a stored
        # count makes the objective -inf and freezes the sweeps.
        for k in range(K):
            beta[k] = RESET_BETA
        b = np.dot(Xn, beta)
        gb = np.dot(G, beta)
        sb = 0.0
        qb = 0.0
        for k in range(K):
            sb += S[k] * beta[k]
            qb += beta[k] * gb[k]
        obj = _obj_approx(b, Xn, 0, 0.0, v, ce, lin, qua, sb, qb, eta1, eta2, w1p, w2p)
    for _ in range(cycles):
        for k in range(K):
            g = -eta1 * w1p * S[k] - 2.0 * eta2 * w2p * gb[k]
            h = -2.0 * eta2 * w2p * G[k, k]
            for t in range(w):
                c = ce[t]
                a = c if c > 1.0 else 1.0
                em1 = np.expm1(b[t] / a)
                E = em1 + 1.0
                x = Xn[t, k]
                g += ((v[t] / a) * (E / em1) - (c / a) * E + lin[t] + 2.0 * qua[t] * b[t]) * x
                h += (-(v[t] / (a * a)) * (E / (em1 * em1)) - (c / (a * a)) * E + 2.0 * qua[t]) * x * x
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
                sbn = sb + delta * S[k]
                qbn = qb + 2.0 * delta * gb[k] + delta * delta * G[k, k]
                objn = _obj_approx(
                    b, Xn, k, delta, v, ce, lin, qua, sbn, qbn, eta1, eta2, w1p, w2p
                )
                if objn > obj:
                    beta[k] = bk + delta
                    for t in range(w):
                        b[t] += delta * Xn[t, k]
                    for kk in range(K):
                        gb[kk] += delta * G[k, kk]
                    sb = sbn
                    qb = qbn
                    obj = objn
                    break
                delta *= 0.5
    return obj


@njit(parallel=True, cache=True, error_model="numpy")
def solve_block_approx(
    Beta, X, indptr, indices, vals, c_prob, c_obs, S, G, w1, w2, eta1, eta2, cycles, max_halvings
):
    P, K = Beta.shape
    objs = np.empty(P)
    for p in prange(P):
        s_ = indptr[p]
        e_ = indptr[p + 1]
        w = e_ - s_
        Xn = np.empty((w, K))
        ce = np.empty(w)
        for t in range(w):
            o = indices[s_ + t]
            ce[t] = c_prob[p] * c_obs[o]
            for k in range(K):
                Xn[t, k] = X[o, k]
        objs[p] = _solve_one_approx(
            Beta[p],
            Xn,
            vals[s_:e_],
            ce,
            S,
            G,
            w1[p],
            w2[p],
            eta1,
            eta2,
            cycles,
            max_halvings,
        )
    return objs
