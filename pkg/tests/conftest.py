"""Shared oracles for the test suite.

Everything here recomputes model quantities from their definitions with plain
dense numpy/fsum arithmetic, independent of the library's sparse kernels, so
agreement between the two is meaningful.
"""

import math

import numpy as np

from shiftlognmf import from_dense


def dense_exact_oracle(Yd, L, F, c, s=None, include_constants=False):
    """Term-by-term objective sum_ij [y log(expm1(b/a)) - c_i exp(b/a)].

    fsum keeps the reduction error far below the tolerances under test.
    """
    Yd = np.asarray(Yd, dtype=np.float64)
    n, m = Yd.shape
    B = np.asarray(L) @ np.asarray(F).T
    s = np.ones(n) if s is None else np.asarray(s, dtype=np.float64)
    terms = []
    for i in range(n):
        ci = c * s[i]
        ai = max(1.0, ci)
        for j in range(m):
            z = B[i, j] / ai
            t = -ci * math.exp(z)
            if Yd[i, j] > 0:
                em = math.expm1(z)
                if em <= 0.0:
                    return float("-inf")
                t += Yd[i, j] * math.log(em)
            if include_constants:
                t += Yd[i, j] * math.log(ci) + ci
            terms.append(t)
    return math.fsum(terms)


def dense_approx_oracle(Yd, L, F, c, quad, s=None):
    """Exact terms at stored entries, the quadratic (constant dropped) at zeros."""
    Yd = np.asarray(Yd, dtype=np.float64)
    n, m = Yd.shape
    B = np.asarray(L) @ np.asarray(F).T
    s = np.ones(n) if s is None else np.asarray(s, dtype=np.float64)
    terms = []
    for i in range(n):
        ci = c * s[i]
        ai = max(1.0, ci)
        for j in range(m):
            z = B[i, j] / ai
            if Yd[i, j] > 0:
                terms.append(Yd[i, j] * math.log(math.expm1(z)) - ci * math.exp(z))
            else:
                terms.append(-ci * (quad.eta1 * z + quad.eta2 * z * z))
    return math.fsum(terms)


def dense_identity_oracle(Yd, L, F, s=None):
    """sum_ij [y log(lambda) - lambda] with lambda = s_i (L F^T)_ij."""
    Yd = np.asarray(Yd, dtype=np.float64)
    n, m = Yd.shape
    lam = np.asarray(L) @ np.asarray(F).T
    if s is not None:
        lam = np.asarray(s)[:, None] * lam
    terms = []
    for i in range(n):
        for j in range(m):
            t = -lam[i, j]
            if Yd[i, j] > 0:
                if lam[i, j] <= 0:
                    return float("-inf")
                t += Yd[i, j] * math.log(lam[i, j])
            terms.append(t)
    return math.fsum(terms)


def random_instance(rng, n, m, K, c, density=0.5, b_scale=1.0):
    """Random positive factors plus counts drawn from the model itself."""
    L = b_scale * rng.uniform(0.1, 1.0, size=(n, K))
    F = rng.uniform(0.1, 1.0, size=(m, K))
    a = max(1.0, c)
    lam = c * np.expm1((L @ F.T) / a)
    Yd = rng.poisson(lam)
    if density < 1.0:
        Yd = Yd * (rng.uniform(size=Yd.shape) < density)
    return from_dense(Yd), Yd, L, F


def pareto_front(P):
    """Indices of points no other point dominates componentwise."""
    P = np.asarray(P, dtype=np.float64)
    keep = []
    for i in range(P.shape[0]):
        dominated = False
        for j in range(P.shape[0]):
            if i == j:
                continue
            if P[j, 0] >= P[i, 0] and P[j, 1] >= P[i, 1] and (
                P[j, 0] > P[i, 0] or P[j, 1] > P[i, 1]
            ):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    keep.sort(key=lambda k: P[k, 0])
    return keep


def hull_oracle(P):
    """Upper-right hull vertices by exhaustive pairwise segment tests.

    A Pareto point is a vertex unless it lies on or below the segment joining
    some pair of other Pareto points whose x-range covers it.
    """
    P = np.asarray(P, dtype=np.float64)
    front = pareto_front(P)
    verts = []
    for k in front:
        covered = False
        for a in front:
            for b in front:
                if a == b or k in (a, b):
                    continue
                x0, x1 = P[a, 0], P[b, 0]
                if not (min(x0, x1) <= P[k, 0] <= max(x0, x1)) or x0 == x1:
                    continue
                t = (P[k, 0] - x0) / (x1 - x0)
                y_seg = P[a, 1] + t * (P[b, 1] - P[a, 1])
                if P[k, 1] <= y_seg:
                    covered = True
                    break
            if covered:
                break
        if not covered:
            verts.append(k)
    return verts


def hull_instance(rng, max_points=10):
    """Random 2-d point set whose upper-right hull has controlled margins.

    Vertices sit on a radius-2 arc with >= 20 degree angular separation
    (edges cannot be short, supporting-line margins stay bounded below);
    extra points live at radius <= 1.2, strictly inside every supporting
    line. Finite-t concentration checks at t = 100 are then meaningful for
    every draw, which a plain uniform cloud does not guarantee.
    """
    while True:
        M = int(rng.integers(2, 5))
        ang = np.sort(rng.uniform(10.0, 80.0, size=M))
        if np.min(np.diff(ang), initial=np.inf) < 20.0:
            continue
        if ang.max() < 45.0 or ang.min() > 45.0:
            continue
        break
    th = np.deg2rad(ang)[::-1]
    V = 2.0 * np.column_stack([np.cos(th), np.sin(th)])
    k = int(rng.integers(0, max_points - M + 1))
    psi = np.deg2rad(rng.uniform(5.0, 85.0, size=k))
    r = rng.uniform(0.3, 1.2, size=k)
    inner = np.column_stack([r * np.cos(psi), r * np.sin(psi)])
    P = np.vstack([V, inner])
    return P[rng.permutation(P.shape[0])]
