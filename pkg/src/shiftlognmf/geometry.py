"""Small-shift limit geometry for two-factor models.

As the shift c tends to 0, the normalized rate profile of any loading vector
collapses onto at most two rows of F that are adjacent vertices of the
upper-right convex hull of F's rows. This module builds that hull, constructs
the loading directions that select a chosen vertex or edge mixture, and
quantifies how fast the exact normalized profile approaches its softmax limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

_GP_TOL = 1e-12


@dataclass(frozen=True)
class UpperRightHull:
    """Vertices (as row indices, first coordinate increasing) and, per edge,
    the inward unit normal z_q (both components positive) and the edge vector
    d_q joining consecutive vertices."""

    vertex_indices: np.ndarray
    normals: np.ndarray
    edges: np.ndarray

    @property
    def n_vertices(self) -> int:
        return int(self.vertex_indices.size)

    @property
    def n_edges(self) -> int:
        return int(self.normals.shape[0])


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != 2:
        raise ValueError("expected an array of 2-d points")
    if P.shape[0] < 1:
        raise ValueError("need at least one point")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise ValueError("points must be finite and non-negative")
    return P


def _check_general_position(P):
    p = P.shape[0]
    scale = max(1.0, float(np.abs(P).max()))
    for i in range(p - 1):
        gap = np.abs(P[i + 1:] - P[i]).max(axis=1)
        dup = np.flatnonzero(gap <= _GP_TOL * scale)
        if dup.size:
            j = i + 1 + int(dup[0])
            raise ValueError(
                "points %d and %d coincide at (%g, %g); general position required"
                % (i, j, P[i, 0], P[i, 1])
            )
    lim = _GP_TOL * scale * scale
    for i in range(p - 2):
        for j in range(i + 1, p - 1):
            v = P[j] - P[i]
            W = P[j + 1:] - P[i]
            cross = v[0] * W[:, 1] - v[1] * W[:, 0]
            hit = np.flatnonzero(np.abs(cross) <= lim)
            if hit.size:
                k = j + 1 + int(hit[0])
                raise ValueError(
                    "points %d, %d and %d are collinear; general position required"
                    % (i, j, k)
                )


def upper_right_hull(points) -> UpperRightHull:
    """Vertices of the upper-right boundary of the convex hull of the points.

    A point survives if nothing dominates it componentwise and it is extreme
    for the boundary (no point above the segment joining its neighbours).
    Input must be in general position: no duplicate points, no collinear
    triple; violations raise with the offending indices.
    """
    P = _as_points(points)
    _check_general_position(P)
    # Pareto-maximal filter: walk by first coordinate descending and keep
    # strict improvements in the second.
    order = np.lexsort((-P[:, 1], -P[:, 0]))
    kept = []
    best_y = -np.inf
    for idx in order:
        if P[idx, 1] > best_y:
            kept.append(int(idx))
            best_y = P[idx, 1]
    kept.reverse()
    # Concave scan: pop the middle point whenever it fails to turn clockwise.
    hull: list = []
    for idx in kept:
        while len(hull) >= 2:
            a, b, cpt = P[hull[-2]], P[hull[-1]], P[idx]
            cross = (b[0] - a[0]) * (cpt[1] - a[1]) - (b[1] - a[1]) * (cpt[0] - a[0])
            if cross >= 0.0:
                hull.pop()
            else:
                break
        hull.append(idx)
    verts = np.asarray(hull, dtype=np.int64)
    d = P[verts[1:]] - P[verts[:-1]]
    if d.size:
        norms = np.hypot(d[:, 0], d[:, 1])
        z = np.column_stack([-d[:, 1], d[:, 0]]) / norms[:, None]
    else:
        z = np.empty((0, 2))
        d = np.empty((0, 2))
    return UpperRightHull(vertex_indices=verts, normals=z, edges=d)


def _direction(hull: UpperRightHull, q: int, omega: float, t: float) -> np.ndarray:
    M = hull.n_vertices
    if M == 1:
        if q != 0:
            raise IndexError("hull has a single vertex; only q = 0 is valid")
        # A single non-dominated point; any strictly positive direction
        # selects it.
        return t * np.ones(2)
    if not 0 <= q < hull.n_edges:
        raise IndexError("edge index %d out of range (hull has %d edges)" % (q, hull.n_edges))
    if omega in (0.0, 1.0):
        k = q + int(omega)
        if k == 0:
            x = hull.normals[0] + np.array([0.0, 1.0])
        elif k == M - 1:
            x = hull.normals[M - 2] + np.array([1.0, 0.0])
        else:
            x = hull.normals[k - 1] + hull.normals[k]
        return t * x
    d = hull.edges[q]
    phi = math.log(omega / (1.0 - omega)) / float(d @ d)
    return t * hull.normals[q] + phi * d


def expm1_profile(eta) -> np.ndarray:
    """lambda_j = expm1(eta_j) / sum_j' expm1(eta_j'), computed with the
    largest eta factored out so big arguments cannot overflow."""
    eta = np.asarray(eta, dtype=np.float64).reshape(-1)
    em = float(eta.max())
    u = np.exp(eta - em) - math.exp(-em)
    s = float(u.sum())
    if s == 0.0:
        warnings.warn("degenerate profile (sum of expm1 terms is 0); returning uniform")
        return np.full(eta.size, 1.0 / eta.size)
    return u / s


def limiting_direction(hull: UpperRightHull, F, q: int, omega: float, t: float) -> np.ndarray:
    """Normalized rate profile of the loading l(t) that targets edge q.

    omega in (0, 1) mixes the edge's endpoints (mass omega on the right
    vertex as t grows); omega = 0 or 1 selects the corresponding vertex
    through its normal-cone direction. Returns the exactly normalized
    profile over all rows of F.
    """
    P = _as_points(F)
    if int(hull.vertex_indices.max()) >= P.shape[0]:
        raise ValueError("hull refers to rows missing from F")
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    l = _direction(hull, q, omega, t)
    return expm1_profile(P @ l)


def softmax_gap(eta) -> float:
    """max_j |exact profile_j - softmax(eta)_j|.

    The exact profile weights expm1(eta); as min(eta) grows the two coincide
    at rate O(p * exp(-max eta)). All-zero eta makes the exact form 0/0; the
    gap is then measured against the uniform profile (with a warning).
    """
    eta = np.asarray(eta, dtype=np.float64).reshape(-1)
    lam = expm1_profile(eta)
    return float(np.max(np.abs(lam - softmax(eta))))
