"""Degree-2 polynomial approximations of exp(x).

The sparse objective replaces exp at zero-count entries by
eta0 + eta1 x + eta2 x^2. Two constructions are provided: the Taylor
expansion about 0, exact near the origin and poor far from it, and the
3-node Chebyshev interpolant of an interval, which spreads the error evenly
and is near-minimax for degree 2. eta2 > 0 is required downstream so the
approximate objective stays concave in each coordinate; both constructions
satisfy it on the intervals that arise (asserted at build time for
Chebyshev).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Interval widths below this collapse to the Taylor coefficients: the
# Chebyshev interval [0, log(1+1/c)] shrinks to a point as c grows, and
# Taylor about 0 is its limit.
DEGENERATE_WIDTH = 1e-8


@dataclass(frozen=True)
class QuadApprox:
    eta0: float
    eta1: float
    eta2: float
    x_lo: float
    x_hi: float
    method: str  # "taylor" or "chebyshev"


def taylor_about_zero() -> QuadApprox:
    """exp(x) ~ 1 + x + x^2/2, the Taylor polynomial about 0."""
    return QuadApprox(1.0, 1.0, 0.5, 0.0, 0.0, "taylor")


def chebyshev_on(x_lo: float, x_hi: float) -> QuadApprox:
    """Interpolate exp at the three first-kind Chebyshev points of [x_lo, x_hi].

    The coefficients are returned in the original variable (solve the 3x3
    interpolation system directly). Intervals narrower than
    DEGENERATE_WIDTH fall back to the Taylor coefficients.
    """
    x_lo = float(x_lo)
    x_hi = float(x_hi)
    if x_hi < x_lo:
        raise ValueError("inverted interval: x_hi < x_lo")
    if x_hi - x_lo < DEGENERATE_WIDTH:
        return QuadApprox(1.0, 1.0, 0.5, x_lo, x_hi, "taylor")
    mid = 0.5 * (x_lo + x_hi)
    half = 0.5 * (x_hi - x_lo)
    # cos(pi/6), cos(pi/2), cos(5 pi/6): roots of the degree-3 Chebyshev
    # polynomial mapped onto the interval.
    nodes = mid + half * np.cos((2.0 * np.arange(3) + 1.0) * np.pi / 6.0)
    V = np.vander(nodes, 3, increasing=True)
    eta = np.linalg.solve(V, np.exp(nodes))
    if eta[2] <= 0.0:
        raise ValueError(
            "Chebyshev interpolant has non-positive quadratic coefficient on "
            "[%g, %g]; the approximate objective would lose concavity" % (x_lo, x_hi)
        )
    return QuadApprox(float(eta[0]), float(eta[1]), float(eta[2]), x_lo, x_hi, "chebyshev")


def evaluate(q: QuadApprox, x):
    """eta0 + eta1 x + eta2 x^2, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    out = q.eta0 + q.eta1 * x + q.eta2 * (x * x)
    return float(out) if out.ndim == 0 else out


def max_error_on_grid(q: QuadApprox, x_lo: float, x_hi: float, n_points: int) -> float:
    """max |evaluate(x) - exp(x)| over a uniform n_points grid of [x_lo, x_hi]."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not (math.isfinite(x_lo) and math.isfinite(x_hi)):
        raise ValueError("grid endpoints must be finite")
    x = np.linspace(x_lo, x_hi, n_points)
    return float(np.max(np.abs(evaluate(q, x) - np.exp(x))))
