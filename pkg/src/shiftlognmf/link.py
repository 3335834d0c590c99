"""The shifted-log link family.

g(lambda; c) = alpha_c * log(1 + lambda / c) with alpha_c = max(1, c), a
bijection on [0, inf). Large c makes it approach the identity; small c makes
it behave like a log link up to the additive constant alpha_c * log(1/c).
The inverse is g^{-1}(b) = c * (exp(b / alpha_c) - 1).

All functions accept scalars or arrays and are computed with log1p/expm1 so
accuracy survives lambda/c spanning many orders of magnitude. The "c =
infinity" identity link is deliberately not a LinkParam; it is a separate
code path in the likelihood and fitter modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinkParam:
    """A finite, strictly positive shift c; alpha is max(1, c)."""

    c: float

    def __post_init__(self):
        c = float(self.c)
        if not math.isfinite(c) or c <= 0.0:
            raise ValueError("link shift c must be finite and > 0, got %r" % (self.c,))
        object.__setattr__(self, "c", c)

    @property
    def alpha(self) -> float:
        return max(1.0, self.c)


def _as_param(p) -> LinkParam:
    return p if isinstance(p, LinkParam) else LinkParam(p)


def link_forward(lam, p):
    """g(lambda; c) = alpha_c * log(1 + lambda/c). Strictly increasing, 0 at 0."""
    p = _as_param(p)
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("link_forward requires lambda >= 0")
    out = p.alpha * np.log1p(lam / p.c)
    return float(out) if out.ndim == 0 else out


def link_inverse(b, p):
    """g^{-1}(b) = c * (exp(b/alpha_c) - 1) for b >= 0."""
    p = _as_param(p)
    b = np.asarray(b, dtype=np.float64)
    if np.any(b < 0):
        raise ValueError("link_inverse requires b >= 0")
    out = p.c * np.expm1(b / p.alpha)
    return float(out) if out.ndim == 0 else out


def factor_effect(lambda_without, lambda_with, p):
    """alpha_c * log((lambda' + c)/(lambda + c)).

    When the two rates come from the model with and without factor k, this
    equals l_ik * f_jk for every c, which is what makes the loadings directly
    interpretable. Computed as alpha * log1p((lambda' - lambda)/(lambda + c))
    to keep precision when the ratio is near 1.
    """
    p = _as_param(p)
    lam0 = np.asarray(lambda_without, dtype=np.float64)
    lam1 = np.asarray(lambda_with, dtype=np.float64)
    if np.any(lam0 <= 0) or np.any(lam1 <= 0):
        raise ValueError("factor_effect requires strictly positive rates")
    out = p.alpha * np.log1p((lam1 - lam0) / (lam0 + p.c))
    return float(out) if out.ndim == 0 else out
