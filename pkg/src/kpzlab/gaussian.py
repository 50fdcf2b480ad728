"""Gaussian densities and distribution functions used throughout."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

SQRT2PI = math.sqrt(2.0 * math.pi)


def _check_var(variance):
    if not np.all(np.asarray(variance) > 0):
        raise DomainError(f"variance must be positive, got {variance!r}")


def phi(variance, x):
    """Centred normal density with the given variance, evaluated at ``x``."""
    _check_var(variance)
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x / variance) / np.sqrt(2.0 * np.pi * variance)
    return float(out) if out.ndim == 0 else out


def phi_tilde(variance, x):
    """Signed mass of N(0, variance) between 0 and ``x``."""
    _check_var(variance)
    x = np.asarray(x, dtype=float)
    out = 0.5 * special.erf(x / np.sqrt(2.0 * variance))
    return float(out) if out.ndim == 0 else out


def log_phi(variance, x):
    return -0.5 * np.square(x) / variance - 0.5 * np.log(2.0 * np.pi * variance)


@dataclass(frozen=True)
class GaussParams:
    mean: float
    variance: float

    def __post_init__(self):
        _check_var(self.variance)

    @property
    def sd(self):
        return math.sqrt(self.variance)

    def sf(self, t):
        return special.ndtr((self.mean - np.asarray(t, dtype=float)) / self.sd)

    def log_sf(self, t):
        return special.log_ndtr((self.mean - np.asarray(t, dtype=float)) / self.sd)

    def cdf(self, t):
        return special.ndtr((np.asarray(t, dtype=float) - self.mean) / self.sd)


def conditional_exceedance(params, s, r):
    """P(X >= s + r | X >= s) for X with law ``params``; computed in log space."""
    s = np.asarray(s, dtype=float)
    return np.exp(params.log_sf(s + r) - params.log_sf(s))
