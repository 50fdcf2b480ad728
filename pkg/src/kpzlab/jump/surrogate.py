"""Parabolic test ensembles on [-2T, 2T] for exercising the jump construction.

The lowest curve is -2^{-1/2} x^2 - 1 plus a stationary Ornstein-Uhlenbeck
process; each curve above adds a gap of 0.5 + |OU| to the one below.
"""

import math

import numpy as np

from ..ensembles import LineEnsemble
from ..grid import Grid

SPACING = 0.25
OU_RATE = 1.0


def surrogate_grid(T, spacing=SPACING):
    """Grid on [-2T, 2T] with nodes at +-T and spacing at most ``spacing``."""
    quarter = max(1, math.ceil(T / spacing))
    return Grid(-2.0 * T, 2.0 * T, 4 * quarter)


def ou_paths(grid, stream, size, rate=OU_RATE):
    """Stationary OU paths (unit diffusion) by the exact AR(1) recursion."""
    a = math.exp(-rate * grid.h)
    sd = math.sqrt((1.0 - a * a) / (2.0 * rate))
    z = stream.standard_normal((size, grid.size))
    out = np.empty_like(z)
    out[:, 0] = z[:, 0] / math.sqrt(2.0 * rate)
    for i in range(1, grid.size):
        out[:, i] = a * out[:, i - 1] + sd * z[:, i]
    return out


def parabolic_surrogate(params, stream, curves=None, spacing=SPACING):
    """A strictly ordered ensemble with ``curves`` curves (default k + 1)."""
    curves = curves or params.k + 1
    g = surrogate_grid(params.T, spacing)
    noise = ou_paths(g, stream, curves)
    vals = np.empty((curves, g.size))
    vals[-1] = -(2.0 ** -0.5) * g.points ** 2 - 1.0 + noise[-1]
    for i in range(curves - 2, -1, -1):
        vals[i] = vals[i + 1] + 0.5 + np.abs(noise[i])
    return LineEnsemble.from_array(g, vals)
