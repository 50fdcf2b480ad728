"""Brownian motion and bridge samplers on grids, the bridge decomposition and
the decomposition of a path around its maximum."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, DomainError
from .grid import Grid, GridFunction


def _weights(grid):
    # exact 0 and 1 at the ends
    return np.arange(grid.size) / grid.steps


def motion_paths(grid, start, stream, size):
    """Array of ``size`` Brownian paths on ``grid`` started at ``start``."""
    inc = stream.standard_normal((size, grid.steps)) * math.sqrt(grid.h)
    out = np.empty((size, grid.size))
    out[:, 0] = 0.0
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out + start


def bridge_paths(grid, left, right, stream, size):
    """Array of ``size`` Brownian bridges on ``grid`` pinned at ``left`` and ``right``.

    Endpoint values may be arrays broadcastable against the draw axis.
    """
    w = _weights(grid)
    b = motion_paths(grid, 0.0, stream, size)
    b -= b[:, -1:] * w
    left = np.asarray(left, dtype=float).reshape(-1, 1) if np.ndim(left) else left
    right = np.asarray(right, dtype=float).reshape(-1, 1) if np.ndim(right) else right
    b += (1.0 - w) * left + w * right
    return b


def sample_bridge(grid, left_value, right_value, stream):
    return GridFunction(grid, bridge_paths(grid, left_value, right_value, stream, 1)[0])


def sample_motion(grid, start_value, stream):
    return GridFunction(grid, motion_paths(grid, start_value, stream, 1)[0])


def affine_part(values, w):
    return (1.0 - w) * values[..., :1] + w * values[..., -1:]


def bridge_decompose(path, knots=()):
    """Split ``path`` at grid-aligned interior ``knots`` into the pieces with the
    chord between consecutive knots removed; each piece vanishes at both ends."""
    g = path.grid
    idx = [g.index_of(k) for k in knots]
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise DomainError("knots must be strictly increasing")
    if idx and (idx[0] == 0 or idx[-1] == g.steps):
        raise DomainError("knots must be interior to the path's interval")
    bounds = [0] + idx + [g.steps]
    pts = g.points
    pieces = []
    for a, b in zip(bounds, bounds[1:]):
        sub = Grid(float(pts[a]), float(pts[b]), b - a)
        v = path.values[a:b + 1]
        piece = v - affine_part(v, _weights(sub))
        piece[0] = piece[-1] = 0.0
        pieces.append(GridFunction(sub, piece))
    return pieces


@dataclass
class MaxDecomposition:
    argmax: float
    maximum: float
    right: Optional[GridFunction]
    left: Optional[GridFunction]

    @property
    def right_degenerate(self):
        return self.right is None

    @property
    def left_degenerate(self):
        return self.left is None


def _side(times, values, scale, steps):
    # times run from the maximiser outward, mapped linearly onto [0, 1]
    if steps is None:
        return GridFunction(Grid(0.0, 1.0, len(times) - 1), values / scale)
    u = np.linspace(0.0, 1.0, steps + 1)
    src = np.linspace(0.0, 1.0, len(times))
    return GridFunction(Grid(0.0, 1.0, steps), np.interp(u, src, values) / scale)


def decompose_at_max(path, steps=None):
    """Split a path on [0, 1] started at 0 into the two rescaled, reflected pieces
    on either side of its grid maximiser.

    By default each side lives on a [0, 1] grid with as many steps as the
    original side, so nodes map to nodes; pass ``steps`` to resample both sides
    onto a common grid by linear interpolation.
    """
    g = path.grid
    if g.left != 0.0 or g.right != 1.0:
        raise DomainError(f"expected a path on [0, 1], got [{g.left}, {g.right}]")
    if path.values[0] != 0.0:
        raise DomainError("path must start at 0")
    v = path.values
    i = int(np.argmax(v))
    m = float(v[i])
    if np.count_nonzero(v == m) > 1:
        raise DegenerateInputError("maximum attained at more than one grid point")
    x = float(g.points[i])
    right = left = None
    if i < g.steps:
        right = _side(g.points[i:], m - v[i:], math.sqrt(1.0 - x), steps)
    if i > 0:
        left = _side(g.points[i::-1], m - v[i::-1], math.sqrt(x), steps)
    return MaxDecomposition(x, m, right, left)


def reassemble(dec, grid):
    """Invert :func:`decompose_at_max` on the nodes of ``grid``."""
    xs = grid.points
    out = np.full(grid.size, dec.maximum)
    x0 = dec.argmax
    if dec.right is not None:
        r = xs >= x0
        u = (xs[r] - x0) / (1.0 - x0)
        out[r] = dec.maximum - math.sqrt(1.0 - x0) * np.interp(u, dec.right.x, dec.right.values)
    if dec.left is not None:
        l = xs < x0
        u = (x0 - xs[l]) / x0
        out[l] = dec.maximum - math.sqrt(x0) * np.interp(u, dec.left.x, dec.left.values)
    return out


def argmax_batch(paths):
    """Leftmost argmax index and maximum of each row."""
    i = np.argmax(paths, axis=1)
    return i, paths[np.arange(len(paths)), i]


def cell_maxima(paths, h, stream):
    """Maximum of a Brownian bridge over each grid cell, drawn given the cell's
    end values.  Shape (rows, cells)."""
    paths = np.atleast_2d(paths)
    a, b = paths[..., :-1], paths[..., 1:]
    u = stream.random(a.shape)
    return 0.5 * (a + b + np.sqrt((a - b) ** 2 - 2.0 * h * np.log1p(-u)))


def bridge_sup_batch(paths, h, stream=None):
    """Supremum of each row.  Without a stream this is the grid maximum; with
    one, each cell's maximum is drawn from the law of a Brownian bridge between
    its end values, which makes the result exact in law for Brownian paths."""
    paths = np.atleast_2d(paths)
    if stream is None:
        return paths.max(axis=1)
    return cell_maxima(paths, h, stream).max(axis=1)


def continuum_argmax_batch(paths, grid, stream, sub=256):
    """Location and value of the maximum of the Brownian path interpolating each row.

    The winning cell is exact in law; the location inside it is drawn from the
    density proportional to the two first-passage densities up to the maximum,
    by inverse CDF on ``sub`` sub-cells with a uniform position inside the chosen one.
    """
    paths = np.atleast_2d(paths)
    h = grid.h
    cm = cell_maxima(paths, h, stream)
    rows = np.arange(len(paths))
    j = np.argmax(cm, axis=1)
    m = cm[rows, j]
    da = (m - paths[rows, j])[:, None]
    db = (m - paths[rows, j + 1])[:, None]
    t = (np.arange(sub) + 0.5) / sub * h
    logf = (np.log(da + 1e-300) - 1.5 * np.log(t) - da ** 2 / (2 * t)
            + np.log(db + 1e-300) - 1.5 * np.log(h - t) - db ** 2 / (2 * (h - t)))
    w = np.exp(logf - logf.max(axis=1, keepdims=True))
    cdf = np.cumsum(w, axis=1)
    u = stream.random(len(paths)) * cdf[:, -1]
    k = np.minimum((cdf < u[:, None]).sum(axis=1), sub - 1)
    tau = (k + stream.random(len(paths))) / sub * h
    return grid.points[j] + tau, m
