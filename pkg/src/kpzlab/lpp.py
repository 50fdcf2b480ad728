"""Brownian last passage percolation on a grid.

Energies are computed by dynamic programming over jump times restricted to
grid points.  Environment row ``r`` holds the Brownian motion of line
``r + LINE_OFFSET``; the scaled weight routes from line 0 to line n, so an
environment for scaling parameter n carries n + 1 rows.
"""

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .ensembles import LineEnsemble
from .errors import DegenerateInputError, DomainError
from .grid import Grid, GridFunction
from .paths import cell_maxima, motion_paths

LINE_OFFSET = 0

_MAGIC = b"KPZENV1\x00"
_HEADER = struct.Struct("<8sqdqd4Q")


@dataclass
class Environment:
    """Independent Brownian rows sampled on a common time grid."""

    grid: Grid
    paths: np.ndarray
    seed_key: tuple = field(default=(0, 0, 0, 0))

    def __post_init__(self):
        self.paths = np.asarray(self.paths, dtype=float)
        if self.paths.ndim != 2 or self.paths.shape[1] != self.grid.size:
            raise DomainError(f"environment needs shape (lines, {self.grid.size}), got {self.paths.shape}")
        if not np.all(self.paths[:, 0] == 0.0):
            raise DomainError("environment rows must start at 0")

    @classmethod
    def sample(cls, lines, horizon, steps, stream, left=0.0, seed_key=(0, 0, 0, 0)):
        grid = Grid(float(left), float(horizon), int(steps))
        return cls(grid, motion_paths(grid, 0.0, stream, int(lines)), tuple(seed_key))

    @classmethod
    def from_increments(cls, grid, increments, seed_key=(0, 0, 0, 0)):
        inc = np.asarray(increments, dtype=float)
        paths = np.zeros((inc.shape[0], grid.size))
        np.cumsum(inc, axis=1, out=paths[:, 1:])
        return cls(grid, paths, seed_key)

    @property
    def lines(self):
        return self.paths.shape[0]

    @property
    def horizon(self):
        return self.grid.right

    def row(self, line):
        r = line - LINE_OFFSET
        if not 0 <= r < self.lines:
            raise DomainError(f"line {line} not in environment with {self.lines} rows")
        return self.paths[r]

    def to_binary(self, path):
        key = (list(self.seed_key) + [0, 0, 0, 0])[:4]
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, self.lines, self.grid.right, self.grid.steps,
                                  self.grid.left, *[int(k) & 0xFFFFFFFFFFFFFFFF for k in key]))
            fh.write(np.ascontiguousarray(self.paths, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            raw = fh.read()
        magic, n, t_max, steps, left, *key = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise DomainError(f"{path}: not an environment file")
        data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        if data.size != n * (steps + 1):
            raise DomainError(f"{path}: payload has {data.size} values, expected {n * (steps + 1)}")
        return cls(Grid(left, t_max, steps), data.reshape(n, steps + 1).copy(), tuple(key))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["line", "t", "value"])
            for r in range(self.lines):
                for t, v in zip(self.grid.points, self.paths[r]):
                    w.writerow([r + LINE_OFFSET, f"{t:.17g}", f"{v:.17g}"])


def _dp_forward(paths, a, b, stream=None, h=None):
    """Energy from (t_a, first row) to (t_b, last row) over the given rows.

    With a stream, a jump may also happen inside a grid cell: the gain from
    switching there is the cell maximum of the difference of the two lines, a
    bridge of variance 2h, drawn exactly given its end values.  Two jumps
    inside one cell are still missed.
    """
    seg = paths[..., a:b + 1]
    v = seg[..., 0, :] - seg[..., 0, :1]
    for k in range(1, seg.shape[-2]):
        row = seg[..., k, :]
        gain = v - row
        if stream is not None:
            diff = seg[..., k - 1, :] - row
            inside = gain[..., :-1] + cell_maxima(diff, 2.0 * h, stream) - diff[..., :-1]
            gain = np.concatenate([gain[..., :1], np.maximum(gain[..., 1:], inside)], axis=-1)
        v = np.maximum.accumulate(gain, axis=-1) + row
    return v[..., -1]


def _dp_backward(paths, a, b):
    """Energies from (t_s, first row) to (t_b, last row) for every s in [a, b]."""
    seg = paths[..., a:b + 1]
    last = seg[..., -1, :]
    w = last[..., -1:] - last
    for k in range(seg.shape[-2] - 2, -1, -1):
        row = seg[..., k, :]
        w = np.maximum.accumulate((row + w)[..., ::-1], axis=-1)[..., ::-1] - row
    return w


def last_passage(env, start, end):
    """Maximum energy from ``start = (x, i)`` to ``end = (y, j)`` over grid jump times."""
    (x, i), (y, j) = start, end
    if i > j:
        raise DomainError(f"start line {i} above end line {j}")
    if x > y:
        raise DomainError(f"start time {x} after end time {y}")
    a, b = env.grid.index_of(x), env.grid.index_of(y)
    env.row(i), env.row(j)
    rows = env.paths[i - LINE_OFFSET:j - LINE_OFFSET + 1]
    return float(_dp_forward(rows, a, b))


def last_passage_batch(paths, a, b, stream=None, h=None):
    """Vectorised :func:`last_passage` over a stack of environments ``(draws, lines, points)``
    from the first to the last row.  Passing ``stream`` and the grid step ``h``
    lets jumps fall inside cells (see :func:`_dp_forward`), which removes the
    leading downward bias of grid jump times."""
    if stream is not None and h is None:
        raise DomainError("in-cell jumps need the grid step h")
    return _dp_forward(paths, a, b, stream, h)


def _unscaled(n, x, y):
    s = 2.0 * n ** (2.0 / 3.0)
    return s * x, n + s * y


def _psi(n, m, x, y):
    return 2.0 ** -0.5 * n ** (-1.0 / 3.0) * (m - 2.0 * n - 2.0 * n ** (2.0 / 3.0) * (y - x))


def _check_lines(env, n):
    if env.lines - 1 + LINE_OFFSET < n:
        raise DomainError(f"scaled weight at n={n} needs lines 0..{n}, environment has {env.lines}")


def _node(grid, t):
    if not grid.contains(t):
        raise DomainError(f"time {t} outside environment horizon [{grid.left}, {grid.right}]")
    return grid.index_of(t)


def scaled_weight(env, n, x, y):
    """Centred, scaled energy from (x, line 0) to (y, line n) in scaled coordinates."""
    _check_lines(env, n)
    s, t = _unscaled(n, x, y)
    a, b = _node(env.grid, s), _node(env.grid, t)
    if a > b:
        raise DomainError(f"start {x} lies after end {y} in unscaled time")
    m = _dp_backward(env.paths[:n + 1 - LINE_OFFSET], a, b)[0]
    return float(_psi(n, m, x, y))


@dataclass
class RewardFunction:
    """Initial reward on a grid of scaled starting points; -inf marks excluded points."""

    grid: Grid
    values: np.ndarray
    psi: tuple

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        p1, p2, p3 = self.psi
        if min(self.psi) <= 0:
            raise DomainError(f"reward class parameters must be positive, got {self.psi}")
        GridFunction(self.grid, self.values, allow_neg_inf=True)
        xs = self.grid.points
        finite = np.isfinite(self.values)
        if not finite.any():
            raise DegenerateInputError("reward is identically -inf")
        if np.any(self.values[finite] > p1 * (1.0 + np.abs(xs[finite]))):
            raise DomainError("reward exceeds the linear growth envelope")
        near = finite & (np.abs(xs) <= p2)
        if not near.any() or self.values[near].max() <= -p3:
            raise DomainError("reward is too low near the origin for its class")

    @classmethod
    def narrow_wedge(cls, grid, at=0.0, psi=(1.0, 1.0, 1.0), height=0.0):
        v = np.full(grid.size, -np.inf)
        v[grid.index_of(at)] = height
        return cls(grid, v, psi)


def _rewarded_profile(env, n, f, y):
    _check_lines(env, n)
    s0, t = _unscaled(n, 0.0, y)
    b = _node(env.grid, t)
    xs = f.grid.points
    ok = np.isfinite(f.values) & (xs <= 0.5 * n ** (1.0 / 3.0) + y)
    starts = 2.0 * n ** (2.0 / 3.0) * xs
    ok &= (starts >= env.grid.left - 1e-12) & (starts <= t + 1e-12)
    if not ok.any():
        raise DegenerateInputError("reward is -inf on the admissible starting range")
    idx = np.array([env.grid.index_of(s) for s in starts[ok]])
    a = int(idx.min())
    w = _dp_backward(env.paths[:n + 1 - LINE_OFFSET], a, b)
    m = w[idx - a]
    vals = _psi(n, m, xs[ok], y) + f.values[ok]
    return xs[ok], vals


def f_rewarded_weight(env, n, f, y):
    """Supremum over admissible grid starts of the scaled weight plus reward."""
    _, vals = _rewarded_profile(env, n, f, y)
    return float(vals.max())


def polymer_argmax(env, n, f, y):
    """Leftmost maximising start of :func:`f_rewarded_weight`."""
    xs, vals = _rewarded_profile(env, n, f, y)
    return float(xs[int(np.argmax(vals))])


def parabola(x):
    return 2.0 ** -0.5 * np.square(x)


def tangent_line(x, y):
    return -(2.0 ** -0.5) * y * y - 2.0 ** 0.5 * y * (x - y)


def parabolic_shift(ensemble, y, window=None):
    """Recentre an ensemble at ``y``: new curve i at x is L(i, x + y) minus the
    tangent line of the parabola at y, evaluated at x + y.

    The result lives on the translated grid.  ``window`` optionally names an
    interval that must be covered after translation.
    """
    g = ensemble.grid
    new = Grid(g.left - y, g.right - y, g.steps) if y != 0 else g
    if window is not None and not (new.left <= window[0] and window[1] <= new.right):
        raise DomainError(f"window {window} not covered after shifting by {y}")
    line = tangent_line(g.points, y)
    return LineEnsemble([GridFunction(new, c.values - line) for c in ensemble.curves])
