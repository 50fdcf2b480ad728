"""Concave majorant of the lower curve, the interval [l, r], the pole set and
the Tent map."""

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, DomainError, ParameterError


@dataclass
class PiecewiseLinear:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        if len(self.xs) < 2 or np.any(np.diff(self.xs) <= 0):
            raise DomainError("need at least two strictly increasing breakpoints")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.xs[0] - 1e-9) or np.any(x > self.xs[-1] + 1e-9):
            raise DomainError(f"evaluation outside [{self.xs[0]}, {self.xs[-1]}]")
        out = np.interp(x, self.xs, self.ys)
        return float(out) if out.ndim == 0 else out

    @property
    def slopes(self):
        return np.diff(self.ys) / np.diff(self.xs)

    def is_concave(self, tol=1e-9):
        s = self.slopes
        return bool(np.all(np.diff(s) <= tol * (1.0 + np.abs(s[1:]))))


def upper_hull(xs, ys):
    """Indices of the vertices of the least concave majorant of the points,
    which must be sorted by abscissa.  Collinear points are dropped."""
    hull = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def concave_majorant(curve, window):
    """Least concave majorant of ``curve`` over the grid points of ``window``.

    The breakpoints of the returned function are the extreme points.
    """
    a, b = window
    if not b > a:
        raise DomainError(f"empty window {window}")
    g = curve.grid
    i, j = g.index_of(a), g.index_of(b)
    xs = g.points[i:j + 1]
    ys = curve.values[i:j + 1]
    h = upper_hull(xs, ys)
    return PiecewiseLinear(xs[h], ys[h])


def compute_lr(majorant, T):
    """First breakpoint whose right slope is at most 4T and last breakpoint whose
    left slope is at least -4T."""
    s = majorant.slopes
    xs = majorant.xs
    down = np.nonzero(s <= 4.0 * T)[0]
    l_pt = float(xs[down[0]]) if down.size else float(xs[-1])
    up = np.nonzero(s >= -4.0 * T)[0]
    r_pt = float(xs[up[-1] + 1]) if up.size else float(xs[0])
    return l_pt, r_pt


def pole_set(xext, l_pt, r_pt, d_ip):
    """Subset of the extreme points on [l, r] containing both ends, with gaps at
    least ``d_ip`` and every extreme point within ``d_ip`` of a pole; of maximal
    size and then lexicographically maximal."""
    if d_ip > r_pt - l_pt:
        raise ParameterError(f"inter-pole distance {d_ip} exceeds r - l = {r_pt - l_pt}")
    x = np.array(sorted(v for v in xext if l_pt <= v <= r_pt), dtype=float)
    if x.size == 0 or x[0] != l_pt or x[-1] != r_pt:
        raise DomainError("l and r must be extreme points")
    m = len(x) - 1
    # q is a valid successor of p when x_q - x_p >= d_ip and no extreme point lies
    # farther than d_ip from both; the valid q form a contiguous index range
    ranges = []
    for p in range(m):
        diff = x[p + 1:] - x[p]
        lo = p + 1 + int(np.searchsorted(diff, d_ip, side="left"))
        a = p + 1 + int(np.searchsorted(diff, d_ip, side="right"))
        hi = m if a > m else max(a, a + int(np.searchsorted(x[a + 1:] - x[a], d_ip, side="right")))
        ranges.append((lo, min(hi, m)))
    best = np.full(m + 1, -1)
    best[m] = 1
    for p in range(m - 1, -1, -1):
        lo, hi = ranges[p]
        if lo <= hi:
            top = best[lo:hi + 1].max()
            best[p] = top + 1 if top > 0 else -1
    if best[0] < 0:
        raise DegenerateInputError("no admissible pole set")
    poles, p = [0], 0
    while p != m:
        lo, hi = ranges[p]
        p = lo + int(np.nonzero(best[lo:hi + 1] == best[p] - 1)[0][-1])
        poles.append(p)
    return [float(x[i]) for i in poles]


def tent_map(poles, lower):
    """Linear interpolation of the lower curve through the poles."""
    if len(poles) < 2:
        raise DomainError("the Tent map needs at least two poles")
    ys = [lower.at(p) for p in poles]
    return PiecewiseLinear(np.array(poles), np.array(ys))
