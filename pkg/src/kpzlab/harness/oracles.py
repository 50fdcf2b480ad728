"""Brute-force references and random instance generators for the oracle
experiments.  These are deliberately naive and share no code with the
implementations they check."""

import itertools

import numpy as np

from ..grid import Grid
from ..jump.corners import SideData


def pole_set_exhaustive(xext, l_pt, r_pt, d_ip):
    """Admissible pole sets by enumeration: contain l and r, gaps >= d_ip, every
    extreme point within d_ip of some pole.  Largest size, then lexicographically
    largest.  None when nothing is admissible."""
    pts = sorted(v for v in xext if l_pt <= v <= r_pt)
    inner = [v for v in pts if l_pt < v < r_pt]
    best = None
    for size in range(len(inner), -1, -1):
        for combo in itertools.combinations(inner, size):
            cand = [l_pt, *combo, r_pt]
            if any(b - a < d_ip for a, b in zip(cand, cand[1:])):
                continue
            if any(min(abs(v - p) for p in cand) > d_ip for v in pts):
                continue
            if best is None or cand > best:
                best = cand
        if best is not None:
            return best
    return None


def random_pole_instance(stream, max_points=12):
    """Sorted extreme points on [0, L] including both ends, and a spacing."""
    m = int(stream.integers(2, max_points + 1))
    length = float(stream.uniform(4.0, 20.0))
    inner = np.sort(stream.uniform(0.0, length, m - 2))
    # a few exact coincidences of gaps with d exercise the >= boundary
    xext = [0.0, *np.round(inner, 1).tolist(), round(length, 1)]
    xext = sorted(set(xext))
    d = float(np.round(stream.uniform(0.5, 4.0), 1))
    d = min(d, xext[-1] - xext[0])
    return xext, xext[0], xext[-1], d


def side_test_brute(side, inner):
    """Rebuild the side curves pointwise from the raw stored pieces and test
    strict ordering and strict domination of the lower curve."""
    k, m = side.bridges.shape
    for j in range(m):
        w = j / (m - 1)
        vals = [side.bridges[i, j] + (1 - w) * side.outer[i] + w * inner[i] for i in range(k)]
        for i in range(k - 1):
            if not vals[i] > vals[i + 1]:
                return False
        if not vals[-1] > side.lower[j]:
            return False
    return True


def random_side(stream, k, points=16, left=True):
    """Ordered random curves above a random lower curve on a ``points`` grid."""
    g = Grid(0.0, 1.0, points - 1)
    low = np.cumsum(stream.normal(0, 0.3, points))
    curves = np.empty((k, points))
    base = low
    for i in range(k - 1, -1, -1):
        curves[i] = base + stream.uniform(0.05, 1.0) + np.abs(np.cumsum(stream.normal(0, 0.2, points)))
        base = curves[i]
    if not left:
        curves, low = curves[:, ::-1], low[::-1]
    return SideData.from_curves(g, curves, low, left)


def random_inner(stream, corner):
    """Inner values near the corner, on either side of it."""
    k = len(corner)
    return corner + np.sort(stream.normal(0.1, 0.5, k))[::-1]
