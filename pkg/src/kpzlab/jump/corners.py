"""Side intervals: stored side bridges, Corner vectors, reconstruction and the
Pass test."""

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..grid import Grid


def _chord(outer, inner, w):
    # affine interpolation between the outer end (w = 0) and the inner end (w = 1)
    return (1.0 - w) * outer[:, None] + w * inner[:, None]


@dataclass
class SideData:
    """Top-k data retained on one side interval.

    ``bridges`` holds the curves minus their chord, so every row vanishes at both
    ends.  Columns run from the outer end (+-2T) to the inner end (l or r);
    ``lower`` is curve k + 1 in the same order.
    """

    grid: Grid
    bridges: np.ndarray
    outer: np.ndarray
    lower: np.ndarray
    left: bool

    @classmethod
    def from_curves(cls, grid, curves, lower, left):
        """Build from the top k curves (shape (k, points)) and curve k + 1 on a
        side grid given in increasing x."""
        v = np.atleast_2d(np.asarray(curves, dtype=float))
        low = np.asarray(lower, dtype=float)
        if not left:
            v, low = v[:, ::-1], low[::-1]
        w = cls.weights_for(v.shape[1])
        b = v - _chord(v[:, 0], v[:, -1], w)
        b[:, 0] = b[:, -1] = 0.0
        return cls(grid, b, v[:, 0].copy(), low.copy(), left)

    @staticmethod
    def weights_for(size):
        return np.arange(size) / (size - 1)

    @property
    def k(self):
        return self.bridges.shape[0]

    @property
    def weights(self):
        return self.weights_for(self.bridges.shape[1])

    def curves(self, inner):
        """Side curves when the inner end takes the values ``inner`` (outer to inner order)."""
        inner = np.asarray(inner, dtype=float)
        if inner.shape != (self.k,):
            raise DomainError(f"need {self.k} inner values, got shape {inner.shape}")
        return self.bridges + _chord(self.outer, inner, self.weights)

    def in_x_order(self, values):
        return values if self.left else values[..., ::-1]


def side_corner(side):
    """Corner vector of one side: entry i is the least inner value curve i may
    take, after curves i + 1..k sit at their own corners, without touching the
    curve below on the side interval.  Non-increasing in i."""
    w = side.weights[1:]
    b = side.bridges[:, 1:]
    o = side.outer
    k = side.k
    corner = np.empty(k)
    corner[k - 1] = np.max((side.lower[1:] - b[k - 1] - (1.0 - w) * o[k - 1]) / w)
    for i in range(k - 2, -1, -1):
        gap = np.max(-(b[i] - b[i + 1] + (1.0 - w) * (o[i] - o[i + 1])) / w)
        corner[i] = corner[i + 1] + gap
    return corner


def corner_vectors(left, right):
    return side_corner(left), side_corner(right)


def in_ordered_cone(v):
    """True when ``v`` has positive, strictly decreasing entries."""
    v = np.asarray(v, dtype=float)
    return bool(v[-1] > 0 and np.all(v[:-1] > v[1:]))


def corner_criterion(x_left, x_right, corner_l, corner_r):
    return in_ordered_cone(np.asarray(x_left) - corner_l) and in_ordered_cone(np.asarray(x_right) - corner_r)


def side_test(side, inner):
    """Direct check: the reconstructed side curves are strictly ordered and the
    bottom one stays strictly above the lower curve at every grid point."""
    c = side.curves(inner)
    if c.shape[0] > 1 and not np.all(c[:-1] > c[1:]):
        return False
    return bool(np.all(c[-1] > side.lower))


def reconstruct_values(middle, left, right):
    """Top k curves on [-2T, 2T] from a candidate ``middle`` on [l, r]
    (shape (k, points)) and the two sides.  Shares the nodes l and r."""
    middle = np.atleast_2d(np.asarray(middle, dtype=float))
    if middle.shape[0] != left.k:
        raise DomainError(f"candidate has {middle.shape[0]} curves, sides have {left.k}")
    lv = left.in_x_order(left.curves(middle[:, 0]))
    rv = right.in_x_order(right.curves(middle[:, -1]))
    return np.concatenate([lv[:, :-1], middle, rv[:, 1:]], axis=1)


def continuity_residual(middle, left, right):
    """Largest mismatch at l and r between the side formulas and the candidate."""
    middle = np.atleast_2d(middle)
    lv = left.curves(middle[:, 0])[:, -1]
    rv = right.curves(middle[:, -1])[:, -1]
    return float(max(np.abs(lv - middle[:, 0]).max(), np.abs(rv - middle[:, -1]).max()))


def pass_test(full, lower):
    """Strict ordering of the reconstructed curves and strict domination of the
    lower curve at every grid point of [-2T, 2T]."""
    full = np.atleast_2d(full)
    if full.shape[0] > 1 and not np.all(full[:-1] > full[1:]):
        return False
    return bool(np.all(full[-1] > lower))
