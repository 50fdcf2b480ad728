"""Uniform grids and functions sampled on them."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridAlignmentError

# relative slack (in units of the spacing) when matching an abscissa to a node
ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    left: float
    right: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)):
            raise DomainError("grid endpoints must be finite")
        if not self.left < self.right:
            raise DomainError(f"grid needs left < right, got [{self.left}, {self.right}]")
        if int(self.steps) != self.steps or self.steps < 1:
            raise DomainError(f"grid needs a positive integer step count, got {self.steps}")

    @property
    def h(self):
        return (self.right - self.left) / self.steps

    @property
    def size(self):
        return self.steps + 1

    @property
    def points(self):
        return np.linspace(self.left, self.right, self.steps + 1)

    def index_of(self, x):
        """Index of the node at ``x``; raises if ``x`` is not a node."""
        pos = (x - self.left) / self.h
        i = int(round(pos))
        if abs(pos - i) > ALIGN_TOL * max(1.0, abs(pos)) or not 0 <= i <= self.steps:
            raise GridAlignmentError(f"{x!r} is not a node of {self}")
        return i

    def snap(self, x):
        """Nearest node index, ties broken toward the left."""
        pos = (x - self.left) / self.h
        i = math.ceil(pos - 0.5)
        return min(max(i, 0), self.steps)

    def contains(self, x):
        return self.left - ALIGN_TOL * self.h <= x <= self.right + ALIGN_TOL * self.h

    def subgrid(self, a, b):
        """Grid over [a, b] built from the nodes of this grid."""
        i, j = self.index_of(a), self.index_of(b)
        if j <= i:
            raise DomainError(f"empty subgrid [{a}, {b}]")
        pts = self.points
        return Grid(float(pts[i]), float(pts[j]), j - i), i, j


@dataclass
class GridFunction:
    grid: Grid
    values: np.ndarray
    allow_neg_inf: bool = field(default=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise DomainError(
                f"expected {self.grid.size} values for {self.grid}, got shape {self.values.shape}"
            )
        bad = ~np.isfinite(self.values)
        if self.allow_neg_inf:
            bad &= ~np.isneginf(self.values)
        if bad.any():
            raise DomainError("grid function has non-finite values")

    @property
    def x(self):
        return self.grid.points

    def at(self, x):
        return float(self.values[self.grid.index_of(x)])

    def restrict(self, a, b):
        sub, i, j = self.grid.subgrid(a, b)
        return GridFunction(sub, self.values[i:j + 1].copy(), self.allow_neg_inf)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for x, v in zip(self.x, self.values):
                w.writerow([f"{x:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, allow_neg_inf=False):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["x", "value"]:
            raise DomainError(f"{path}: expected header x,value")
        xs = np.array([float(r[0]) for r in rows[1:]])
        vs = np.array([float(r[1]) for r in rows[1:]])
        if len(xs) < 2:
            raise DomainError(f"{path}: need at least two rows")
        grid = Grid(float(xs[0]), float(xs[-1]), len(xs) - 1)
        if not np.allclose(grid.points, xs, rtol=0, atol=1e-12 * max(1.0, np.abs(xs).max())):
            raise GridAlignmentError(f"{path}: abscissae are not uniform")
        return cls(grid, vs, allow_neg_inf)
