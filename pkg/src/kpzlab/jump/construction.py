"""Everything the jump ensemble reads from a line ensemble: the majorant,
[l, r], poles, Tent, side data, Corner vectors and the favourable event."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError
from ..grid import GridFunction
from .corners import SideData, corner_vectors
from .geometry import PiecewiseLinear, compute_lr, concave_majorant, pole_set, tent_map


@dataclass(frozen=True)
class FavReport:
    f1: bool
    f2: bool
    f3: bool

    @property
    def fav(self):
        return self.f1 and self.f2 and self.f3

    def as_tuple(self):
        return self.f1, self.f2, self.f3, self.fav


@dataclass(frozen=True)
class JumpData:
    params: object
    grid: object            # [-2T, 2T]
    top: np.ndarray         # curves 1..k on the grid, shape (k, points)
    lower: GridFunction     # curve k + 1 on the grid
    majorant: PiecewiseLinear
    l_point: float
    r_point: float
    poles: Optional[list]
    tent: Optional[PiecewiseLinear]
    left: SideData
    right: SideData
    corner_l: np.ndarray
    corner_r: np.ndarray
    fav: FavReport

    @property
    def k(self):
        return self.top.shape[0]

    @property
    def middle_slice(self):
        g = self.grid
        return slice(g.index_of(self.l_point), g.index_of(self.r_point) + 1)

    @property
    def middle_grid(self):
        return self.grid.subgrid(self.l_point, self.r_point)[0]

    @property
    def ends(self):
        return self.top[:, 0], self.top[:, -1]


def _window(ensemble, T, k):
    g = ensemble.grid
    if ensemble.k < k + 1:
        raise DomainError(f"need at least {k + 1} curves, ensemble has {ensemble.k}")
    sub, i, j = g.subgrid(-2.0 * T, 2.0 * T)
    sub.index_of(-T), sub.index_of(T)
    vals = ensemble.values[:k + 1, i:j + 1]
    return sub, vals


def fav_events(T, top, lower, grid, corner_l, corner_r):
    t2 = T * T
    lo, hi = t2 * (-2.0 * math.sqrt(2.0) - 1.0), t2 * (-2.0 * math.sqrt(2.0) + 1.0)
    ends = np.concatenate([top[:, 0], top[:, -1]])
    f1 = bool(np.all((ends >= lo) & (ends <= hi)))
    i, j = grid.index_of(-T), grid.index_of(T)
    f2 = bool(np.all(np.abs(lower[i:j + 1]) <= t2))
    c = np.concatenate([corner_l, corner_r])
    f3 = bool(np.all(np.abs(c) <= t2))
    return FavReport(f1, f2, f3)


def build_jump_data(ensemble, params, need_poles=True):
    """Assemble :class:`JumpData` from an ensemble whose grid has nodes at +-T and +-2T."""
    T, k = params.T, params.k
    grid, vals = _window(ensemble, T, k)
    top, low = vals[:k], vals[k]
    lower = GridFunction(grid, low)
    maj = concave_majorant(lower, (-T, T))
    l_pt, r_pt = compute_lr(maj, T)
    il, ir = grid.index_of(l_pt), grid.index_of(r_pt)
    left = SideData.from_curves(grid.subgrid(-2 * T, l_pt)[0], top[:, :il + 1], low[:il + 1], True)
    right = SideData.from_curves(grid.subgrid(r_pt, 2 * T)[0], top[:, ir:], low[ir:], False)
    corner_l, corner_r = corner_vectors(left, right)
    fav = fav_events(T, top, low, grid, corner_l, corner_r)
    poles = tent = None
    if need_poles:
        inside = maj.xs[(maj.xs >= l_pt) & (maj.xs <= r_pt)]
        poles = pole_set(list(inside), l_pt, r_pt, params.d_ip)
        tent = tent_map(poles, lower)
    return JumpData(params, grid, top, lower, maj, l_pt, r_pt, poles, tent, left, right,
                    corner_l, corner_r, fav)


def fav_check(ensemble, params):
    """(F1, F2, F3, Fav) for the ensemble."""
    return build_jump_data(ensemble, params, need_poles=False).fav.as_tuple()
