"""Patchwork quilts: fabrics on a common grid, shifted vertically so that they
join continuously at the stitch points.  Also the increment-moment experiment
for scaled weight profiles."""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import Grid, GridFunction
from .harness.stats import mean_stderr
from .lpp import LINE_OFFSET, Environment, _psi, _unscaled, f_rewarded_weight
from .paths import motion_paths


@dataclass(frozen=True)
class Quilt:
    fabrics: tuple
    stitches: tuple
    shifts: tuple

    @property
    def grid(self):
        return self.fabrics[0].grid

    def piece_index(self):
        """Fabric index used at each grid node (stitch nodes belong to the left piece)."""
        g = self.grid
        idx = np.zeros(g.size, dtype=int)
        for s in self.stitches:
            idx[g.index_of(s) + 1:] += 1
        return idx

    def evaluate(self):
        if not self.stitches:
            return GridFunction(self.grid, self.fabrics[0].values.copy())
        piece = self.piece_index()
        stack = np.stack([f.values for f in self.fabrics])
        vals = stack[piece, np.arange(self.grid.size)] + np.asarray(self.shifts)[piece]
        return GridFunction(self.grid, vals)

    def continuity_residual(self):
        """Largest jump at a stitch between the two shifted fabrics meeting there."""
        out = 0.0
        for i, s in enumerate(self.stitches):
            left = self.fabrics[i].at(s) + self.shifts[i]
            right = self.fabrics[i + 1].at(s) + self.shifts[i + 1]
            out = max(out, abs(left - right))
        return out

    def to_csv(self, path):
        q = self.evaluate()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "piece", "value"])
            for x, p, v in zip(q.x, self.piece_index(), q.values):
                w.writerow([f"{x:.17g}", int(p), f"{v:.17g}"])


def build_quilt(fabrics, stitches=()):
    """Quilt from ``len(stitches) + 1`` fabrics; the first fabric is not shifted."""
    fabrics = tuple(fabrics)
    stitches = tuple(float(s) for s in stitches)
    if not fabrics:
        raise DomainError("a quilt needs at least one fabric")
    if len(fabrics) != len(stitches) + 1:
        raise DomainError(f"{len(fabrics)} fabrics do not match {len(stitches)} stitches")
    g = fabrics[0].grid
    if any(f.grid != g for f in fabrics):
        raise DomainError("fabrics must share a grid")
    if any(b <= a for a, b in zip(stitches, stitches[1:])):
        raise DomainError("stitch points must be strictly increasing; merge repeated points first")
    for s in stitches:
        i = g.index_of(s)
        if not 0 < i < g.steps:
            raise DomainError(f"stitch {s} is not interior to [{g.left}, {g.right}]")
    shifts = [0.0]
    for i, s in enumerate(stitches):
        shifts.append(shifts[-1] + fabrics[i].at(s) - fabrics[i + 1].at(s))
    q = Quilt(fabrics, stitches, tuple(shifts))
    return q, q.evaluate()


# increment moments of the narrow-wedge weight profile

def _forward_profile(paths):
    # energies from (0, first row) to (t, last row) for every grid time t
    v = paths[..., 0, :] - paths[..., 0, :1]
    for k in range(1, paths.shape[-2]):
        row = paths[..., k, :]
        v = np.maximum.accumulate(v - row, axis=-1) + row
    return v


def profile_grid(n, y_max, steps_to_n):
    """Grid from 0 past the unscaled time of y_max, with spacing n / steps_to_n."""
    h = n / steps_to_n
    end = _unscaled(n, 0.0, y_max)[1]
    steps = math.ceil(end / h) + 1
    return Grid(0.0, steps * h, steps)


def aligned_levels(n, grid, targets):
    """Scaled y values at grid nodes nearest to the requested ones."""
    s = 2.0 * n ** (2.0 / 3.0)
    n_idx = int(round(n / grid.h))
    idx = [n_idx + int(round(s * y / grid.h)) for y in targets]
    return np.array([(i - n_idx) * grid.h / s for i in idx]), np.array(idx), n_idx


def wedge_increments(stream, size, n=10, targets=(0.01, 0.02, 0.05, 0.1), steps_to_n=20000, chunk=50):
    """Increments W(y) - W(0) of the narrow-wedge weight at the grid-aligned
    levels, one row per environment.  Returns (levels, increments)."""
    g = profile_grid(n, max(targets), steps_to_n)
    ys, idx, n_idx = aligned_levels(n, g, targets)
    rows = n + 1 - LINE_OFFSET
    out = []
    done = 0
    while done < size:
        m = min(chunk, size - done)
        env = motion_paths(g, 0.0, stream, m * rows).reshape(m, rows, g.size)
        prof = _forward_profile(env)
        w0 = _psi(n, prof[:, n_idx], 0.0, 0.0)
        out.append(np.stack([_psi(n, prof[:, i], 0.0, y) - w0 for i, y in zip(idx, ys)], axis=1))
        done += m
    return ys, (np.concatenate(out) if out else np.empty((0, len(ys))))


def reward_increments(stream, size, f, n=10, targets=(0.01, 0.02, 0.05, 0.1), steps_to_n=20000):
    """As :func:`wedge_increments` for a general reward function ``f``."""
    g = profile_grid(n, max(targets), steps_to_n)
    ys, _, _ = aligned_levels(n, g, targets)
    rows = n + 1 - LINE_OFFSET
    out = np.empty((size, len(ys)))
    for r in range(size):
        env = Environment(g, motion_paths(g, 0.0, stream, rows))
        w0 = f_rewarded_weight(env, n, f, 0.0)
        out[r] = [f_rewarded_weight(env, n, f, y) - w0 for y in ys]
    return ys, out


def moment_table(ys, increments, eta):
    """(2 - eta)-moments per level with a log-log slope fit over the nonzero
    levels.  The table starts with the y = 0 row, whose moment is 0."""
    inc = np.abs(np.asarray(increments)) ** (2.0 - eta)
    rows = [{"y": 0.0, "moment": 0.0, "stderr": 0.0}]
    for j, y in enumerate(ys):
        mean, se = mean_stderr(inc[:, j])
        rows.append({"y": float(y), "moment": mean, "stderr": se})
    lx = np.log(ys)
    ly = np.log([r["moment"] for r in rows[1:]])
    A = np.vstack([lx, np.ones_like(lx)]).T
    slope = float(np.linalg.lstsq(A, ly, rcond=None)[0][0])
    # slope stderr by the delta method from the per-level relative stderr
    rel = np.array([r["stderr"] / r["moment"] for r in rows[1:]])
    P = np.linalg.pinv(A)
    se = float(math.sqrt((P @ np.diag(rel ** 2) @ P.T)[0, 0]))
    target = 1.0 - eta / 2.0
    return {"eta": eta, "replications": int(inc.shape[0]), "rows": rows, "slope": slope,
            "slope_stderr": se, "slope_ci": (slope - 1.96 * se, slope + 1.96 * se), "target": target,
            "soft_ok": slope <= target + 0.15, "within": abs(slope - target) <= 0.15}


def increment_moment_experiment(stream, f=None, eta=0.5, n=10, replications=1000,
                                targets=(0.01, 0.02, 0.05, 0.1), steps_to_n=20000):
    """Monte Carlo E|W^f(y) - W^f(0)|^{2 - eta} on independent environments.

    ``f=None`` is the narrow wedge at 0, computed in one vectorised sweep.
    """
    if not 0 < eta <= 0.5:
        raise DomainError(f"need eta in (0, 1/2], got {eta}")
    if f is None:
        ys, inc = wedge_increments(stream, replications, n, targets, steps_to_n)
    else:
        ys, inc = reward_increments(stream, replications, f, n, targets, steps_to_n)
    out = moment_table(ys, inc, eta)
    out["n"] = n
    return out
