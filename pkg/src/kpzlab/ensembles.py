"""Ordered line ensembles, Dyson Brownian motion and Brownian Gibbs resampling."""

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, RejectionBudgetError
from .grid import Grid, GridFunction
from .harness.stats import wilson_ci
from .paths import bridge_paths


class OrderingError(DomainError):
    """Curves of a line ensemble fail to be strictly ordered."""


@dataclass
class LineEnsemble:
    curves: list

    def __post_init__(self):
        if not self.curves:
            raise DomainError("an ensemble needs at least one curve")
        g = self.curves[0].grid
        if any(c.grid != g for c in self.curves):
            raise DomainError("ensemble curves must share a grid")
        v = self.values
        if v.shape[0] > 1 and not np.all(v[:-1] > v[1:]):
            bad = np.argwhere(~(v[:-1] > v[1:]))[0]
            raise OrderingError(f"curves {bad[0] + 1} and {bad[0] + 2} not strictly ordered at x={g.points[bad[1]]}")

    @classmethod
    def from_array(cls, grid, values):
        return cls([GridFunction(grid, row) for row in np.atleast_2d(values)])

    @property
    def grid(self):
        return self.curves[0].grid

    @property
    def k(self):
        return len(self.curves)

    @property
    def values(self):
        return np.vstack([c.values for c in self.curves])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["curve", "x", "value"])
            xs = self.grid.points
            for i, c in enumerate(self.curves, start=1):
                for x, v in zip(xs, c.values):
                    w.writerow([i, f"{x:.17g}", f"{v:.17g}"])


def gue_matrices(n, variance, stream, size):
    """Hermitian Gaussian matrices: diagonal variance ``variance``, off-diagonal
    real and imaginary parts of variance ``variance / 2``."""
    sd = math.sqrt(variance / 2.0)
    a = stream.standard_normal((size, n, n)) * sd + 1j * stream.standard_normal((size, n, n)) * sd
    h = np.triu(a, 1)
    h = h + np.conj(np.swapaxes(h, -1, -2))
    diag = stream.standard_normal((size, n)) * math.sqrt(variance)
    idx = np.arange(n)
    h[:, idx, idx] = diag
    return h


def gue_top_eigenvalue(n, variance, stream, size):
    return np.linalg.eigvalsh(gue_matrices(n, variance, stream, size))[:, -1]


def dyson_paths(n, grid, stream):
    """Eigenvalue paths (descending) of Hermitian Brownian motion started at 0,
    as an array of shape (n, points)."""
    if grid.left <= 0.0:
        raise DomainError("Dyson paths start coincident at time 0; use a grid with left > 0")
    h0 = gue_matrices(n, grid.left, stream, 1)
    inc = gue_matrices(n, grid.h, stream, grid.steps)
    path = np.concatenate([h0, inc]).cumsum(axis=0)
    herm = 0.5 * (path + np.conj(np.swapaxes(path, -1, -2)))
    lam = np.linalg.eigvalsh(herm)
    return lam[:, ::-1].T.copy()


def dyson_bm(n, grid, stream):
    """Dyson Brownian motion with ``n`` curves on ``grid``."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    try:
        lam = dyson_paths(n, grid, stream)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigenvalue solver failed for n={n} on {grid}: {exc}") from exc
    return LineEnsemble.from_array(grid, lam)


def scaled_ensemble(dyson, n, window=None):
    """KPZ-scaled ensemble: unscaled time n + 2n^{2/3}y becomes y."""
    g = dyson.grid
    s = 2.0 * n ** (2.0 / 3.0)
    new = Grid((g.left - n) / s, (g.right - n) / s, g.steps)
    if window is not None and not (new.left <= window[0] and window[1] <= new.right):
        raise DomainError(f"Dyson horizon covers y in [{new.left}, {new.right}], not {window}")
    ys = new.points
    vals = 2.0 ** -0.5 * n ** (-1.0 / 3.0) * (dyson.values - 2.0 * n - s * ys)
    return LineEnsemble.from_array(new, vals)


@dataclass
class TailRow:
    z: float
    s: float
    side: str
    hits: int
    trials: int
    rate: float
    ci_low: float
    ci_high: float
    envelope: float
    within: bool


@dataclass
class RegularityReport:
    c: float
    C: float
    rows: list = field(default_factory=list)

    @property
    def all_within(self):
        return all(r.within for r in self.rows)

    def to_json(self):
        return json.dumps({"c": self.c, "C": self.C, "rows": [asdict(r) for r in self.rows]}, indent=2)


def regular_tail_check(top_values, z_grid, c, C, n=None, s_values=(1.0, 2.0, 3.0)):
    """Compare one-point tails of L(1, z) + 2^{-1/2} z^2 with C exp(-c s^{3/2}).

    ``top_values`` has shape (draws, len(z_grid)).  A row is within the envelope
    when the lower Wilson bound of its empirical rate does not exceed it.
    """
    if any(s < 1 for s in s_values):
        raise DomainError("tail levels must satisfy s >= 1")
    z_grid = np.asarray(z_grid, dtype=float)
    if n is not None and np.any(np.abs(z_grid) > c * n ** (1.0 / 9.0)):
        raise DomainError(f"|z| must not exceed c n^(1/9) = {c * n ** (1.0 / 9.0)}")
    x = np.asarray(top_values, dtype=float) + 2.0 ** -0.5 * z_grid ** 2
    report = RegularityReport(c, C)
    trials = x.shape[0]
    for j, z in enumerate(z_grid):
        for s in s_values:
            env = C * math.exp(-c * s ** 1.5)
            for side, hits in (("lower", int((x[:, j] <= -s).sum())), ("upper", int((x[:, j] >= s).sum()))):
                lo, hi = wilson_ci(hits, trials)
                report.rows.append(TailRow(float(z), float(s), side, hits, trials, hits / trials,
                                           lo, hi, env, lo <= env))
    return report


def gibbs_accepts(proposal, lower):
    """True when the proposed top curves are strictly ordered and strictly above
    ``lower`` (None for no lower curve) at every grid point."""
    p = np.atleast_2d(proposal)
    if p.shape[0] > 1 and not np.all(p[:-1] > p[1:]):
        return False
    return lower is None or bool(np.all(p[-1] > lower))


@dataclass
class ResampleTelemetry:
    attempts: int
    accepted: bool
    wall_time: float

    def to_json(self):
        return json.dumps(asdict(self))


@dataclass
class Resampled:
    ensemble: LineEnsemble
    telemetry: ResampleTelemetry


def gibbs_resample(ensemble, k, window, stream, max_attempts=100000, batch=64):
    """Resample the top ``k`` curves on ``window`` as Brownian bridges conditioned
    on mutual avoidance and on avoiding curve k + 1 (if present)."""
    if not 1 <= k <= ensemble.k:
        raise DomainError(f"k must lie in [1, {ensemble.k}], got {k}")
    g = ensemble.grid
    a, b = window
    i, j = g.index_of(a), g.index_of(b)
    if not 0 <= i < j <= g.steps:
        raise DomainError(f"window {window} is not a proper subinterval of the grid")
    sub = Grid(float(g.points[i]), float(g.points[j]), j - i)
    vals = ensemble.values
    lower = vals[k, i:j + 1] if k < ensemble.k else None
    left, right = vals[:k, i], vals[:k, j]
    start = time.perf_counter()
    attempts = 0
    while attempts < max_attempts:
        m = min(batch, max_attempts - attempts)
        props = np.stack([bridge_paths(sub, left[c], right[c], stream, m) for c in range(k)], axis=1)
        for p in props:
            attempts += 1
            if gibbs_accepts(p[:, 1:-1], None if lower is None else lower[1:-1]):
                out = vals.copy()
                out[:k, i + 1:j] = p[:, 1:-1]
                tel = ResampleTelemetry(attempts, True, time.perf_counter() - start)
                return Resampled(LineEnsemble.from_array(g, out), tel)
    raise RejectionBudgetError(attempts)
