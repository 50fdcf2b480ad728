"""Brownian meander on [0, 1]: transition and marginal densities and an exact
sequential sampler."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .gaussian import SQRT2PI, phi
from .grid import Grid, GridFunction

# below this remaining time the factor Phi~_{1-t}(y) is replaced by its limit 1/2
T_ONE_TOL = 1e-12

# inverse-CDF tables: cells per step and half-width in step standard deviations
TABLE_CELLS = 256
TABLE_WIDTH = 10.0


@dataclass(frozen=True)
class MeanderState:
    time: float
    value: float

    def __post_init__(self):
        if not 0.0 < self.time <= 1.0:
            raise DomainError(f"meander time must lie in (0, 1], got {self.time}")
        if not self.value >= 0.0:
            raise DomainError(f"meander value must be nonnegative, got {self.value}")


def _half_mass(remaining, y):
    # Phi~_{remaining}(y) for y >= 0, with the t -> 1 limit
    y = np.asarray(y, dtype=float)
    if remaining < T_ONE_TOL:
        return np.where(y > 0, 0.5, 0.0)
    return 0.5 * special.erf(y / math.sqrt(2.0 * remaining))


def _log_killed_kernel(dt, x, y):
    """log(phi_dt(y - x) - phi_dt(y + x)) for x, y > 0, stable for small x*y."""
    with np.errstate(divide="ignore"):
        return (-0.5 * (y - x) ** 2 / dt - 0.5 * math.log(2.0 * math.pi * dt)
                + np.log(-np.expm1(-2.0 * x * y / dt)))


def meander_transition_density(frm, to):
    """Density of the meander at ``to.value`` at time ``to.time`` given its value
    ``frm.value`` at time ``frm.time``."""
    s, x, t, y = frm.time, frm.value, to.time, to.value
    if t <= s:
        raise DomainError(f"transition needs s < t, got s={s}, t={t}")
    if x == 0.0:
        raise DomainError("transition from value 0 at positive time; use the marginal density")
    if y == 0.0:
        return 0.0
    num = math.exp(float(_log_killed_kernel(t - s, x, y)))
    return num * float(_half_mass(1.0 - t, y)) / float(_half_mass(1.0 - s, x))


def meander_marginal_density(t, y):
    """One-point density of the standard meander at time ``t``."""
    if not 0.0 < t <= 1.0:
        raise DomainError(f"meander time must lie in (0, 1], got {t}")
    if y < 0:
        raise DomainError(f"meander values are nonnegative, got {y}")
    return 2.0 * SQRT2PI * (y / t) * phi(t, y) * float(_half_mass(1.0 - t, y))


def marginal_cdf_table(t, upper=None, points=4001):
    """Tabulated CDF of the meander marginal at time ``t`` by adaptive quadrature
    on consecutive cells.  Returns (y, cdf)."""
    upper = upper if upper is not None else 12.0 * math.sqrt(t) + 1.0
    ys = np.linspace(0.0, upper, points)
    f = lambda v: meander_marginal_density(t, v)
    pieces = [integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12)[0] for a, b in zip(ys[:-1], ys[1:])]
    return ys, np.concatenate([[0.0], np.cumsum(pieces)])


def _invert_linear_density(y, w, u):
    """Draw from the piecewise-linear density with node weights ``w`` on nodes
    ``y`` (rows are independent problems) using uniforms ``u``."""
    dy = np.diff(y, axis=-1)
    cells = 0.5 * (w[..., 1:] + w[..., :-1]) * dy
    cdf = np.concatenate([np.zeros(cells.shape[:-1] + (1,)), np.cumsum(cells, axis=-1)], axis=-1)
    target = u * cdf[..., -1]
    j = (cdf[..., 1:-1] < target[..., None]).sum(axis=-1)
    take = lambda a: np.take_along_axis(a, j[..., None], axis=-1)[..., 0]
    f0, f1, h = take(w[..., :-1]), take(w[..., 1:]), take(dy)
    rem = np.maximum(target - take(cdf[..., :-1]), 0.0) / h
    disc = np.maximum(f0 * f0 + 2.0 * (f1 - f0) * rem, 0.0)
    denom = f0 + np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(denom > 0, 2.0 * rem / denom, 0.5)
    return take(y[..., :-1]) + np.clip(tau, 0.0, 1.0) * h


def _first_step(t, u):
    # from 0 at time 0 the law is the marginal at t, shared by all draws
    y = np.linspace(0.0, TABLE_WIDTH * math.sqrt(t), 4 * TABLE_CELLS + 1)
    w = y * np.exp(-0.5 * y * y / t) * _half_mass(1.0 - t, y)
    dy = np.diff(y)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * dy)])
    target = u * cdf[-1]
    j = np.clip(np.searchsorted(cdf, target, side="right") - 1, 0, len(dy) - 1)
    f0, f1, h = w[j], w[j + 1], dy[j]
    rem = np.maximum(target - cdf[j], 0.0) / h
    denom = f0 + np.sqrt(np.maximum(f0 * f0 + 2.0 * (f1 - f0) * rem, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(denom > 0, 2.0 * rem / denom, 0.5)
    return y[j] + np.clip(tau, 0.0, 1.0) * h


def _next_step(s, t, x, u):
    dt = t - s
    sd = math.sqrt(dt)
    x = np.maximum(x, 1e-300)[:, None]
    lo = np.maximum(x - TABLE_WIDTH * sd, 0.0)
    hi = x + TABLE_WIDTH * sd
    y = lo + (hi - lo) * np.linspace(0.0, 1.0, TABLE_CELLS + 1)
    lw = _log_killed_kernel(dt, x, y)
    with np.errstate(divide="ignore"):
        lw = lw + np.log(_half_mass(1.0 - t, y))
    w = np.exp(lw - lw.max(axis=1, keepdims=True))
    return _invert_linear_density(y, w, u)


def _next_step_rejection(s, t, x, stream):
    # propose from N(x, dt) on (0, inf); accept with the survival probability of
    # the bridge from x to y times h(y) / (1/2)
    dt = t - s
    sd = math.sqrt(dt)
    out = np.empty_like(x)
    todo = np.arange(len(x))
    while todo.size:
        xs = x[todo]
        y = xs + sd * stream.standard_normal(todo.size)
        u = stream.random(todo.size)
        with np.errstate(invalid="ignore"):
            acc = -np.expm1(-2.0 * xs * y / dt) * 2.0 * _half_mass(1.0 - t, y)
        ok = (y > 0) & (u < acc)
        out[todo[ok]] = y[ok]
        todo = todo[~ok]
    return out


def sample_meander_paths(grid, stream, size, chunk=20000, method="inverse-cdf"):
    """``size`` meander paths on ``grid`` (which must be [0, 1]) as an array.

    ``method`` selects how each transition is drawn: "inverse-cdf" tabulates the
    transition density per draw; "rejection" proposes Gaussian increments and
    accepts with the killed-bridge survival probability times the h-transform
    ratio.  Both are exact up to the table resolution of the former.
    """
    if grid.left != 0.0 or grid.right != 1.0:
        raise DomainError(f"meander grid must be [0, 1], got [{grid.left}, {grid.right}]")
    if method not in ("inverse-cdf", "rejection"):
        raise DomainError(f"unknown meander sampling method {method!r}")
    times = grid.points
    out = np.zeros((size, grid.size))
    for start in range(0, size, chunk):
        stop = min(size, start + chunk)
        if method == "inverse-cdf":
            u = stream.random((stop - start, grid.steps))
            cur = _first_step(times[1], u[:, 0])
        else:
            cur = _first_step(times[1], stream.random(stop - start))
        out[start:stop, 1] = cur
        for i in range(1, grid.steps):
            if method == "inverse-cdf":
                cur = _next_step(times[i], times[i + 1], cur, u[:, i])
            else:
                cur = _next_step_rejection(times[i], times[i + 1], cur, stream)
            out[start:stop, i + 1] = cur
    return out


def sample_meander(grid, stream, method="inverse-cdf"):
    return GridFunction(grid, sample_meander_paths(grid, stream, 1, method=method)[0])


def canonical_grid(steps):
    return Grid(0.0, 1.0, steps)


def transition_mass(s, x, t):
    """Total mass of the transition density from (s, x) over y in (0, inf)."""
    frm = MeanderState(s, x)
    f = lambda y: meander_transition_density(frm, MeanderState(t, y)) if y > 0 else 0.0
    sd = math.sqrt(t - s)
    hi = x + 14.0 * sd
    return integrate.quad(f, 0.0, hi, points=[x], epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def marginal_mass(t):
    f = lambda y: meander_marginal_density(t, y)
    return integrate.quad(f, 0.0, 14.0 * math.sqrt(t) + 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def chapman_kolmogorov_residual(s, x, u, t, y):
    """|int p(s,x; u,z) p(u,z; t,y) dz - p(s,x; t,y)| by quadrature over z."""
    frm, to = MeanderState(s, x), MeanderState(t, y)
    f = lambda z: (meander_transition_density(frm, MeanderState(u, z))
                   * meander_transition_density(MeanderState(u, z), to)) if z > 0 else 0.0
    hi = max(x, y) + 14.0 * math.sqrt(t - s)
    val = integrate.quad(f, 0.0, hi, points=[x, y], epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return abs(val - meander_transition_density(frm, to))
