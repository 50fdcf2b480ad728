"""Deviations of the jump curve from Tent near the origin, the vault and slope
costs, and the Gaussian facts used around them."""

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.special import log_ndtr

from ..errors import DomainError
from ..gaussian import GaussParams, conditional_exceedance
from ..grid import Grid
from ..paths import bridge_paths


@dataclass(frozen=True)
class Observables:
    Y: float
    Z: float
    U: float
    W_eta: float
    pole_case: bool
    p: float

    def as_dict(self):
        return asdict(self)


def central_pole(poles, d):
    """The pole in [-2d, 2d], or None.  Poles are at least 5d apart so there is
    at most one."""
    near = [p for p in poles if -2.0 * d <= p <= 2.0 * d]
    return near[0] if near else None


def observables(J, data, d=None, eta=0.5):
    """Y, Z, U and W_eta for the bottom candidate curve ``J`` (values on [l, r])."""
    d = data.params.d if d is None else d
    if not 0 <= eta < d:
        raise DomainError(f"need 0 <= eta < d, got eta={eta}, d={d}")
    g = data.middle_grid
    J = np.asarray(J, dtype=float)
    J = J[-1] if J.ndim == 2 else J
    dev = lambda x: float(J[g.snap(x)] - data.tent(float(g.points[g.snap(x)])))
    p = central_pole(data.poles, d)
    if p is None:
        return Observables(dev(-d), dev(d), math.nan, math.nan, False, math.nan)
    return Observables(dev(p - 4 * d), dev(p + 4 * d), dev(p), dev(p + 4 * d + eta), True, p)


def in_good_region(y, z, R, T, pole_case=True):
    """Membership of (y, z) in the good region for the pole or no-pole case."""
    lo = -R * T ** 1.5 if pole_case else -R * T * T
    hi = R * T * T
    return bool(lo < y < hi and lo < z < hi and abs(y - z) < 2.0 * R * T ** 1.5)


def log_vault_slope_costs(y, z, d, tent_minus, tent_p, tent_plus):
    """log V and log S for pole deviations y, z and Tent values at p - 4d, p, p + 4d."""
    if d < 1:
        raise DomainError(f"need d >= 1, got {d}")
    threshold = tent_p - 0.5 * (tent_minus + tent_plus)
    mean = 0.5 * (y + z)
    log_v = -float(log_ndtr((mean - threshold) / math.sqrt(2.0 * d)))
    yt, zt = y + tent_minus, z + tent_plus
    log_s = 0.5 * math.log(d) + (yt - zt) ** 2 / (16.0 * d)
    return log_v, log_s


def vault_slope_costs(y, z, d, tent_minus, tent_p, tent_plus):
    log_v, log_s = log_vault_slope_costs(y, z, d, tent_minus, tent_p, tent_plus)
    return math.exp(log_v), math.exp(log_s)


def conditional_jump_probability(y, z, delta, d):
    """P(X + m in [0, 1] | X + m >= 0) for X ~ N(0, 2d), m = (y + z)/2 + delta."""
    m = 0.5 * (y + z) + delta
    sd = math.sqrt(2.0 * d)
    # one minus P(X >= 1 - m | X >= -m)
    gap = log_ndtr((m - 1.0) / sd) - log_ndtr(m / sd)
    return float(-np.expm1(gap))


def monotonicity_probe(means=(-1.0, 0.0, 1.0), pairs=((2.0, 1.0), (1.0, 0.5), (4.0, 2.0)), points=50):
    """For each (m, sigma^2, r), P(X >= s + r | X >= s) on an s-grid of ``points``
    spanning four standard deviations around m; reports strict decrease."""
    rows = []
    for m in means:
        for var, r in pairs:
            sd = math.sqrt(var)
            s = np.linspace(m - 4 * sd, m + 4 * sd, points)
            f = conditional_exceedance(GaussParams(m, var), s, r)
            rows.append({"m": m, "variance": var, "r": r,
                         "strictly_decreasing": bool(np.all(np.diff(f) < 0)),
                         "max_step": float(np.diff(f).max())})
    return rows


def left_variance(p, p_minus, d):
    """Variance at p - 4d of the bridge from the previous pole to p, as a Fraction."""
    p, p_minus, d = Fraction(p), Fraction(p_minus), Fraction(d)
    return 4 * d * (p - p_minus - 4 * d) / (p - p_minus)


def variance_bounds_hold(poles, d):
    """Exact check that every consecutive pole pair gives a variance in [4d/5, 4d]."""
    d = Fraction(d)
    for a, b in zip(poles, poles[1:]):
        if Fraction(b) - Fraction(a) < 5 * d:
            continue
        v = left_variance(b, a, d)
        if not 4 * d / 5 <= v <= 4 * d:
            return False
    return True


def bridge_above_points(N, stream, draws, T=1.0, r=1.0):
    """Empirical P(B(i r / N) > 0 for i < N) for a bridge from (0, 0) to (2T, 0)."""
    steps = 24 * int(round(2 * T / r))
    grid = Grid(0.0, 2.0 * T, steps)
    idx = [grid.index_of(i * r / N) for i in range(1, N)]
    b = bridge_paths(grid, 0.0, 0.0, stream, draws)
    if not idx:
        return 1.0
    return float(np.mean(np.all(b[:, idx] > 0, axis=1)))


def bridge_above_bound(N, G):
    return math.exp(-3.0 * N) / (G * math.sqrt(N))


def domination_rows(sample, reference, probes=(0.1, 0.25, 0.5, 0.75, 0.9)):
    """At quantiles of ``reference``, compare empirical CDFs: the dominating
    ``sample`` should have CDF no larger than the reference plus 3 stderr."""
    sample, reference = np.sort(sample), np.sort(reference)
    rows = []
    for q in probes:
        t = float(np.quantile(reference, q))
        f1 = np.searchsorted(sample, t, side="right") / len(sample)
        f2 = np.searchsorted(reference, t, side="right") / len(reference)
        se = math.sqrt(f1 * (1 - f1) / len(sample) + f2 * (1 - f2) / len(reference))
        rows.append({"probe": q, "at": t, "cdf_sample": f1, "cdf_reference": f2,
                     "stderr": se, "ok": f1 <= f2 + 3 * se})
    return rows

