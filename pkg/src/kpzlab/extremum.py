"""Near-maximum and near-zero statistics of paths, meander probabilities by
quadrature, and the elementary inequalities used around them."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special, stats

from .errors import DomainError
from .gaussian import phi_tilde
from .meander import MeanderState, meander_marginal_density, meander_transition_density


@dataclass(frozen=True)
class NearTouchSpec:
    eta: float
    a: float
    d: float = 1.0
    interval: Optional[tuple] = None

    def __post_init__(self):
        if not 0 < self.eta < 1 or not 0 < self.a < 1:
            raise DomainError(f"need a, eta in (0, 1), got a={self.a}, eta={self.eta}")
        if self.interval is not None:
            lo, hi = self.interval
            if not -self.d <= lo <= hi <= self.d:
                raise DomainError(f"interval {self.interval} not inside [-{self.d}, {self.d}]")


def arcsin_measure(interval, d):
    """Mass of ``interval`` under the arcsine law on [-d, d]."""
    a, b = interval
    if not -d <= a <= b <= d:
        raise DomainError(f"interval {interval} not inside [-{d}, {d}]")
    return (math.asin(b / d) - math.asin(a / d)) / math.pi


def arcsin_cdf(x, left, right):
    """CDF of the arcsine law on [left, right]."""
    u = np.clip((np.asarray(x, dtype=float) - left) / (right - left), 0.0, 1.0)
    return 2.0 / math.pi * np.arcsin(np.sqrt(u))


def separation_steps(eta, h):
    """Least number of grid steps spanning a distance of at least ``eta``."""
    return max(1, math.ceil(eta / h - 1e-9))


def grid_argmax(values):
    """Leftmost maximiser index and whether the maximum is attained more than once."""
    i = int(np.argmax(values))
    return i, bool(np.count_nonzero(values == values[i]) > 1)


def near_touch_batch(paths, h, eta, a):
    """NT for each row: some grid point at least ``eta`` from the maximiser comes
    within a*eta^{1/2} of the maximum."""
    paths = np.atleast_2d(paths)
    imax = np.argmax(paths, axis=1)
    m = paths[np.arange(len(paths)), imax]
    far = np.abs(np.arange(paths.shape[1])[None, :] - imax[:, None]) >= separation_steps(eta, h)
    best = np.where(far, paths, -np.inf).max(axis=1)
    return best >= m - a * math.sqrt(eta)


def nt_event(path, spec):
    return bool(near_touch_batch(path.values, path.grid.h, spec.eta, spec.a)[0])


def max_location_batch(paths, points, interval):
    x = points[np.argmax(np.atleast_2d(paths), axis=1)]
    return (x >= interval[0]) & (x <= interval[1])


def greedy_count(mask, sep):
    """Largest number of marked indices with pairwise gaps of at least ``sep``
    steps, for each row of ``mask``.  Leftmost-first selection is optimal."""
    mask = np.atleast_2d(mask)
    n, size = mask.shape
    # nxt[r, i] = first marked index >= i (size if none)
    idx = np.where(mask, np.arange(size)[None, :], size)
    nxt = np.minimum.accumulate(idx[:, ::-1], axis=1)[:, ::-1]
    nxt = np.concatenate([nxt, np.full((n, 1), size)], axis=1)
    rows = np.arange(n)
    pos = nxt[:, 0]
    count = np.zeros(n, dtype=int)
    while True:
        live = pos < size
        if not live.any():
            return count
        count += live
        pos = np.where(live, nxt[rows, np.minimum(pos + sep, size)], size)


def num_nt_batch(paths, h, eta):
    paths = np.atleast_2d(paths)
    m = paths.max(axis=1, keepdims=True)
    return greedy_count(paths >= m - math.sqrt(eta), separation_steps(eta, h))


def num_nt(path, eta):
    return int(num_nt_batch(path.values, path.grid.h, eta)[0])


def near_zero_batch(paths, points, eta, a):
    """NZ for meander rows: the minimum over grid points in [eta, 1] is below a*eta^{1/2}."""
    sel = points >= eta - 1e-12
    return np.atleast_2d(paths)[:, sel].min(axis=1) < a * math.sqrt(eta)


def nz_event(path, eta, a):
    return bool(near_zero_batch(path.values, path.grid.points, eta, a)[0])


def num_nz_batch(paths, h, eta):
    return greedy_count(np.abs(np.atleast_2d(paths)) <= math.sqrt(eta), separation_steps(eta, h))


def num_nz(path, eta):
    return int(num_nz_batch(path.values, path.grid.h, eta)[0])


# meander probabilities by quadrature

def from_zero_probability(eta):
    """P(B_me(eta) < 1.1 eta^{1/2})."""
    if not 0 < eta <= 0.5:
        raise DomainError(f"need eta in (0, 1/2], got {eta}")
    f = lambda y: meander_marginal_density(eta, y)
    return integrate.quad(f, 0.0, 1.1 * math.sqrt(eta), epsabs=1e-13, epsrel=1e-11)[0]


def increment_probability(eta, t, x):
    """P(B_me(t) < 1.1 eta^{1/2} | B_me(t - eta) = x)."""
    if not (0 < eta and eta < t <= 1 - 4 * eta):
        raise DomainError(f"need t in (eta, 1 - 4 eta], got eta={eta}, t={t}")
    if not 0 < x <= 1.1 * math.sqrt(eta) + 1e-15:
        raise DomainError(f"need 0 < x <= 1.1 eta^(1/2), got x={x}")
    frm = MeanderState(t - eta, x)
    f = lambda y: meander_transition_density(frm, MeanderState(t, y)) if y > 0 else 0.0
    return integrate.quad(f, 0.0, 1.1 * math.sqrt(eta), epsabs=1e-13, epsrel=1e-11)[0]


def return_from_above_probability(eta, t, x):
    """P(inf B < eta^{1/2} - x | inf B > -x) for Brownian motion from 0 on
    [t - eta, 1]; the running infimum is minus a folded normal, integrated by
    quadrature."""
    if not (0 < eta and eta < t <= 1 - 10 * eta):
        raise DomainError(f"need t in (eta, 1 - 10 eta], got eta={eta}, t={t}")
    if not x > 1.1 * math.sqrt(eta):
        raise DomainError(f"need x > 1.1 eta^(1/2), got x={x}")
    var = 1.0 - (t - eta)
    dens = lambda z: 2.0 * math.exp(-0.5 * z * z / var) / math.sqrt(2.0 * math.pi * var)
    near = integrate.quad(dens, x - math.sqrt(eta), x, epsabs=1e-14, epsrel=1e-12)[0]
    total = integrate.quad(dens, 0.0, x, epsabs=1e-14, epsrel=1e-12)[0]
    return near / total


RETURN_BOUND_PROOF = math.exp(1.2 / 20.0) / 1.1


def meander_bound_quadrature(which, **params):
    fn = {"from-zero": from_zero_probability, "increment": increment_probability,
          "return-from-above": return_from_above_probability}.get(which)
    if fn is None:
        raise DomainError(f"unknown meander bound {which!r}")
    return fn(**params)


def meander_bound_lattices():
    """Parameter lattices for the three meander estimates."""
    from_zero = [{"eta": float(e)} for e in np.linspace(0.01, 0.5, 50)]
    inc, ret = [], []
    for eta in (0.005, 0.01, 0.02, 0.05, 0.1, 0.15):
        for t in np.linspace(eta, 1 - 4 * eta, 8)[1:]:
            for frac in (0.05, 0.25, 0.5, 0.75, 1.0):
                inc.append({"eta": eta, "t": float(t), "x": frac * 1.1 * math.sqrt(eta)})
    for eta in (0.001, 0.005, 0.01, 0.02, 0.05, 0.09):
        for t in np.linspace(eta, 1 - 10 * eta, 8)[1:]:
            for mult in (1.1 + 1e-9, 1.2, 1.5, 2.0, 4.0, 10.0):
                ret.append({"eta": eta, "t": float(t), "x": mult * math.sqrt(eta)})
    return {"from-zero": from_zero, "increment": inc, "return-from-above": ret}


def meander_bound_report():
    """Worst value of each meander estimate over its lattice against its bound."""
    bounds = {"from-zero": 0.5, "increment": 0.75, "return-from-above": 0.967}
    out = {}
    for which, lattice in meander_bound_lattices().items():
        vals = [meander_bound_quadrature(which, **p) for p in lattice]
        j = int(np.argmax(vals))
        out[which] = {"worst": vals[j], "at": lattice[j], "bound": bounds[which],
                      "points": len(vals), "holds": bool(vals[j] <= bounds[which])}
    return out


# elementary inequalities

def normal_bound_check(sigmas=(0.5, 1.0, 2.0), ratios=(1.01, 1.5, 2.0, 3.0, 5.0, 8.0)):
    rows = []
    for s in sigmas:
        for r in ratios:
            t = r * s
            p = 0.5 - phi_tilde(s * s, t)
            lower = s / (2.0 * math.sqrt(2.0 * math.pi) * t) * math.exp(-t * t / (2 * s * s))
            upper = math.exp(-t * t / (2 * s * s))
            rows.append({"sigma": s, "t": t, "lower": lower, "prob": p, "upper": upper,
                         "ok": lower <= p <= upper})
    return rows


def integral_bound_check(a_values=(0.25, 1.0, 2.0, 8.0), b_values=(-3.0, -1.0, 0.0, 1.0, 3.0)):
    """Quadrature of int_0^inf exp(-a x^2 + b x) against sqrt(pi/a) (b <= 0) and
    sqrt(pi/a) exp(b^2/4a) (all b)."""
    rows = []
    for a in a_values:
        for b in b_values:
            val = integrate.quad(lambda x: math.exp(-a * x * x + b * x), 0.0, np.inf)[0]
            gen = math.sqrt(math.pi / a) * math.exp(b * b / (4 * a))
            ok = val <= gen and (b > 0 or val <= math.sqrt(math.pi / a))
            rows.append({"a": a, "b": b, "integral": val, "bound": gen, "ok": ok})
    return rows


def geometric_sum_tail(n, p, level):
    """Exact P(G >= level) for G a sum of n i.i.d. variables with P(X >= k) = (1-p)^k.

    Each summand is a failure count, so G is negative binomial.
    """
    return float(stats.nbinom.sf(math.ceil(level) - 1, n, p))


def geometric_sum_check(stream=None, n=10, p=0.25, lambdas=(1.2, 2.0), draws=10 ** 6):
    """Compare P(G >= lambda mu), mu = n/p, with exp(-p mu lambda), exactly and by simulation."""
    rows = []
    mu = n / p
    for lam in lambdas:
        exact = geometric_sum_tail(n, p, lam * mu)
        row = {"n": n, "p": p, "lambda": lam, "exact": exact, "bound": math.exp(-p * mu * lam)}
        if stream is not None:
            g = (stream.geometric(p, size=(draws, n)) - 1).sum(axis=1)
            hits = int((g >= lam * mu).sum())
            row.update(empirical=hits / draws, stderr=math.sqrt(exact * (1 - exact) / draws))
        row["ok"] = exact <= row["bound"]
        rows.append(row)
    return rows


def _truncated_gauss_density(x0, s2, cut):
    # X = x0 + s2 Z with Z standard normal conditioned on Z >= -cut
    mass = special.ndtr(cut)
    return (lambda v: math.exp(-0.5 * ((v - x0) / s2) ** 2) / (math.sqrt(2 * math.pi) * s2 * mass)
            if v >= x0 - cut * s2 else 0.0), 1.0 / mass


def density_tool_check(sigma1s=(0.5, 1.0, 2.0), sigma2s=(0.5, 1.0, 2.0), x0=0.3, cut=1.0):
    """Convolution density bound for X + N with X a truncated Gaussian meeting
    the upper-tail hypothesis; the lower-tail form follows by reflection."""
    rows = []
    for s1 in sigma1s:
        for s2 in sigma2s:
            dens, A = _truncated_gauss_density(x0, s2, cut)
            lo = x0 - cut * s2
            for off in (0.1, 0.5, 1.0, 2.0, 4.0, 8.0):
                x = x0 + off
                f = integrate.quad(lambda v: dens(v) * math.exp(-0.5 * ((x - v) / s1) ** 2)
                                   / (math.sqrt(2 * math.pi) * s1), lo, x + 40.0 * (s1 + s2),
                                   epsabs=1e-14, points=[x], limit=200)[0]
                bound = (A + 1) / (math.sqrt(2 * math.pi) * s1) * math.exp(-(off ** 2) / (2 * (s1 + s2) ** 2))
                rows.append({"sigma1": s1, "sigma2": s2, "x": x, "density": f, "bound": bound,
                             "ok": f <= bound and f <= 1 / (math.sqrt(2 * math.pi) * s1)})
    return rows


def conditioned_inf_check(variances=(0.25, 1.0, 4.0)):
    """P(X >= x | X <= y) <= (y - x)/y for X a folded normal (non-increasing density)."""
    rows = []
    for v in variances:
        for y in (0.1, 0.5, 1.0, 3.0):
            for frac in (0.0, 0.25, 0.5, 0.9):
                x = frac * y
                fy, fx = 2 * phi_tilde(v, y), 2 * phi_tilde(v, x)
                prob = (fy - fx) / fy
                rows.append({"variance": v, "x": x, "y": y, "prob": prob, "bound": (y - x) / y,
                             "ok": prob <= (y - x) / y + 1e-15})
    return rows


def analytic_lemma_checks(stream=None):
    """Every elementary inequality on its lattice; ``ok`` per family."""
    fams = {
        "normal_bound": normal_bound_check(),
        "integral_bound": integral_bound_check(),
        "geometric_sum": geometric_sum_check(stream),
        "density_tool": density_tool_check(),
        "conditioned_inf": conditioned_inf_check(),
    }
    return {name: {"ok": all(r["ok"] for r in rows), "rows": rows} for name, rows in fams.items()}
