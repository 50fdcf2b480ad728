"""Sampling the jump-ensemble candidate.

Each curve is a Brownian bridge from (-2T, L(i, -2T)) to (2T, L(i, 2T)) whose
values at the nodes {l, poles, r} must clear given lower bounds.  Node values
form a Gaussian Markov chain, so the conditioned chain is drawn exactly up to
quadrature: backward messages on value grids, then forward inverse-CDF draws
with log-linear interpolation inside each cell.  Paths between nodes are
independent Brownian bridges.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainError, RejectionBudgetError
from .corners import in_ordered_cone
from .geometry import upper_hull

NODE_POINTS = 257
NODE_WIDTH = 12.0
DEFAULT_BUDGET = 10 ** 6


@dataclass
class Candidate:
    values: np.ndarray      # (k, points) on [l, r]
    attempts: int
    wall_time: float

    @property
    def acceptance_rate(self):
        return 1.0 / self.attempts


@dataclass(frozen=True)
class NodeChain:
    """Bridge values at ``times`` given the pinned ends, with lower bounds."""

    start: tuple            # (time, value)
    end: tuple
    times: np.ndarray
    bounds: np.ndarray

    def step(self, s, x, t):
        """Mean and variance at time t given value x at time s (towards the end)."""
        e, b = self.end
        frac = (t - s) / (e - s)
        return x + (b - x) * frac, (t - s) * (e - t) / (e - s)


def _log_cell_mass(g0, g1, h):
    # integral over a cell of exp(log-linear interpolation of g0, g1)
    top = np.maximum(g0, g1)
    delta = np.abs(g1 - g0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(delta > 1e-12, -np.expm1(-delta) / np.where(delta > 0, delta, 1.0), 1.0)
    out = np.log(h) + top + np.log(ratio)
    return np.where(np.isneginf(top), -np.inf, out)


def _sample_log_linear(y, g, u_cell, u_in):
    """Draw from the density exp(g) interpolated log-linearly on nodes ``y``
    (one row of ``g`` per draw)."""
    h = np.diff(y)
    lm = _log_cell_mass(g[:, :-1], g[:, 1:], h)
    lm = lm - logsumexp(lm, axis=1, keepdims=True)
    cdf = np.cumsum(np.exp(lm), axis=1)
    j = np.minimum((cdf < u_cell[:, None] * cdf[:, -1:]).sum(axis=1), len(h) - 1)
    rows = np.arange(g.shape[0])
    d = g[rows, j + 1] - g[rows, j]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        pos = 1.0 + np.log(u_in + (1.0 - u_in) * np.exp(-np.abs(d))) / np.abs(d)
        neg = np.log1p(u_in * np.expm1(-np.abs(d))) / -np.abs(d)
    tau = np.where(np.abs(d) < 1e-12, u_in, np.where(d > 0, pos, neg))
    tau = np.where(np.isfinite(tau), tau, u_in)
    return y[j] + np.clip(tau, 0.0, 1.0) * h[j]


def _log_kernel(mean, var, y):
    return -0.5 * (y - mean) ** 2 / var - 0.5 * math.log(2.0 * math.pi * var)


def node_grids(chain, points=NODE_POINTS, width=NODE_WIDTH):
    """Value grids per node: from the lower bound (or well below the taut string
    when the bound is slack) to ``width`` local standard deviations above the
    taut string through the bounds and the pinned ends."""
    (s0, a), (e, b) = chain.start, chain.end
    t = chain.times
    xs = np.concatenate([[s0], t, [e]])
    ys = np.concatenate([[a], chain.bounds, [b]])
    ys = np.where(np.isfinite(ys), ys, -np.inf)
    finite = np.isfinite(ys)
    hv = np.nonzero(finite)[0][upper_hull(xs[finite], ys[finite])]
    taut = np.interp(t, xs[hv], ys[hv])
    hx = xs[hv]
    grids = []
    for j, tj in enumerate(t):
        prev, nxt = xs[j], xs[j + 2]
        var = (tj - prev) * (nxt - tj) / (nxt - prev)
        k = np.searchsorted(hx, tj, side="right")
        if 0 < k < len(hx) and hx[k - 1] < tj:
            u, v = hx[k - 1], hx[k]
            var = max(var, (tj - u) * (v - tj) / (v - u))
        sd = math.sqrt(var)
        lo = max(chain.bounds[j], taut[j] - width * sd)
        grids.append(np.linspace(lo, taut[j] + width * sd, points))
    return grids


def backward_messages(chain, grids):
    """log P(all later bounds cleared | value at node j) on each node grid."""
    t = chain.times
    m = len(t)
    msgs = [None] * m
    msgs[-1] = np.zeros(len(grids[-1]))
    for j in range(m - 2, -1, -1):
        x, y = grids[j], grids[j + 1]
        mean, var = chain.step(t[j], x[:, None], t[j + 1])
        g = _log_kernel(mean, var, y[None, :]) + msgs[j + 1][None, :]
        msgs[j] = logsumexp(_log_cell_mass(g[:, :-1], g[:, 1:], np.diff(y)), axis=1)
    return msgs


def sample_chain(chain, stream, size, grids=None, msgs=None):
    """``size`` draws of the node values, shape (size, nodes)."""
    grids = grids if grids is not None else node_grids(chain)
    msgs = msgs if msgs is not None else backward_messages(chain, grids)
    t = chain.times
    out = np.empty((size, len(t)))
    s0, a = chain.start
    prev_t, x = s0, np.full(size, a)
    for j in range(len(t)):
        y = grids[j]
        mean, var = chain.step(prev_t, x[:, None], t[j])
        g = _log_kernel(mean, var, y[None, :]) + msgs[j][None, :]
        u = stream.random((2, size))
        x = _sample_log_linear(y, g, u[0], u[1])
        out[:, j] = x
        prev_t = t[j]
    return out


def free_chain(chain, stream, size):
    """Unconditioned node values of the bridge."""
    t = chain.times
    out = np.empty((size, len(t)))
    prev_t, x = chain.start[0], np.full(size, chain.start[1])
    for j in range(len(t)):
        mean, var = chain.step(prev_t, x, t[j])
        x = mean + math.sqrt(var) * stream.standard_normal(size)
        out[:, j] = x
        prev_t = t[j]
    return out


def fill_between(grid, node_idx, node_values, stream):
    """Paths on ``grid`` through the node values with independent Brownian
    bridges in between; node_values has shape (draws, nodes)."""
    node_idx = np.asarray(node_idx)
    size = node_values.shape[0]
    inc = stream.standard_normal((size, grid.steps)) * math.sqrt(grid.h)
    bm = np.zeros((size, grid.size))
    np.cumsum(inc, axis=1, out=bm[:, 1:])
    pos = np.arange(grid.size)
    seg = np.clip(np.searchsorted(node_idx, pos, side="right") - 1, 0, len(node_idx) - 2)
    i0, i1 = node_idx[seg], node_idx[seg + 1]
    w = (pos - i0) / (i1 - i0)
    interp = lambda v: (1.0 - w) * v[:, seg] + w * v[:, seg + 1]
    return bm - interp(bm[:, node_idx]) + interp(node_values)


def node_layout(data):
    """Node abscissae {l, poles, r} and their indices in the middle grid."""
    g = data.middle_grid
    nodes = np.array(data.poles, dtype=float)
    idx = np.array([g.snap(p) for p in nodes])
    return nodes, idx


def curve_chains(data, use_corners=True):
    """One :class:`NodeChain` per top curve with bounds from the lower curve at
    the poles and from the Corner vectors at l and r."""
    nodes, _ = node_layout(data)
    g = data.grid
    low = np.array([data.lower.values[g.snap(p)] for p in nodes])
    T2 = 2.0 * data.params.T
    a, b = data.ends
    chains = []
    for i in range(data.k):
        bounds = low.copy()
        if use_corners:
            bounds[0] = max(bounds[0], data.corner_l[i])
            bounds[-1] = max(bounds[-1], data.corner_r[i])
        chains.append(NodeChain((-T2, float(a[i])), (T2, float(b[i])), nodes, bounds))
    return chains


def satisfies_conditioning(values, data, idx):
    """Conditions (i) and (ii) at grid points: Corner cone at l and r, every
    curve strictly above the lower curve at every pole."""
    v = np.atleast_2d(values)
    if not (in_ordered_cone(v[:, 0] - data.corner_l) and in_ordered_cone(v[:, -1] - data.corner_r)):
        return False
    low = data.lower.values[data.middle_slice][idx]
    return bool(np.all(v[:, idx] > low))


class JumpSampler:
    """Draws candidates for one :class:`JumpData`; messages are computed once."""

    def __init__(self, data, method="filtered", max_attempts=DEFAULT_BUDGET, batch=256):
        if method not in ("filtered", "rejection"):
            raise DomainError(f"unknown candidate method {method!r}")
        if max_attempts <= 0:
            raise DomainError("rejection budget must be positive")
        self.data = data
        self.method = method
        self.max_attempts = max_attempts
        self.batch = batch
        self.nodes, self.idx = node_layout(data)
        self.grid = data.middle_grid
        self.chains = curve_chains(data)
        self._prep = None
        if method == "filtered":
            prep = []
            for c in self.chains:
                grids = node_grids(c)
                prep.append((grids, backward_messages(c, grids)))
            self._prep = prep

    def _propose_nodes(self, stream, size):
        if self.method == "filtered":
            return np.stack([sample_chain(c, stream, size, *p) for c, p in zip(self.chains, self._prep)], axis=1)
        return np.stack([free_chain(c, stream, size) for c in self.chains], axis=1)

    def _node_ok(self, nodes):
        # nodes: (draws, k, m)
        d = self.data
        ok = np.ones(nodes.shape[0], dtype=bool)
        for side, corner in ((0, d.corner_l), (-1, d.corner_r)):
            v = nodes[:, :, side] - corner
            ok &= v[:, -1] > 0
            if d.k > 1:
                ok &= np.all(v[:, :-1] > v[:, 1:], axis=1)
        bounds = np.stack([c.bounds for c in self.chains])
        if self.method == "rejection":
            ok &= np.all(nodes > bounds, axis=(1, 2))
        return ok

    def sample(self, stream):
        """One accepted candidate, or :class:`RejectionBudgetError` on exhaustion."""
        start = time.perf_counter()
        attempts = 0
        k = self.data.k
        while attempts < self.max_attempts:
            m = min(self.batch if self.method == "rejection" or k > 1 else 1, self.max_attempts - attempts)
            nodes = self._propose_nodes(stream, m)
            ok = self._node_ok(nodes)
            hit = np.nonzero(ok)[0]
            if hit.size:
                attempts += int(hit[0]) + 1
                chosen = nodes[hit[0]]
                vals = fill_between(self.grid, self.idx, chosen, stream)
                return Candidate(vals, attempts, time.perf_counter() - start)
            attempts += m
        raise RejectionBudgetError(attempts)

    def sample_many(self, stream, size):
        """``size`` accepted candidates (k = 1 filtered draws are vectorised)."""
        if self.method == "filtered" and self.data.k == 1:
            start = time.perf_counter()
            nodes = self._propose_nodes(stream, size)
            vals = fill_between(self.grid, self.idx, nodes[:, 0, :], stream)
            dt = (time.perf_counter() - start) / size
            return [Candidate(v[None, :], 1, dt) for v in vals]
        return [self.sample(stream) for _ in range(size)]


def sample_jump_candidate(data, stream, max_attempts=DEFAULT_BUDGET, method="filtered"):
    return JumpSampler(data, method, max_attempts).sample(stream)
