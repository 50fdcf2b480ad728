"""Experiments on Brownian paths, bridges and meanders."""

import itertools
import math

import numpy as np

from ..extremum import (arcsin_cdf, arcsin_measure, max_location_batch, near_touch_batch,
                        near_zero_batch, num_nt_batch, num_nz_batch)
from ..grid import Grid
from ..meander import (chapman_kolmogorov_residual, marginal_cdf_table, marginal_mass,
                       sample_meander_paths, transition_mass)
from ..paths import bridge_paths, bridge_sup_batch, continuum_argmax_batch, motion_paths
from .experiments import Outcome, register
from .stats import TailEstimate, ks_test, log_linear_fit

SUMMARY_COLUMNS = ("check", "params", "value", "bound", "ok")


def _params(**kw):
    return ";".join(f"{k}={v}" for k, v in kw.items())


def _survival(counts):
    """P(N >= l) for l = 0..max from a histogram of counts."""
    counts = np.asarray(counts, dtype=float)
    tail = np.cumsum(counts[::-1])[::-1]
    return tail / counts.sum(), tail.astype(int)


def _tail_fit(hist, min_hits):
    surv, hits = _survival(hist)
    levels = [l for l in range(1, len(surv)) if hits[l] >= min_hits]
    if len(levels) < 3:
        return {"levels": levels, "slope": math.nan, "r2": math.nan, "decreasing": False}
    s = surv[levels]
    slope, intercept, r2 = log_linear_fit(levels, s)
    return {"levels": levels, "survival": s.tolist(), "hits": hits[levels].tolist(),
            "slope": slope, "intercept": intercept, "r2": r2,
            "decreasing": bool(np.all(np.diff(s) < 0))}


# meander densities and sampler fidelity

DENSITY_LATTICE = list(itertools.product((0.1, 0.25, 0.4), (0.5, 0.75, 1.0), (0.05, 0.5, 2.0)))
CK_POINTS = ((0.1, 0.5, 0.4, 0.7, 0.8), (0.2, 1.0, 0.5, 1.0, 0.3), (0.3, 0.2, 0.6, 0.9, 1.5))


def _meander_marginals(stream, n, steps, times):
    g = Grid(0.0, 1.0, steps)
    paths = sample_meander_paths(g, stream, n)
    return paths[:, [g.index_of(t) for t in times]]


@register("meander-densities", SUMMARY_COLUMNS,
          {"draws": 100000, "chunk": 25000, "steps": 4, "ks_times": (0.25, 0.5, 1.0), "ks_tol": 0.01},
          fast={"draws": 20000, "chunk": 5000},
          about="density normalisation, Chapman-Kolmogorov, sampler KS fidelity")
def meander_densities(ctx):
    p = ctx.params
    rows = []
    worst = 0.0
    for s, t, x in DENSITY_LATTICE:
        err = abs(transition_mass(s, x, t) - 1.0)
        worst = max(worst, err)
        rows.append(("transition-mass", _params(s=s, t=t, x=x), err, 1e-6, err < 1e-6))
    for t in (0.25, 0.5, 0.75, 1.0):
        err = abs(marginal_mass(t) - 1.0)
        worst = max(worst, err)
        rows.append(("marginal-mass", _params(t=t), err, 1e-6, err < 1e-6))
    ck = []
    for pt in CK_POINTS:
        r = chapman_kolmogorov_residual(*pt)
        ck.append(r)
        rows.append(("chapman-kolmogorov", _params(s=pt[0], x=pt[1], u=pt[2], t=pt[3], y=pt[4]), r, 1e-5, r < 1e-5))
    parts = ctx.map(_meander_marginals, p["draws"], p["chunk"], steps=p["steps"], times=p["ks_times"])
    vals = np.concatenate(parts)
    ks = []
    for j, t in enumerate(p["ks_times"]):
        ys, cdf = marginal_cdf_table(t)
        stat, pval = ks_test(vals[:, j], lambda v, ys=ys, cdf=cdf: np.interp(v, ys, cdf))
        ks.append(stat)
        rows.append(("ks-marginal", _params(t=t, draws=len(vals)), stat, p["ks_tol"], stat < p["ks_tol"]))
    crit = [
        ctx.criterion("C1", "meander density normalisation within 1e-6", worst < 1e-6, worst=worst),
        ctx.criterion("C2", "Chapman-Kolmogorov residual below 1e-5", max(ck) < 1e-5, worst=max(ck)),
        ctx.criterion("C3", f"meander sampler KS below {p['ks_tol']}", max(ks) < p["ks_tol"],
                      stochastic=True, worst=max(ks)),
    ]
    return Outcome(list(SUMMARY_COLUMNS), rows, {"worst_mass_error": worst, "ck": ck, "ks": ks}, crit)


# near-zero events of the meander

def _nz_task(stream, n, steps, a_vals, eta_vals, count_etas):
    g = Grid(0.0, 1.0, steps)
    paths = sample_meander_paths(g, stream, n, method="rejection")
    hits = {(a, e): int(near_zero_batch(paths, g.points, e, a).sum()) for a in a_vals for e in eta_vals}
    hists = {e: np.bincount(num_nz_batch(paths, g.h, e)) for e in count_etas}
    return hits, hists


def _merge_hists(parts):
    out = {}
    for part in parts:
        for k, h in part.items():
            cur = out.get(k, np.zeros(0, dtype=int))
            size = max(len(cur), len(h))
            out[k] = np.pad(cur, (0, size - len(cur))) + np.pad(h, (0, size - len(h)))
    return out


NZ_COLUMNS = ("a", "eta", "hits", "trials", "empirical", "stderr", "ci_low", "ci_high", "bound", "ok")


@register("nz-tails", NZ_COLUMNS,
          {"draws": 100000, "chunk": 10000, "steps": 200, "a": (0.05, 0.1, 0.2),
           "eta": (0.01, 0.05, 0.1), "count_eta": (0.01, 0.05), "min_hits": 30},
          fast={"draws": 10000, "chunk": 5000},
          about="meander near-zero probability against 2a; near-zero count tails")
def nz_tails(ctx):
    p = ctx.params
    parts = ctx.map(_nz_task, p["draws"], p["chunk"], steps=p["steps"], a_vals=p["a"],
                    eta_vals=p["eta"], count_etas=p["count_eta"])
    n = p["draws"]
    rows = []
    ok = True
    for a in p["a"]:
        for e in p["eta"]:
            est = TailEstimate(2 * a, sum(h[(a, e)] for h, _ in parts), n)
            lo, hi = est.interval()
            good = est.estimate <= 2 * a + 3 * est.stderr
            ok &= good
            rows.append((a, e, est.hits, n, est.estimate, est.stderr, lo, hi, 2 * a, good))
    hists = _merge_hists([h for _, h in parts])
    tails = {str(e): _tail_fit(hists[e], p["min_hits"]) for e in p["count_eta"]}
    crit = [ctx.criterion("C5", "P(NZ) <= 2a + 3 stderr on every cell", ok, stochastic=True)]
    return Outcome(list(NZ_COLUMNS), rows, {"num_nz_tails": tails}, crit)


# near touches of Brownian motion on [0, 1]

def _nt_task(stream, n, steps, a_vals, eta_vals, intervals):
    g = Grid(0.0, 1.0, steps)
    paths = motion_paths(g, 0.0, stream, n)
    loc = {I: max_location_batch(paths, g.points, I) for I in intervals}
    out = {}
    for a, e in itertools.product(a_vals, eta_vals):
        nt = near_touch_batch(paths, g.h, e, a)
        for I in intervals:
            out[(a, e, I)] = int((nt & loc[I]).sum())
    return out


def _interval_pairs(flat):
    return [(flat[i], flat[i + 1]) for i in range(0, len(flat), 2)]


NT_COLUMNS = ("a", "eta", "I_lo", "I_hi", "hits", "trials", "empirical", "ci_low", "ci_high",
              "stderr", "arcsin", "bound", "ok")


@register("nt-arcsine", NT_COLUMNS,
          {"draws": 100000, "chunk": 5000, "steps": 2048, "a": (0.05, 0.1, 0.2), "eta": (0.01, 0.05),
           "intervals": (0.0, 0.5, -0.5, 0.5, -0.25, 0.25), "d": 0.5},
          fast={"draws": 5000, "chunk": 2500},
          about="P(NT and MaxLoc) against 4a ArcSin(I) for Brownian motion")
def nt_arcsine(ctx):
    p = ctx.params
    d = p["d"]
    intervals = _interval_pairs(p["intervals"])
    # intervals are given on [-d, d]; paths live on [0, 2d]
    shifted = [(lo + d, hi + d) for lo, hi in intervals]
    parts = ctx.map(_nt_task, p["draws"], p["chunk"], steps=p["steps"], a_vals=p["a"],
                    eta_vals=p["eta"], intervals=shifted)
    n = p["draws"]
    rows = []
    ok = True
    for a, e in itertools.product(p["a"], p["eta"]):
        for I, J in zip(intervals, shifted):
            arc = arcsin_measure(I, d)
            est = TailEstimate(4 * a * arc, sum(part[(a, e, J)] for part in parts), n)
            lo, hi = est.interval()
            good = est.estimate <= 4 * a * arc + 3 * est.stderr
            ok &= good
            rows.append((a, e, I[0], I[1], est.hits, n, est.estimate, lo, hi, est.stderr, arc, 4 * a * arc, good))
    crit = [ctx.criterion("C6", "P(NT and MaxLoc) <= 4a ArcSin + 3 stderr", ok, stochastic=True)]
    return Outcome(list(NT_COLUMNS), rows, {"cells": len(rows)}, crit)


def _numnt_task(stream, n, steps, etas):
    g = Grid(0.0, 1.0, steps)
    paths = motion_paths(g, 0.0, stream, n)
    return {e: np.bincount(num_nt_batch(paths, g.h, e)) for e in etas}


@register("numnt-tail", ("eta", "level", "hits", "trials", "survival"),
          {"draws": 100000, "chunk": 5000, "steps": 2048, "eta": (0.01, 0.05), "min_hits": 30},
          fast={"draws": 5000, "chunk": 2500},
          about="log-linear tail of the number of near touches")
def numnt_tail(ctx):
    p = ctx.params
    hists = _merge_hists(ctx.map(_numnt_task, p["draws"], p["chunk"], steps=p["steps"], etas=p["eta"]))
    rows = []
    fits = {}
    ok = True
    for e in p["eta"]:
        surv, hits = _survival(hists[e])
        for l in range(1, len(surv)):
            rows.append((e, l, int(hits[l]), p["draws"], float(surv[l])))
        fit = _tail_fit(hists[e], p["min_hits"])
        fits[str(e)] = fit
        ok &= fit["decreasing"] and fit["slope"] < 0 and fit["r2"] >= 0.9
    crit = [ctx.criterion("C7", "NumNT log-survival decreasing, negative slope, R^2 >= 0.9", ok,
                          stochastic=True, fits={k: {"slope": v["slope"], "r2": v["r2"]} for k, v in fits.items()})]
    return Outcome(["eta", "level", "hits", "trials", "survival"], rows, {"fits": fits}, crit)


def _sup_task(stream, n, steps, T_vals, r_vals):
    out = {}
    for T in T_vals:
        g = Grid(0.0, T, steps)
        b = bridge_paths(g, 0.0, 0.0, stream, n)
        exact = bridge_sup_batch(b, g.h, stream)
        grid_max = bridge_sup_batch(b, g.h)
        for r in r_vals:
            out[(T, r)] = (int((exact >= r).sum()), int((grid_max >= r).sum()))
    return out


SUP_COLUMNS = ("T", "r", "hits", "trials", "empirical", "stderr", "exact", "z", "grid_empirical", "ok")


@register("bridge-sup", SUP_COLUMNS,
          {"draws": 100000, "chunk": 25000, "steps": 64, "T": (1.0, 2.0), "r": (0.5, 1.0, 1.5)},
          fast={"draws": 10000, "chunk": 5000},
          about="Brownian bridge supremum law exp(-2r^2/T)")
def bridge_sup(ctx):
    p = ctx.params
    parts = ctx.map(_sup_task, p["draws"], p["chunk"], steps=p["steps"], T_vals=p["T"], r_vals=p["r"])
    n = p["draws"]
    rows = []
    ok = True
    for T in p["T"]:
        for r in p["r"]:
            hits = sum(part[(T, r)][0] for part in parts)
            grid_hits = sum(part[(T, r)][1] for part in parts)
            exact = math.exp(-2 * r * r / T)
            se = math.sqrt(exact * (1 - exact) / n)
            emp = hits / n
            z = (emp - exact) / se
            good = abs(z) <= 3
            ok &= good
            rows.append((T, r, hits, n, emp, se, exact, z, grid_hits / n, good))
    crit = [ctx.criterion("C9", "bridge sup law within 3 stderr", ok, stochastic=True)]
    return Outcome(list(SUP_COLUMNS), rows, {}, crit)


def _argmax_task(stream, n, points, margin):
    g = Grid(0.0, 1.0, points - 1)
    paths = motion_paths(g, 0.0, stream, n)
    x, m = continuum_argmax_batch(paths, g, stream)
    # the rescaled sides are only resolved when the maximum is away from the ends
    inner = (x > margin) & (x < 1 - margin)
    sub, xi, mi = paths[inner], x[inner], m[inner]
    rows = np.arange(len(sub))

    def value_at(t):
        pos = t / g.h
        j = np.minimum(np.floor(pos).astype(int), g.steps - 1)
        f = pos - j
        return sub[rows, j] * (1 - f) + sub[rows, j + 1] * f

    right = (mi - value_at(xi + 0.5 * (1 - xi))) / np.sqrt(1 - xi)
    left = (mi - value_at(0.5 * xi)) / np.sqrt(xi)
    return x, np.stack([left, right, xi], axis=1)


@register("arcsine-argmax", ("statistic", "pvalue", "draws", "points", "ok"),
          {"draws": 100000, "chunk": 10000, "points": 1024, "ks_tol": 0.015, "margin": 0.05},
          fast={"draws": 10000, "chunk": 5000},
          about="arcsine law of the Brownian argmax; independence around the maximum")
def arcsine_argmax(ctx):
    p = ctx.params
    parts = ctx.map(_argmax_task, p["draws"], p["chunk"], points=p["points"], margin=p["margin"])
    x = np.concatenate([a for a, _ in parts])
    mids = np.concatenate([b for _, b in parts])
    stat, pval = ks_test(x, lambda v: arcsin_cdf(v, 0.0, 1.0))
    n = len(mids)
    se = 1.0 / math.sqrt(n)
    corr = {}
    for (i, a), (j, b) in itertools.combinations(enumerate(("left_mid", "right_mid", "x_max")), 2):
        r = float(np.corrcoef(mids[:, i], mids[:, j])[0, 1])
        corr[f"{a}~{b}"] = {"r": r, "stderr": se, "ok": abs(r) < 3 * se}
    crit = [
        ctx.criterion("C8", f"argmax KS below {p['ks_tol']}", stat < p["ks_tol"], stochastic=True, statistic=stat),
        ctx.criterion("D1", "meanders around the maximum uncorrelated (3 stderr)",
                      all(c["ok"] for c in corr.values()), monitor=True, correlations=corr),
    ]
    rows = [(stat, pval, len(x), p["points"], stat < p["ks_tol"])]
    return Outcome(["statistic", "pvalue", "draws", "points", "ok"], rows, {"correlations": corr}, crit)

