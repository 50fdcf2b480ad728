"""Experiments on last passage percolation, line ensembles and quilts."""

import math

import numpy as np

from ..ensembles import dyson_bm, gibbs_resample, gue_top_eigenvalue, scaled_ensemble
from ..grid import Grid, GridFunction
from ..lpp import Environment, RewardFunction, last_passage_batch, polymer_argmax
from ..paths import motion_paths
from ..quilt import build_quilt, moment_table, wedge_increments
from .experiments import Outcome, register
from .stats import ks_test


def _lpp_task(stream, n, lines, per_unit):
    g = Grid(0.0, 1.0, per_unit)
    env = motion_paths(g, 0.0, stream, n * lines).reshape(n, lines, g.size)
    return last_passage_batch(env, 0, g.steps, stream, g.h)


def _gue_task(stream, n, lines):
    return gue_top_eigenvalue(lines, 1.0, stream, n)


@register("lpp-gue", ("n", "draws", "lpp_mean", "gue_mean", "statistic", "pvalue", "ok"),
          {"draws": 10000, "chunk": 100, "n": (2, 5, 10), "per_unit": 2000, "alpha": 0.01},
          fast={"draws": 500, "per_unit": 500},
          about="last passage energy (in-cell jumps) against the top GUE eigenvalue")
def lpp_gue(ctx):
    p = ctx.params
    rows = []
    ok = True
    for lines in p["n"]:
        lpp = np.concatenate(ctx.map(_lpp_task, p["draws"], p["chunk"], tag=f"lpp-{lines}",
                                     lines=lines, per_unit=p["per_unit"]))
        gue = np.concatenate(ctx.map(_gue_task, p["draws"], p["chunk"], tag=f"gue-{lines}", lines=lines))
        stat, pval = ks_test(lpp, gue)
        good = pval > p["alpha"]
        ok &= good
        rows.append((lines, p["draws"], float(lpp.mean()), float(gue.mean()), stat, pval, good))
    crit = [ctx.criterion("C10", f"two-sample KS p-value above {p['alpha']} for every n", ok, stochastic=True)]
    return Outcome(["n", "draws", "lpp_mean", "gue_mean", "statistic", "pvalue", "ok"], rows, {}, crit)


def _dyson_grid(n, steps, half_width):
    s = 2.0 * n ** (2.0 / 3.0)
    return Grid(n - s * half_width, n + s * half_width, steps)


def _gibbs_task(stream, size, n, steps, half_width, window, resample):
    g = _dyson_grid(n, steps, half_width)
    out = np.empty(size)
    attempts = np.zeros(size, dtype=int)
    for r in range(size):
        ens = scaled_ensemble(dyson_bm(n, g, stream), n)
        if resample:
            res = gibbs_resample(ens, 1, window, stream)
            ens, attempts[r] = res.ensemble, res.telemetry.attempts
        out[r] = ens.values[0, ens.grid.index_of(0.0)]
    return out, attempts


@register("gibbs-invariance", ("sample", "draws", "mean", "sd", "mean_attempts"),
          {"draws": 5000, "chunk": 250, "n": 5, "steps": 64, "half_width": 0.5,
           "window": (-0.25, 0.25), "alpha": 0.01},
          fast={"draws": 300, "chunk": 100},
          about="top curve at 0 before and after Gibbs resampling on a window")
def gibbs_invariance(ctx):
    p = ctx.params
    kw = dict(n=p["n"], steps=p["steps"], half_width=p["half_width"], window=p["window"])
    pre = ctx.map(_gibbs_task, p["draws"], p["chunk"], tag="pre", resample=False, **kw)
    post = ctx.map(_gibbs_task, p["draws"], p["chunk"], tag="post", resample=True, **kw)
    a = np.concatenate([v for v, _ in pre])
    b = np.concatenate([v for v, _ in post])
    att = np.concatenate([t for _, t in post])
    stat, pval = ks_test(a, b)
    rows = [("pre", len(a), float(a.mean()), float(a.std()), 0.0),
            ("post", len(b), float(b.mean()), float(b.std()), float(att.mean()))]
    crit = [ctx.criterion("C11", f"resampling preserves L(1, 0): KS p-value above {p['alpha']}",
                          pval > p["alpha"], stochastic=True, statistic=stat, pvalue=pval)]
    return Outcome(["sample", "draws", "mean", "sd", "mean_attempts"], rows,
                   {"statistic": stat, "pvalue": pval}, crit)


# polymer ordering on shared environments

def _polymer_setup(n, steps_to_n, x_max, y_max, y_count):
    h = n / steps_to_n
    s = 2.0 * n ** (2.0 / 3.0)
    m = math.ceil(s * x_max / h)
    end = n + s * y_max
    env_grid = Grid(-m * h, (math.ceil(end / h) + 1) * h, m + math.ceil(end / h) + 1)
    f_grid = Grid(-m * h / s, m * h / s, 2 * m)
    n_idx = round(n / h)
    targets = np.linspace(-y_max, y_max, y_count)
    ys = sorted({(round(s * y / h) * h) / s for y in targets})
    return env_grid, f_grid, ys, n_idx


def _random_reward(stream, grid):
    # two-sided Brownian profile pinned at 0, clipped to the growth envelope
    half = grid.steps // 2
    steps = stream.normal(0.0, math.sqrt(grid.h), grid.steps)
    right = np.concatenate([[0.0], np.cumsum(steps[:half])])
    left = np.concatenate([[0.0], np.cumsum(steps[half:])])[::-1]
    v = np.concatenate([left[:-1], right])
    v = np.minimum(v, 0.9 * (1.0 + np.abs(grid.points)))
    return RewardFunction(grid, v, (1.0, 1.0, 1.0))


def _polymer_task(stream, size, n, steps_to_n, x_max, y_max, y_count):
    env_grid, f_grid, ys, _ = _polymer_setup(n, steps_to_n, x_max, y_max, y_count)
    out = []
    for _ in range(size):
        env = Environment(env_grid, motion_paths(env_grid, 0.0, stream, n + 1))
        f = _random_reward(stream, f_grid)
        out.append([polymer_argmax(env, n, f, y) for y in ys])
    return ys, np.array(out)


@register("polymer-ordering", ("env", "y", "argmax", "ordered"),
          {"draws": 100, "chunk": 10, "n": 10, "steps_to_n": 1000, "x_max": 0.3, "y_max": 0.25, "y_count": 5},
          fast={"draws": 20},
          about="maximising start of the rewarded weight is non-decreasing in the end point")
def polymer_ordering(ctx):
    p = ctx.params
    parts = ctx.map(_polymer_task, p["draws"], p["chunk"], n=p["n"], steps_to_n=p["steps_to_n"],
                    x_max=p["x_max"], y_max=p["y_max"], y_count=p["y_count"])
    ys = parts[0][0]
    arg = np.concatenate([a for _, a in parts])
    ordered = np.all(np.diff(arg, axis=1) >= 0, axis=1)
    rows = [(e, y, float(arg[e, j]), bool(ordered[e])) for e in range(len(arg)) for j, y in enumerate(ys)]
    crit = [ctx.criterion("C16", "argmax non-decreasing in y on every environment", ordered.all(),
                          violations=int((~ordered).sum()))]
    return Outcome(["env", "y", "argmax", "ordered"], rows, {"levels": ys, "environments": len(arg)}, crit)


# quilts

def _fabric(stream, grid):
    return GridFunction(grid, motion_paths(grid, float(stream.normal()), stream, 1)[0])


def _quilt_task(stream, size, points, stitches):
    g = Grid(0.0, 1.0, points)
    out = []
    for _ in range(size):
        fabrics = [_fabric(stream, g) for _ in range(stitches + 1)]
        idx = np.sort(stream.choice(np.arange(1, points), stitches, replace=False))
        pts = [float(g.points[i]) for i in idx]
        q, val = build_quilt(fabrics, pts)
        # pointwise identity, rebuilt node by node
        worst = 0.0
        for j in range(g.size):
            piece = int(np.searchsorted(idx, j, side="left"))
            worst = max(worst, abs(val.values[j] - (fabrics[piece].values[j] + q.shifts[piece])))
        out.append((q.continuity_residual(), worst))
    return np.array(out)


@register("quilt-continuity", ("quilt", "continuity_residual", "identity_residual", "ok"),
          {"draws": 100, "chunk": 25, "points": 256, "stitches": 3, "tol": 1e-9},
          about="quilts join continuously and agree with their shifted fabrics")
def quilt_continuity(ctx):
    p = ctx.params
    res = np.concatenate(ctx.map(_quilt_task, p["draws"], p["chunk"], points=p["points"], stitches=p["stitches"]))
    ok = (res < p["tol"]).all(axis=1)
    rows = [(i, float(a), float(b), bool(o)) for i, ((a, b), o) in enumerate(zip(res, ok))]
    st = ctx.stream(tag="identities")
    g = Grid(0.0, 1.0, p["points"])
    f1, f2 = _fabric(st, g), _fabric(st, g)
    single, single_val = build_quilt([f1])
    trivial = single.shifts == (0.0,) and np.array_equal(single_val.values, f1.values)
    same, _ = build_quilt([f1, f1], [0.5])
    zero_shift = same.shifts == (0.0, 0.0)
    lifted = GridFunction(g, f2.values + 3.25)
    _, base = build_quilt([f1, f2], [0.5])
    _, moved = build_quilt([f1, lifted], [0.5])
    invariant = float(np.max(np.abs(base.values - moved.values)))
    example, example_val = build_quilt([f1, f2, _fabric(st, g)], [0.25, 0.75])
    ex_rows = [(float(x), int(pc), float(v)) for x, pc, v in
               zip(example_val.x, example.piece_index(), example_val.values)]
    crit = [ctx.criterion("C17", f"continuity and pointwise identity below {p['tol']}; identities exact",
                          ok.all() and trivial and zero_shift and invariant < 1e-12,
                          worst_continuity=float(res[:, 0].max()), worst_identity=float(res[:, 1].max()),
                          single_fabric_identity=trivial, identical_fabrics_zero_shift=zero_shift,
                          vertical_shift_invariance=invariant)]
    return Outcome(["quilt", "continuity_residual", "identity_residual", "ok"], rows,
                   {"shifts_example": example.shifts}, crit,
                   extra={"quilt-continuity-example": (["x", "piece", "value"], ex_rows)})


# increment moments

def _moment_task(stream, size, n, targets, steps_to_n):
    return wedge_increments(stream, size, n, targets, steps_to_n)


@register("increment-moment", ("y", "moment", "stderr"),
          {"draws": 1000, "chunk": 50, "n": 10, "eta": 0.5, "targets": (0.01, 0.02, 0.05, 0.1),
           "steps_to_n": 20000},
          fast={"draws": 100, "steps_to_n": 5000},
          about="(2 - eta)-moments of narrow-wedge weight increments against |y|^(1 - eta/2)")
def increment_moment(ctx):
    p = ctx.params
    parts = ctx.map(_moment_task, p["draws"], p["chunk"], n=p["n"], targets=p["targets"],
                    steps_to_n=p["steps_to_n"])
    ys = parts[0][0]
    table = moment_table(ys, np.concatenate([inc for _, inc in parts]), p["eta"])
    table["n"] = p["n"]
    rows = [(r["y"], r["moment"], r["stderr"]) for r in table["rows"]]
    crit = [ctx.criterion("M1", "log-log slope within 0.15 of 1 - eta/2", table["within"], monitor=True,
                          slope=table["slope"], target=table["target"])]
    summary = {k: v for k, v in table.items() if k != "rows"}
    return Outcome(["y", "moment", "stderr"], rows, summary, crit)

