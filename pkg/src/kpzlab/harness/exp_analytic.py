"""Quadrature and closed-form checks: meander bounds, elementary inequalities
and the vault/slope cost tables."""

import math

import numpy as np

from ..extremum import (conditioned_inf_check, density_tool_check, geometric_sum_check, integral_bound_check,
                        meander_bound_report, normal_bound_check)
from ..jump.observables import (bridge_above_bound, bridge_above_points, conditional_jump_probability,
                                monotonicity_probe, variance_bounds_hold, vault_slope_costs)
from .experiments import Outcome, register

CHECK_COLUMNS = ("family", "case", "value", "bound", "ok")


@register("meander-bounds", CHECK_COLUMNS, {},
          about="from-zero, increment and return-from-above meander estimates on their lattices")
def meander_bounds(ctx):
    report = meander_bound_report()
    rows = [(which, repr(r["at"]), r["worst"], r["bound"], r["holds"]) for which, r in sorted(report.items())]
    crit = [ctx.criterion("C4", "every meander estimate within its bound",
                          all(r["holds"] for r in report.values()),
                          worst={k: v["worst"] for k, v in report.items()})]
    return Outcome(list(CHECK_COLUMNS), rows, report, crit)


def _family_rows(name, rows, value, bound):
    keys = [k for k in rows[0] if k not in (value, bound, "ok")]
    return [(name, ";".join(f"{k}={r[k]!r}" for k in keys), r[value], r[bound], r["ok"]) for r in rows]


@register("analytic-lemmas", CHECK_COLUMNS, {"draws": 1000000, "lambdas": (1.2, 2.0), "n": 10, "p": 0.25},
          fast={"draws": 100000},
          about="conditional-Gaussian monotonicity and the elementary inequalities")
def analytic_lemmas(ctx):
    p = ctx.params
    mono = monotonicity_probe()
    fams = {
        "normal_bound": (normal_bound_check(), "prob", "upper"),
        "integral_bound": (integral_bound_check(), "integral", "bound"),
        "geometric_sum": (geometric_sum_check(ctx.stream(tag="geometric"), p["n"], p["p"], p["lambdas"],
                                              p["draws"]), "exact", "bound"),
        "density_tool": (density_tool_check(), "density", "bound"),
        "conditioned_inf": (conditioned_inf_check(), "prob", "bound"),
    }
    rows = [("monotonicity", f"m={r['m']!r};variance={r['variance']!r};r={r['r']!r}", r["max_step"], 0.0,
             r["strictly_decreasing"]) for r in mono]
    status = {"monotonicity": all(r["strictly_decreasing"] for r in mono)}
    for name, (fam, value, bound) in fams.items():
        rows += _family_rows(name, fam, value, bound)
        status[name] = all(r["ok"] for r in fam)
    crit = [ctx.criterion("C15", "monotonicity and every elementary inequality hold on their lattices",
                          all(status.values()), families=status)]
    return Outcome(list(CHECK_COLUMNS), rows, {"families": status, "geometric_sum": fams["geometric_sum"][0]},
                   crit)


@register("costs-tables", CHECK_COLUMNS,
          {"draws": 200000, "d": 1.0, "pole_sets": 200, "tent": (-1.0, 0.0, -1.0)},
          fast={"draws": 20000, "pole_sets": 50},
          about="vault and slope costs, conditional jump probabilities, variance and bridge-above-poles bounds")
def costs_tables(ctx):
    p = ctx.params
    d = p["d"]
    tm, tp, tq = p["tent"]
    rows = []
    for y in (-2.0, -1.0, 0.0, 1.0, 2.0):
        for z in (-2.0, -1.0, 0.0, 1.0, 2.0):
            v, s = vault_slope_costs(y, z, d, tm, tp, tq)
            rows.append(("costs", f"y={y!r};z={z!r}", v * s, math.nan, bool(v >= 1.0 and s > 0)))
    ms = np.linspace(-4.0, 4.0, 41)
    jp = [conditional_jump_probability(m, m, 0.0, d) for m in ms]
    mono = bool(np.all(np.diff(jp) < 0))
    rows.append(("jump_probability", "y=z on [-4, 4]", float(np.diff(jp).max()), 0.0, mono))
    st = ctx.stream(tag="poles")
    var_ok = True
    for _ in range(int(p["pole_sets"])):
        gaps = 5.0 * d + st.exponential(3.0 * d, int(st.integers(1, 8)))
        poles = np.concatenate([[0.0], np.cumsum(np.round(gaps, 3))]).tolist()
        ok = variance_bounds_hold(poles, d)
        var_ok &= ok
    rows.append(("variance_bounds", f"{int(p['pole_sets'])} random pole sets", float(var_ok), 1.0, var_ok))
    est = {}
    for N in (1, 2, 3, 4):
        est[N] = bridge_above_points(N, ctx.stream(rep=N - 1, tag="bridge"), int(p["draws"]))
    G = math.exp(-3.0) / est[1]
    bridge_ok = True
    for N in (2, 3, 4):
        se = math.sqrt(est[N] * (1 - est[N]) / p["draws"])
        bound = bridge_above_bound(N, G)
        ok = est[N] + 3 * se >= bound
        bridge_ok &= ok
        rows.append(("bridge_above_poles", f"N={N};G={G!r}", est[N], bound, ok))
    crit = [
        ctx.criterion("M4", "conditional jump probability decreasing in y + z", mono, monitor=True),
        ctx.criterion("M5", "pole variance bounds hold exactly", var_ok, monitor=True),
        ctx.criterion("M6", "bridge-above-poles estimate above the calibrated bound", bridge_ok, monitor=True,
                      G=G, estimates=est),
    ]
    return Outcome(list(CHECK_COLUMNS), rows, {"G": G}, crit)
