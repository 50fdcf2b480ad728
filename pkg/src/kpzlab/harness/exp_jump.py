"""Experiments on the jump ensemble built over parabolic test ensembles, and the
brute-force oracles for its combinatorial pieces."""

import math

import numpy as np
from scipy.stats import gaussian_kde, spearmanr

from ..errors import DegenerateInputError, ParameterError
from ..jump.candidate import JumpSampler, node_layout, satisfies_conditioning
from ..jump.construction import build_jump_data
from ..jump.corners import (continuity_residual, corner_criterion, pass_test, reconstruct_values,
                            side_corner)
from ..jump.geometry import pole_set
from ..jump.observables import (domination_rows, in_good_region, log_vault_slope_costs, observables,
                                variance_bounds_hold)
from ..jump.params import JumpParams
from ..jump.surrogate import parabolic_surrogate
from .experiments import Outcome, register
from .oracles import pole_set_exhaustive, random_inner, random_pole_instance, random_side, side_test_brute
from .stats import wilson_ci

JUMP_DEFAULTS = {"epsilon": 1e-3, "k": 1, "d": 1.0}


def _params(p):
    return JumpParams(p["epsilon"], int(p["k"]), p["d"])


def _structure(data, cand, params):
    """Structural checks for one ensemble and one accepted candidate."""
    T, d_ip = params.T, params.d_ip
    poles = data.poles
    J = cand.values
    _, idx = node_layout(data)
    full = reconstruct_values(J, data.left, data.right)
    gaps = np.diff(poles)
    out = {
        "tent_slopes": bool(np.all(np.abs(data.tent.slopes) <= 4.0 * T)),
        "tent_concave": data.tent.is_concave(),
        "pole_gaps": bool(np.all(gaps >= d_ip)),
        "pole_count": len(poles) <= 2.0 * T / d_ip,
        "lr_on_f2": (not data.fav.f2) or (data.l_point <= -T / 2 and data.r_point >= T / 2),
        "lr_are_poles": poles[0] == data.l_point and poles[-1] == data.r_point,
        "conditioning": satisfies_conditioning(J, data, idx),
        "continuity": continuity_residual(J, data.left, data.right) < 1e-12,
        "restriction_bitwise": bool(np.array_equal(full[:, data.middle_slice], J)),
        "variance_bounds": variance_bounds_hold(poles, params.d),
    }
    return out, len(poles), full


STRUCTURE_CHECKS = ("tent_slopes", "tent_concave", "pole_gaps", "pole_count", "lr_on_f2", "lr_are_poles",
                    "conditioning", "continuity", "restriction_bitwise", "variance_bounds")


def _structure_task(stream, size, epsilon, k, d):
    params = JumpParams(epsilon, k, d)
    rows = []
    for _ in range(size):
        data = build_jump_data(parabolic_surrogate(params, stream), params)
        cand = JumpSampler(data).sample(stream)
        checks, count, _ = _structure(data, cand, params)
        rows.append((data.fav.fav, data.l_point, data.r_point, count, cand.attempts,
                     *[checks[c] for c in STRUCTURE_CHECKS]))
    return rows


@register("jump-structure",
          ("draw", "fav", "l", "r", "poles", "attempts") + STRUCTURE_CHECKS,
          dict(JUMP_DEFAULTS, draws=1000, chunk=25),
          fast={"draws": 40},
          about="structural invariants of majorant, poles, Tent, candidate and reconstruction")
def jump_structure(ctx):
    p = ctx.params
    params = _params(p)
    parts = ctx.map(_structure_task, p["draws"], p["chunk"], epsilon=p["epsilon"], k=int(p["k"]), d=p["d"])
    rows = [(i, *r) for i, r in enumerate(r for part in parts for r in part)]
    fav = [r for r in rows if r[1]]
    viol = {c: sum(1 for r in fav if not r[6 + j]) for j, c in enumerate(STRUCTURE_CHECKS)}
    fav_rate = len(fav) / len(rows)
    crit = [
        ctx.criterion("C12", "zero structural violations over Fav draws", len(fav) > 0 and not any(viol.values()),
                      fav_draws=len(fav), violations=viol, pole_count_bound=2.0 * params.T / params.d_ip,
                      max_poles=max((r[4] for r in fav), default=0)),
        ctx.criterion("C19a", "Fav frequency at least 1 - epsilon", fav_rate >= 1 - params.epsilon, monitor=True,
                      fav_rate=fav_rate),
    ]
    return Outcome(["draw", "fav", "l", "r", "poles", "attempts", *STRUCTURE_CHECKS], rows,
                   {"params": params.as_dict(), "violations": viol, "fav_rate": fav_rate}, crit)


def _pass_task(stream, size, epsilon, k, d):
    params = JumpParams(epsilon, k, d)
    rows = []
    for _ in range(size):
        data = build_jump_data(parabolic_surrogate(params, stream), params)
        cand = JumpSampler(data).sample(stream)
        full = reconstruct_values(cand.values, data.left, data.right)
        ok = pass_test(full, data.lower.values)
        obs = observables(cand.values, data)
        rows.append((data.fav.fav, obs.pole_case, obs.p, obs.Y, obs.Z, obs.U, obs.W_eta, cand.attempts, ok))
    return rows


PASS_COLUMNS = ("draw", "fav", "pole_case", "p", "y", "z", "u", "w", "accepted_attempts", "pass")


@register("jump-pass-rate", PASS_COLUMNS, dict(JUMP_DEFAULTS, draws=200, chunk=20),
          fast={"draws": 20},
          about="Pass rate of reconstructed candidates against its lower bound (monitor)")
def jump_pass_rate(ctx):
    p = ctx.params
    params = _params(p)
    parts = ctx.map(_pass_task, p["draws"], p["chunk"], epsilon=p["epsilon"], k=int(p["k"]), d=p["d"])
    rows = [(i, *r) for i, r in enumerate(r for part in parts for r in part)]
    fav = [r for r in rows if r[1]]
    passes = sum(1 for r in fav if r[-1])
    lo, hi = wilson_ci(passes, len(fav))
    log_bound = params.log_pass_rate_bound()
    crit = [ctx.criterion("C19b", "Wilson upper bound of the Pass rate not below the stated lower bound",
                          len(fav) > 0 and math.log(max(hi, 1e-300)) >= log_bound, monitor=True,
                          passes=passes, fav_draws=len(fav), wilson=(lo, hi), log_bound=log_bound)]
    return Outcome(list(PASS_COLUMNS), rows, {"passes": passes, "fav_draws": len(fav), "wilson": (lo, hi),
                                             "log_pass_rate_bound": log_bound}, crit)


def _density_task(stream, size, epsilon, k, d, per):
    params = JumpParams(epsilon, k, d)
    T, R = params.T, params.R
    overlay, dom = [], []
    for e in range(size):
        data = build_jump_data(parabolic_surrogate(params, stream), params)
        cands = JumpSampler(data).sample_many(stream, per)
        g = data.middle_grid
        mid = g.snap(0.5 * (data.l_point + data.r_point))
        m = float(g.points[mid])
        var = (m - data.l_point) * (data.r_point - m) / (data.r_point - data.l_point)
        sample = np.array([c.values[-1, mid] for c in cands])
        dom.append((sample, -T * T + math.sqrt(var) * stream.standard_normal(per)))
        obs = [observables(c.values, data) for c in cands]
        if not obs[0].pole_case:
            continue
        pole = obs[0].p
        tm, tp, tq = data.tent(pole - 4 * d), data.tent(pole), data.tent(pole + 4 * d)
        for o in obs:
            lv, ls = log_vault_slope_costs(o.Y, o.Z, d, tm, tp, tq)
            overlay.append((e, o.Y, o.Z, lv + ls, in_good_region(o.Y, o.Z, R, T)))
    return overlay, dom


@register("jump-density-monitor", ("group", "y", "z", "log_kde", "log_cost", "good_region"),
          dict(JUMP_DEFAULTS, draws=100, chunk=10, per_ensemble=100),
          fast={"draws": 10, "per_ensemble": 20},
          about="(Y, Z) density overlay against the cost shape; domination of the midpoint law")
def jump_density_monitor(ctx):
    p = ctx.params
    parts = ctx.map(_density_task, p["draws"], p["chunk"], epsilon=p["epsilon"], k=int(p["k"]), d=p["d"],
                    per=int(p["per_ensemble"]))
    overlay = [r for o, _ in parts for r in o]
    sample = np.concatenate([s for _, dm in parts for s, _ in dm])
    ref = np.concatenate([r for _, dm in parts for _, r in dm])
    dom = domination_rows(sample, ref)
    rows, rho = [], math.nan
    if len(overlay) >= 10:
        yz = np.array([[r[1], r[2]] for r in overlay]).T
        log_kde = gaussian_kde(yz).logpdf(yz)
        rows = [(r[0], r[1], r[2], float(lk), r[3], r[4]) for r, lk in zip(overlay, log_kde)]
        good = np.array([r[4] for r in overlay])
        if good.sum() >= 10:
            rho = float(spearmanr(log_kde[good], -np.array([r[3] for r in overlay])[good])[0])
    crit = [
        ctx.criterion("M2", "(Y, Z) log-density rank-correlates with minus the log cost", rho > 0,
                      monitor=True, spearman=rho, points=len(overlay)),
        ctx.criterion("M3", "midpoint of J dominates the bridge law at all probes",
                      all(r["ok"] for r in dom), monitor=True),
    ]
    dom_rows = [(r["probe"], r["at"], r["cdf_sample"], r["cdf_reference"], r["stderr"], r["ok"]) for r in dom]
    return Outcome(["group", "y", "z", "log_kde", "log_cost", "good_region"], rows,
                   {"spearman": rho, "domination": dom}, crit,
                   extra={"jump-density-monitor-domination": (["probe", "at", "cdf_sample", "cdf_reference", "stderr", "ok"],
                                              dom_rows)})


# combinatorial oracles

def _corner_task(stream, size, max_k, points):
    rows = []
    for _ in range(size):
        k = int(stream.integers(1, max_k + 1))
        left = random_side(stream, k, points, True)
        right = random_side(stream, k, points, False)
        cl, cr = side_corner(left), side_corner(right)
        if stream.random() < 0.5:
            xl, xr = random_inner(stream, cl), random_inner(stream, cr)
        else:
            # inside the cone by construction
            xl = cl + np.sort(stream.uniform(0.01, 1.0, k))[::-1]
            xr = cr + np.sort(stream.uniform(0.01, 1.0, k))[::-1]
        fast = corner_criterion(xl, xr, cl, cr)
        brute = side_test_brute(left, xl) and side_test_brute(right, xr)
        rows.append((k, fast, brute, fast == brute))
    return rows


@register("corner-oracle", ("instance", "k", "corner_test", "brute_force", "agree"),
          {"draws": 100, "chunk": 50, "max_k": 3, "points": 16},
          about="Corner-vector criterion against pointwise side-interval reconstruction")
def corner_oracle(ctx):
    p = ctx.params
    parts = ctx.map(_corner_task, p["draws"], p["chunk"], max_k=int(p["max_k"]), points=int(p["points"]))
    rows = [(i, *r) for i, r in enumerate(r for part in parts for r in part)]
    agree = all(r[-1] for r in rows)
    crit = [ctx.criterion("C13", "exact agreement with brute force", agree,
                          instances=len(rows), true_cases=sum(1 for r in rows if r[3]))]
    return Outcome(["instance", "k", "corner_test", "brute_force", "agree"], rows, {}, crit)


def _pole_task(stream, size, max_points):
    rows = []
    for _ in range(size):
        xext, l_pt, r_pt, d = random_pole_instance(stream, max_points)
        try:
            fast = pole_set(xext, l_pt, r_pt, d)
        except (DegenerateInputError, ParameterError):
            fast = None
        brute = pole_set_exhaustive(xext, l_pt, r_pt, d)
        rows.append((len(xext), d, "" if fast is None else " ".join(map(repr, fast)),
                     "" if brute is None else " ".join(map(repr, brute)), fast == brute))
    return rows


@register("pole-oracle", ("instance", "points", "d_ip", "pole_set", "exhaustive", "agree"),
          {"draws": 200, "chunk": 100, "max_points": 12},
          about="pole set against exhaustive subset search")
def pole_oracle(ctx):
    p = ctx.params
    parts = ctx.map(_pole_task, p["draws"], p["chunk"], max_points=int(p["max_points"]))
    rows = [(i, *r) for i, r in enumerate(r for part in parts for r in part)]
    crit = [ctx.criterion("C14", "exact match with exhaustive search", all(r[-1] for r in rows),
                          instances=len(rows), mismatches=sum(1 for r in rows if not r[-1]))]
    return Outcome(["instance", "points", "d_ip", "pole_set", "exhaustive", "agree"], rows, {}, crit)
