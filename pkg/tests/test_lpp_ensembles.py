import itertools
import math

import numpy as np
import pytest
from scipy import stats

from kpzlab.ensembles import (LineEnsemble, OrderingError, dyson_bm, dyson_paths, gibbs_resample,
                              gue_top_eigenvalue, regular_tail_check, scaled_ensemble)
from kpzlab.errors import DegenerateInputError, DomainError, RejectionBudgetError
from kpzlab.grid import Grid
from kpzlab.harness.streams import derive_stream
from kpzlab.lpp import (Environment, RewardFunction, f_rewarded_weight, last_passage, last_passage_batch,
                        parabola, parabolic_shift, polymer_argmax, scaled_weight, tangent_line)
from kpzlab.paths import motion_paths
from kpzlab.quilt import build_quilt, increment_moment_experiment


def rng(tag, rep=0):
    return derive_stream(20261016, f"tests/{tag}", rep)


def psi(n, m, x=0.0, y=0.0):
    return 2 ** -0.5 * n ** (-1 / 3) * (m - 2 * n - 2 * n ** (2 / 3) * (y - x))


# last passage

def test_single_line_is_increment():
    env = Environment.sample(3, 2.0, 40, rng("env-single"))
    b = env.row(1)
    assert last_passage(env, (0.5, 1), (1.5, 1)) == b[30] - b[10]


def test_zero_environment():
    env = Environment(Grid(0.0, 1.0, 10), np.zeros((4, 11)))
    assert last_passage(env, (0.0, 0), (1.0, 3)) == 0.0


def test_two_lines_brute_force():
    g = Grid(0.0, 3.0, 3)
    env = Environment.from_increments(g, [[0.3, -1.2, 0.7], [-0.4, 2.0, 0.1]])
    b0, b1 = env.paths
    brute = max(b0[s] - b0[0] + b1[3] - b1[s] for s in range(4))
    assert last_passage(env, (0.0, 0), (3.0, 1)) == pytest.approx(brute, abs=1e-15)


def test_three_lines_brute_force():
    st = rng("env-three")
    g = Grid(0.0, 1.0, 12)
    for _ in range(20):
        env = Environment.sample(3, 1.0, 12, st)
        b = env.paths
        brute = max(b[0][s] + b[1][t] - b[1][s] + b[2][12] - b[2][t]
                    for s, t in itertools.combinations_with_replacement(range(13), 2))
        assert last_passage(env, (0.0, 0), (1.0, 2)) == pytest.approx(brute, abs=1e-14)
        assert g == env.grid


def test_superadditivity():
    st = rng("env-super")
    for _ in range(20):
        env = Environment.sample(4, 2.0, 40, st)
        whole = last_passage(env, (0.0, 0), (2.0, 3))
        split = last_passage(env, (0.0, 0), (1.0, 1)) + last_passage(env, (1.0, 1), (2.0, 3))
        assert whole >= split - 1e-12


def test_last_passage_route_errors():
    env = Environment.sample(3, 1.0, 10, rng("env-err"))
    with pytest.raises(DomainError):
        last_passage(env, (0.0, 2), (1.0, 1))
    with pytest.raises(DomainError):
        last_passage(env, (0.5, 0), (0.2, 1))
    with pytest.raises(DomainError):
        last_passage(env, (0.0, 0), (1.0, 5))


def test_in_cell_jumps_need_step():
    with pytest.raises(DomainError):
        last_passage_batch(np.zeros((1, 2, 3)), 0, 2, rng("no-h"))


def test_in_cell_jumps_only_raise_energy():
    g = Grid(0.0, 1.0, 50)
    env = motion_paths(g, 0.0, rng("in-cell"), 200 * 3).reshape(200, 3, g.size)
    grid_only = last_passage_batch(env, 0, g.steps)
    refined = last_passage_batch(env, 0, g.steps, rng("in-cell-sups"), g.h)
    assert np.all(refined >= grid_only)


@pytest.mark.parametrize("n", [2, 5])
def test_last_passage_gue_identity(n):
    g = Grid(0.0, 1.0, 1000)
    st = rng("lpp-gue", n)
    lpp = np.concatenate([last_passage_batch(motion_paths(g, 0.0, st, 250 * n).reshape(250, n, g.size),
                                             0, g.steps, st, g.h) for _ in range(16)])
    gue = gue_top_eigenvalue(n, 1.0, rng("gue", n), 4000)
    assert stats.ks_2samp(lpp, gue).pvalue > 0.01


def test_environment_binary_roundtrip(tmp_path):
    env = Environment.sample(3, 2.0, 16, rng("env-io"), seed_key=(1, 2, 3, 4))
    env.to_binary(tmp_path / "env.bin")
    back = Environment.from_binary(tmp_path / "env.bin")
    assert back.grid == env.grid and back.seed_key == (1, 2, 3, 4)
    assert np.array_equal(back.paths, env.paths)


def test_environment_rows_start_at_zero():
    with pytest.raises(DomainError):
        Environment(Grid(0.0, 1.0, 2), np.ones((2, 3)))


# scaled and rewarded weights

def test_scaled_weight_composition():
    env = Environment.sample(2, 2.0, 200, rng("scaled-n1"))
    assert scaled_weight(env, 1, 0.0, 0.0) == pytest.approx(psi(1, last_passage(env, (0.0, 0), (1.0, 1))),
                                                           abs=1e-14)


def test_scaled_weight_centering():
    # lines with slope 2 on line 1 only: the energy equals the centring term
    g = Grid(0.0, 1.0, 10)
    env = Environment(g, np.stack([np.zeros(g.size), 2.0 * g.points]))
    assert scaled_weight(env, 1, 0.0, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_scaled_weight_horizon_error():
    env = Environment.sample(3, 1.0, 10, rng("scaled-err"))
    with pytest.raises(DomainError):
        scaled_weight(env, 2, 0.0, 0.0)


def _rewarded_env(n=4, y_max=0.5, per_n=100, tag="rewarded"):
    # step n / per_n keeps time n on the grid; scaled starts are multiples of h / s
    s = 2 * n ** (2 / 3)
    h = n / per_n
    steps = math.ceil((n + s * y_max) / h)
    return Environment.sample(n + 1, steps * h, steps, rng(tag)), s, h


def test_narrow_wedge_reduces_to_scaled_weight():
    env, s, h = _rewarded_env()
    f = RewardFunction.narrow_wedge(Grid(-1.0, 1.0, 4))
    y = 50 * h / s
    assert f_rewarded_weight(env, 4, f, y) == pytest.approx(scaled_weight(env, 4, 0.0, y), abs=1e-12)
    assert polymer_argmax(env, 4, f, y) == 0.0


def test_shifted_single_point_reward():
    env, s, h = _rewarded_env(tag="rewarded-shift")
    x0 = 20 * h / s
    f = RewardFunction(Grid(0.0, x0, 1), [-np.inf, 0.4], (1.0, 1.0, 1.0))
    assert f_rewarded_weight(env, 4, f, 0.0) == pytest.approx(scaled_weight(env, 4, x0, 0.0) + 0.4, abs=1e-12)


def test_three_point_reward_enumeration():
    env, s, h = _rewarded_env(tag="rewarded-three")
    step = 10 * h / s
    f = RewardFunction(Grid(0.0, 2 * step, 2), [0.3, -0.2, 0.1], (1.0, 1.0, 1.0))
    want = max(scaled_weight(env, 4, x, 0.0) + r for x, r in zip(f.grid.points, f.values))
    assert f_rewarded_weight(env, 4, f, 0.0) == pytest.approx(want, abs=1e-12)


def test_dominating_reward_forces_argmax():
    env, s, h = _rewarded_env(tag="rewarded-force")
    step = 10 * h / s
    f = RewardFunction(Grid(0.0, step, 1), [-np.inf, 0.0], (1.0, 1.0, 1.0))
    base = RewardFunction(Grid(0.0, step, 1), [0.0, 0.0], (1.0, 1.0, 1.0))
    osc = abs(f_rewarded_weight(env, 4, base, 0.0)) + np.abs(env.paths).max() * 10
    g = RewardFunction(Grid(0.0, step, 1), [-osc, 0.0], (1.0, osc + 1, 1.0))
    assert polymer_argmax(env, 4, g, 0.0) == step
    assert polymer_argmax(env, 4, f, 0.0) == step


def test_reward_class_rejections():
    g = Grid(-2.0, 2.0, 4)
    with pytest.raises(DomainError):
        RewardFunction(g, 1.0 * (1 + np.abs(g.points)) + 1.0, (1.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        RewardFunction(g, np.full(g.size, -5.0), (1.0, 1.0, 1.0))
    with pytest.raises(DegenerateInputError):
        RewardFunction(g, np.full(g.size, -np.inf), (1.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        RewardFunction(g, np.zeros(g.size), (0.0, 1.0, 1.0))


def test_polymer_argmax_monotone_in_y():
    n = 4
    env, s, h = _rewarded_env(n, 0.5, tag="ordering")
    fg = Grid(0.0, 30 * h / s, 30)
    f = RewardFunction(fg, 0.2 * np.cos(40 * fg.points), (1.0, 1.0, 1.0))
    xs = [polymer_argmax(env, n, f, k * 10 * h / s) for k in range(5)]
    assert all(a <= b for a, b in zip(xs, xs[1:]))


# parabola and shifts

def test_parabola_values():
    assert parabola(1.0) == pytest.approx(2 ** -0.5, abs=1e-15)
    st = rng("parabola")
    x, y = st.uniform(-5, 5, 100), st.uniform(-5, 5, 100)
    assert np.max(np.abs(parabola(x) - (-tangent_line(x, y) + parabola(x - y)))) < 1e-12


def test_parabolic_shift_identity_and_translation():
    g = Grid(-2.0, 2.0, 40)
    ens = LineEnsemble.from_array(g, np.stack([np.ones(g.size), np.zeros(g.size)]))
    same = parabolic_shift(ens, 0.0)
    assert same.grid == g and np.array_equal(same.values, ens.values)
    moved = parabolic_shift(ens, 0.5)
    assert moved.grid.left == -2.5
    assert np.allclose(moved.values[1], -tangent_line(g.points, 0.5))
    with pytest.raises(DomainError):
        parabolic_shift(ens, 0.5, window=(-2.0, 2.0))


# ensembles

def test_ordering_enforced():
    g = Grid(0.0, 1.0, 2)
    with pytest.raises(OrderingError):
        LineEnsemble.from_array(g, [[0.0, 1.0, 2.0], [0.0, 0.0, 0.0]])


def test_dyson_single_curve_is_brownian():
    g = Grid(0.5, 1.0, 1)
    ends = np.array([dyson_paths(1, g, rng("dyson1", r))[0, -1] for r in range(20000)])
    assert stats.kstest(ends, "norm").statistic < 0.015


def test_dyson_ordered_and_gue_endpoint():
    g = Grid(0.25, 1.0, 3)
    st = rng("dyson5")
    tops = []
    for _ in range(3000):
        e = dyson_bm(5, g, st)
        assert np.all(e.values[:-1] > e.values[1:])
        tops.append(e.values[0, -1])
    assert stats.ks_2samp(tops, gue_top_eigenvalue(5, 1.0, rng("gue5"), 3000)).pvalue > 0.01


def test_dyson_rejects_time_zero():
    with pytest.raises(DomainError):
        dyson_bm(3, Grid(0.0, 1.0, 4), rng("dyson0"))


def test_scaled_ensemble_centering_and_order():
    n = 8
    s = 2 * n ** (2 / 3)
    g = Grid(n - s, n + s, 4)
    vals = np.stack([2 * n + s * (g.points - n) / s * 1.0 + c for c in (1.0, 0.0, -1.0)])
    sc = scaled_ensemble(LineEnsemble.from_array(g, vals), n)
    assert sc.grid.left == pytest.approx(-1.0) and sc.grid.right == pytest.approx(1.0)
    assert np.allclose(sc.values[1], 0.0, atol=1e-12)
    assert np.all(sc.values[:-1] > sc.values[1:])
    with pytest.raises(DomainError):
        scaled_ensemble(LineEnsemble.from_array(g, vals), n, window=(-2.0, 0.0))


def test_scaled_top_line_matches_scaled_weight_law():
    # L(1, 0) of the scaled Dyson ensemble with n + 1 curves against psi of the
    # (0, line 0) -> (n, line n) energy, computed with in-cell jumps
    n = 6
    s = 2 * n ** (2 / 3)
    st = rng("scaled-identity")
    g = Grid(n - 0.5 * s, n + 0.5 * s, 2)
    dyson = [scaled_ensemble(dyson_bm(n + 1, g, st), n).values[0, 1] for _ in range(3000)]
    lg = Grid(0.0, float(n), 200 * n)
    lpp = np.concatenate([last_passage_batch(motion_paths(lg, 0.0, st, 250 * (n + 1)).reshape(250, n + 1, lg.size),
                                             0, lg.steps, st, lg.h) for _ in range(12)])
    assert stats.ks_2samp(dyson, psi(n, lpp)).pvalue > 0.01


def test_regular_tail_check():
    x = rng("tails").normal(size=(2000, 3))
    rep = regular_tail_check(x, [-0.5, 0.0, 0.5], 0.1, 1e6)
    assert rep.all_within and len(rep.rows) == 3 * 3 * 2
    with pytest.raises(DomainError):
        regular_tail_check(x, [0.0, 0.0, 0.0], 0.1, 10.0, s_values=(0.5,))
    with pytest.raises(DomainError):
        regular_tail_check(x, [0.0, 0.0, 5.0], 0.1, 10.0, n=10)


# Gibbs resampling

def test_gibbs_without_lower_curve_is_bridge():
    g = Grid(0.0, 1.0, 8)
    ens = LineEnsemble.from_array(g, np.zeros((1, g.size)))
    out = gibbs_resample(ens, 1, (0.0, 1.0), rng("gibbs-free"))
    assert out.telemetry.attempts == 1 and out.telemetry.accepted
    assert out.ensemble.values[0, 0] == 0.0 and out.ensemble.values[0, -1] == 0.0


def test_gibbs_preserves_boundary_bitwise():
    g = Grid(0.0, 2.0, 20)
    st = rng("gibbs-bound")
    ens = dyson_bm(3, Grid(1.0, 3.0, 20), st)
    ens = LineEnsemble.from_array(g, ens.values)
    out = gibbs_resample(ens, 2, (0.5, 1.5), st).ensemble.values
    outside = np.r_[0:6, 15:21]
    assert np.array_equal(out[:, outside], ens.values[:, outside])
    assert np.array_equal(out[2], ens.values[2])
    assert np.all(out[:-1] > out[1:])


def test_gibbs_errors():
    g = Grid(0.0, 1.0, 4)
    ens = LineEnsemble.from_array(g, np.stack([np.full(g.size, 0.1), np.zeros(g.size)]))
    with pytest.raises(DomainError):
        gibbs_resample(ens, 3, (0.0, 1.0), rng("gibbs-k"))
    with pytest.raises(DomainError):
        gibbs_resample(ens, 1, (0.5, 0.5), rng("gibbs-w"))
    # bridges pinned near 0 cannot clear a lower curve at height 9 inside the window
    top = np.array([1e-6, 10.0, 10.0, 10.0, 1e-6])
    squeezed = LineEnsemble.from_array(g, np.stack([top, np.array([0.0, 9.0, 9.0, 9.0, 0.0])]))
    with pytest.raises(RejectionBudgetError):
        gibbs_resample(squeezed, 1, (0.0, 1.0), rng("gibbs-budget"), max_attempts=5)


# quilts and increment moments

def test_quilt_identities():
    from kpzlab.grid import GridFunction
    g = Grid(0.0, 1.0, 10)
    a = GridFunction(g, np.sin(g.points))
    _, q = build_quilt([a])
    assert np.array_equal(q.values, a.values)
    quilt, q = build_quilt([a, a], [0.5])
    assert quilt.shifts == (0.0, 0.0) and np.array_equal(q.values, a.values)


def test_quilt_random_fabrics():
    from kpzlab.grid import GridFunction
    g = Grid(0.0, 1.0, 40)
    st = rng("quilt")
    fabrics = [GridFunction(g, np.cumsum(st.normal(size=g.size))) for _ in range(4)]
    stitches = [0.25, 0.5, 0.75]
    quilt, q = build_quilt(fabrics, stitches)
    assert quilt.continuity_residual() < 1e-9
    piece = quilt.piece_index()
    for i, x in enumerate(g.points):
        p = piece[i]
        assert abs(q.values[i] - (fabrics[p].values[i] + quilt.shifts[p])) < 1e-12
    with pytest.raises(DomainError):
        build_quilt(fabrics, [0.5, 0.25, 0.75])
    with pytest.raises(DomainError):
        build_quilt(fabrics[:2], [0.0])


def test_increment_moment_zero_at_origin_and_slope():
    res = increment_moment_experiment(rng("moments"), n=10, replications=200, steps_to_n=2000)
    table = res["rows"]
    assert table[0]["y"] == 0.0 and table[0]["moment"] == 0.0
    assert 0.4 < res["slope"] < 1.1
