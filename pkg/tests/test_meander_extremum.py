import itertools
import math

import numpy as np
import pytest
from scipy import stats

from kpzlab.errors import DomainError
from kpzlab.extremum import (NearTouchSpec, arcsin_measure, geometric_sum_tail, greedy_count,
                             integral_bound_check, meander_bound_quadrature, meander_bound_report,
                             normal_bound_check, num_nt, num_nz, nt_event, nz_event, separation_steps)
from kpzlab.grid import Grid, GridFunction
from kpzlab.harness.streams import derive_stream
from kpzlab.meander import (MeanderState, chapman_kolmogorov_residual, marginal_cdf_table, marginal_mass,
                            meander_marginal_density, meander_transition_density, sample_meander,
                            sample_meander_paths, transition_mass)


def rng(tag, rep=0):
    return derive_stream(20261016, f"tests/{tag}", rep)


# densities

def test_transition_normalisation():
    assert abs(transition_mass(0.3, 0.5, 0.7) - 1.0) < 1e-6


@pytest.mark.parametrize("s,t,x", list(itertools.product((0.1, 0.4, 0.7), (0.75, 0.9, 1.0), (0.05, 0.5, 2.0))))
def test_transition_normalisation_lattice(s, t, x):
    assert abs(transition_mass(s, x, t) - 1.0) < 1e-6


def test_transition_closed_form_value():
    # (phi_{1/2}(0) - phi_{1/2}(2)) (1/2) / Phi~_{1/2}(1), evaluated independently
    got = meander_transition_density(MeanderState(0.5, 1.0), MeanderState(1.0, 1.0))
    assert got == pytest.approx(0.657239313768819, rel=1e-12)


def test_transition_vanishes_at_zero():
    f = MeanderState(0.2, 0.4)
    assert meander_transition_density(f, MeanderState(0.6, 0.0)) == 0.0
    assert meander_transition_density(f, MeanderState(0.6, 1e-9)) < 1e-7


def test_transition_errors():
    with pytest.raises(DomainError):
        meander_transition_density(MeanderState(0.5, 0.0), MeanderState(0.7, 1.0))
    with pytest.raises(DomainError):
        meander_transition_density(MeanderState(0.5, 1.0), MeanderState(0.5, 1.0))
    with pytest.raises(DomainError):
        MeanderState(0.0, 1.0)


def test_marginal_values():
    assert meander_marginal_density(1.0, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert meander_marginal_density(0.5, 1e-9) < 1e-8
    assert abs(marginal_mass(0.5) - 1.0) < 1e-6
    with pytest.raises(DomainError):
        meander_marginal_density(1.5, 1.0)
    with pytest.raises(DomainError):
        meander_marginal_density(0.0, 1.0)


def test_marginal_at_one_is_rayleigh():
    ys = np.linspace(0.01, 5, 40)
    got = [meander_marginal_density(1.0, y) for y in ys]
    assert np.allclose(got, ys * np.exp(-ys ** 2 / 2), rtol=1e-12)


@pytest.mark.parametrize("pt", [(0.1, 0.5, 0.4, 0.7, 0.8), (0.2, 1.0, 0.5, 1.0, 0.3), (0.3, 0.2, 0.6, 0.9, 1.5)])
def test_chapman_kolmogorov(pt):
    assert chapman_kolmogorov_residual(*pt) < 1e-5


# sampler

def test_meander_starts_at_zero_and_stays_positive():
    g = Grid(0.0, 1.0, 20)
    path = sample_meander(g, rng("meander-one"))
    assert path.values[0] == 0.0 and np.all(path.values[1:] > 0)


def test_meander_grid_must_be_unit():
    with pytest.raises(DomainError):
        sample_meander_paths(Grid(0.0, 2.0, 4), rng("meander-bad"), 1)


def test_meander_midpoint_ks():
    g = Grid(0.0, 1.0, 2)
    v = sample_meander_paths(g, rng("meander-ks"), 100000)[:, 1]
    ys, cdf = marginal_cdf_table(0.5)
    stat = stats.kstest(v, lambda x: np.interp(x, ys, cdf)).statistic
    assert stat < 0.01


@pytest.mark.parametrize("method", ["inverse-cdf", "rejection"])
def test_meander_endpoint_law(method):
    g = Grid(0.0, 1.0, 10)
    v = sample_meander_paths(g, rng(f"meander-end-{method}"), 100000, method=method)[:, -1]
    p = 1 - math.exp(-0.5)
    assert abs(float((v <= 1).mean()) - p) < 3 * math.sqrt(p * (1 - p) / len(v))


def test_meander_matches_conditioned_brownian_motion():
    # Brownian motion conditioned to stay above -eps at the grid nodes, by rejection, at time 1/2.
    # Discrete monitoring moves the effective barrier down by beta*sqrt(h), beta = -zeta(1/2)/sqrt(2 pi).
    eps = 1e-3
    beta = 0.5825971579390106
    g = Grid(0.0, 1.0, 400)
    st = rng("meander-eps")
    kept = []
    while sum(len(k) for k in kept) < 4000:
        p = np.cumsum(st.standard_normal((20000, g.steps)) * math.sqrt(g.h), axis=1)
        kept.append(p[np.all(p > -eps, axis=1), 199])
    v = np.concatenate(kept) + beta * math.sqrt(g.h)
    ys, cdf = marginal_cdf_table(0.5)
    assert stats.kstest(v, lambda x: np.interp(x, ys, cdf)).pvalue > 1e-3


def test_meander_samplers_agree():
    g = Grid(0.0, 1.0, 8)
    a = sample_meander_paths(g, rng("agree-a"), 20000)[:, 4]
    b = sample_meander_paths(g, rng("agree-b"), 20000, method="rejection")[:, 4]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_meander_deterministic():
    g = Grid(0.0, 1.0, 6)
    assert np.array_equal(sample_meander_paths(g, rng("det"), 50), sample_meander_paths(g, rng("det"), 50))


# arcsine, near touches and near zeros

def test_arcsin_measure_values():
    assert arcsin_measure((-0.5, 0.5), 0.5) == pytest.approx(1.0, abs=1e-15)
    assert arcsin_measure((0.0, 0.5), 0.5) == pytest.approx(0.5, abs=1e-15)
    assert arcsin_measure((0.0, 0.25), 0.5) == pytest.approx(1.0 / 6.0, abs=1e-15)
    with pytest.raises(DomainError):
        arcsin_measure((-1.0, 0.0), 0.5)


def test_near_touch_parabola_false():
    g = Grid(-1.0, 1.0, 200)
    # drop at distance 0.1 is 0.5, well beyond 0.5 * sqrt(0.1)
    path = GridFunction(g, -50.0 * g.points ** 2)
    assert not nt_event(path, NearTouchSpec(0.1, 0.5))


def test_near_touch_two_bumps_true():
    g = Grid(-1.0, 1.0, 200)
    eta, a = 0.1, 0.5
    v = np.full(g.size, -1.0)
    v[g.index_of(0.0)] = 1.0
    v[g.index_of(0.3)] = 1.0 - 0.5 * a * math.sqrt(eta)
    assert nt_event(GridFunction(g, v), NearTouchSpec(eta, a))


def test_num_nt_constant_and_peak():
    g = Grid(-1.0, 1.0, 200)
    eta = 0.25
    assert num_nt(GridFunction(g, np.zeros(g.size)), eta) == math.floor(2.0 / eta) + 1
    v = np.zeros(g.size)
    v[100] = 5.0
    assert num_nt(GridFunction(g, v), eta) == 1


def _brute_count(mask, sep):
    idx = np.nonzero(mask)[0]
    for size in range(len(idx), 0, -1):
        for combo in itertools.combinations(idx, size):
            if all(b - a >= sep for a, b in zip(combo, combo[1:])):
                return size
    return 0


def test_greedy_count_matches_exhaustive_search():
    st = rng("greedy")
    g = Grid(0.0, 1.0, 63)
    for _ in range(100):
        path = np.concatenate([[0.0], np.cumsum(st.normal(0, math.sqrt(g.h), 63))])
        # a threshold giving a handful of qualifying points keeps the search small
        thr = np.sort(path)[-int(st.integers(2, 12))]
        mask = path >= thr
        assert greedy_count(mask[None, :], 4)[0] == _brute_count(mask, 4)


def test_separation_steps_scans_every_far_point():
    assert separation_steps(0.01, 1 / 2047) == math.ceil(0.01 * 2047)
    assert separation_steps(0.25, 0.25) == 1


def test_near_zero_events():
    g = Grid(0.0, 1.0, 100)
    v = np.maximum(g.points * 10, 1.0)
    v[0] = 0.0
    assert not nz_event(GridFunction(g, v), 0.1, 0.5)
    assert num_nz(GridFunction(g, np.zeros(g.size)), 0.25) == 5


# quadrature bounds and elementary inequalities

def test_meander_bound_examples():
    assert meander_bound_quadrature("from-zero", eta=0.25) <= 0.5
    assert meander_bound_quadrature("increment", eta=0.1, t=0.5, x=1.1 * math.sqrt(0.1)) <= 0.75
    with pytest.raises(DomainError):
        meander_bound_quadrature("sideways", eta=0.1)


def test_meander_bound_report_holds():
    rep = meander_bound_report()
    assert all(r["holds"] for r in rep.values())
    assert rep["return-from-above"]["worst"] <= math.exp(1.2 / 20) / 1.1


def test_normal_bound_example():
    row = [r for r in normal_bound_check() if r["sigma"] == 1.0 and r["t"] == 2.0][0]
    assert row["lower"] == pytest.approx(0.0134977416283, rel=1e-10)
    assert row["prob"] == pytest.approx(0.0227501319482, rel=1e-10)
    assert row["ok"]


def test_integral_bound_example():
    row = [r for r in integral_bound_check() if r["a"] == 2.0 and r["b"] == -1.0][0]
    assert row["integral"] == pytest.approx(0.438182228226846, rel=1e-9)
    assert row["integral"] <= math.sqrt(math.pi / 2)


def test_geometric_sum_tail_exact():
    # negative binomial survival, checked against direct summation of the pmf
    n, p, level = 10, 0.25, 48
    direct = 1.0 - sum(math.comb(k + n - 1, k) * p ** n * (1 - p) ** k for k in range(level))
    assert geometric_sum_tail(n, p, level) == pytest.approx(direct, rel=1e-10)
