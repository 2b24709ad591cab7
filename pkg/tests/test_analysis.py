
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from max2sat import analysis as an
from max2sat.formula import Assignment, Formula
from strategies import SINGLE_EDGE_UNSAT

GRID_N = np.array([16, 24, 32, 39, 46, 53, 60, 67, 75, 80, 87, 98, 108], float)
GRID_A = np.round(np.arange(1, 21) * 0.1, 1)
AA, NN = (g.ravel() for g in np.meshgrid(GRID_A, GRID_N))


# --- time to solution --------------------------------------------------------------

def test_tts_examples():
    r = an.tts(0.99, 0.99, 1e-3)
    assert r.k == 1 and r.t_soln == pytest.approx(1e-3)
    r = an.tts(0.5, 0.99, 1e-3)
    assert r.k == 7 and r.t_soln == pytest.approx(7e-3)
    assert an.tts(1.0).k == 1
    assert an.tts(0.0).unbounded


def test_tts_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        an.tts(1.2)
    with pytest.raises(ValueError):
        an.tts(0.5, 1.0)


@given(st.floats(0.001, 1.0), st.floats(0.001, 1.0), st.floats(0.5, 0.999))
def test_tts_monotone(p1, p2, pd):
    lo, hi = sorted((p1, p2))
    assert an.repetitions(hi, pd) <= an.repetitions(lo, pd)
    assert an.repetitions(lo, min(pd, 0.9)) <= an.repetitions(lo, pd)
    assert an.repetitions(lo, pd) >= 1


# --- psat and windows --------------------------------------------------------------------

def test_psat_examples():
    assert an.psat_curve({0.5: [0, 0, 0]}) == [(0.5, 1.0)]
    assert an.psat_curve({2.0: [1, 2, 1]}) == [(2.0, 0.0)]
    assert an.psat_curve({1.0: [0, None, 1]}) == [(1.0, 0.5)]


def test_scaling_window_example():
    curve = [(0.8, 1.0), (0.9, 0.99), (1.0, 0.6), (1.2, 0.25)]
    w = an.scaling_window(curve, 0.98, 0.3)
    assert w.alpha_left == pytest.approx(0.9025641, abs=1e-6)
    assert w.alpha_right == pytest.approx(1.1714286, abs=1e-6)
    assert w.width == pytest.approx(0.2688645, abs=1e-6)


def test_window_undefined_when_never_below():
    w = an.scaling_window([(0.5, 1.0), (1.0, 0.99)], 0.98, 0.3)
    assert w.alpha_left is None and w.width is None


@given(st.lists(st.floats(0, 1), min_size=2, max_size=12))
def test_window_ordered_on_decreasing_curves(ys):
    ys = sorted(ys, reverse=True)
    curve = [(0.1 * (i + 1), y) for i, y in enumerate(ys)]
    w = an.scaling_window(curve, 0.98, 0.3)
    if w.defined:
        assert w.alpha_left <= w.alpha_right


def test_power_law_fit_recovers_exponent():
    n = np.array([25, 50, 100, 200.0])
    x, c = an.power_law_fit(n, 3 * n ** (-1 / 3))
    assert x == pytest.approx(-1 / 3) and c == pytest.approx(3)


# --- fits ------------------------------------------------------------------------------------

AK = dict(A=4.75, B=0.0036, gamma=0.75, delta=1.1068)


def test_fit_recovers_exact_tts_data_within_one_percent():
    y = an.tts_ansatz(AA, NN, **AK)
    m = an.fit("tts_ansatz", AA, NN, y)
    for k, v in AK.items():
        assert m.parameters[k] == pytest.approx(v, rel=0.01)
    assert m.r_squared > 0.9999


def test_fit_constant_data():
    y = np.full(AA.shape, 3.0)
    m = an.fit("tts_ansatz", AA, NN, y, fixed={"gamma": 0.75, "delta": 1.0})
    assert m.parameters["A"] == pytest.approx(3.0, rel=1e-6)
    assert abs(m.parameters["B"]) < 1e-6
    assert m.r_squared == 1.0
    assert m.parameters["gamma"] == 0.75 and m.parameters["delta"] == 1.0


def test_fit_all_fixed_reproduces_model():
    y = an.prob_ansatz(AA, NN, 9.28e-5, 2.4, 1.5)
    m = an.fit("prob_ansatz", AA, NN, y, fixed=dict(A=9.28e-5, gamma=2.4, delta=1.5))
    assert m.r_squared == 1.0 and m.evaluations == 1
    assert np.array_equal(m.predict(AA, NN), y)


def test_fit_rejects_unknown():
    with pytest.raises(ValueError):
        an.fit("nope", AA, NN, AA)
    with pytest.raises(ValueError):
        an.fit("tts_ansatz", AA, NN, AA, fixed={"zeta": 1})


def test_r_squared_at_most_one():
    rng = np.random.default_rng(0)
    y = rng.random(50)
    assert an.r_squared(y, y) == 1.0
    assert an.r_squared(y, y + rng.normal(0, 0.1, 50)) < 1


# --- collapse -------------------------------------------------------------------------------

def test_collapse_recovers_delta_three_halves():
    y = an.prob_ansatz(AA, NN, 9.28e-5, 2.4, 1.5)
    assert an.data_collapse(AA, NN, y, "prob_ansatz").exponent == 1.5


def test_collapse_recovers_gamma_three_quarters():
    y = an.tts_ansatz(AA, NN, **AK)
    r = an.data_collapse(AA, NN, y, "tts_ansatz", params={"A": AK["A"]})
    assert r.exponent == 0.75


def test_collapse_duplicated_curve_has_zero_residual():
    # p = exp(-g(alpha) * N): after rescaling by N**1 every curve is the same
    g = AA ** 2 / 100
    y = np.exp(-g * NN / 108)
    r = an.data_collapse(AA, NN, y, "prob_ansatz", exponent_grid=(0.5, 1.0, 1.5))
    assert r.exponent == 1.0 and r.residual == pytest.approx(0, abs=1e-18)


def test_collapse_needs_two_sizes():
    with pytest.raises(ValueError):
        an.data_collapse([1, 2], [10, 10], [0.5, 0.4])


# --- percentiles -------------------------------------------------------------------------

def test_default_percentiles():
    assert an.DEFAULT_PERCENTILES == (0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)


def test_constant_data_percentiles():
    out = an.percentile_scaling({10: [4.0] * 7, 20: [4.0] * 3})
    assert all(v == 4.0 for curve in out.values() for _, v in curve)


def test_nearest_rank():
    assert an.nearest_rank([5, 1, 3, 2, 4], 0.5) == 3
    assert an.nearest_rank([5, 1, 3, 2, 4], 0.01) == 1
    assert an.nearest_rank([5, 1, 3, 2, 4], 1.0) == 5


@given(st.dictionaries(st.sampled_from([16, 32, 64]),
                       st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40), min_size=1))
def test_percentile_orders_commute(groups):
    tr = lambda p: an.tts(p).t_soln  # noqa: E731
    a = an.percentile_scaling(groups, transform=tr, order="transform-first", transform_decreasing=True)
    b = an.percentile_scaling(groups, transform=tr, order="percentile-first", transform_decreasing=True)
    assert a == b


# --- correlation ----------------------------------------------------------------------------

def test_spearman_extremes_and_copula():
    x = np.random.default_rng(1).random(50)
    r = an.rank_correlation(x, x)
    assert r.spearman == 1.0
    assert all(a == b for a, b in r.copula)
    assert an.rank_correlation(x, -x).spearman == -1.0


@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=30),
       st.randoms(use_true_random=False))
def test_spearman_invariant_under_monotone_maps(x, rnd):
    y = list(x)
    rnd.shuffle(y)
    base = an.rank_correlation(x, y).spearman
    xf, yf = np.asarray(x, float), np.asarray(y, float)
    moved = an.rank_correlation(np.exp(xf / 100), yf ** 3 + 2 * yf).spearman
    assert base == pytest.approx(moved, abs=1e-12)


def test_copula_ranks_once_per_axis_with_ties():
    r = an.rank_correlation([1, 1, 2, 2], [3, 1, 1, 0])
    xs, ys = zip(*r.copula)
    assert sorted(xs) == [1, 2, 3, 4] and sorted(ys) == [1, 2, 3, 4]


def test_spearman_none_on_constant():
    assert an.rank_correlation([1, 1, 1], [1, 2, 3]).spearman is None


# --- approximation ratio --------------------------------------------------------------------

def test_rho_examples():
    f = Formula.from_dimacs(2, [(1, 2)])
    assert an.empirical_rho(f, Assignment([0, 0]), 0) == 1.0
    assert an.rho_from_violations(10, 1, 0) == 0.9
    assert an.rho_from_violations(12, 3, 2) == 0.9
    assert an.INAPPROX_RHO == pytest.approx(0.954545, abs=1e-6)
    assert an.empirical_rho(SINGLE_EDGE_UNSAT, Assignment([0, 0]), 1) == 1.0
    with pytest.raises(ValueError):  # claimed optimum 2 is beaten by a 1-violation assignment
        an.empirical_rho(SINGLE_EDGE_UNSAT, Assignment([0, 0]), 2)


# --- density histogram -----------------------------------------------------------------------

def test_single_point_histogram():
    h = an.density_histogram([1.0], [0.5], bins=(3, 4), range=((0, 2), (0, 1)))
    assert np.count_nonzero(h.counts) == 1


def test_histogram_columns_normalised():
    rng = np.random.default_rng(2)
    h = an.density_histogram(rng.random(500), rng.random(500), bins=(5, 7))
    assert np.allclose(h.counts.sum(axis=1), 1.0)
