import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catlab.cat_family import make_family
from catlab.measures import (
    NoConvergence,
    SingularityBudgetExceeded,
    cell_integrals,
    cov,
    cov_sequence,
    equidistribution_defect,
    fit_decay,
    fit_envelope,
    mu_t,
    mu_t_many,
    pushforward_cells,
    pushforward_lebesgue,
    pushforward_lebesgue_estimate,
    pushforward_mc,
    segment_integrals,
    square_grid,
    unit_cells,
    upper_envelope,
)
from catlab.observables import BATTERY, get
from catlab.standard_pairs import StandardSegment

XY = get("xy")
CS = get("cos2pix_sin2piy")


def test_cell_quadrature_on_unit_square():
    P, n = unit_cells()
    vals = cell_integrals(P, n, [BATTERY[k] for k in BATTERY], q=24)
    np.testing.assert_allclose(vals, [BATTERY[k].mean for k in BATTERY], atol=1e-14)


def test_cells_conserve_mass():
    vals, _ = pushforward_cells(1 / 8, [get("1")], 6, every=True)
    np.testing.assert_allclose(vals[:, 0], 1.0, atol=1e-12)


def test_cells_match_line_quadrature():
    f = make_family(1 / 8, "float")
    cells, _ = pushforward_cells(1 / 8, [XY, CS], 3)
    lines = [pushforward_lebesgue(f, phi, 3, lines=2048) for phi in (XY, CS)]
    np.testing.assert_allclose(cells, lines, atol=1e-6)


def test_lines_match_monte_carlo():
    f = make_family(1 / 16, "float")
    est = pushforward_lebesgue_estimate(f, XY, 2, lines=1024)
    mc = pushforward_mc(1 / 16, XY, 2, 1_000_000, seed=11)
    assert abs(est.value - mc.value) <= 4 * mc.stderr
    assert est.delta < 1e-5


def test_monte_carlo_is_seeded():
    a = pushforward_mc(1 / 8, XY, 3, 10_000, seed=4)
    b = pushforward_mc(1 / 8, XY, 3, 10_000, seed=4)
    assert a == b


def test_mu_at_zero_is_lebesgue():
    est = mu_t(make_family(0.0, "float"), XY, name="xy")
    assert est.n == 0
    assert est.value == pytest.approx(0.25, abs=1e-15)


def test_mu_of_y_is_one_half():
    # the second coordinate stays equidistributed on every evolved cell family
    est = mu_t(make_family(1 / 16, "float"), get("y"), tol=1e-6, n_max=10)
    assert abs(est.value - 0.5) <= 1e-12


def test_successive_differences_shrink():
    vals, _ = pushforward_cells(1 / 16, [CS], 10, every=True)
    d = np.abs(np.diff(vals[:, 0]))
    # geometric decay on average over the tail
    ratio = math.exp(np.polyfit(np.arange(3, 10), np.log(d[3:10]), 1)[0])
    assert ratio < 1


def test_no_convergence_raised():
    with pytest.raises(NoConvergence):
        mu_t_many(make_family(1 / 8, "float"), [XY], tol=1e-12, n_max=3)


def test_budget_exceeded():
    A, B = np.array([[0.3, 0.0]]), np.array([[0.3, 1.0]])
    with pytest.raises(SingularityBudgetExceeded):
        segment_integrals(1 / 8, A, B, 12, XY, budget=100)


def test_segment_integral_n0_is_line_average():
    A, B = np.array([[0.3, 0.0]]), np.array([[0.3, 1.0]])
    assert segment_integrals(0.0, A, B, 0, XY)[0] == pytest.approx(0.15, abs=1e-15)


def test_cov_at_n0():
    f = make_family(1 / 16, "float")
    w = StandardSegment.from_coords(0.3, 0.0, 0.3, 1.0)
    mu_x = 0.4996
    assert cov(f, get("x"), 0, w, lambda s: 1 / w.length + 0 * s, mu_x) == pytest.approx(abs(0.3 - mu_x), abs=1e-14)


def test_cov_sequence_matches_single_calls():
    f = make_family(1 / 16, "float")
    w = StandardSegment.from_coords(0.3, 0.0, 0.3, 1.0)
    C = cov_sequence(f, [XY, CS], [2, 4], w, None, [0.245, 0.006])
    assert C[1, 0] == pytest.approx(cov(f, XY, 4, w, None, 0.245), abs=1e-14)
    assert C[0, 1] == pytest.approx(cov(f, CS, 2, w, None, 0.006), abs=1e-14)


def test_fit_decay_recovers_rate():
    ns = np.arange(5, 20)
    fit = fit_decay(ns, 3.0 * 0.55 ** ns)
    assert fit.gamma == pytest.approx(0.55, rel=1e-12)
    assert fit.r2 == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-8, 1.0), min_size=2, max_size=30))
def test_upper_envelope_is_nonincreasing_majorant(c):
    e = upper_envelope(c)
    assert (e >= np.asarray(c)).all()
    assert (np.diff(e) <= 0).all()
    assert e[-1] == c[-1]


def test_envelope_fit_of_noisy_decay():
    ns = np.arange(5, 17)
    rng = np.random.default_rng(0)
    c = 0.5 ** ns * rng.uniform(0.1, 1.0, len(ns))
    assert fit_envelope(ns, c).slope < 0


def test_square_grid_covers_the_square():
    g = square_grid(make_family(0.0, "float"), 1 / 32)
    assert g.n_all / 32 ** 2 >= 1
    assert g.n_interior / 32 ** 2 <= 1
    assert 0 < g.n_interior < g.n_all


def test_equidistribution_improves():
    f0 = make_family(0.0, "float")
    w = StandardSegment.from_coords(0.3, 0.0, 0.3, 1.0)
    grid = square_grid(f0, 1 / 32)
    d = [equidistribution_defect(f0, w, 1 / 32, k, grid) for k in (2, 6, 9, 10)]
    assert d[0].defect_interior > d[1].defect_interior > d[3].defect_interior
    assert d[3].defect_interior <= 0.01
    # the evolved line grows by mu_u per step
    assert d[3].length / d[2].length == pytest.approx(f0.mu_u, rel=1e-3)
