import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

import catlab.response as resp
from catlab.cat_family import hole_polygons, make_family
from catlab.observables import get
from catlab.response import (
    ResponseReport,
    SeriesDivergenceSuspected,
    closed_form_D,
    closed_form_residual,
    diff_quotient,
    fibonacci_xy_term,
    integral_D,
    lipschitz_constant,
    nu_t,
    nu_tilde,
    reports_to_csv,
    response_series,
    series_terms,
)

XY = get("xy")
F0 = make_family(0.0, "float")


def test_nu_tilde_values():
    assert nu_tilde(XY) == pytest.approx(-1 / 12, abs=1e-15)
    assert nu_tilde(get("cos2pix")) == pytest.approx(0, abs=1e-15)
    assert nu_tilde(get("y")) == pytest.approx(0, abs=1e-15)


def test_first_series_term_piecewise_oracle():
    # 1/4 - int_0^1 {2s}{3s} ds; the integral is 19/72 by exact integration over
    # the pieces [0,1/3], [1/3,1/2], [1/2,2/3], [2/3,1]
    assert fibonacci_xy_term(1) == F(1, 4) - F(19, 72)
    assert series_terms(XY, 1, mean=0.25)[1] == pytest.approx(-1 / 72, abs=1e-15)


def test_series_terms_follow_fibonacci_pattern():
    terms = series_terms(XY, 8, mean=0.25)
    expect = [float(fibonacci_xy_term(k)) for k in range(9)]
    np.testing.assert_allclose(terms, expect, rtol=1e-11, atol=1e-14)


def test_xy_series_value():
    exact = float(sum(fibonacci_xy_term(k) for k in range(60)))
    s = response_series(F0, XY, K=30, mean=0.25)
    assert abs(s.value - exact) <= s.tail + 1e-12
    assert s.ratio == pytest.approx(1 / ((1 + math.sqrt(5)) / 2) ** 4, rel=1e-3)


def test_vanishing_series():
    s = response_series(F0, get("y"), K=30, mean=0.5)
    assert abs(s.value) < 1e-12 and s.ratio == 0


def test_growing_terms_flagged(monkeypatch):
    monkeypatch.setattr(resp, "series_terms", lambda phi, k, nodes=8, mean=None: 1.5 ** np.arange(k + 1))
    with pytest.raises(SeriesDivergenceSuspected):
        response_series(F0, XY, K=30)


def test_series_needs_unperturbed_map():
    with pytest.raises(ValueError):
        response_series(make_family(1 / 8, "float"), XY)


def test_closed_form_values():
    t = F(1, 8)
    assert closed_form_D(t, F(1, 10), F(9, 10)) == F(8, 7)
    assert closed_form_D(t, F(1, 2), F(7, 16)) == -8


def test_hole_measure_balances_density():
    t = F(1, 16)
    mH = sum((h.area for h in hole_polygons(t)), F(0))
    assert mH == t
    assert (1 - mH) / (1 - t) - mH / t == 0


def test_closed_form_identity_exact_and_float():
    assert closed_form_residual(make_family(F(1, 16)), samples=2000, seed=1) == 0
    assert closed_form_residual(make_family(1 / 16, "float"), samples=20000, seed=1) <= 1e-10


@pytest.mark.parametrize("t", [1 / 8, 1 / 64])
def test_density_integrates_to_zero(t):
    assert abs(integral_D(make_family(t, "float"))) <= 1e-12


def test_first_order_defect_is_linear():
    errs = [abs(nu_t(make_family(t, "float"), XY) / t + 1 / 12) for t in (1 / 64, 1 / 128, 1 / 256)]
    assert errs[1] / errs[0] == pytest.approx(0.5, abs=0.02)
    assert errs[2] / errs[1] == pytest.approx(0.5, abs=0.02)


def test_quotient_of_y_vanishes():
    q, est = diff_quotient(get("y"), 1 / 16, n_max=8, mean=0.5)
    assert abs(q) < 1e-9


def test_lipschitz_constant():
    rows = [(0.5, 1.1, 1.0, 2.0), (0.25, 0.9, 1.0, 1.0)]
    assert lipschitz_constant(rows) == pytest.approx(0.4)


def _report(**kw):
    base = dict(observable="xy", t_grid=[0.02, 0.01], quotients=[-0.09, -0.095], series=-0.1, K=30, tail=1e-13,
                deltas=[1e-6, 1e-6])
    base.update(kw)
    return ResponseReport(**base)


def test_report_validation():
    with pytest.raises(ValueError):
        _report(t_grid=[0.01, 0.02])
    with pytest.raises(ValueError):
        _report(quotients=[float("nan"), 0.0])


def test_report_serialisation():
    r = _report()
    assert r.max_rel_err == pytest.approx(0.1)
    d = json.loads(r.to_json({"config_hash": "abc"}))
    assert {"observable", "t_grid", "quotients", "series", "K", "tail", "max_rel_err"} <= set(d)
    text = reports_to_csv([r], {"config_hash": "abc"})
    lines = text.strip().split("\n")
    assert lines[0].startswith("observable,t,quotient,delta,series,K,tail,deviation,config_hash")
    assert len(lines) == 3
