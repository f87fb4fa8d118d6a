import csv
import io
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catlab.cat_family import make_family
from catlab.coupling import (
    SWEEP_FIELDS,
    CouplingState,
    Incompatible,
    InvalidParams,
    ParamsNotContractive,
    SchemeParams,
    Square,
    couple_segments,
    decoupled_fraction,
    random_params,
    random_state,
    scheme_step,
    stable_partners,
    star_norm,
    sweep_csv,
    sweep_rows,
    tau,
    tau_branches,
)
from catlab.standard_pairs import StandardSegment

EXAMPLE = dict(rho=0.4, p_c=0.1, beta1=2, beta2=3, psi_minus=0.45, psi_plus=1.02)


def test_regularity_class_descends():
    p = SchemeParams(**EXAMPLE)
    s = scheme_step(CouplingState.initial(4), p)
    assert s.u[3] == 1.0 and s.mass == pytest.approx(1.0)


def test_coupling_row_at_class_zero():
    p = SchemeParams(**EXAMPLE)
    s = scheme_step(CouplingState.initial(0), p)
    assert s.c[0] == pytest.approx(0.1)
    assert s.u[0] == pytest.approx(0.9)


def test_mass_conserved_over_long_runs():
    p = SchemeParams(**EXAMPLE)
    s = CouplingState.initial(6)
    for _ in range(1000):
        s = scheme_step(s, p)
    assert s.mass == pytest.approx(1.0, abs=1e-10)
    assert s.coupled > 0.5


def test_initial_norm():
    p = SchemeParams(**EXAMPLE)
    assert star_norm(CouplingState.initial(5), p) == pytest.approx(1.02 ** 6, rel=1e-15)


def test_tau_example():
    p = SchemeParams(**EXAMPLE)
    first, second, r = tau_branches(p)
    assert first == pytest.approx(0.1 / 1.02 + 0.9, abs=1e-15)
    # direct evaluation of the second branch over r
    vals = [0.45 * (1 - 0.4 ** k / 2) + 0.4 ** k * 1.02 ** (2 * k + 4) / (2 * 0.45 ** k) for k in range(60)]
    assert second == pytest.approx(max(vals), rel=1e-12)
    assert r == int(np.argmax(vals)) == 2
    assert round(tau(p), 5) == 0.99804


def test_inadmissible_params_rejected():
    with pytest.raises(InvalidParams):
        SchemeParams(**{**EXAMPLE, "psi_minus": 0.3, "rho": 0.4})
    with pytest.raises(InvalidParams):
        SchemeParams(**{**EXAMPLE, "psi_plus": 1.5})
    with pytest.raises(InvalidParams):
        SchemeParams(**{**EXAMPLE, "beta1": 0})


def test_not_contractive():
    # outside the admissible box the second branch exceeds one
    p = SimpleNamespace(**{**EXAMPLE, "psi_plus": 1.3})
    with pytest.raises(ParamsNotContractive):
        tau(p)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_step_contracts_star_norm(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng)
    bound = tau(p)
    for _ in range(50):
        s = random_state(rng)
        assert star_norm(scheme_step(s, p), p) <= bound * star_norm(s, p) + 1e-12


def test_sweep_rows_and_csv():
    rows = sweep_rows([EXAMPLE, {**EXAMPLE, "psi_minus": 0.6}], 20, seed=0)
    assert rows[0]["status"] == "ok"
    assert rows[0]["empirical_ratio_max"] <= rows[0]["tau"] + 1e-12
    assert rows[1]["status"].startswith("rejected")
    text = sweep_csv(rows, {"config_hash": "h"})
    got = list(csv.DictReader(io.StringIO(text)))
    assert list(got[0]) == SWEEP_FIELDS + ["config_hash"]
    assert sweep_csv([]).strip() == ",".join(SWEEP_FIELDS)


F16 = make_family(1 / 16, "float")
EU, ES = np.array(F16.E_u), np.array(F16.E_s)


def _pair(d, half=0.3, direction=None):
    c = np.array([0.5, 0.5])
    u = EU if direction is None else np.asarray(direction, float) / np.hypot(*direction)
    w1 = StandardSegment.from_coords(*(c - half * u), *(c + half * u))
    w2 = StandardSegment.from_coords(*(c - half * u + d * ES), *(c + half * u + d * ES))
    return w1, w2, c


def _square(c, side):
    return Square(tuple(c), side, tuple(EU), tuple(ES))


def test_parallel_pair_is_coupled_pointwise():
    d = 1e-4
    w1, w2, c = _pair(d, direction=(1.0, 1.0))
    side = 0.99 * min(w1.length, w2.length) / 1000
    pair = couple_segments(w1, w2, _square(c, side))
    assert pair.eta >= pair.distance >= 0
    # move each sampled point of the first piece along E_s onto the second piece's line
    a1, a2 = pair.w1.as_array(), pair.w2.as_array()
    s = np.linspace(0, 1, 1001)
    P = a1[:2] + s[:, None] * (a1[2:] - a1[:2])
    dvec = a2[2:] - a2[:2]
    for p in P:
        m = np.array([dvec, -ES]).T
        lam, mu = np.linalg.solve(m, p - a2[:2])
        assert -1e-9 <= lam <= 1 + 1e-9
        assert abs(mu) <= pair.eta


def test_coupled_length_guarantee():
    rng = np.random.default_rng(7)
    for _ in range(300):
        d = rng.uniform(0, 2e-4)
        th = math.atan2(EU[1], EU[0]) + rng.uniform(-0.3, 0.3)
        w1, w2, c = _pair(d, half=rng.uniform(0.1, 0.35), direction=(math.cos(th), math.sin(th)))
        zeta = min(w1.length, w2.length)
        side = rng.uniform(0.5, 0.99) * zeta / 1000
        if d > side / 2:
            continue
        pair = couple_segments(w1, w2, _square(c, side))
        assert min(pair.w1.length, pair.w2.length) >= zeta / 200


def test_incompatible_reasons():
    w1, w2, c = _pair(1e-4)
    with pytest.raises(Incompatible) as e:
        couple_segments(w1, w2, _square(c, 0.01))
    assert e.value.reason == "rho"
    v1, v2, _ = _pair(1e-4, direction=(0.0, 1.0))
    with pytest.raises(Incompatible) as e:
        couple_segments(v1, v2, _square(c, 1e-4))
    assert e.value.reason == "angle"
    with pytest.raises(Incompatible) as e:
        couple_segments(w1, w2, _square(c + 0.1 * ES, 1e-4))
    assert e.value.reason == "center"


def test_identical_segments_never_decouple():
    w1, _, _ = _pair(0.0)
    P1, P2 = stable_partners(w1, w1, EU, ES, 2000)
    rep = decoupled_fraction(F16, P1, P2, 27, 9)
    assert rep.cumulative == 0.0


def test_connector_contracts_by_mu_s():
    w1, w2, _ = _pair(1e-3)
    P1, P2 = stable_partners(w1, w2, EU, ES, 5000)
    rep = decoupled_fraction(F16, P1, P2, 12, 4)
    np.testing.assert_allclose(rep.contraction, F16.mu_s, atol=1e-9)


def test_block_losses_decay():
    w1, w2, _ = _pair(1e-3)
    P1, P2 = stable_partners(w1, w2, EU, ES, 20000)
    rep = decoupled_fraction(F16, P1, P2, 27, 9)
    assert rep.block_losses[0] > 0
    assert rep.block_losses[-1] <= rep.block_losses[0]
    assert rep.cumulative < 1e-2
