import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonholo import catalogue, diagnostics as dg, floquet as fl
from nonholo.errors import InsufficientData, InsufficientGrid, NoCrossings
from nonholo.integrators import StepperConfig, Trajectory, integrate, reference_solve
from nonholo.reduction import reduced_field

REF = StepperConfig(method="reference")
S0 = np.array([0.3, -0.2, 1.0, 0.4, 0.0])


@pytest.fixture(scope="module")
def torus():
    spec = catalogue.preset("contact")
    return spec, dg.torus_for(spec, S0)


@given(st.floats(-1, 1), st.floats(-5, 5), st.integers(0, 2 ** 32 - 1))
def test_ols_trend_recovers_slope(slope, icpt, seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 10, 200)
    noise = 1e-3 * rng.standard_normal(t.size)
    s, se = dg.ols_trend(t, icpt + slope * t + noise)
    assert abs(s - slope) < 8 * se + 1e-12
    assert se < 1e-4


def test_ols_trend_needs_samples():
    with pytest.raises(InsufficientData):
        dg.ols_trend([0, 1], [0, 1])


def test_format_float_round_trips(rng):
    for x in rng.normal(size=50) * 10.0 ** rng.integers(-20, 20, size=50):
        assert float(dg.format_float(x)) == x
    assert dg.format_float(0.1) == "0.1"


def test_reference_drift_energy(torus):
    spec, tor = torus
    rep = dg.invariant_drift(spec, S0, REF, 100.0, 1.0, torus=tor)
    assert set(rep.labels) == set(dg.QUANTITIES)
    for q in rep.labels:
        assert rep.deviations[q][0] == 0.0
    assert rep.max_drift["H"] <= 1e-9
    lo, hi = rep.ci("H")
    assert lo <= rep.slope["H"] <= hi


def test_midpoint_vs_rk4_trend_short(torus):
    # a short version of the long-horizon experiment: RK4 at a coarse step
    # drifts visibly while midpoint stays within its bounded oscillation
    spec, tor = torus
    mid = dg.invariant_drift(spec, S0, StepperConfig(h=0.2), 500.0, 1.0, torus=tor)
    rk4 = dg.invariant_drift(spec, S0, StepperConfig(method="rk4", h=0.2), 500.0, 1.0, torus=tor)
    assert any(rk4.significant(q) and rk4.max_drift[q] > 1e-6 for q in ("H", "a"))
    assert mid.max_drift["a"] < 1e-10 and mid.max_drift["H"] < 1e-3


def test_rotation_numbers(torus):
    spec, tor = torus
    T = 60 * tor.orbit.period_T3
    tr = reference_solve(reduced_field(spec), S0, T, t_eval=np.linspace(0, T, 1201))
    est = dg.rotation_numbers(spec, tor.orbit, tor.fd, tr)
    assert est.omega == pytest.approx(1 / (2 * math.pi), abs=1e-6)
    assert est.xi == pytest.approx(fl.frequencies(spec, tor.orbit, tor.fd)[1], abs=1e-5)
    short = Trajectory(tr.times[:21], tr.states[:21])
    with pytest.raises(InsufficientData):
        dg.rotation_numbers(spec, tor.orbit, tor.fd, short)


def test_poincare_section_constant_bc(torus):
    spec, tor = torus
    T = 500.5 * tor.orbit.period_T3
    tr = reference_solve(reduced_field(spec), S0, T, t_eval=np.arange(0.0, T, 0.5), dense_output=True)
    sec = dg.poincare_section(spec, tor.orbit, tor.fd, tr)
    assert len(sec) == 500
    assert np.max(np.ptp(sec.bcphi[:, :2], axis=0)) <= 1e-6
    np.testing.assert_allclose(np.diff(sec.times), tor.orbit.period_T3, atol=1e-6)


def test_poincare_section_from_samples(torus):
    # without a continuous solution the cubic fallback is good to O(dt^4)
    spec, tor = torus
    tr = integrate(reduced_field(spec), S0, 130.0, StepperConfig(method="rk4", h=0.01), 0.05)
    sec = dg.poincare_section(spec, tor.orbit, tor.fd, tr)
    assert len(sec) == 20
    assert np.max(np.ptp(sec.bcphi[:, :2], axis=0)) <= 1e-5


def test_poincare_section_resonant_is_periodic(decoupled):
    # f = 0 with unit parameters: Phi(1) = I, so every return lands on u(0)
    tor = dg.torus_for(decoupled, S0)
    T = 20.5 * tor.orbit.period_T3
    tr = reference_solve(reduced_field(decoupled), S0, T, t_eval=np.arange(0.0, T, 0.5), dense_output=True)
    sec = dg.poincare_section(decoupled, tor.orbit, tor.fd, tr)
    assert sec.bcphi is None
    np.testing.assert_allclose(sec.u, np.broadcast_to(sec.u[0], sec.u.shape), atol=1e-6)


def test_poincare_section_no_crossings(torus):
    spec, tor = torus
    tr = reference_solve(reduced_field(spec), S0, 2.0, t_eval=np.linspace(0, 2.0, 21))
    with pytest.raises(NoCrossings):
        dg.poincare_section(spec, tor.orbit, tor.fd, tr)


def test_scan_controls_and_determinism(contact):
    kw = dict(T=200.0, seeds=[0, 1], sample_dt=1.0)
    r1 = dg.kam_scan(contact, ["q1_quartic"], [1e-3], ["implicit_midpoint", "reference"], **kw)
    r2 = dg.kam_scan(contact, ["q1_quartic"], [1e-3], ["implicit_midpoint", "reference"], threads=2, **kw)
    assert r1.to_csv() == r2.to_csv()
    assert len(r1.rows) == 2 * 2 * 2  # eps = 0 added as control
    assert r1.to_csv().splitlines()[0] == ",".join(dg.CSV_COLUMNS)
    for row in r1.rows:
        if row.epsilon == 0.0 and row.method == "reference":
            ctrl = r1.controls[row.seed]
            for q in dg.SCAN_QUANTITIES:
                assert row.max_drift[q] == ctrl[q]
        if row.method == "implicit_midpoint":
            assert row.rev_defect <= 1e-10


def test_scan_control_consistency(contact):
    res = dg.kam_scan(contact, ["q1_quartic"], [0.0], ["reference"], T=1000.0, seeds=[0])
    assert max(res.rows[0].max_drift.values()) <= 1e-7


def test_scan_matches_invariant_drift(contact):
    res = dg.kam_scan(contact, ["q1_quartic"], [0.0], ["rk4"], T=100.0, seeds=[3])
    s0 = dg.initial_state_for_seed(contact, 3)
    rep = dg.invariant_drift(contact, s0, StepperConfig(method="rk4"), 100.0)
    for q in dg.SCAN_QUANTITIES:
        assert res.rows[0].max_drift[q] == rep.max_drift[q]


def test_scan_linear_in_epsilon(contact):
    res = dg.kam_scan(contact, ["q1_quartic"], [1e-3, 2e-3], ["reference"], T=200.0, seeds=[0])
    by_eps = {r.epsilon: r for r in res.rows}
    # q1^4 leaves a and H_eps exactly conserved, so only b and c oscillate
    for q in ("b", "c"):
        ratio = by_eps[2e-3].max_drift[q] / by_eps[1e-3].max_drift[q]
        assert 1.4 <= ratio <= 2.6
    for q in ("H", "a"):
        assert by_eps[2e-3].max_drift[q] <= 10 * res.controls[0][q]


def test_frequency_map_contact_independent(contact):
    fm = dg.frequency_map(contact, np.linspace(0.1, 2.0, 10))
    assert fm.verdict == "independent"
    assert fm.ratio_variation > 10 * fm.ratio_error
    assert fm.max_residual > 1e-8


def test_frequency_map_decoupled_dependent(decoupled):
    fm = dg.frequency_map(decoupled, np.linspace(0.1, 2.0, 10))
    assert fm.verdict == "dependent" and fm.c == 0.0


def test_frequency_map_insufficient(contact):
    with pytest.raises(InsufficientGrid):
        dg.frequency_map(contact, np.linspace(0.1, 2.0, 5))


def test_initial_state_for_seed_deterministic(cvt):
    a, b = dg.initial_state_for_seed(cvt, 7), dg.initial_state_for_seed(cvt, 7)
    np.testing.assert_array_equal(a, b)
    assert 0.4 <= a[2] <= 0.9 and a[4] == 0.0
