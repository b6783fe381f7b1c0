import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from nonholo import catalogue, model, reduction
from nonholo.errors import ConstraintViolation, FibreSolveFailure, PerturbationPresent
from nonholo.integrators import StepperConfig, reference_solve

coord = st.floats(-1.5, 1.5, allow_nan=False)


def test_reduced_field_examples(contact):
    X = reduction.reduced_field(contact)
    assert X.dimension == 5
    np.testing.assert_allclose(X((0, 0, 0, 1, 0)), (1, 0, 0, 0, 0), atol=1e-15)
    np.testing.assert_allclose(X((1, 0, 0, 0, 0)), (0, 0, 0, -1, 0), atol=1e-15)
    np.testing.assert_allclose(X((1, 1, 1, math.sqrt(2), 1)), (1, -1, 1, 0, -1), atol=1e-15)


def test_reduced_field_rejects_perturbed(contact):
    spec = contact.with_perturbation(catalogue.perturbation("q1_quartic"), 1e-3)
    with pytest.raises(PerturbationPresent):
        reduction.reduced_field(spec)


def test_multiplier_examples(contact):
    assert reduction.multiplier(contact, (1, 0, 0, 0, 0, 0)) == 0.0
    assert reduction.multiplier(contact, (0, 1, 0, 0, 0, 0)) == pytest.approx(1.0, abs=1e-15)
    assert reduction.multiplier(contact, (0, 0, 0, 1, 0, 1)) == pytest.approx(-1.0, abs=1e-15)


def test_dae_field_examples(contact, decoupled):
    D = reduction.dae_field(contact)
    np.testing.assert_allclose(D((0, 0, 0, 1, 0, 0)), (1, 0, 0, 0, 0, 0), atol=1e-15)
    np.testing.assert_allclose(D((1, 0, 0, 0, 0, 0)), (0, 0, 0, -1, 0, 0), atol=1e-15)
    with pytest.raises(ConstraintViolation):
        reduction.dae_field(decoupled)((0, 0, 0, 1, 1, 0))


@given(coord, coord, st.floats(-0.9, 0.9), coord, coord)
def test_dae_field_is_tangent_to_manifold(q1, q2, q3, p, p3):
    # d/dt of the constraint residual vanishes along the field
    for name in ("contact", "cvt"):
        spec = catalogue.preset(name)
        s = np.array(model.embed(spec, (q1, q2, q3, p, p3)))
        ds = reduction.dae_field(spec)(s)
        e = 1e-6
        rate = (model.constraint_residual(spec, s + e * ds) - model.constraint_residual(spec, s - e * ds)) / (2 * e)
        assert abs(rate) < 1e-7 * max(1.0, np.max(np.abs(ds)) ** 2)


@given(coord, coord, st.floats(-0.9, 0.9), coord, coord)
def test_reduced_field_is_reversible(q1, q2, q3, p, p3):
    for name in ("contact", "cvt"):
        X = reduction.reduced_field(catalogue.preset(name))
        s = np.array([q1, q2, q3, p, p3])
        np.testing.assert_allclose(X(X.reversal(s)), -X.reversal(X(s)), atol=1e-14)


def test_dae_and_reduced_charts_agree_short(cvt):
    s0 = np.array([0.3, -0.2, 0.5, 0.4, 0.1])
    ref = StepperConfig(method="reference")
    a = reference_solve(reduction.reduced_field(cvt), s0, 5.0, ref).states[-1]
    full = reference_solve(reduction.dae_field(cvt), np.array(model.embed(cvt, s0)), 5.0, ref).states[-1]
    np.testing.assert_allclose(model.project(cvt, full, tol=1e-8), a, atol=1e-9)


def test_manifold_solve_unperturbed_closed_form():
    spec = catalogue.preset("contact")
    np.testing.assert_allclose(reduction.perturbed_manifold_solve(spec, (0.1, 0.2, 0.3), (1.0, -0.3, 0.7)),
                               (1.0, -0.3, 0.7))


def test_manifold_solve_p1_quadratic(contact):
    spec = contact.with_perturbation(catalogue.perturbation("p1_quadratic"), 0.01)
    P = reduction.perturbed_manifold_solve(spec, (0, 0, 0), (1.0, 0.0, 1.0))
    oracle = brentq(lambda p1: p1 + 0.01 * p1 - 1.0, 0.0, 2.0, xtol=1e-15)
    assert P[0] == pytest.approx(oracle, abs=1e-14)
    assert P[0] == pytest.approx(1 / 1.01, abs=1e-14)
    assert P[2] == pytest.approx(1.0, abs=1e-14)


def test_manifold_solve_pathological(contact):
    g = catalogue.monomial_perturbation([(500.0, (0, 0, 0, 2, 0, 0))], label="stiff")
    spec = contact.with_perturbation(g, 1e6)
    with pytest.raises(FibreSolveFailure):
        reduction.perturbed_manifold_solve(spec, (0, 0, 0), (1.0, 0.0, 1.0))


@given(coord, coord, st.floats(-0.9, 0.9), coord, coord)
def test_lift_roundtrip(q1, q2, q3, p, p3):
    spec = catalogue.preset("contact").with_perturbation(catalogue.perturbation("q1_quartic"), 1e-2)
    s = np.array([q1, q2, q3, p, p3])
    back = reduction.to_reduced_chart(spec, reduction.lift_to_perturbed(spec, s))
    np.testing.assert_allclose(back, s, atol=1e-12)


def test_induced_field_at_zero_epsilon(contact, rng):
    g = catalogue.perturbation("p1_quadratic")
    ind = reduction.induced_field(contact.with_perturbation(g, 0.0))
    red = reduction.reduced_field(contact)
    for s in rng.uniform(-1, 1, size=(10, 5)):
        np.testing.assert_allclose(ind(s), red(s), atol=1e-12)


@pytest.mark.parametrize("gname", ["q1_quartic", "p1_quadratic"])
def test_induced_field_reversible(contact, rng, gname):
    ind = reduction.induced_field(contact.with_perturbation(catalogue.perturbation(gname), 1e-2))
    for s in rng.uniform(-1, 1, size=(10, 5)):
        np.testing.assert_allclose(ind(ind.reversal(s)), -ind.reversal(ind(s)), atol=1e-9)


def test_induced_field_not_reversible_for_odd_g(contact):
    ind = reduction.induced_field(contact.with_perturbation(catalogue.perturbation("mixed_nonreversible"), 1e-2))
    s = np.array([0.3, -0.2, 0.5, 0.4, 0.1])
    assert np.max(np.abs(ind(ind.reversal(s)) + ind.reversal(ind(s)))) > 1e-4


def test_induced_field_compiled_matches_python(contact, rng):
    from nonholo import kernels
    ind = reduction.induced_field(contact.with_perturbation(catalogue.perturbation("p1_quadratic"), 1e-2))
    if ind.kernel is None:
        pytest.skip("compiled backend unavailable")
    f = kernels.rhs_callable(ind)
    for s in rng.uniform(-1, 1, size=(5, 5)):
        np.testing.assert_allclose(f(s), ind(s), atol=1e-12)
