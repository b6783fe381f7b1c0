import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonholo import catalogue, model
from nonholo.errors import ConstraintViolation, DomainViolation
from nonholo.model import Params, SystemSpec

finite = st.floats(-3, 3, allow_nan=False)


def zero_spec(**params):
    return SystemSpec(Params(**params), catalogue.coupling("zero"), catalogue.subsystem("harmonic"))


def test_alpha_values(contact):
    assert model.alpha1(zero_spec(m1=2.0), 0.7) == pytest.approx(math.sqrt(2.0), abs=1e-15)
    assert model.alpha2(zero_spec(m1=2.0), 0.7) == 0.0
    assert model.alpha1(contact, 0.0) == 1.0
    assert model.alpha1(contact, 1.0) == pytest.approx(0.7071067811865476, abs=1e-15)
    assert model.alpha2(contact, 1.0) == pytest.approx(-0.7071067811865476, abs=1e-15)
    assert model.alpha2(contact, -2.0) == pytest.approx(0.8944271909999159, abs=1e-15)


def test_dalpha_matches_finite_difference(contact, cvt):
    for spec, q3 in ((contact, 0.4), (cvt, 0.3), (contact, -1.2)):
        d1, d2 = model.dalpha(spec, q3)
        e = 1e-6
        fd1 = (model.alpha1(spec, q3 + e) - model.alpha1(spec, q3 - e)) / (2 * e)
        fd2 = (model.alpha2(spec, q3 + e) - model.alpha2(spec, q3 - e)) / (2 * e)
        assert d1 == pytest.approx(fd1, abs=1e-8)
        assert d2 == pytest.approx(fd2, abs=1e-8)


def test_embed_examples(contact):
    assert model.embed(contact, (0, 0, 0, 1, 0)) == pytest.approx((0, 0, 0, 1, 0, 0))
    s = model.embed(contact, (1, 1, 1, math.sqrt(2), 0))
    assert s.p1 == pytest.approx(1.0, abs=1e-15)
    assert s.p2 == pytest.approx(-1.0, abs=1e-15)
    s = model.embed(zero_spec(m1=4.0), (0, 0, 5, 1, 0))
    assert (s.p1, s.p2) == pytest.approx((2.0, 0.0))


def test_project_examples(contact):
    assert model.project(contact, (0, 0, 0, 1, 0, 0)) == pytest.approx((0, 0, 0, 1, 0))
    assert model.project(contact, (1, 1, 1, 1, -1, 0)) == pytest.approx((1, 1, 1, math.sqrt(2), 0), abs=1e-15)
    with pytest.raises(ConstraintViolation):
        model.project(contact, (0, 0, 0, 1, 1, 0), tol=1e-10)


def test_constraint_residual_examples(contact):
    assert model.constraint_residual(contact, (0, 0, 0, 1, 0, 0)) == 0.0
    assert model.constraint_residual(contact, (0, 0, 1, 1, 0, 0)) == 1.0
    assert model.constraint_residual(contact, (0, 0, 1, 1, -1, 0)) == 0.0


def test_hamiltonian_examples(contact):
    assert model.hamiltonian(contact, (1, 0, 0, 0, 0, 0)) == 0.5
    assert model.hamiltonian(contact, (0, 0, 0, 1, 0, 1)) == 1.0
    pert = contact.with_perturbation(catalogue.perturbation("q1_quartic"), 0.01)
    assert model.hamiltonian(pert, (1, 0, 0, 0, 0, 0)) == pytest.approx(0.51, abs=1e-15)


def test_reversal_examples():
    assert model.reversal_full((1, 2, 3, 4, 5, 6)) == (1, 2, 3, -4, -5, -6)
    assert model.reversal_reduced((1, 2, 3, 4, 5)) == (1, 2, 3, -4, -5)
    assert model.reversal_full((1, 2, 3, 0, 0, 0)) == (1, 2, 3, 0, 0, 0)


def test_params_validation():
    with pytest.raises(ValueError, match="m1"):
        Params(m1=-1.0)
    with pytest.raises(ValueError):
        Params(k2=0.0)


def test_cvt_domain(cvt):
    with pytest.raises(DomainViolation):
        model.alpha1(cvt, 1.0)
    with pytest.raises(DomainViolation):
        model.embed(cvt, (0, 0, 1.5, 1, 0))


@pytest.mark.parametrize("name", ["contact", "cvt", "decoupled"])
def test_catalogue_derivatives_consistent(name, rng):
    spec = catalogue.preset(name)
    samples = rng.uniform(-0.8, 0.8, size=(20, 6))
    report = model.check_derivatives(spec, samples)
    assert max(report.values()) < 1e-7


@pytest.mark.parametrize("gname", ["q1_quartic", "p1_quadratic", "mixed_nonreversible"])
def test_perturbation_derivatives(contact, gname, rng):
    g = catalogue.perturbation(gname)
    spec = contact.with_perturbation(g, 1e-2)
    report = model.check_derivatives(spec, rng.uniform(-1, 1, size=(10, 6)))
    assert report["gradG"] < 1e-7
    assert report["G_reversal"] < 1e-15
    assert g.reversible_flag == (gname != "mixed_nonreversible")
    s = rng.uniform(-1, 1, 6)
    hess = np.asarray(g.hessG(s[:3], s[3:]))
    fd = np.empty((6, 6))
    for i in range(6):
        e = np.zeros(6)
        e[i] = 1e-6
        fd[:, i] = (np.asarray(g.gradG((s + e)[:3], (s + e)[3:])) - np.asarray(g.gradG((s - e)[:3], (s - e)[3:]))) / 2e-6
    assert np.max(np.abs(hess - fd)) < 1e-7


@given(finite, finite, st.floats(-0.9, 0.9), finite, finite)
def test_embed_project_roundtrip(q1, q2, q3, p, p3):
    for name in ("contact", "cvt"):
        spec = catalogue.preset(name)
        full = model.embed(spec, (q1, q2, q3, p, p3))
        assert abs(model.constraint_residual(spec, full)) <= 1e-12 * max(1.0, abs(p))
        back = model.project(spec, full, tol=1e-9)
        assert np.allclose(back, (q1, q2, q3, p, p3), rtol=1e-13, atol=1e-13)


@given(st.floats(-0.9, 0.9))
def test_alpha_unit_norm(q3):
    # alpha1^2/m1 + alpha2^2/m2 = 1 is what makes p the velocity-norm coordinate
    spec = catalogue.preset("cvt")
    a1, a2 = model.alpha1(spec, q3), model.alpha2(spec, q3)
    assert a1 * a1 + a2 * a2 == pytest.approx(1.0, abs=1e-14)
