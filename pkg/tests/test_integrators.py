import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonholo import model
from nonholo.errors import NonConvergence, StepSizeUnderflow
from nonholo.integrators import (
    StepperConfig,
    Trajectory,
    integrate,
    reference_solve,
    reversal_error,
    reversibility_defect,
    step_implicit_midpoint,
    step_rk4,
)
from nonholo.reduction import VectorFieldHandle, reduced_field


def handle(f, dim):
    return VectorFieldHandle(dim, f, "test", lambda s: np.asarray(s, dtype=float))


ZERO = handle(lambda s: np.zeros_like(np.asarray(s, dtype=float)), 2)
GROWTH = handle(lambda s: np.asarray(s, dtype=float), 1)
OSC = handle(lambda s: np.array([s[1], -s[0]]), 2)


def test_rk4_exponential_oracle():
    # 1 + h + h^2/2 + h^3/6 + h^4/24 at h = 0.1
    oracle = 1 + 0.1 + 0.005 + 0.1 ** 3 / 6 + 0.1 ** 4 / 24
    assert step_rk4(GROWTH, [1.0], 0.1)[0] == pytest.approx(oracle, abs=1e-15)
    assert oracle == pytest.approx(1.1051708333333334, abs=1e-15)


@pytest.mark.parametrize("step", [step_rk4, step_implicit_midpoint])
def test_zero_field_is_fixed(step):
    np.testing.assert_array_equal(step(ZERO, [0.3, -1.0], 0.5), [0.3, -1.0])


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 0.5))
def test_midpoint_is_cayley_on_skew_linear(a, b, c, h):
    A = np.array([[0, a, b], [-a, 0, c], [-b, -c, 0]])
    field = handle(lambda s: A @ s, 3)
    s = np.array([0.3, -0.7, 1.1])
    cayley = np.linalg.solve(np.eye(3) - h * A / 2, (np.eye(3) + h * A / 2) @ s)
    out = step_implicit_midpoint(field, s, h)
    np.testing.assert_allclose(out, cayley, atol=1e-12)
    assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(s), abs=1e-12)


def test_midpoint_nonconvergence():
    stiff = handle(lambda s: np.asarray(s) ** 3, 1)
    with pytest.raises(NonConvergence):
        step_implicit_midpoint(stiff, [10.0], 1.0, StepperConfig(newton_max_iters=2))


def test_reference_zero_field():
    tr = reference_solve(ZERO, [1.0, 2.0], 3.0, t_eval=np.linspace(0, 3, 4))
    np.testing.assert_array_equal(tr.states, [[1.0, 2.0]] * 4)


def test_reference_harmonic_period():
    tr = reference_solve(OSC, [1.0, 0.0], 2 * np.pi)
    np.testing.assert_allclose(tr.states[-1], [1.0, 0.0], atol=1e-10)


def test_reference_energy_contact(contact):
    tr = reference_solve(reduced_field(contact), [1, 0, 0, 0, 1], 100.0, t_eval=np.linspace(0, 100, 101))
    H = [model.hamiltonian(contact, model.embed(contact, s)) for s in tr.states]
    assert np.max(np.abs(np.array(H) - H[0])) <= 1e-10


def test_reference_blowup():
    blow = handle(lambda s: np.asarray(s) ** 2, 1)
    with pytest.raises(StepSizeUnderflow):
        reference_solve(blow, [1.0], 2.0)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0], [[1.0]])
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], [[1.0], [2.0]])


def test_stepper_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(method="euler")
    with pytest.raises(ValueError):
        StepperConfig(h=0.0)


def test_integrate_grid(contact):
    X = reduced_field(contact)
    tr = integrate(X, [1, 0, 0, 0, 1], 1.0, StepperConfig(h=0.05), 0.25)
    np.testing.assert_allclose(tr.times, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        integrate(X, [1, 0, 0, 0, 1], 1.0, StepperConfig(h=0.3))


@pytest.mark.parametrize("method", ["rk4", "implicit_midpoint"])
def test_compiled_matches_python_loop(contact, method):
    X = reduced_field(contact)
    cfg = StepperConfig(method=method, h=0.05)
    a = integrate(X, [0.3, -0.2, 1.0, 0.4, 0.0], 5.0, cfg, 0.5, compiled=True).states
    b = integrate(X, [0.3, -0.2, 1.0, 0.4, 0.0], 5.0, cfg, 0.5, compiled=False).states
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_reversibility_defect_midpoint_and_rk4(contact, rng):
    X = reduced_field(contact)
    for s in rng.uniform(-1, 1, size=(5, 5)):
        assert reversibility_defect(X, "implicit_midpoint", s, 0.1, StepperConfig()) <= 1e-10
        d = reversibility_defect(X, "rk4", s, 0.1)
        assert 0 < d < 1e-3  # O(h^5) with an O(1) constant


def test_reversibility_defect_rk4_scaling(contact):
    # even order: the h^5 error terms of the step and its adjoint coincide,
    # so the composition defect starts at h^6
    X = reduced_field(contact)
    s = np.array([0.3, -0.2, 0.8, 0.4, 0.5])
    ratio = reversibility_defect(X, "rk4", s, 0.1) / reversibility_defect(X, "rk4", s, 0.05)
    assert 48 < ratio < 80


def test_reversibility_defect_fixed_point(decoupled):
    # origin: p = p3 = 0 and the field vanishes there
    X = reduced_field(decoupled)
    for method in ("rk4", "implicit_midpoint", "reference"):
        assert reversibility_defect(X, method, np.zeros(5), 0.1) == 0.0


def test_reversal_error_reference(contact):
    X = reduced_field(contact)
    assert reversal_error(X, [0.3, -0.2, 1.0, 0.4, 0.0], 20.0) <= 1e-8


def _global_error(field, s0, T, method, h, exact):
    return np.max(np.abs(integrate(field, s0, T, StepperConfig(method=method, h=h), T).states[-1] - exact))


@pytest.mark.parametrize("method,lo,hi", [("rk4", 12, 20), ("implicit_midpoint", 3.4, 4.6)])
def test_order_of_accuracy_cvt(cvt, method, lo, hi):
    X = reduced_field(cvt)
    s0 = np.array([0.4, 0.1, 0.5, 0.3, 0.2])
    exact = reference_solve(X, s0, 10.0, StepperConfig(method="reference", reference_tol=1e-13)).states[-1]
    e1 = _global_error(X, s0, 10.0, method, 0.1, exact)
    e2 = _global_error(X, s0, 10.0, method, 0.05, exact)
    assert lo <= e1 / e2 <= hi
