import os
import pickle
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonholo import catalogue, kernels
from nonholo.errors import DomainViolation
from nonholo.integrators import StepperConfig, integrate
from nonholo.model import Coupling, SystemSpec
from nonholo.reduction import induced_field, reduced_field

needs_ext = pytest.mark.skipif(not kernels.HAVE_COMPILED, reason="compiled extension not built")

CASES = [(p, g) for p in ("contact", "cvt", "decoupled")
         for g in (None, "q1_quartic", "p1_quadratic", "mixed_nonreversible")]


def field_for(preset, g, eps=1e-2):
    spec = catalogue.preset(preset)
    if g is None:
        return reduced_field(spec)
    return induced_field(spec.with_perturbation(catalogue.perturbation(g), eps))


def test_encode_is_pure_data():
    enc = kernels.encode(catalogue.preset("cvt"))
    assert enc["fkind"] == 1 and enc["eps"] == 0.0
    custom = SystemSpec(catalogue.preset("contact").params, Coupling(f=lambda q: q, df=lambda q: 1.0),
                        catalogue.subsystem("harmonic"))
    assert kernels.encode(custom) is None
    assert reduced_field(custom).kernel is None


@needs_ext
@pytest.mark.parametrize("preset,g", CASES)
def test_compiled_rhs_matches_python(preset, g, rng):
    X = field_for(preset, g)
    f = kernels.rhs_callable(X)
    for s in rng.uniform(-0.8, 0.8, size=(10, 5)):
        np.testing.assert_allclose(f(s), X.eval(s), rtol=1e-12, atol=1e-13)


@needs_ext
@given(st.lists(st.floats(-0.9, 0.9), min_size=5, max_size=5))
def test_compiled_rhs_property(s):
    X = field_for("cvt", "p1_quadratic")
    np.testing.assert_allclose(kernels.rhs_callable(X)(s), X.eval(np.array(s)), rtol=1e-12, atol=1e-13)


@needs_ext
@pytest.mark.parametrize("preset,g", [("contact", "q1_quartic"), ("cvt", None), ("contact", "p1_quadratic")])
@pytest.mark.parametrize("method", ["rk4", "implicit_midpoint"])
def test_compiled_loop_matches_python(preset, g, method):
    X = field_for(preset, g)
    cfg = StepperConfig(method=method, h=0.05)
    s0 = [0.3, -0.2, 0.6, 0.4, 0.1]
    a = integrate(X, s0, 10.0, cfg, 1.0, compiled=True)
    b = integrate(X, s0, 10.0, cfg, 1.0, compiled=False)
    assert a.meta["backend"] == "compiled" and b.meta["backend"] == "python"
    np.testing.assert_allclose(a.states, b.states, atol=1e-11)


@needs_ext
def test_compiled_domain_violation():
    X = reduced_field(catalogue.preset("cvt"))
    with pytest.raises(DomainViolation):
        kernels.rhs_callable(X)([0.0, 0.0, 1.0, 0.1, 0.0])


@needs_ext
def test_kernel_system_pickles():
    X = field_for("cvt", "q1_quartic")
    clone = pickle.loads(pickle.dumps(X.kernel))
    s = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    np.testing.assert_array_equal(clone.rhs(s)[0], X.kernel.rhs(s)[0])


def test_pure_python_fallback_selected_by_env():
    env = dict(os.environ, NONHOLO_PURE_PYTHON="1")
    code = (
        "import nonholo, numpy as np\n"
        "from nonholo import catalogue, reduction, integrators\n"
        "X = reduction.reduced_field(catalogue.preset('contact'))\n"
        "tr = integrators.integrate(X, [0.3, -0.2, 1.0, 0.4, 0.0], 1.0, integrators.StepperConfig())\n"
        "print(nonholo.BACKEND, X.kernel is None, tr.meta['backend'], repr(float(tr.states[-1, 0])))\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, no_kernel, used, x = out.stdout.split()
    assert (backend, no_kernel, used) == ("python", "True", "python")
    X = reduced_field(catalogue.preset("contact"))
    ref = integrate(X, [0.3, -0.2, 1.0, 0.4, 0.0], 1.0, StepperConfig()).states[-1, 0]
    assert float(x) == pytest.approx(ref, abs=1e-13)
