"""Time steppers: RK4, implicit midpoint and an adaptive reference solver.

RK4 is the non-reversible baseline; implicit midpoint is symmetric and
therefore reversible on reversible fields.  The reference solver is
scipy's DOP853 at tight tolerance and is the oracle for everything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import _pykernels, kernels
from .errors import StepSizeUnderflow

__all__ = [
    "METHODS",
    "StepperConfig",
    "Trajectory",
    "step_rk4",
    "step_implicit_midpoint",
    "reference_solve",
    "integrate",
    "reversibility_defect",
    "reversal_error",
]

METHODS = ("rk4", "implicit_midpoint", "reference")
_KERNEL_METHOD = {"rk4": kernels.RK4, "implicit_midpoint": kernels.MIDPOINT}


@dataclass(frozen=True)
class StepperConfig:
    method: str = "implicit_midpoint"
    h: float = 0.05
    newton_tol: float = 1e-12
    newton_max_iters: int = 50
    reference_tol: float = 1e-12

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if not (self.newton_tol > 0 and self.reference_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.newton_max_iters < 1:
            raise ValueError("newton_max_iters must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    spec_label: str = ""
    method_label: str = ""
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.times.shape[0] != self.states.shape[0]:
            raise ValueError("times and states must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return self.times.shape[0]


def _callable(field):
    return field.eval if hasattr(field, "eval") else field


def step_rk4(field, s, h):
    """One classical Runge-Kutta step."""
    return _pykernels.rk4_step(_callable(field), np.asarray(s, dtype=float), h)


def step_implicit_midpoint(field, s, h, cfg: Optional[StepperConfig] = None):
    """One implicit midpoint step solved to ``cfg.newton_tol``.

    Raises :class:`NonConvergence` after ``cfg.newton_max_iters`` sweeps.
    """
    cfg = cfg or StepperConfig()
    return _pykernels.midpoint_step(
        _callable(field), np.asarray(s, dtype=float), h, cfg.newton_tol, cfg.newton_max_iters
    )


def reference_solve(field, s0, t_final, cfg: Optional[StepperConfig] = None, t_eval=None,
                    dense_output=False) -> Trajectory:
    """Adaptive DOP853 solve with ``rtol = atol = cfg.reference_tol``.

    States are reported at ``t_eval`` (default ``[0, t_final]``) through the
    solver's own interpolant.  With ``dense_output`` the continuous solution
    is attached as ``trajectory.meta["sol"]``.
    """
    cfg = cfg or StepperConfig(method="reference")
    s0 = np.asarray(s0, dtype=float)
    if t_eval is None:
        t_eval = np.array([0.0, t_final]) if t_final > 0 else np.array([0.0])
    t_eval = np.asarray(t_eval, dtype=float)
    if t_final == 0:
        return Trajectory(np.zeros(1), s0[None, :], _label(field), "reference")
    f = kernels.rhs_callable(field) if hasattr(field, "kernel") else _callable(field)
    sol = solve_ivp(
        lambda t, y: f(y),
        (0.0, float(t_final)),
        s0,
        method="DOP853",
        rtol=cfg.reference_tol,
        atol=cfg.reference_tol,
        t_eval=t_eval,
        dense_output=dense_output,
    )
    if sol.status != 0:
        raise StepSizeUnderflow(f"reference solver failed: {sol.message}")
    meta = {"nfev": int(sol.nfev), "reference_tol": cfg.reference_tol}
    if dense_output:
        meta["sol"] = sol.sol
    return Trajectory(sol.t, sol.y.T, _label(field), "reference", meta)


def _label(field):
    return getattr(field, "label", "custom")


def _steps(T, dt, h):
    n = T / h
    every = dt / h
    if abs(n - round(n)) > 1e-9 * max(1.0, n) or abs(every - round(every)) > 1e-9 * max(1.0, every):
        raise ValueError(f"T={T} and sample_dt={dt} must be integer multiples of h={h}")
    return int(round(n)), max(1, int(round(every)))


def integrate(field, s0, T, cfg: StepperConfig, sample_dt=None, compiled=True) -> Trajectory:
    """Integrate ``field`` over ``[0, T]`` with the configured method.

    Fixed-step methods run in the compiled kernel when the field has one.
    Samples are taken every ``sample_dt`` (default: every step).
    """
    sample_dt = cfg.h if sample_dt is None else sample_dt
    if cfg.method == "reference":
        n = int(round(T / sample_dt))
        times = np.linspace(0.0, n * sample_dt, n + 1)
        return reference_solve(field, s0, times[-1], cfg, t_eval=times)
    n_steps, every = _steps(T, sample_dt, cfg.h)
    states = kernels.integrate_fixed(
        field, s0, cfg.h, n_steps, every, _KERNEL_METHOD[cfg.method],
        cfg.newton_tol, cfg.newton_max_iters, compiled=compiled,
    )
    times = np.arange(states.shape[0]) * (every * cfg.h)
    meta = {"h": cfg.h, "backend": "compiled" if compiled and field.kernel is not None else "python"}
    return Trajectory(times, states, _label(field), cfg.method, meta)


def _one_step(field, s, h, method, cfg):
    if method == "reference":
        return reference_solve(field, s, h, cfg).states[-1]
    return kernels.integrate_fixed(
        field, s, h, 1, 1, _KERNEL_METHOD[method], cfg.newton_tol, cfg.newton_max_iters
    )[-1]


def reversibility_defect(field, method: str, s, h: float, cfg: Optional[StepperConfig] = None) -> float:
    """``max |rho(psi_h(rho(psi_h(s)))) - s|`` for a one-step map ``psi_h``."""
    cfg = cfg or StepperConfig()
    s = np.asarray(s, dtype=float)
    rho = field.reversal
    x = _one_step(field, s, h, method, cfg)
    x = _one_step(field, rho(x), h, method, cfg)
    return float(np.max(np.abs(rho(x) - s)))


def reversal_error(field, s0, T: float, cfg: Optional[StepperConfig] = None) -> float:
    """Flow-level reversibility test ``max |phi_T(rho(phi_T(s0))) - rho(s0)|``.

    Integrates forward to ``T``, reverses the momenta and integrates for
    another ``T``; for a reversible field this lands on ``rho(s0)``.
    """
    cfg = cfg or StepperConfig(method="reference")
    s0 = np.asarray(s0, dtype=float)
    rho = field.reversal
    if cfg.method == "reference":
        fwd = reference_solve(field, s0, T, cfg).states[-1]
        back = reference_solve(field, rho(fwd), T, cfg).states[-1]
    else:
        fwd = integrate(field, s0, T, cfg, T).states[-1]
        back = integrate(field, rho(fwd), T, cfg, T).states[-1]
    return float(np.max(np.abs(back - rho(s0))))
