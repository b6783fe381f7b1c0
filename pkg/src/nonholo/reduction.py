"""Vector fields of the constrained system.

Four fields are provided:

* :func:`reduced_field` -- the underlying ODE on the unperturbed constraint
  manifold, in the chart ``(q1, q2, q3, p, p3)``;
* :func:`dae_field` -- the full Lagrange-d'Alembert equations on ``T*R^3``
  with the multiplier eliminated in closed form (any ``eps``);
* :func:`induced_field` -- the perturbed dynamics transported back to the
  unperturbed manifold through the fibre map
  ``(dH_0/dp)^-1 o dH_eps/dp``;
* the perturbed field itself is :func:`dae_field` of a perturbed spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import ConstraintViolation, FibreSolveFailure, PerturbationPresent
from .model import SystemSpec, alpha1, alpha2

__all__ = [
    "VectorFieldHandle",
    "reduced_field",
    "multiplier",
    "dae_field",
    "perturbed_manifold_solve",
    "induced_field",
    "lift_to_perturbed",
    "to_reduced_chart",
    "hamiltonian_derivatives",
]

FD_STEP = 1e-6
COND_MAX = 1e8


def _reverse(s):
    # momenta sit after the three positions in both the 5- and 6-dim layouts
    s = np.array(s, dtype=float)
    s[3:] *= -1.0
    return s


@dataclass(frozen=True)
class VectorFieldHandle:
    """An autonomous vector field ``ds/dt = eval(s)``.

    ``kernel`` holds the compiled description of the same field when the
    spec is built from catalogue parts (``None`` otherwise); integrators use
    it to run whole time loops outside the interpreter.
    """

    dimension: int
    eval: Callable[[np.ndarray], np.ndarray]
    label: str
    reversal: Callable[[np.ndarray], np.ndarray]
    spec: Optional[SystemSpec] = None
    kernel: object = None

    def __call__(self, s):
        return self.eval(s)


def reduced_field(spec: SystemSpec) -> VectorFieldHandle:
    """Underlying ODE on the unperturbed manifold.

    Returns the field ``(alpha1 p/m1, alpha2 p/m2, dF/dp3,
    -(k1/m1) alpha1 q1 - (k2/m2) alpha2 q2, -dF/dq3)``.  The ``1/m_i`` factors
    in the momentum equation follow from ``dp = alpha1 dp1/m1 +
    alpha2 dp2/m2``; they keep ``H`` conserved for unequal masses.
    """
    if spec.epsilon != 0:
        raise PerturbationPresent("reduced_field requires epsilon = 0; use induced_field")
    pr = spec.params
    m1, m2, k1, k2 = pr.m1, pr.m2, pr.k1, pr.k2
    r = m2 / m1
    f = spec.coupling.f
    Fq = spec.subsystem.dFdq3
    Fp = spec.subsystem.dFdp3

    def rhs(s):
        q1, q2, q3, p, p3 = s
        fv = f(q3)
        a1 = math.sqrt(m1 / (1.0 + r * fv * fv))
        a2 = -r * fv * a1
        return np.array(
            [
                a1 * p / m1,
                a2 * p / m2,
                Fp(q3, p3),
                -(k1 / m1) * a1 * q1 - (k2 / m2) * a2 * q2,
                -Fq(q3, p3),
            ]
        )

    return VectorFieldHandle(
        5, rhs, f"reduced[{spec.label}]", _reverse, spec, kernels.system_for(spec)
    )


def hamiltonian_derivatives(spec: SystemSpec, q, p):
    """Gradient and second-derivative blocks of ``H_eps``.

    Returns ``(Hq, Hp, Hpp, Hpq)`` with ``Hpq[i, j] = d2H/dp_i dq_j``.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    pr = spec.params
    sub = spec.subsystem
    q3, p3 = q[2], p[2]
    Hq = np.array([pr.k1 * q[0], pr.k2 * q[1], sub.dFdq3(q3, p3)])
    Hp = np.array([p[0] / pr.m1, p[1] / pr.m2, sub.dFdp3(q3, p3)])
    if sub.d2Fdp3 is not None:
        fpp = sub.d2Fdp3(q3, p3)
    else:
        fpp = (sub.dFdp3(q3, p3 + FD_STEP) - sub.dFdp3(q3, p3 - FD_STEP)) / (2 * FD_STEP)
    if sub.d2Fdp3dq3 is not None:
        fpq = sub.d2Fdp3dq3(q3, p3)
    else:
        fpq = (sub.dFdp3(q3 + FD_STEP, p3) - sub.dFdp3(q3 - FD_STEP, p3)) / (2 * FD_STEP)
    Hpp = np.diag([1.0 / pr.m1, 1.0 / pr.m2, fpp])
    Hpq = np.zeros((3, 3))
    Hpq[2, 2] = fpq
    if spec.perturbed:
        eps = spec.epsilon
        G = spec.perturbation
        g = np.asarray(G.gradG(q, p), dtype=float)
        Hq += eps * g[:3]
        Hp += eps * g[3:]
        if G.hessG is not None:
            hess = np.asarray(G.hessG(q, p), dtype=float)
        else:
            hess = np.empty((6, 6))
            x = np.concatenate([q, p])
            for j in range(6):
                e = np.zeros(6)
                e[j] = FD_STEP
                xp, xm = x + e, x - e
                hess[:, j] = (G.gradG(xp[:3], xp[3:]) - G.gradG(xm[:3], xm[3:])) / (2 * FD_STEP)
        Hpp += eps * hess[3:, 3:]
        Hpq += eps * hess[3:, :3]
    return Hq, Hp, Hpp, Hpq


def _lambda(spec, q, Hq, Hp, Hpp, Hpq):
    fv = spec.coupling.f(q[2])
    dfv = spec.coupling.df(q[2])
    tau = np.array([fv, 1.0, 0.0])
    # d/dt (tau . Hp) = 0 with qdot = Hp, pdot = -Hq + lam * tau
    num = tau @ Hpp @ Hq - dfv * Hp[2] * Hp[0] - tau @ Hpq @ Hp
    den = tau @ Hpp @ tau
    return num / den, tau


def multiplier(spec: SystemSpec, s, tol: float = 1e-8) -> float:
    """Lagrange multiplier keeping the constraint satisfied along the flow.

    For ``eps = 0`` this is ``[k1 f q1/m1 + k2 q2/m2 - f'(q3) dF/dp3 p1/m1]
    / (f**2/m1 + 1/m2)``.
    """
    s = np.asarray(s, dtype=float)
    q, p = s[:3], s[3:]
    Hq, Hp, Hpp, Hpq = hamiltonian_derivatives(spec, q, p)
    fv = spec.coupling.f(q[2])
    res = fv * Hp[0] + Hp[1]
    if not abs(res) <= tol:
        raise ConstraintViolation(f"state off the constraint manifold (residual {res:.3e})")
    lam, _ = _lambda(spec, q, Hq, Hp, Hpp, Hpq)
    return float(lam)


def dae_field(spec: SystemSpec, tol: float = 1e-4) -> VectorFieldHandle:
    """Full constrained equations on ``T*R^3`` with closed-form multiplier.

    The guard ``tol`` only rejects states clearly off the manifold.  It is
    far looser than the ``1e-8`` of :func:`multiplier` because the stage
    points of an adaptive Runge-Kutta step leave the manifold by up to the
    step's local error, which can reach ``1e-6`` on a first trial step.
    """

    def rhs(s):
        s = np.asarray(s, dtype=float)
        q, p = s[:3], s[3:]
        Hq, Hp, Hpp, Hpq = hamiltonian_derivatives(spec, q, p)
        res = spec.coupling.f(q[2]) * Hp[0] + Hp[1]
        if not abs(res) <= tol:
            raise ConstraintViolation(f"state off the constraint manifold (residual {res:.3e})")
        lam, tau = _lambda(spec, q, Hq, Hp, Hpp, Hpq)
        return np.concatenate([Hp, -Hq + lam * tau])

    return VectorFieldHandle(6, rhs, f"dae[{spec.label}]", _reverse, spec, None)


def _solve_p3(spec, q3, v3, p3_guess, tol=1e-14, max_iters=50):
    """Invert ``v3 = dF/dp3(q3, p3)`` for the unperturbed subsystem."""
    sub = spec.subsystem
    p3 = p3_guess
    for _ in range(max_iters):
        r = sub.dFdp3(q3, p3) - v3
        if sub.d2Fdp3 is not None:
            d = sub.d2Fdp3(q3, p3)
        else:
            d = (sub.dFdp3(q3, p3 + FD_STEP) - sub.dFdp3(q3, p3 - FD_STEP)) / (2 * FD_STEP)
        if d == 0:
            break
        step = r / d
        p3 -= step
        if abs(step) <= tol * max(1.0, abs(p3)):
            return p3
    raise FibreSolveFailure("could not invert dF/dp3 for the subsystem momentum")


def perturbed_manifold_solve(
    spec: SystemSpec, q, v, tol: float = 1e-12, max_iters: int = 50
) -> np.ndarray:
    """Momenta ``P`` on the perturbed manifold with ``dH_eps/dp(q, P) = v``.

    Damped Newton on the three momenta, started from the ``eps = 0`` closed
    form.  Failure to converge, or a fibre Jacobian with condition number
    above ``1e8``, means ``eps`` is too large for the fibre map to be a
    bundle automorphism.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    pr = spec.params
    P = np.array([pr.m1 * v[0], pr.m2 * v[1], _solve_p3(spec, q[2], v[2], v[2])])
    if not spec.perturbed:
        return P
    _, Hp, Hpp, _ = hamiltonian_derivatives(spec, q, P)
    r = Hp - v
    for _ in range(max_iters):
        if not np.all(np.isfinite(Hpp)) or np.linalg.cond(Hpp) > COND_MAX:
            raise FibreSolveFailure("fibre map Jacobian is singular or ill-conditioned")
        dP = np.linalg.solve(Hpp, r)
        if np.max(np.abs(dP)) <= tol * max(1.0, np.max(np.abs(P))):
            # already at the roundoff floor, where the line search cannot improve
            return P - dP
        rnorm = np.max(np.abs(r))
        lam = 1.0
        for _ in range(30):
            trial = P - lam * dP
            _, Hp_t, Hpp_t, _ = hamiltonian_derivatives(spec, q, trial)
            r_t = Hp_t - v
            if np.max(np.abs(r_t)) < rnorm or rnorm == 0:
                break
            lam *= 0.5
        else:
            raise FibreSolveFailure("damped Newton line search failed")
        P, r, Hpp = trial, r_t, Hpp_t
        if lam * np.max(np.abs(dP)) <= tol * max(1.0, np.max(np.abs(P))):
            return P
    raise FibreSolveFailure(f"Newton did not converge in {max_iters} iterations (epsilon too large?)")


def lift_to_perturbed(spec: SystemSpec, s) -> np.ndarray:
    """Reduced-chart state on M_0 -> full state on M_eps with equal velocity."""
    q1, q2, q3, p, p3 = (float(x) for x in s)
    pr = spec.params
    v = np.array(
        [alpha1(spec, q3) * p / pr.m1, alpha2(spec, q3) * p / pr.m2, spec.subsystem.dFdp3(q3, p3)]
    )
    q = np.array([q1, q2, q3])
    return np.concatenate([q, perturbed_manifold_solve(spec, q, v)])


def to_reduced_chart(spec: SystemSpec, s) -> np.ndarray:
    """Full state on M_eps -> reduced chart of M_0 (inverse of the lift)."""
    s = np.asarray(s, dtype=float)
    q, P = s[:3], s[3:]
    _, v, _, _ = hamiltonian_derivatives(spec, q, P)
    pr = spec.params
    p1 = pr.m1 * v[0]
    p3 = _solve_p3(spec, q[2], v[2], P[2])
    return np.array([q[0], q[1], q[2], p1 / alpha1(spec, q[2]), p3])


def induced_field(spec: SystemSpec) -> VectorFieldHandle:
    """Perturbed dynamics pulled back to the unperturbed manifold.

    At a chart point: embed with ``eps = 0``, take velocities, solve for the
    momenta on M_eps, evaluate the perturbed constrained field there and
    push the tangent back through the inverse fibre map using the exact
    second derivatives of ``H_eps`` (finite differences only where the
    spec supplies no Hessian).  For ``eps = 0`` this is
    :func:`reduced_field` up to roundoff.
    """
    pr = spec.params
    m1, m2 = pr.m1, pr.m2
    r_m = m2 / m1
    sub = spec.subsystem

    def rhs(s):
        q1, q2, q3, p, p3 = (float(x) for x in s)
        fv = spec.coupling.f(q3)
        a1 = math.sqrt(m1 / (1.0 + r_m * fv * fv))
        a2 = -r_m * fv * a1
        q = np.array([q1, q2, q3])
        v = np.array([a1 * p / m1, a2 * p / m2, sub.dFdp3(q3, p3)])
        P = perturbed_manifold_solve(spec, q, v)
        Hq, Hp, Hpp, Hpq = hamiltonian_derivatives(spec, q, P)
        lam, tau = _lambda(spec, q, Hq, Hp, Hpp, Hpq)
        qdot = Hp
        Pdot = -Hq + lam * tau
        vdot = Hpq @ qdot + Hpp @ Pdot
        if sub.d2Fdp3 is not None:
            fpp = sub.d2Fdp3(q3, p3)
        else:
            fpp = (sub.dFdp3(q3, p3 + FD_STEP) - sub.dFdp3(q3, p3 - FD_STEP)) / (2 * FD_STEP)
        if sub.d2Fdp3dq3 is not None:
            fpq = sub.d2Fdp3dq3(q3, p3)
        else:
            fpq = (sub.dFdp3(q3 + FD_STEP, p3) - sub.dFdp3(q3 - FD_STEP, p3)) / (2 * FD_STEP)
        return np.array(
            [
                qdot[0],
                qdot[1],
                qdot[2],
                a1 * vdot[0] + a2 * vdot[1],
                (vdot[2] - fpq * qdot[2]) / fpp,
            ]
        )

    return VectorFieldHandle(
        5, rhs, f"induced[{spec.label}]", _reverse, spec, kernels.system_for(spec)
    )
