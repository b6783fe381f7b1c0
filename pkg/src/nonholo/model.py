"""System family: parameters, coupling, subsystem, perturbation and charts.

A member of the family lives on ``T*R^3`` with canonical coordinates
``(q1, q2, q3, p1, p2, p3)`` and Hamiltonian::

    H_eps = sum_i (p_i**2 / m_i + k_i q_i**2) / 2 + F(q3, p3) + eps * G(q, p)

subject to the velocity constraint ``f(q3) * dq1/dt + dq2/dt = 0``.  For
``eps = 0`` the constraint manifold is parametrized by the reduced chart
``(q1, q2, q3, p, p3)`` with ``p1 = alpha1(q3) p`` and ``p2 = alpha2(q3) p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConstraintViolation, DomainViolation

__all__ = [
    "Params",
    "Coupling",
    "Subsystem",
    "Perturbation",
    "FullState",
    "ReducedState",
    "SystemSpec",
    "alpha1",
    "alpha2",
    "dalpha",
    "embed",
    "project",
    "constraint_residual",
    "hamiltonian",
    "velocity",
    "reversal_full",
    "reversal_reduced",
    "check_derivatives",
]


@dataclass(frozen=True)
class Params:
    """Masses and spring constants of the two linear oscillators."""

    m1: float = 1.0
    m2: float = 1.0
    k1: float = 1.0
    k2: float = 1.0

    def __post_init__(self):
        for name in ("m1", "m2", "k1", "k2"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0 (got {value!r})")


@dataclass(frozen=True)
class Coupling:
    """Coupling function ``f`` of the constraint ``f(q3) dq1 + dq2 = 0``.

    ``domain`` is the open interval on which ``f`` is valid; catalogue
    entries with a finite domain raise :class:`DomainViolation` themselves.
    ``code`` is the compiled-kernel encoding, ``None`` for arbitrary callables.
    """

    f: Callable[[float], float]
    df: Callable[[float], float]
    label: str = "custom"
    domain: tuple = (-math.inf, math.inf)
    code: Optional[tuple] = None

    def check_domain(self, q3: float) -> None:
        lo, hi = self.domain
        if not (lo < q3 < hi):
            raise DomainViolation(
                f"coupling '{self.label}' evaluated at q3={q3!r} outside ({lo}, {hi})"
            )


@dataclass(frozen=True)
class Subsystem:
    """Reversible Hamiltonian ``F(q3, p3)`` of the driving subsystem.

    Second derivatives are optional; when absent they are taken by central
    differences of the supplied first derivatives.
    """

    F: Callable[[float, float], float]
    dFdq3: Callable[[float, float], float]
    dFdp3: Callable[[float, float], float]
    label: str = "custom"
    d2Fdp3: Optional[Callable[[float, float], float]] = None
    d2Fdp3dq3: Optional[Callable[[float, float], float]] = None
    code: Optional[tuple] = None


@dataclass(frozen=True)
class Perturbation:
    """Perturbing Hamiltonian ``G(q, p)`` on ``T*R^3``.

    ``gradG`` returns the 6-gradient ordered ``(q1, q2, q3, p1, p2, p3)``;
    ``hessG`` (optional) the 6x6 Hessian in the same order.
    """

    G: Callable[[np.ndarray, np.ndarray], float]
    gradG: Callable[[np.ndarray, np.ndarray], np.ndarray]
    reversible_flag: bool
    label: str = "custom"
    hessG: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    code: Optional[tuple] = None


class FullState(NamedTuple):
    q1: float
    q2: float
    q3: float
    p1: float
    p2: float
    p3: float


class ReducedState(NamedTuple):
    q1: float
    q2: float
    q3: float
    p: float
    p3: float


@dataclass(frozen=True)
class SystemSpec:
    params: Params
    coupling: Coupling
    subsystem: Subsystem
    perturbation: Optional[Perturbation] = None
    epsilon: float = 0.0
    label: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be >= 0 (got {self.epsilon!r})")
        if self.epsilon > 0 and self.perturbation is None:
            raise ValueError("epsilon > 0 requires a perturbation")

    @property
    def perturbed(self) -> bool:
        return self.epsilon > 0 and self.perturbation is not None

    def unperturbed(self) -> "SystemSpec":
        return replace(self, perturbation=None, epsilon=0.0)

    def with_perturbation(self, perturbation: Optional[Perturbation], epsilon: float) -> "SystemSpec":
        if perturbation is None or epsilon == 0:
            return replace(self, perturbation=perturbation, epsilon=0.0)
        return replace(self, perturbation=perturbation, epsilon=float(epsilon))


def alpha1(spec: SystemSpec, q3: float) -> float:
    """``alpha1 = ((1 + (m2/m1) f(q3)**2) / m1) ** -1/2``, always positive."""
    m1, m2 = spec.params.m1, spec.params.m2
    f = spec.coupling.f(q3)
    return math.sqrt(m1 / (1.0 + (m2 / m1) * f * f))


def alpha2(spec: SystemSpec, q3: float) -> float:
    """``alpha2 = -(m2/m1) f(q3) alpha1(q3)``."""
    m1, m2 = spec.params.m1, spec.params.m2
    f = spec.coupling.f(q3)
    return -(m2 / m1) * f * math.sqrt(m1 / (1.0 + (m2 / m1) * f * f))


def dalpha(spec: SystemSpec, q3: float) -> tuple:
    """Derivatives ``(alpha1'(q3), alpha2'(q3))`` in closed form."""
    m1, m2 = spec.params.m1, spec.params.m2
    r = m2 / m1
    f = spec.coupling.f(q3)
    df = spec.coupling.df(q3)
    den = 1.0 + r * f * f
    a1 = math.sqrt(m1 / den)
    da1 = -a1 * r * f * df / den
    da2 = -r * (df * a1 + f * da1)
    return da1, da2


def embed(spec: SystemSpec, s: Sequence[float]) -> FullState:
    """Map a reduced-chart state onto the constraint manifold in ``T*R^3``."""
    q1, q2, q3, p, p3 = (float(x) for x in s)
    return FullState(q1, q2, q3, alpha1(spec, q3) * p, alpha2(spec, q3) * p, p3)


def project(spec: SystemSpec, s: Sequence[float], tol: float = 1e-10) -> ReducedState:
    """Inverse of :func:`embed` for states on the unperturbed manifold.

    Raises
    ------
    ConstraintViolation
        If ``|constraint_residual| > tol``.
    """
    s = FullState(*(float(x) for x in s))
    res = constraint_residual(spec.unperturbed(), s)
    if not abs(res) <= tol:
        raise ConstraintViolation(f"constraint residual {res:.3e} exceeds tol {tol:.1e}")
    return ReducedState(s.q1, s.q2, s.q3, s.p1 / alpha1(spec, s.q3), s.p3)


def velocity(spec: SystemSpec, s: Sequence[float]) -> np.ndarray:
    """``dH_eps/dp`` at a full state."""
    q1, q2, q3, p1, p2, p3 = (float(x) for x in s)
    pr = spec.params
    v = np.array([p1 / pr.m1, p2 / pr.m2, spec.subsystem.dFdp3(q3, p3)])
    if spec.perturbed:
        g = spec.perturbation.gradG(np.array([q1, q2, q3]), np.array([p1, p2, p3]))
        v += spec.epsilon * np.asarray(g, dtype=float)[3:]
    return v


def constraint_residual(spec: SystemSpec, s: Sequence[float]) -> float:
    """Constraint one-form contracted with the velocity, ``f(q3) v1 + v2``."""
    s = tuple(float(x) for x in s)
    q3 = s[2]
    if spec.perturbed:
        v = velocity(spec, s)
        v1, v2 = v[0], v[1]
    else:
        v1, v2 = s[3] / spec.params.m1, s[4] / spec.params.m2
    return spec.coupling.f(q3) * v1 + v2


def hamiltonian(spec: SystemSpec, s: Sequence[float]) -> float:
    q1, q2, q3, p1, p2, p3 = (float(x) for x in s)
    pr = spec.params
    h = 0.5 * (p1 * p1 / pr.m1 + pr.k1 * q1 * q1 + p2 * p2 / pr.m2 + pr.k2 * q2 * q2)
    h += spec.subsystem.F(q3, p3)
    if spec.perturbed:
        h += spec.epsilon * spec.perturbation.G(np.array([q1, q2, q3]), np.array([p1, p2, p3]))
    return h


def reversal_full(s: Sequence[float]) -> FullState:
    q1, q2, q3, p1, p2, p3 = s
    return FullState(q1, q2, q3, -p1, -p2, -p3)


def reversal_reduced(s: Sequence[float]) -> ReducedState:
    q1, q2, q3, p, p3 = s
    return ReducedState(q1, q2, q3, -p, -p3)


def _rel_err(approx: float, exact: float) -> float:
    return abs(approx - exact) / max(1.0, abs(exact))


def check_derivatives(spec: SystemSpec, samples, step: float = 1e-6) -> dict:
    """Central-difference consistency of every supplied derivative.

    ``samples`` is an array of full states ``(n, 6)``.  Returns the maximum
    relative error (unit floor) per derivative and, for the subsystem and a
    flagged-reversible perturbation, the reversibility defect.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    c, sub, pert = spec.coupling, spec.subsystem, spec.perturbation
    out = {"df": 0.0, "dFdq3": 0.0, "dFdp3": 0.0, "F_reversal": 0.0}
    if pert is not None:
        out.update(gradG=0.0, G_reversal=0.0)
    for s in samples:
        q, p = s[:3], s[3:]
        q3, p3 = s[2], s[5]
        fd = (c.f(q3 + step) - c.f(q3 - step)) / (2 * step)
        out["df"] = max(out["df"], _rel_err(fd, c.df(q3)))
        fd = (sub.F(q3 + step, p3) - sub.F(q3 - step, p3)) / (2 * step)
        out["dFdq3"] = max(out["dFdq3"], _rel_err(fd, sub.dFdq3(q3, p3)))
        fd = (sub.F(q3, p3 + step) - sub.F(q3, p3 - step)) / (2 * step)
        out["dFdp3"] = max(out["dFdp3"], _rel_err(fd, sub.dFdp3(q3, p3)))
        out["F_reversal"] = max(out["F_reversal"], abs(sub.F(q3, -p3) - sub.F(q3, p3)))
        if pert is not None:
            grad = np.asarray(pert.gradG(q, p), dtype=float)
            for i in range(6):
                e = np.zeros(6)
                e[i] = step
                sp, sm = s + e, s - e
                fd = (pert.G(sp[:3], sp[3:]) - pert.G(sm[:3], sm[3:])) / (2 * step)
                out["gradG"] = max(out["gradG"], _rel_err(fd, grad[i]))
            if pert.reversible_flag:
                out["G_reversal"] = max(out["G_reversal"], abs(pert.G(q, -p) - pert.G(q, p)))
    return out
