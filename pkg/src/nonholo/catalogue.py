"""Named couplings, subsystems, perturbations and presets.

Every catalogue entry carries a ``code`` so that the compiled kernels can
evaluate it without calling back into Python: couplings are polynomials in
``q3`` (or the CVT ratio), subsystems are ``p3**2/2 + V(q3)`` with polynomial
``V`` and perturbations are sums of monomials in ``(q1, q2, q3, p1, p2, p3)``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DomainViolation
from .model import Coupling, Params, Perturbation, Subsystem, SystemSpec

__all__ = [
    "polynomial_coupling",
    "cvt_coupling",
    "polynomial_subsystem",
    "monomial_perturbation",
    "COUPLINGS",
    "SUBSYSTEMS",
    "PERTURBATIONS",
    "coupling",
    "subsystem",
    "perturbation",
    "preset",
    "PRESETS",
]


def _horner(coeffs):
    coeffs = tuple(float(c) for c in coeffs)
    rev = coeffs[::-1]

    def poly(x):
        acc = 0.0
        for c in rev:
            acc = acc * x + c
        return acc

    return poly


def _derivative(coeffs):
    return tuple(i * c for i, c in enumerate(coeffs))[1:] or (0.0,)


def polynomial_coupling(coeffs: Sequence[float], label: str = "polynomial") -> Coupling:
    """``f(q3) = sum_i coeffs[i] * q3**i``."""
    coeffs = tuple(float(c) for c in coeffs) or (0.0,)
    return Coupling(
        f=_horner(coeffs),
        df=_horner(_derivative(coeffs)),
        label=label,
        code=("poly", coeffs),
    )


def cvt_coupling() -> Coupling:
    """Transmission ratio ``f(q3) = q3 / (1 - q3)``, valid for ``q3 < 1``."""

    def f(q3):
        if not q3 < 1.0:
            raise DomainViolation(f"cvt coupling requires q3 < 1 (got {q3!r})")
        return q3 / (1.0 - q3)

    def df(q3):
        if not q3 < 1.0:
            raise DomainViolation(f"cvt coupling requires q3 < 1 (got {q3!r})")
        return 1.0 / (1.0 - q3) ** 2

    return Coupling(f=f, df=df, label="cvt", domain=(-math.inf, 1.0), code=("cvt", ()))


def polynomial_subsystem(vcoeffs: Sequence[float], label: str = "polynomial") -> Subsystem:
    """``F(q3, p3) = p3**2 / 2 + V(q3)`` with ``V(q3) = sum_i vcoeffs[i] q3**i``."""
    vcoeffs = tuple(float(c) for c in vcoeffs) or (0.0,)
    V = _horner(vcoeffs)
    dV = _horner(_derivative(vcoeffs))
    return Subsystem(
        F=lambda q3, p3: 0.5 * p3 * p3 + V(q3),
        dFdq3=lambda q3, p3: dV(q3),
        dFdp3=lambda q3, p3: p3,
        label=label,
        d2Fdp3=lambda q3, p3: 1.0,
        d2Fdp3dq3=lambda q3, p3: 0.0,
        code=("poly", vcoeffs),
    )


def monomial_perturbation(terms, label: str = "custom") -> Perturbation:
    """``G = sum_k c_k prod_i x_i**e_ik`` with ``x = (q1, q2, q3, p1, p2, p3)``.

    ``terms`` is a sequence of ``(c_k, (e_1, ..., e_6))``.  Reversibility is
    decided from the parity of the total momentum exponent of each term.
    """
    terms = tuple((float(c), tuple(int(e) for e in ex)) for c, ex in terms)
    for _, ex in terms:
        if len(ex) != 6 or min(ex) < 0:
            raise ValueError(f"monomial exponents must be 6 non-negative ints, got {ex}")
    coef = np.array([c for c, _ in terms])
    expo = np.array([ex for _, ex in terms], dtype=int).reshape(len(terms), 6)
    reversible = all(sum(ex[3:]) % 2 == 0 for _, ex in terms)

    def _x(q, p):
        return np.concatenate([np.asarray(q, dtype=float), np.asarray(p, dtype=float)])

    def G(q, p):
        x = _x(q, p)
        return float(np.sum(coef * np.prod(x ** expo, axis=1)))

    def gradG(q, p):
        x = _x(q, p)
        g = np.zeros(6)
        for c, ex in zip(coef, expo):
            for i in range(6):
                if ex[i] == 0:
                    continue
                e = ex.copy()
                e[i] -= 1
                g[i] += c * ex[i] * np.prod(x ** e)
        return g

    def hessG(q, p):
        x = _x(q, p)
        hmat = np.zeros((6, 6))
        for c, ex in zip(coef, expo):
            for i in range(6):
                for j in range(6):
                    e = ex.copy()
                    k = e[i]
                    e[i] -= 1
                    k *= e[j]
                    e[j] -= 1
                    if k == 0:
                        continue
                    hmat[i, j] += c * k * np.prod(x ** e)
        return hmat

    return Perturbation(
        G=G,
        gradG=gradG,
        reversible_flag=reversible,
        label=label,
        hessG=hessG,
        code=("monomials", terms),
    )


COUPLINGS = {
    "linear": lambda: polynomial_coupling((0.0, 1.0), label="linear"),
    "zero": lambda: polynomial_coupling((0.0,), label="zero"),
    "cvt": cvt_coupling,
}

SUBSYSTEMS = {
    "harmonic": lambda: polynomial_subsystem((0.0, 0.0, 0.5), label="harmonic"),
    "quartic": lambda: polynomial_subsystem((0.0, 0.0, 0.0, 0.0, 0.25), label="quartic"),
}

PERTURBATIONS = {
    "q1_quartic": lambda: monomial_perturbation([(1.0, (4, 0, 0, 0, 0, 0))], label="q1_quartic"),
    "p1_quadratic": lambda: monomial_perturbation([(0.5, (0, 0, 0, 2, 0, 0))], label="p1_quadratic"),
    # odd in the momenta: q3*p1 couples the driver to the first oscillator
    "mixed_nonreversible": lambda: monomial_perturbation(
        [(1.0, (0, 0, 1, 1, 0, 0))], label="mixed_nonreversible"
    ),
}


def coupling(name: str, coeffs: Sequence[float] | None = None) -> Coupling:
    if name == "polynomial":
        if coeffs is None:
            raise ValueError("polynomial coupling needs coefficients")
        return polynomial_coupling(coeffs)
    try:
        return COUPLINGS[name]()
    except KeyError:
        raise ValueError(f"unknown coupling {name!r}; choose from {sorted(COUPLINGS) + ['polynomial']}")


def subsystem(name: str, coeffs: Sequence[float] | None = None) -> Subsystem:
    if name == "polynomial":
        if coeffs is None:
            raise ValueError("polynomial subsystem needs potential coefficients")
        return polynomial_subsystem(coeffs)
    try:
        return SUBSYSTEMS[name]()
    except KeyError:
        raise ValueError(f"unknown subsystem {name!r}; choose from {sorted(SUBSYSTEMS) + ['polynomial']}")


def perturbation(name: str) -> Perturbation | None:
    if name == "none":
        return None
    try:
        return PERTURBATIONS[name]()
    except KeyError:
        raise ValueError(f"unknown perturbation {name!r}; choose from {['none'] + sorted(PERTURBATIONS)}")


def _contact() -> SystemSpec:
    return SystemSpec(Params(), coupling("linear"), subsystem("harmonic"), label="contact")


def _cvt() -> SystemSpec:
    return SystemSpec(Params(), coupling("cvt"), subsystem("harmonic"), label="cvt")


def _decoupled() -> SystemSpec:
    return SystemSpec(Params(), coupling("zero"), subsystem("harmonic"), label="decoupled")


PRESETS = {"contact": _contact, "cvt": _cvt, "decoupled": _decoupled}


def preset(name: str) -> SystemSpec:
    """Built-in systems: ``contact`` (f = q3), ``cvt`` (f = q3/(1-q3)) and
    ``decoupled`` (f = 0), all with unit masses/springs and harmonic driver."""
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
