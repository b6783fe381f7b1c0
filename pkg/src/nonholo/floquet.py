"""Floquet construction of action-angle variables.

The subsystem ``(q3, p3)`` moves on closed level curves ``F = a`` and drives
the two linear oscillators through the periodic skew matrix ``B(a, theta)``
acting on ``u = (sqrt(k1) q1, sqrt(k2) q2, p)``.  In the angle time
``theta`` (cycles, period one) the driven system is ``u' = A(theta) u`` with
``A = B / omega``.  Its monodromy ``Phi(1)`` lies in SO(3); with the
principal logarithm ``Abar`` the map

    v = expm(Abar theta) Phi(theta)^-1 u

turns the flow into the rigid rotation ``v' = Abar v``.  The rotation axis
and the plane orthogonal to it give the invariants ``b, c`` and the second
angle ``phi``.

Angles are in cycles and frequencies in cycles per unit time throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm
from scipy.optimize import brentq

from .errors import (
    DegenerateRotation,
    HalfTurn,
    NoClosedOrbit,
    NoSectionCrossing,
    NotARotation,
    OmegaZero,
)
from .model import SystemSpec, alpha1, alpha2

__all__ = [
    "RHO",
    "RESONANCE_TOL",
    "hat",
    "vee",
    "so3_exp",
    "so3_log",
    "SubsystemOrbit",
    "FloquetData",
    "ReversibilityReport",
    "subsystem_orbit",
    "skew_field_B",
    "monodromy",
    "flow_Phi",
    "psi_transform",
    "check_reversibility",
    "action_angle_coords",
    "action_angle_batch",
    "frequencies",
    "classical_action",
    "u_coords",
    "frozen_rotation",
]

RHO = np.diag([1.0, 1.0, -1.0])
RESONANCE_TOL = 1e-8
ODE_TOL = 1e-13
PHASE_GRID = 512
WINDOW = 100.0
TIME_CAP = 1e4


# --- so(3) helpers -------------------------------------------------------

def hat(w) -> np.ndarray:
    w1, w2, w3 = w
    return np.array([[0.0, -w3, w2], [w3, 0.0, -w1], [-w2, w1, 0.0]])


def vee(W) -> np.ndarray:
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def so3_exp(A, theta=1.0) -> np.ndarray:
    """Rodrigues formula for ``expm(A * theta)`` with ``A`` skew.

    ``theta`` may be an array, in which case a stack of matrices is returned.
    """
    w = vee(A)
    s = np.linalg.norm(w)
    th = np.asarray(theta, dtype=float)
    if s == 0.0:
        return np.broadcast_to(np.eye(3), th.shape + (3, 3)).copy()
    K = hat(w / s)
    ang = s * th[..., None, None]
    return np.eye(3) + np.sin(ang) * K + (1.0 - np.cos(ang)) * (K @ K)


def _rotation_angle(R):
    skew = 0.5 * np.linalg.norm(vee(R - R.T))
    return math.atan2(skew, 0.5 * (np.trace(R) - 1.0))


def _check_rotation(R, tol):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise NotARotation(f"expected a 3x3 matrix, got shape {R.shape}")
    orth = float(np.max(np.abs(R.T @ R - np.eye(3))))
    det = float(np.linalg.det(R))
    if orth > tol or abs(det - 1.0) > tol:
        raise NotARotation(f"orthogonality defect {orth:.3g}, det {det!r}")
    return R


def so3_log(R, tol: float = RESONANCE_TOL):
    """Principal logarithm of a rotation.

    Returns
    -------
    Abar : (3, 3) skew matrix with ``expm(Abar) = R``
    sigma : rotation angle in ``[0, pi]`` (radians)
    axis : unit vector ``vee(Abar) / sigma``, or ``None`` when ``sigma = 0``

    Raises
    ------
    NotARotation
        If ``R`` is not orthogonal with unit determinant within ``tol``.
    HalfTurn
        If ``sigma`` is within ``tol`` of ``pi``; the logarithm then has no
        preferred axis sign.
    """
    R = _check_rotation(R, tol)
    sigma = _rotation_angle(R)
    if abs(sigma - math.pi) < tol:
        raise HalfTurn(f"rotation angle {sigma!r} is a half turn")
    if sigma == 0.0:
        return np.zeros((3, 3)), 0.0, None
    Abar = (sigma / (2.0 * math.sin(sigma))) * (R - R.T)
    Abar = 0.5 * (Abar - Abar.T)
    return Abar, sigma, vee(Abar) / sigma


def _halfturn_log(R):
    # axis from the symmetric part, R = 2 n n^T - I; sign is arbitrary
    M = 0.5 * (R + np.eye(3))
    j = int(np.argmax(np.diag(M)))
    n = M[:, j] / math.sqrt(M[j, j])
    n /= np.linalg.norm(n)
    return math.pi * hat(n), math.pi, n


# --- subsystem -----------------------------------------------------------

def _subsystem_rhs(spec, scale=1.0):
    Fq, Fp = spec.subsystem.dFdq3, spec.subsystem.dFdp3

    def rhs(t, y):
        return [scale * Fp(y[0], y[1]), -scale * Fq(y[0], y[1])]

    return rhs


@dataclass(frozen=True)
class SubsystemOrbit:
    """Closed level curve ``F = a`` of the subsystem, parametrized by phase.

    ``theta_param(0)`` is the section point ``(q3*, 0)``; the parametrization
    is reversible, ``q3(-theta) = q3(theta)`` and ``p3(-theta) = -p3(theta)``.
    For an equilibrium level ``period_T3`` is infinite and ``omega`` is 0.
    """

    a: float
    period_T3: float
    omega: float
    basepoint: tuple
    _sol: Optional[Callable] = field(default=None, repr=False, compare=False)
    _grid: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def is_equilibrium(self) -> bool:
        return self.omega == 0.0

    def theta_param(self, theta):
        """``(q3, p3)`` at phase ``theta`` (any real, taken mod 1)."""
        th = np.mod(np.asarray(theta, dtype=float), 1.0)
        if self.is_equilibrium:
            out = np.empty((2,) + th.shape)
            out[0], out[1] = self.basepoint
            return out
        return self._sol(th)

    def velocity(self, theta, spec):
        q3, p3 = self.theta_param(theta)
        Fq, Fp = spec.subsystem.dFdq3, spec.subsystem.dFdp3
        T = self.period_T3
        return np.array([T * np.vectorize(Fp)(q3, p3), -T * np.vectorize(Fq)(q3, p3)])

    def phase(self, spec, q3, p3, iters: int = 8):
        """Phase in ``[0, 1)`` of the orbit point nearest to ``(q3, p3)``."""
        q3 = np.atleast_1d(np.asarray(q3, dtype=float))
        p3 = np.atleast_1d(np.asarray(p3, dtype=float))
        if self.is_equilibrium:
            return np.zeros_like(q3)
        grid = self._grid
        d2 = (q3[:, None] - grid[0][None, :]) ** 2 + (p3[:, None] - grid[1][None, :]) ** 2
        th = np.argmin(d2, axis=1) / PHASE_GRID
        for _ in range(iters):
            x = self._sol(np.mod(th, 1.0))
            t = self.velocity(th, spec)
            step = ((q3 - x[0]) * t[0] + (p3 - x[1]) * t[1]) / (t[0] ** 2 + t[1] ** 2)
            th = th + step
            if np.max(np.abs(step)) < 1e-15:
                break
        return np.mod(th, 1.0)


def _section_roots(F, a, lo, hi, n=4001):
    xs = np.linspace(lo, hi, n)
    g = np.array([F(x, 0.0) - a for x in xs])
    roots = []
    for i in range(n - 1):
        if g[i] == 0.0:
            roots.append(xs[i])
        elif g[i] * g[i + 1] < 0:
            roots.append(brentq(lambda x: F(x, 0.0) - a, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15))
    if g[-1] == 0.0:
        roots.append(xs[-1])
    return roots, xs, g


def subsystem_orbit(spec: SystemSpec, a: float, seed: Optional[float] = None,
                    window=(-WINDOW, WINDOW), tol: float = ODE_TOL) -> SubsystemOrbit:
    """Closed orbit of the subsystem at energy ``a``.

    The basepoint is the root of ``F(q3, 0) = a`` closest to ``seed`` (the
    largest root when no seed is given).  The period is the time of first
    return to ``p3 = 0`` with the starting crossing direction.

    Raises
    ------
    NoSectionCrossing
        If ``F(., 0) = a`` has no root in ``window``.
    NoClosedOrbit
        If the orbit does not return within the time cap.
    """
    sub = spec.subsystem
    lo, hi = window
    roots, xs, g = _section_roots(sub.F, a, lo, hi)
    if not roots:
        # touching level: an equilibrium when the gradient vanishes there
        i = int(np.argmin(np.abs(g)))
        x = xs[i]
        if abs(g[i]) < 1e-12 and abs(sub.dFdq3(x, 0.0)) < 1e-10:
            return SubsystemOrbit(float(a), math.inf, 0.0, (float(x), 0.0))
        raise NoSectionCrossing(f"F(q3, 0) = {a} has no root in [{lo}, {hi}]")
    q0 = max(roots) if seed is None else min(roots, key=lambda r: abs(r - seed))
    if sub.dFdq3(q0, 0.0) == 0.0:
        return SubsystemOrbit(float(a), math.inf, 0.0, (float(q0), 0.0))

    rhs = _subsystem_rhs(spec)
    d0 = -math.copysign(1.0, sub.dFdq3(q0, 0.0))  # sign of dp3/dt at the basepoint

    def opposite(t, y):
        return y[1]

    opposite.terminal, opposite.direction = True, -d0

    def same(t, y):
        return y[1]

    same.terminal, same.direction = True, d0

    y0 = np.array([q0, 0.0])
    half = solve_ivp(rhs, (0.0, TIME_CAP), y0, method="DOP853", rtol=tol, atol=tol, events=opposite)
    if half.status != 1:
        raise NoClosedOrbit(f"no return to the section at energy {a} before t={TIME_CAP}")
    t_half = half.t_events[0][0]
    y_half = half.y_events[0][0]
    rest = solve_ivp(rhs, (t_half, t_half + TIME_CAP), y_half, method="DOP853", rtol=tol, atol=tol,
                     events=same)
    if rest.status != 1:
        raise NoClosedOrbit(f"orbit at energy {a} does not close before t={TIME_CAP}")
    T = float(rest.t_events[0][0])

    dense = solve_ivp(_subsystem_rhs(spec, T), (0.0, 1.0), y0, method="DOP853", rtol=tol, atol=tol,
                      dense_output=True).sol
    grid = dense(np.arange(PHASE_GRID) / PHASE_GRID)
    return SubsystemOrbit(float(a), T, 1.0 / T, (float(q0), 0.0), dense, grid)


def classical_action(spec: SystemSpec, orbit: SubsystemOrbit) -> float:
    """``(1/2pi) * oint p3 dq3`` over the orbit (a diagnostic label)."""
    if orbit.is_equilibrium:
        return 0.0

    def integrand(th):
        q3, p3 = orbit.theta_param(th)
        return p3 * orbit.period_T3 * spec.subsystem.dFdp3(q3, p3)

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return abs(val) / (2.0 * math.pi)


# --- the driven linear system ----------------------------------------------

def _b_entries(spec, q3):
    pr = spec.params
    spec.coupling.check_domain(q3)
    return (math.sqrt(pr.k1) * alpha1(spec, q3) / pr.m1,
            math.sqrt(pr.k2) * alpha2(spec, q3) / pr.m2)


def _B(b1, b2):
    return np.array([[0.0, 0.0, b1], [0.0, 0.0, b2], [-b1, -b2, 0.0]])


def u_coords(spec: SystemSpec, s) -> np.ndarray:
    """``u = (sqrt(k1) q1, sqrt(k2) q2, p)``; ``|u|^2/2 + F`` is the energy."""
    s = np.asarray(s, dtype=float)
    pr = spec.params
    return np.stack([math.sqrt(pr.k1) * s[..., 0], math.sqrt(pr.k2) * s[..., 1], s[..., 3]], axis=-1)


def skew_field_B(spec: SystemSpec, orbit: SubsystemOrbit, theta: float) -> np.ndarray:
    """Skew matrix ``B(a, theta)`` generating ``du/dt`` along the orbit."""
    q3 = float(orbit.theta_param(theta)[0])
    return _B(*_b_entries(spec, q3))


def _theta_rhs(spec, orbit):
    T = orbit.period_T3
    Fq, Fp = spec.subsystem.dFdq3, spec.subsystem.dFdp3

    def rhs(th, y):
        q3, p3 = y[0], y[1]
        b1, b2 = _b_entries(spec, q3)
        W = y[2:].reshape(3, 3)
        dW = np.empty((3, 3))
        dW[0] = T * b1 * W[2]
        dW[1] = T * b2 * W[2]
        dW[2] = -T * (b1 * W[0] + b2 * W[1])
        return np.concatenate(([T * Fp(q3, p3), -T * Fq(q3, p3)], dW.ravel()))

    return rhs


def _solve_theta(spec, orbit, theta_end, tol, t_eval=None, dense=False):
    y0 = np.concatenate((orbit.basepoint, np.eye(3).ravel()))
    sol = solve_ivp(_theta_rhs(spec, orbit), (0.0, float(theta_end)), y0, method="DOP853",
                    rtol=tol, atol=tol, t_eval=t_eval, dense_output=dense)
    if sol.status != 0:
        raise NoClosedOrbit(f"monodromy integration failed: {sol.message}")
    return sol


@dataclass(frozen=True)
class FloquetData:
    """Monodromy and its logarithm for one torus label ``a``.

    ``sigma`` is in radians, ``omega`` and ``xi`` in cycles per unit time.
    ``orth_defect`` and ``det_defect`` are measured on the raw integrated
    monodromy before any re-projection.
    """

    a: float
    Phi1: np.ndarray
    Abar: np.ndarray
    sigma: float
    axis: Optional[np.ndarray]
    omega: float
    xi: float
    resonant_flag: bool
    orth_defect: float
    det_defect: float
    frozen: bool = False
    tol: float = ODE_TOL
    _dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def half_turn(self) -> bool:
        return abs(self.sigma - math.pi) < RESONANCE_TOL

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "omega": self.omega,
            "xi": self.xi,
            "sigma": self.sigma,
            "resonant_flag": self.resonant_flag,
            "orth_defect": self.orth_defect,
            "det_defect": self.det_defect,
            "Phi1": self.Phi1.tolist(),
            "Abar": self.Abar.tolist(),
            "axis": None if self.axis is None else self.axis.tolist(),
        }


def _log_data(R):
    try:
        Abar, sigma, axis = so3_log(R, tol=RESONANCE_TOL)
    except HalfTurn:
        Abar, sigma, axis = _halfturn_log(R)
    if sigma < RESONANCE_TOL:
        # below the tolerance the angle is roundoff; report the identity branch
        Abar, sigma, axis = np.zeros((3, 3)), 0.0, None
    resonant = sigma < RESONANCE_TOL or abs(sigma - math.pi) < RESONANCE_TOL
    return Abar, sigma, axis, resonant


def frozen_rotation(spec: SystemSpec, orbit: SubsystemOrbit) -> FloquetData:
    """Equilibrium branch: ``q3`` is frozen and ``B`` is constant.

    The data describe one unit of real time: ``Phi1 = expm(B)`` and
    ``Abar = B`` itself, so ``xi = |vee(B)| / 2pi`` holds without the
    principal-branch restriction.
    """
    B = _B(*_b_entries(spec, orbit.basepoint[0]))
    Phi1 = expm(B)
    rate = float(np.linalg.norm(vee(B)))
    sigma = _rotation_angle(Phi1)
    axis = vee(B) / rate if rate > 0 else None
    return FloquetData(
        orbit.a, Phi1, B, sigma, axis, 0.0, rate / (2.0 * math.pi), rate < RESONANCE_TOL,
        float(np.max(np.abs(Phi1.T @ Phi1 - np.eye(3)))), abs(float(np.linalg.det(Phi1)) - 1.0),
        frozen=True,
    )


def monodromy(spec: SystemSpec, orbit: SubsystemOrbit, tol: float = ODE_TOL) -> FloquetData:
    """Integrate ``W' = A(theta) W`` over one period and take its logarithm.

    The subsystem is co-integrated so ``q3(theta)`` carries no interpolation
    error.  Half turns are reported through ``resonant_flag`` instead of
    raising; :func:`so3_log` is the strict entry point.

    Raises
    ------
    OmegaZero
        For an equilibrium orbit; use :func:`frozen_rotation`.
    """
    if orbit.is_equilibrium:
        raise OmegaZero(f"subsystem at energy {orbit.a} is an equilibrium (omega = 0)")
    sol = _solve_theta(spec, orbit, 1.0, tol, dense=True)
    Phi1 = sol.y[2:, -1].reshape(3, 3)
    orth = float(np.max(np.abs(Phi1.T @ Phi1 - np.eye(3))))
    det = abs(float(np.linalg.det(Phi1)) - 1.0)
    # re-project onto SO(3) for the logarithm only
    U, _, Vt = np.linalg.svd(Phi1)
    Abar, sigma, axis, resonant = _log_data(U @ Vt)
    xi = orbit.omega * sigma / (2.0 * math.pi)
    return FloquetData(orbit.a, Phi1, Abar, sigma, axis, orbit.omega, xi, resonant, orth, det,
                       tol=tol, _dense=sol.sol)


def flow_Phi(spec: SystemSpec, orbit: SubsystemOrbit, theta, tol: float = ODE_TOL,
             fd: Optional[FloquetData] = None) -> np.ndarray:
    """Solution operator ``Phi(theta)`` of ``u' = A u`` with ``Phi(0) = I``.

    Any real ``theta`` is accepted and integrated directly.  When ``fd`` is
    given and ``theta`` lies in ``[0, 1]`` its dense output is used instead.
    """
    theta = float(theta)
    if theta == 0.0:
        return np.eye(3)
    if fd is not None and fd._dense is not None and 0.0 <= theta <= 1.0:
        return fd._dense(theta)[2:].reshape(3, 3)
    sol = _solve_theta(spec, orbit, theta, tol)
    return sol.y[2:, -1].reshape(3, 3)


def _phi_stack(fd, theta):
    th = np.atleast_1d(theta)
    return np.moveaxis(fd._dense(th)[2:].reshape(3, 3, th.size), -1, 0)


def psi_transform(spec: SystemSpec, orbit: SubsystemOrbit, fd: FloquetData, u, theta):
    """``v = expm(Abar theta) Phi(theta)^-1 u`` for ``theta`` taken mod 1.

    Vectorized over leading axes of ``u`` when ``theta`` is an array of the
    same length.
    """
    if fd.half_turn:
        raise HalfTurn("the transform is not reversible at a half turn")
    th = np.mod(np.asarray(theta, dtype=float), 1.0)
    u = np.asarray(u, dtype=float)
    if th.ndim == 0:
        w = np.linalg.solve(_phi_stack(fd, th)[0], u)
        return so3_exp(fd.Abar, th) @ w
    Phi = _phi_stack(fd, th)
    w = np.linalg.solve(Phi, u[..., None])
    return (so3_exp(fd.Abar, th) @ w)[..., 0]


@dataclass
class ReversibilityReport:
    field_defect: float
    phi_defect: float
    abar_defect: float
    psi_defect: float

    def passed(self, tol: float = 1e-8) -> bool:
        return max(self.field_defect, self.phi_defect, self.abar_defect, self.psi_defect) <= tol

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_reversibility(spec: SystemSpec, orbit: SubsystemOrbit, fd: FloquetData,
                        tol: float = ODE_TOL, n_grid: int = 10, seed: int = 0) -> ReversibilityReport:
    """Measure the reversibility identities of the Floquet construction.

    * ``rho A(theta) rho + A(-theta)`` on a phase grid (the hypothesis),
    * ``rho Phi(-tau) - Phi(tau) rho`` with ``Phi(-tau)`` integrated backwards,
    * ``rho Abar rho + Abar``,
    * ``Psi(rho u, -theta) - rho Psi(u, theta)`` at random ``(u, theta)``.

    Raises
    ------
    HalfTurn
        If the monodromy is a half turn.
    """
    if fd.half_turn:
        raise HalfTurn(f"torus a={fd.a} has rotation angle pi")
    taus = np.linspace(0.0, 1.0, n_grid + 1)[1:]
    T = orbit.period_T3
    field_def = max(
        float(np.max(np.abs(RHO @ skew_field_B(spec, orbit, t) @ RHO + skew_field_B(spec, orbit, -t)))) * T
        for t in taus
    )
    back = _solve_theta(spec, orbit, -1.0, tol, t_eval=-taus)
    fwd = _solve_theta(spec, orbit, 1.0, tol, t_eval=taus)
    phi_def = 0.0
    for j in range(taus.size):
        Pm = back.y[2:, j].reshape(3, 3)
        Pp = fwd.y[2:, j].reshape(3, 3)
        phi_def = max(phi_def, float(np.max(np.abs(RHO @ Pm - Pp @ RHO))))
    abar_def = float(np.max(np.abs(RHO @ fd.Abar @ RHO + fd.Abar)))
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(n_grid, 3))
    th = rng.uniform(0.0, 1.0, size=n_grid)
    lhs = psi_transform(spec, orbit, fd, u @ RHO, -th)
    rhs = psi_transform(spec, orbit, fd, u, th) @ RHO
    psi_def = float(np.max(np.abs(lhs - rhs)))
    return ReversibilityReport(field_def, phi_def, abar_def, psi_def)


def frequencies(spec: SystemSpec, orbit: SubsystemOrbit, fd: FloquetData):
    """``(omega, xi)`` in cycles per unit time; ``xi = omega sigma / 2pi``.

    A torus with ``sigma = 0`` returns ``xi = 0`` (the resonant branch).
    """
    if fd.half_turn:
        raise HalfTurn(f"torus a={fd.a} has rotation angle pi")
    return fd.omega, fd.xi


def _plane(axis):
    e1 = np.cross([0.0, 0.0, 1.0], axis)
    n1 = np.linalg.norm(e1)
    if n1 < 1e-12:
        # axis along e3, which only happens for non-reversible data
        e1 = np.array([1.0, 0.0, 0.0])
    else:
        e1 /= n1
    return e1, np.cross(axis, e1)


def action_angle_batch(spec: SystemSpec, orbit: SubsystemOrbit, fd: FloquetData, states) -> np.ndarray:
    """Rows ``(a, b, c, theta, phi)`` for an array of reduced states.

    Raises
    ------
    HalfTurn
        At a half-turn torus.
    DegenerateRotation
        When ``sigma`` is below the resonance tolerance and the rotation
        plane is undefined.
    """
    if fd.half_turn:
        raise HalfTurn(f"torus a={fd.a} has rotation angle pi")
    if fd.axis is None or fd.sigma < RESONANCE_TOL:
        raise DegenerateRotation(f"torus a={fd.a} has sigma={fd.sigma!r}; report v directly")
    S = np.atleast_2d(np.asarray(states, dtype=float))
    F = spec.subsystem.F
    a = np.array([F(q3, p3) for q3, p3 in zip(S[:, 2], S[:, 4])])
    th = orbit.phase(spec, S[:, 2], S[:, 4])
    v = psi_transform(spec, orbit, fd, u_coords(spec, S), th)
    n = fd.axis
    e1, e2 = _plane(n)
    c = v @ n
    perp = v - c[:, None] * n
    b = np.linalg.norm(perp, axis=1)
    phi = np.arctan2(perp @ e2, perp @ e1) / (2.0 * math.pi)
    small = b <= 1e-12 * np.maximum(1.0, np.linalg.norm(v, axis=1))
    phi = np.where(small, 0.0, np.mod(phi, 1.0))
    return np.column_stack([a, b, c, th, phi])


def action_angle_coords(spec: SystemSpec, orbit: SubsystemOrbit, fd: FloquetData, s) -> tuple:
    """Action-angle coordinates ``(a, b, c, theta, phi)`` of one reduced state.

    ``a`` is the subsystem energy, ``theta`` the orbit phase, ``c`` the
    component of ``v`` along the rotation axis, ``b`` the distance from it
    and ``phi`` the angle around it.  Angles are in ``[0, 1)``.
    """
    return tuple(float(x) for x in action_angle_batch(spec, orbit, fd, s)[0])
