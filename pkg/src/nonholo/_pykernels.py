"""Pure-Python time-stepping kernels.

These are the reference implementations of the fixed-step loops; the
compiled module ``_ckernels`` mirrors them operation for operation so that
trajectories agree to roundoff.  They work with any callable field.
"""

import numpy as np

from .errors import NonConvergence

RK4, MIDPOINT = 0, 1
STALL_RATIO = 0.5
JAC_STEP = 1e-7
FLOOR_TOL = 1e-10


def rk4_step(f, s, h):
    k1 = f(s)
    k2 = f(s + 0.5 * h * k1)
    k3 = f(s + 0.5 * h * k2)
    k4 = f(s + h * k3)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _midpoint_newton(f, s, Z, h, tol, scale, budget):
    # Newton on g(Z) = Z - h f(s + Z/2) with a central-difference Jacobian
    n = s.size
    for it in range(budget):
        mid = s + 0.5 * Z
        fm = f(mid)
        jac = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            dx = JAC_STEP * max(1.0, abs(mid[j]))
            e[j] = dx
            jac[:, j] = (f(mid + e) - f(mid - e)) / (2.0 * dx)
        delta = np.linalg.solve(np.eye(n) - 0.5 * h * jac, Z - h * fm)
        Z = Z - delta
        if np.max(np.abs(delta)) <= tol * scale:
            # one extra sweep brings the quadratically converging iterate to roundoff
            return h * f(s + 0.5 * Z)
    raise NonConvergence("implicit midpoint Newton fallback did not converge")


def midpoint_increment(f, s, h, tol, max_iters):
    """Increment ``Z`` of the implicit midpoint rule, ``Z = h f(s + Z/2)``.

    Fixed-point iteration from an explicit Euler predictor, stopped once the
    update falls below ``tol * max(1, |s|_inf)``.  A tight ``tol`` (at most
    ``FLOOR_TOL``) is read as "converge fully": the iteration then continues
    until the update is zero or stops shrinking, so the accepted increment
    sits at the roundoff floor and carries no iteration bias.  Iterating on the small increment rather than on the new
    state keeps that floor low.  If the contraction is slow the iteration
    switches to Newton with a difference Jacobian.
    """
    scale = max(1.0, float(np.max(np.abs(s))))
    Z = h * f(s)
    d_prev = np.inf
    converged = False
    for it in range(max_iters):
        Zn = h * f(s + 0.5 * Z)
        d = float(np.max(np.abs(Zn - Z)))
        Z = Zn
        if converged and (d == 0.0 or d >= d_prev):
            return Z
        if d <= tol * scale:
            converged = True
            if d == 0.0 or tol > FLOOR_TOL:
                return Z
        elif it >= 2 and d > STALL_RATIO * d_prev:
            return _midpoint_newton(f, s, Z, h, tol, scale, max_iters - it)
        d_prev = d
    if converged:
        return Z
    raise NonConvergence(f"implicit midpoint did not converge in {max_iters} iterations")


def compensated_add(s, e, Z):
    """``s + Z`` with Kahan compensation; returns the new state and error."""
    a = Z + e
    sn = s + a
    return sn, (s - sn) + a


def midpoint_step(f, s, h, tol, max_iters):
    """One implicit midpoint step ``y = s + h f((s + y)/2)``."""
    return s + midpoint_increment(f, s, h, tol, max_iters)


def integrate_fixed(f, s0, h, n_steps, every, method, tol=1e-12, max_iters=50):
    """Take ``n_steps`` steps of size ``h``; return every ``every``-th state."""
    s = np.array(s0, dtype=float)
    n_out = n_steps // every + 1
    out = np.empty((n_out, s.size))
    out[0] = s
    e = np.zeros_like(s)
    k = 1
    for i in range(1, n_steps + 1):
        if method == RK4:
            s = rk4_step(f, s, h)
        else:
            s, e = compensated_add(s, e, midpoint_increment(f, s, h, tol, max_iters))
        if i % every == 0:
            out[k] = s
            k += 1
    return out
