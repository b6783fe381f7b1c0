"""Backend selection for the hot loops.

The compiled extension ``nonholo._ckernels`` is used when it imports and
the field was built from catalogue parts; otherwise the pure-Python loops in
:mod:`nonholo._pykernels` run on the field's Python ``eval``.  Setting
``NONHOLO_PURE_PYTHON=1`` before import forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels
from .errors import DomainViolation, FibreSolveFailure, NonConvergence, NonholoError

RK4 = _pykernels.RK4
MIDPOINT = _pykernels.MIDPOINT

_ck = None
if not os.environ.get("NONHOLO_PURE_PYTHON"):
    try:
        from . import _ckernels as _ck
    except ImportError:  # extension not built
        _ck = None

HAVE_COMPILED = _ck is not None
BACKEND = "compiled" if HAVE_COMPILED else "python"

_STATUS = {
    1: DomainViolation,
    2: NonConvergence,
    3: FibreSolveFailure,
    4: NonholoError,
}


def encode(spec):
    """Flat kernel description of a catalogue spec, or ``None``.

    Pure data, so it can be produced and compared without the extension.
    """
    c, sub, pert = spec.coupling.code, spec.subsystem.code, None
    if c is None or sub is None or sub[0] != "poly":
        return None
    if spec.perturbed:
        pert = spec.perturbation.code
        if pert is None or pert[0] != "monomials":
            return None
    pr = spec.params
    fkind = {"poly": 0, "cvt": 1}.get(c[0])
    if fkind is None:
        return None
    terms = pert[1] if pert is not None else ()
    return dict(
        m1=pr.m1,
        m2=pr.m2,
        k1=pr.k1,
        k2=pr.k2,
        eps=float(spec.epsilon) if pert is not None else 0.0,
        fkind=fkind,
        fcoef=np.array(c[1] if fkind == 0 else (), dtype=float),
        vcoef=np.array(sub[1], dtype=float),
        gcoef=np.array([t[0] for t in terms], dtype=float),
        gexp=np.array([t[1] for t in terms], dtype=np.int32).reshape(len(terms), 6),
    )


def system_for(spec):
    """Compiled system object for ``spec`` (``None`` if unavailable)."""
    if not HAVE_COMPILED:
        return None
    enc = encode(spec)
    if enc is None:
        return None
    try:
        return _ck.KernelSystem(**enc)
    except ValueError:  # e.g. polynomial degree beyond the kernel limit
        return None


def raise_status(status: int, where: str):
    if status:
        raise _STATUS.get(status, NonholoError)(f"compiled kernel failed in {where} (status {status})")


def rhs_callable(field, compiled: bool = True):
    """``f(s)`` for the field, compiled when possible."""
    ks = field.kernel if compiled else None
    if ks is None:
        return field.eval

    def f(s):
        out, status = ks.rhs(np.asarray(s, dtype=float))
        raise_status(status, field.label)
        return out

    return f


def integrate_fixed(field, s0, h, n_steps, every, method, tol=1e-12, max_iters=50, compiled=True):
    """Fixed-step loop on ``field``; returns the sampled states."""
    s0 = np.ascontiguousarray(s0, dtype=float)
    if compiled and field.kernel is not None:
        out, status, at = _ck.integrate_fixed(
            field.kernel, s0, float(h), int(n_steps), int(every), int(method), float(tol), int(max_iters)
        )
        raise_status(status, f"{field.label} at step {at}")
        return out
    return _pykernels.integrate_fixed(field.eval, s0, h, n_steps, every, method, tol, max_iters)
