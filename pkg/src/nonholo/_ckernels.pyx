# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled right-hand sides and fixed-step loops for catalogue systems.

Mirrors ``reduction.reduced_field``, ``reduction.induced_field`` and the
loops of ``_pykernels`` for systems whose coupling is a polynomial or the CVT
ratio, whose driver is ``p3**2/2 + V(q3)`` with polynomial ``V`` and whose
perturbation is a sum of monomials.  Status codes: 0 ok, 1 domain
violation, 2 implicit solve did not converge, 3 fibre solve failed,
4 non-finite state.
"""

import numpy as np

from libc.math cimport sqrt, fabs, acos, cos, isfinite

cdef enum:
    DIM = 5
    MAXC = 16
    MAXT = 16
    FIBRE_MAX_ITERS = 50

cdef double STALL_RATIO = 0.5
cdef double JAC_STEP = 1e-7
cdef double FIBRE_TOL = 1e-12
cdef double FLOOR_TOL = 1e-10
cdef double COND_MAX = 1e8
cdef double PI = 3.141592653589793

ctypedef struct csys:
    double m1
    double m2
    double k1
    double k2
    double eps
    int fkind
    int nf
    int nfd
    int nvd
    int ng
    double fc[MAXC]
    double fdc[MAXC]
    double vdc[MAXC]
    double gc[MAXT]
    int ge[MAXT][6]


cdef inline double horner(const double* c, int n, double x) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n - 1, -1, -1):
        acc = acc * x + c[i]
    return acc


cdef int coupling(const csys* S, double q3, double* f, double* df) noexcept nogil:
    cdef double d
    if S.fkind == 1:
        if not q3 < 1.0:
            return 1
        d = 1.0 - q3
        f[0] = q3 / d
        df[0] = 1.0 / (d * d)
        return 0
    f[0] = horner(S.fc, S.nf, q3)
    df[0] = horner(S.fdc, S.nfd, q3)
    return 0


cdef inline double ipow(double x, int e) noexcept nogil:
    cdef double r = 1.0
    cdef int i
    for i in range(e):
        r *= x
    return r


cdef double mono(const int* e, const double* x, int di, int dj) noexcept nogil:
    """prod_l x_l**(e_l - [l == di] - [l == dj]); zero if an exponent goes negative."""
    cdef double r = 1.0
    cdef int l, el
    for l in range(6):
        el = e[l]
        if l == di:
            el -= 1
        if l == dj:
            el -= 1
        if el < 0:
            return 0.0
        r *= ipow(x[l], el)
    return r


cdef void gderivs(const csys* S, const double* x, double* grad, double* hess) noexcept nogil:
    cdef int k, i, j
    cdef const int* e
    cdef double c
    for i in range(6):
        grad[i] = 0.0
        for j in range(6):
            hess[6 * i + j] = 0.0
    for k in range(S.ng):
        e = S.ge[k]
        c = S.gc[k]
        for i in range(6):
            if e[i] == 0:
                continue
            grad[i] += c * e[i] * mono(e, x, i, -1)
            for j in range(6):
                if i == j:
                    if e[i] >= 2:
                        hess[6 * i + i] += c * e[i] * (e[i] - 1) * mono(e, x, i, i)
                elif e[j] > 0:
                    hess[6 * i + j] += c * e[i] * e[j] * mono(e, x, i, j)


cdef int reduced_rhs(const csys* S, const double* s, double* out) noexcept nogil:
    cdef double fv, dfv, a1, a2
    cdef double r = S.m2 / S.m1
    if coupling(S, s[2], &fv, &dfv):
        return 1
    a1 = sqrt(S.m1 / (1.0 + r * fv * fv))
    a2 = (-r) * fv * a1
    out[0] = a1 * s[3] / S.m1
    out[1] = a2 * s[3] / S.m2
    out[2] = s[4]
    out[3] = -(S.k1 / S.m1) * a1 * s[0] - (S.k2 / S.m2) * a2 * s[1]
    out[4] = -horner(S.vdc, S.nvd, s[2])
    return 0


cdef void hderivs(const csys* S, const double* q, const double* p,
                  double* Hq, double* Hp, double* Hpp, double* Hpq) noexcept nogil:
    cdef double x[6]
    cdef double g[6]
    cdef double hess[36]
    cdef int i, j
    Hq[0] = S.k1 * q[0]
    Hq[1] = S.k2 * q[1]
    Hq[2] = horner(S.vdc, S.nvd, q[2])
    Hp[0] = p[0] / S.m1
    Hp[1] = p[1] / S.m2
    Hp[2] = p[2]
    for i in range(9):
        Hpp[i] = 0.0
        Hpq[i] = 0.0
    Hpp[0] = 1.0 / S.m1
    Hpp[4] = 1.0 / S.m2
    Hpp[8] = 1.0
    if S.ng == 0 or S.eps == 0.0:
        return
    for i in range(3):
        x[i] = q[i]
        x[3 + i] = p[i]
    gderivs(S, x, g, hess)
    for i in range(3):
        Hq[i] += S.eps * g[i]
        Hp[i] += S.eps * g[3 + i]
        for j in range(3):
            Hpp[3 * i + j] += S.eps * hess[6 * (3 + i) + 3 + j]
            Hpq[3 * i + j] += S.eps * hess[6 * (3 + i) + j]


cdef int solve_n(double* A, double* b, int n) noexcept nogil:
    """Gaussian elimination with partial pivoting, in place; solution in b."""
    cdef int i, j, k, piv
    cdef double t, m
    for k in range(n):
        piv = k
        for i in range(k + 1, n):
            if fabs(A[n * i + k]) > fabs(A[n * piv + k]):
                piv = i
        if A[n * piv + k] == 0.0:
            return 1
        if piv != k:
            for j in range(n):
                t = A[n * k + j]
                A[n * k + j] = A[n * piv + j]
                A[n * piv + j] = t
            t = b[k]
            b[k] = b[piv]
            b[piv] = t
        for i in range(k + 1, n):
            m = A[n * i + k] / A[n * k + k]
            for j in range(k, n):
                A[n * i + j] -= m * A[n * k + j]
            b[i] -= m * b[k]
    for i in range(n - 1, -1, -1):
        t = b[i]
        for j in range(i + 1, n):
            t -= A[n * i + j] * b[j]
        b[i] = t / A[n * i + i]
    return 0


cdef double sym3_cond(const double* A) noexcept nogil:
    """2-norm condition number of a symmetric 3x3 matrix (closed-form eigenvalues)."""
    cdef double p1 = A[1] * A[1] + A[2] * A[2] + A[5] * A[5]
    cdef double q, p2, p, r, phi, e1, e2, e3, lo, hi
    cdef double B[9]
    cdef int i
    if p1 == 0.0:
        e1 = fabs(A[0])
        e2 = fabs(A[4])
        e3 = fabs(A[8])
    else:
        q = (A[0] + A[4] + A[8]) / 3.0
        p2 = (A[0] - q) ** 2 + (A[4] - q) ** 2 + (A[8] - q) ** 2 + 2.0 * p1
        p = sqrt(p2 / 6.0)
        for i in range(9):
            B[i] = A[i] / p
        B[0] -= q / p
        B[4] -= q / p
        B[8] -= q / p
        r = (B[0] * (B[4] * B[8] - B[5] * B[7])
             - B[1] * (B[3] * B[8] - B[5] * B[6])
             + B[2] * (B[3] * B[7] - B[4] * B[6])) / 2.0
        if r <= -1.0:
            phi = PI / 3.0
        elif r >= 1.0:
            phi = 0.0
        else:
            phi = acos(r) / 3.0
        e1 = q + 2.0 * p * cos(phi)
        e3 = q + 2.0 * p * cos(phi + 2.0 * PI / 3.0)
        e2 = 3.0 * q - e1 - e3
        e1 = fabs(e1)
        e2 = fabs(e2)
        e3 = fabs(e3)
    hi = e1 if e1 > e2 else e2
    hi = hi if hi > e3 else e3
    lo = e1 if e1 < e2 else e2
    lo = lo if lo < e3 else e3
    if lo == 0.0:
        return 1e300
    return hi / lo


cdef int fibre_solve(const csys* S, const double* q, const double* v, double* P) noexcept nogil:
    cdef double Hq[3]
    cdef double Hp[3]
    cdef double Hpp[9]
    cdef double Hpq[9]
    cdef double A[9]
    cdef double dP[3]
    cdef double r[3]
    cdef double trial[3]
    cdef double r_t[3]
    cdef double rnorm, rtn, lam, dmax, pmax
    cdef int it, ls, i, ok
    P[0] = S.m1 * v[0]
    P[1] = S.m2 * v[1]
    P[2] = v[2]
    if S.ng == 0 or S.eps == 0.0:
        return 0
    hderivs(S, q, P, Hq, Hp, Hpp, Hpq)
    for i in range(3):
        r[i] = Hp[i] - v[i]
    for it in range(FIBRE_MAX_ITERS):
        for i in range(9):
            if not isfinite(Hpp[i]):
                return 3
        if sym3_cond(Hpp) > COND_MAX:
            return 3
        for i in range(9):
            A[i] = Hpp[i]
        for i in range(3):
            dP[i] = r[i]
        if solve_n(A, dP, 3):
            return 3
        dmax = 0.0
        pmax = 1.0
        for i in range(3):
            dmax = fabs(dP[i]) if fabs(dP[i]) > dmax else dmax
            pmax = fabs(P[i]) if fabs(P[i]) > pmax else pmax
        if dmax <= FIBRE_TOL * pmax:
            for i in range(3):
                P[i] -= dP[i]
            return 0
        rnorm = 0.0
        for i in range(3):
            rnorm = fabs(r[i]) if fabs(r[i]) > rnorm else rnorm
        lam = 1.0
        ok = 0
        for ls in range(30):
            for i in range(3):
                trial[i] = P[i] - lam * dP[i]
            hderivs(S, q, trial, Hq, Hp, Hpp, Hpq)
            rtn = 0.0
            for i in range(3):
                r_t[i] = Hp[i] - v[i]
                rtn = fabs(r_t[i]) if fabs(r_t[i]) > rtn else rtn
            if rtn < rnorm or rnorm == 0.0:
                ok = 1
                break
            lam *= 0.5
        if not ok:
            return 3
        dmax = 0.0
        pmax = 1.0
        for i in range(3):
            P[i] = trial[i]
            r[i] = r_t[i]
            dmax = fabs(dP[i]) if fabs(dP[i]) > dmax else dmax
            pmax = fabs(P[i]) if fabs(P[i]) > pmax else pmax
        if lam * dmax <= FIBRE_TOL * pmax:
            return 0
    return 3


cdef int induced_rhs(const csys* S, const double* s, double* out) noexcept nogil:
    cdef double fv, dfv, a1, a2, lam, num, den
    cdef double r = S.m2 / S.m1
    cdef double q[3]
    cdef double v[3]
    cdef double P[3]
    cdef double Hq[3]
    cdef double Hp[3]
    cdef double Hpp[9]
    cdef double Hpq[9]
    cdef double tau[3]
    cdef double Pdot[3]
    cdef double vdot[3]
    cdef double t1[3]
    cdef int i, j, st
    if coupling(S, s[2], &fv, &dfv):
        return 1
    a1 = sqrt(S.m1 / (1.0 + r * fv * fv))
    a2 = (-r) * fv * a1
    q[0] = s[0]
    q[1] = s[1]
    q[2] = s[2]
    v[0] = a1 * s[3] / S.m1
    v[1] = a2 * s[3] / S.m2
    v[2] = s[4]
    st = fibre_solve(S, q, v, P)
    if st:
        return st
    hderivs(S, q, P, Hq, Hp, Hpp, Hpq)
    tau[0] = fv
    tau[1] = 1.0
    tau[2] = 0.0
    # tau.Hpp.Hq - f' Hp2 Hp0 - tau.Hpq.Hp over tau.Hpp.tau
    num = 0.0
    den = 0.0
    for i in range(3):
        t1[i] = 0.0
        for j in range(3):
            t1[i] += tau[j] * Hpp[3 * j + i]
    for i in range(3):
        num += t1[i] * Hq[i]
        den += t1[i] * tau[i]
    num -= dfv * Hp[2] * Hp[0]
    for i in range(3):
        for j in range(3):
            num -= tau[i] * Hpq[3 * i + j] * Hp[j]
    lam = num / den
    for i in range(3):
        Pdot[i] = -Hq[i] + lam * tau[i]
    for i in range(3):
        vdot[i] = 0.0
        for j in range(3):
            vdot[i] += Hpq[3 * i + j] * Hp[j]
        for j in range(3):
            vdot[i] += Hpp[3 * i + j] * Pdot[j]
    out[0] = Hp[0]
    out[1] = Hp[1]
    out[2] = Hp[2]
    out[3] = a1 * vdot[0] + a2 * vdot[1]
    out[4] = vdot[2]
    return 0


cdef inline int rhs(const csys* S, const double* s, double* out) noexcept nogil:
    if S.ng == 0 or S.eps == 0.0:
        return reduced_rhs(S, s, out)
    return induced_rhs(S, s, out)


cdef int rk4_step(const csys* S, double* s, double h) noexcept nogil:
    cdef double k1[DIM]
    cdef double k2[DIM]
    cdef double k3[DIM]
    cdef double k4[DIM]
    cdef double t[DIM]
    cdef int i, st
    st = rhs(S, s, k1)
    if st:
        return st
    for i in range(DIM):
        t[i] = s[i] + 0.5 * h * k1[i]
    st = rhs(S, t, k2)
    if st:
        return st
    for i in range(DIM):
        t[i] = s[i] + 0.5 * h * k2[i]
    st = rhs(S, t, k3)
    if st:
        return st
    for i in range(DIM):
        t[i] = s[i] + h * k3[i]
    st = rhs(S, t, k4)
    if st:
        return st
    for i in range(DIM):
        s[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return 0


cdef int midpoint_newton(const csys* S, const double* s, double* Z, double h, double tol,
                         double scale, int budget) noexcept nogil:
    # Newton on g(Z) = Z - h f(s + Z/2) with a central-difference Jacobian
    cdef double mid[DIM]
    cdef double fm[DIM]
    cdef double fp[DIM]
    cdef double fn[DIM]
    cdef double t[DIM]
    cdef double J[DIM * DIM]
    cdef double g[DIM]
    cdef double dx, dmax
    cdef int it, i, j, st
    for it in range(budget):
        for i in range(DIM):
            mid[i] = s[i] + 0.5 * Z[i]
        st = rhs(S, mid, fm)
        if st:
            return st
        for j in range(DIM):
            dx = JAC_STEP * (fabs(mid[j]) if fabs(mid[j]) > 1.0 else 1.0)
            for i in range(DIM):
                t[i] = mid[i]
            t[j] = mid[j] + dx
            st = rhs(S, t, fp)
            if st:
                return st
            t[j] = mid[j] - dx
            st = rhs(S, t, fn)
            if st:
                return st
            for i in range(DIM):
                J[DIM * i + j] = -0.5 * h * ((fp[i] - fn[i]) / (2.0 * dx))
        for i in range(DIM):
            J[DIM * i + i] += 1.0
            g[i] = Z[i] - h * fm[i]
        if solve_n(J, g, DIM):
            return 2
        dmax = 0.0
        for i in range(DIM):
            Z[i] = Z[i] - g[i]
            dmax = fabs(g[i]) if fabs(g[i]) > dmax else dmax
        if dmax <= tol * scale:
            for i in range(DIM):
                mid[i] = s[i] + 0.5 * Z[i]
            st = rhs(S, mid, fm)
            if st:
                return st
            for i in range(DIM):
                Z[i] = h * fm[i]
            return 0
    return 2


cdef int midpoint_increment(const csys* S, const double* s, double* Z, double h, double tol,
                            int max_iters) noexcept nogil:
    # Fixed-point iteration Z <- h f(s + Z/2) on the increment.  With a tight
    # tol (<= FLOOR_TOL) it continues past tol to the roundoff floor (update
    # zero or no longer shrinking) so the accepted increment carries no
    # iteration bias; a looser tol is honoured as given.
    cdef double m[DIM]
    cdef double k[DIM]
    cdef double scale = 1.0
    cdef double d, zn, d_prev = 1e308
    cdef int it, i, st
    cdef bint converged = False
    for i in range(DIM):
        if fabs(s[i]) > scale:
            scale = fabs(s[i])
    st = rhs(S, s, k)
    if st:
        return st
    for i in range(DIM):
        Z[i] = h * k[i]
    for it in range(max_iters):
        for i in range(DIM):
            m[i] = s[i] + 0.5 * Z[i]
        st = rhs(S, m, k)
        if st:
            return st
        d = 0.0
        for i in range(DIM):
            zn = h * k[i]
            if fabs(zn - Z[i]) > d:
                d = fabs(zn - Z[i])
            Z[i] = zn
        if converged and (d == 0.0 or d >= d_prev):
            return 0
        if d <= tol * scale:
            converged = True
            if d == 0.0 or tol > FLOOR_TOL:
                return 0
        elif it >= 2 and d > STALL_RATIO * d_prev:
            return midpoint_newton(S, s, Z, h, tol, scale, max_iters - it)
        d_prev = d
    return 0 if converged else 2


cdef int midpoint_step(const csys* S, double* s, double* e, double h, double tol,
                       int max_iters) noexcept nogil:
    # compensated update s <- s + Z; e carries the rounding error across steps
    cdef double Z[DIM]
    cdef double a, sn
    cdef int i
    cdef int st = midpoint_increment(S, s, Z, h, tol, max_iters)
    if st:
        return st
    for i in range(DIM):
        a = Z[i] + e[i]
        sn = s[i] + a
        e[i] = (s[i] - sn) + a
        s[i] = sn
    return 0


cdef class KernelSystem:
    """Compiled description of a catalogue system (see ``kernels.encode``)."""

    cdef csys S
    cdef public dict encoding

    def __init__(self, double m1, double m2, double k1, double k2, double eps, int fkind,
                 fcoef, vcoef, gcoef, gexp):
        fcoef = np.asarray(fcoef, dtype=float)
        vcoef = np.asarray(vcoef, dtype=float)
        gcoef = np.asarray(gcoef, dtype=float)
        gexp = np.asarray(gexp, dtype=np.int32).reshape(-1, 6)
        if fcoef.size > MAXC or vcoef.size > MAXC or gcoef.size > MAXT:
            raise ValueError("system exceeds compiled kernel size limits")
        self.encoding = dict(m1=m1, m2=m2, k1=k1, k2=k2, eps=eps, fkind=fkind,
                             fcoef=fcoef, vcoef=vcoef, gcoef=gcoef, gexp=gexp)
        self.S.m1 = m1
        self.S.m2 = m2
        self.S.k1 = k1
        self.S.k2 = k2
        self.S.eps = eps
        self.S.fkind = fkind
        self.S.nf = fcoef.size
        for i in range(fcoef.size):
            self.S.fc[i] = fcoef[i]
        # derivative coefficients built exactly as catalogue._derivative does
        self.S.nfd = max(fcoef.size - 1, 1)
        self.S.fdc[0] = 0.0
        for i in range(1, fcoef.size):
            self.S.fdc[i - 1] = i * fcoef[i]
        self.S.nvd = max(vcoef.size - 1, 1)
        self.S.vdc[0] = 0.0
        for i in range(1, vcoef.size):
            self.S.vdc[i - 1] = i * vcoef[i]
        self.S.ng = gcoef.size
        for k in range(gcoef.size):
            self.S.gc[k] = gcoef[k]
            for j in range(6):
                self.S.ge[k][j] = gexp[k, j]

    def __reduce__(self):
        return (_rebuild, (self.encoding,))

    def rhs(self, double[::1] s):
        """Field value at ``s``; returns ``(array, status)``."""
        if s.shape[0] != DIM:
            raise ValueError("state must have 5 components")
        out = np.empty(DIM)
        cdef double[::1] o = out
        cdef int st
        with nogil:
            st = rhs(&self.S, &s[0], &o[0])
        return out, st

    def fibre(self, double[::1] q, double[::1] v):
        """Perturbed momenta for positions ``q`` and velocity ``v``."""
        out = np.empty(3)
        cdef double[::1] o = out
        cdef int st
        with nogil:
            st = fibre_solve(&self.S, &q[0], &v[0], &o[0])
        return out, st


def _rebuild(enc):
    return KernelSystem(**enc)


def integrate_fixed(KernelSystem ks, double[::1] s0, double h, long n_steps, long every,
                    int method, double tol, int max_iters):
    """Fixed-step loop; returns ``(samples, status, failing_step)``."""
    if s0.shape[0] != DIM:
        raise ValueError("state must have 5 components")
    cdef long n_out = n_steps // every + 1
    out = np.empty((n_out, DIM))
    cdef double[:, ::1] o = out
    cdef double s[DIM]
    cdef double e[DIM]
    cdef long i, k = 1
    cdef int j, st = 0
    for j in range(DIM):
        s[j] = s0[j]
        e[j] = 0.0
        o[0, j] = s[j]
    with nogil:
        for i in range(1, n_steps + 1):
            if method == 0:
                st = rk4_step(&ks.S, s, h)
            else:
                st = midpoint_step(&ks.S, s, e, h, tol, max_iters)
            if st == 0:
                for j in range(DIM):
                    if not isfinite(s[j]):
                        st = 4
            if st:
                break
            if i % every == 0:
                for j in range(DIM):
                    o[k, j] = s[j]
                k += 1
    if st:
        return out[:k], st, i
    return out, 0, n_steps
