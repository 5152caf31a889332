# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the nonlocal functionals.

Every routine loops over base points x in parallel and over kernel nodes h
sequentially, so each per-x sum is accumulated in a fixed order and the
result does not depend on the thread count.
"""
import numpy as np
from cython.parallel cimport prange
from libc.math cimport exp, fabs, pow, sqrt, log

cdef enum:
    MAXDIM = 32

cdef double E = 2.718281828459045


cdef inline void _mul(const double* x, const double* y, double* z, const double* B,
                      int n, int m1, double sy) noexcept nogil:
    # z = x * (sy y); sy = -1 gives x * y^-1 since inverses are negatives
    cdef int i, j, k
    cdef double s
    for i in range(n):
        z[i] = x[i] + sy * y[i]
    for k in range(n - m1):
        s = 0.0
        for i in range(m1):
            for j in range(m1):
                s = s + B[(k * m1 + i) * m1 + j] * x[i] * y[j]
        z[m1 + k] += 0.5 * sy * s


cdef inline double _field(int code, const double* P, const double* z, int n, int m1) noexcept nogil:
    # P = [centre (n), radii (n), amplitude | coefficients (m1)]
    cdef int i
    cdef double u, s2 = 0.0, g, L
    for i in range(n):
        u = (z[i] - P[i]) / P[n + i]
        s2 = s2 + u * u
    if s2 >= 1.0:
        return 0.0
    g = exp(-1.0 / (1.0 - s2))
    if code == 0:
        return P[2 * n] * g
    L = 0.0
    for i in range(m1):
        L = L + P[2 * n + i] * z[i]
    return L * E * g


cdef inline void _field_hgrad(int code, const double* P, const double* z, int n, int m1,
                              const double* B, double* out) noexcept nogil:
    cdef int i, k, a
    cdef double u, s2 = 0.0, d, g, c, L, s
    cdef double eg[MAXDIM]
    for i in range(n):
        u = (z[i] - P[i]) / P[n + i]
        s2 = s2 + u * u
    if s2 >= 1.0:
        for i in range(m1):
            out[i] = 0.0
        return
    d = 1.0 - s2
    g = exp(-1.0 / d)
    c = -2.0 * g / (d * d)
    if code == 0:
        for i in range(n):
            eg[i] = P[2 * n] * c * (z[i] - P[i]) / (P[n + i] * P[n + i])
    else:
        L = 0.0
        for i in range(m1):
            L = L + P[2 * n + i] * z[i]
        for i in range(n):
            eg[i] = E * L * c * (z[i] - P[i]) / (P[n + i] * P[n + i])
        for i in range(m1):
            eg[i] += E * P[2 * n + i] * g
    for i in range(m1):
        s = eg[i]
        for k in range(n - m1):
            for a in range(m1):
                s = s + 0.5 * B[(k * m1 + a) * m1 + i] * z[a] * eg[m1 + k]
        out[i] = s


cdef inline double _norm(int code, const double* NP, const double* z, int n) noexcept nogil:
    cdef int i
    cdef double s = 0.0, r2
    if code == 0:
        for i in range(n):
            s = s + z[i] * z[i]
        return sqrt(s)
    if code == 1:
        for i in range(n):
            s = s + pow(fabs(z[i] / NP[1 + i]), NP[0])
        return pow(s, 1.0 / NP[0])
    r2 = z[0] * z[0] + z[1] * z[1]
    return sqrt(sqrt(r2 * r2 + 16.0 * z[2] * z[2]))


cdef inline double _powp(double a, double p) noexcept nogil:
    if p == 1.0:
        return a
    if p == 2.0:
        return a * a
    return pow(a, p)


cdef void _pair_one(const double* x, const double* H, int nh, int n, int m1, const double* B,
                    int code, const double* P, const double* wv, int cv,
                    const double* wa, int ca, const double* wp, int cp, double p,
                    const double* v, double* fx, double* rv, double* ra, double* rp) noexcept nogil:
    cdef int j, c
    cdef double f0, D, aD, aDp
    cdef double z[MAXDIM]
    f0 = _field(code, P, x, n, m1)
    fx[0] = f0
    for j in range(nh):
        _mul(x, &H[j * n], z, B, n, m1, 1.0)
        D = _field(code, P, z, n, m1) - f0
        if v != NULL:
            for c in range(m1):
                D = D - v[c] * H[j * n + c]
        if D == 0.0:
            continue
        for c in range(cv):
            rv[c] += D * wv[j * cv + c]
        aD = fabs(D)
        for c in range(ca):
            ra[c] += aD * wa[j * ca + c]
        if cp > 0:
            aDp = _powp(aD, p)
            for c in range(cp):
                rp[c] += aDp * wp[j * cp + c]


def pair_sums(const double[:, ::1] X, const double[:, ::1] H, const double[::1] B, int m1,
              int code, const double[::1] P, const double[:, ::1] wv,
              const double[:, ::1] wa, const double[:, ::1] wp,
              double p, V=None, int nthreads=1):
    """Weighted sums of D_j(x) = f(x h_j) - f(x) [- <V(x), pi(h_j)>].

    Returns ``(fx, sum_j D wv, sum_j |D| wa, sum_j |D|^p wp)``.
    """
    cdef Py_ssize_t nx = X.shape[0], n = X.shape[1], nh = H.shape[0]
    cdef int cv = wv.shape[1], ca = wa.shape[1], cp = wp.shape[1]
    if n > MAXDIM:
        raise ValueError("dimension too large for the compiled kernels")
    fx_a = np.zeros(nx)
    rv_a = np.zeros((nx, max(cv, 1)))
    ra_a = np.zeros((nx, max(ca, 1)))
    rp_a = np.zeros((nx, max(cp, 1)))
    cdef double[::1] fx = fx_a
    cdef double[:, ::1] rv = rv_a, ra = ra_a, rp = rp_a
    cdef const double[:, ::1] Vm
    cdef const double* vptr
    cdef bint has_v = V is not None
    if has_v:
        Vm = np.ascontiguousarray(V, dtype=float)
    else:
        Vm = np.zeros((1, 1))
    cdef double dummy[1]
    cdef const double* wvp = &wv[0, 0] if cv > 0 and nh > 0 else dummy
    cdef const double* wap = &wa[0, 0] if ca > 0 and nh > 0 else dummy
    cdef const double* wpp = &wp[0, 0] if cp > 0 and nh > 0 else dummy
    cdef const double* Bp = &B[0] if B.shape[0] > 0 else dummy
    cdef const double* Hp = &H[0, 0] if nh > 0 else dummy
    cdef Py_ssize_t i
    if nx == 0:
        return fx_a, rv_a[:, :cv], ra_a[:, :ca], rp_a[:, :cp]
    for i in prange(nx, nogil=True, num_threads=nthreads, schedule="static"):
        _pair_one(&X[i, 0], Hp, <int>nh, <int>n, m1, Bp, code, &P[0], wvp, cv, wap, ca,
                  wpp, cp, p, &Vm[i, 0] if has_v else NULL, &fx[i], &rv[i, 0], &ra[i, 0],
                  &rp[i, 0])
    return fx_a, rv_a[:, :cv], ra_a[:, :ca], rp_a[:, :cp]


cdef void _grad_one(const double* x, const double* H, int nh, int n, int m1, const double* B,
                    int code, const double* P, const double* wk, double* out) noexcept nogil:
    cdef int j, c
    cdef double z[MAXDIM]
    cdef double g[MAXDIM]
    for c in range(m1):
        out[c] = 0.0
    for j in range(nh):
        _mul(x, &H[j * n], z, B, n, m1, -1.0)
        _field_hgrad(code, P, z, n, m1, B, g)
        for c in range(m1):
            out[c] += wk[j] * g[c]


def grad_sums(const double[:, ::1] X, const double[:, ::1] H, const double[::1] B, int m1,
              int code, const double[::1] P, const double[::1] wk, int nthreads=1):
    """sum_j wk_j grad_G f(x h_j^-1) for every row x of ``X``."""
    cdef Py_ssize_t nx = X.shape[0], n = X.shape[1], nh = H.shape[0]
    if n > MAXDIM:
        raise ValueError("dimension too large for the compiled kernels")
    out_a = np.zeros((nx, m1))
    cdef double[:, ::1] out = out_a
    cdef double dummy[1]
    cdef const double* Bp = &B[0] if B.shape[0] > 0 else dummy
    cdef Py_ssize_t i
    if nx == 0 or nh == 0:
        return out_a
    for i in prange(nx, nogil=True, num_threads=nthreads, schedule="static"):
        _grad_one(&X[i, 0], &H[0, 0], <int>nh, <int>n, m1, Bp, code, &P[0], &wk[0], &out[i, 0])
    return out_a


cdef inline double _prim(double t, double k) noexcept nogil:
    if k == -1.0:
        return log(t)
    return pow(t, k + 1.0) / (k + 1.0)


cdef inline double _level(const double* xc, const double* y, const double* alpha, double t,
                          const double* B, int n, int m1, int ncode, const double* NP,
                          double r, double* ty, double* z) noexcept nogil:
    cdef int i
    for i in range(n):
        ty[i] = y[i] * (t if alpha[i] == 1.0 else t * t)
    _mul(xc, ty, z, B, n, m1, 1.0)
    return _norm(ncode, NP, z, n) - r


cdef void _cross_one(const double* xc, const double* Y, int ny, int n, int m1, const double* B,
                     const double* alpha, int ncode, const double* NP, double r,
                     double tmin, double tmax, double k, int M, int niter,
                     const double* W, const double* wa, int ca,
                     double* ov, double* oa, signed char* inside) noexcept nogil:
    cdef int j, i, it, c
    cdef bint s0, sp, st, sm
    cdef double L, t0, t1, lo, hi, mid, tc, sgn
    cdef double ty[MAXDIM]
    cdef double z[MAXDIM]
    s0 = _norm(ncode, NP, xc, n) < r
    inside[0] = 1 if s0 else 0
    sgn = -1.0 if s0 else 1.0
    for j in range(ny):
        L = 0.0
        t0 = tmin
        sp = _level(xc, &Y[j * n], alpha, t0, B, n, m1, ncode, NP, r, ty, z) < 0.0
        for i in range(1, M + 1):
            t1 = tmin + (tmax - tmin) * i / M
            st = _level(xc, &Y[j * n], alpha, t1, B, n, m1, ncode, NP, r, ty, z) < 0.0
            if st == sp:
                if st != s0:
                    L = L + _prim(t1, k) - _prim(t0, k)
            else:
                lo = t0
                hi = t1
                for it in range(niter):
                    mid = 0.5 * (lo + hi)
                    sm = _level(xc, &Y[j * n], alpha, mid, B, n, m1, ncode, NP, r, ty, z) < 0.0
                    if sm == sp:
                        lo = mid
                    else:
                        hi = mid
                tc = 0.5 * (lo + hi)
                if sp != s0:
                    L = L + _prim(tc, k) - _prim(t0, k)
                else:
                    L = L + _prim(t1, k) - _prim(tc, k)
            sp = st
            t0 = t1
        if L != 0.0:
            for c in range(m1):
                ov[c] += sgn * L * W[j * m1 + c]
            for c in range(ca):
                oa[c] += L * wa[j * ca + c]


def step_crossings(const double[:, ::1] Xc, const double[:, ::1] Y, const double[::1] B,
                   int m1, const double[::1] alpha, int ncode, const double[::1] NP, double r,
                   double tmin, double tmax, double k, int M, int niter,
                   const double[:, ::1] W, const double[:, ::1] wa, int nthreads=1):
    """Differences of a ball indicator along the curves t -> x delta_t(y).

    ``Xc`` holds base points already translated by the ball centre.  For
    every x and direction y the routine measures L = int t^k dt over the
    t in [tmin, tmax] where chi(x delta_t y) != chi(x), locating boundary
    crossings by sampling ``M`` points and bisecting ``niter`` times.
    Returns ``(sum_y sign L W_y, sum_y L wa_y, inside flags)`` where
    sign = chi(x delta_t y) - chi(x) on that set.
    """
    cdef Py_ssize_t nx = Xc.shape[0], n = Xc.shape[1], ny = Y.shape[0]
    cdef int ca = wa.shape[1]
    if n > MAXDIM:
        raise ValueError("dimension too large for the compiled kernels")
    if M < 1 or not tmax > tmin:
        raise ValueError("need M >= 1 and tmax > tmin")
    ov_a = np.zeros((nx, m1))
    oa_a = np.zeros((nx, max(ca, 1)))
    ins_a = np.zeros(nx, dtype=np.int8)
    cdef double[:, ::1] ov = ov_a, oa = oa_a
    cdef signed char[::1] ins = ins_a
    cdef double dummy[1]
    cdef const double* Bp = &B[0] if B.shape[0] > 0 else dummy
    cdef const double* NPp = &NP[0] if NP.shape[0] > 0 else dummy
    cdef const double* wap = &wa[0, 0] if ca > 0 and ny > 0 else dummy
    cdef Py_ssize_t i
    if nx == 0 or ny == 0:
        return ov_a, oa_a[:, :ca], ins_a
    for i in prange(nx, nogil=True, num_threads=nthreads, schedule="static"):
        _cross_one(&Xc[i, 0], &Y[0, 0], <int>ny, <int>n, m1, Bp, &alpha[0], ncode, NPp, r,
                   tmin, tmax, k, M, niter, &W[0, 0], wap, ca, &ov[i, 0], &oa[i, 0], &ins[i])
    return ov_a, oa_a[:, :ca], ins_a
