# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled path-simulation kernels.

Scalar twin of ``_pathsim_py``: same counter-based RNG, same portable log
and inverse-normal approximations, same update order, so outputs are
bit-identical to the numpy backend (the build pins -ffp-contract=off to
keep FMA contraction from breaking that).  Loops run without the GIL so
callers can chunk samples across threads.
"""

from libc.math cimport sqrt, frexp

import numpy as np

BACKEND = "compiled"

cdef double P_LOW = 0.02425
cdef double NEVER = -1.0e308


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z = z ^ (z >> 30)
    z = z * (<unsigned long long>0xBF58476D1CE4E5B9)
    z = z ^ (z >> 27)
    z = z * (<unsigned long long>0x94D049BB133111EB)
    z = z ^ (z >> 31)
    return z


cdef inline double _u01(unsigned long long key, unsigned long long j) nogil:
    cdef unsigned long long x = _mix64(
        key + (j + 1) * (<unsigned long long>0x9E3779B97F4A7C15))
    return (<double>(x >> 11) + 0.5) * (1.0 / 9007199254740992.0)


cdef inline double _plog(double x) nogil:
    cdef int e
    cdef double m = frexp(x, &e)
    cdef double z, z2, p
    if m < 0.7071067811865476:
        m = m + m
        e = e - 1
    z = (m - 1.0) / (m + 1.0)
    z2 = z * z
    p = 1.0 / 17.0
    p = p * z2 + 1.0 / 15.0
    p = p * z2 + 1.0 / 13.0
    p = p * z2 + 1.0 / 11.0
    p = p * z2 + 1.0 / 9.0
    p = p * z2 + 1.0 / 7.0
    p = p * z2 + 1.0 / 5.0
    p = p * z2 + 1.0 / 3.0
    p = p * z2 + 1.0
    return (<double>e) * 0.6931471805599453 + 2.0 * z * p


cdef inline double _invnorm(double u) nogil:
    cdef double q, r, ql
    if u < P_LOW:
        ql = sqrt(-2.0 * _plog(u))
        return ((((((-7.784894002430293e-03 * ql + -3.223964580411365e-01) * ql
                    + -2.400758277161838e+00) * ql + -2.549732539343734e+00) * ql
                  + 4.374664141464968e+00) * ql + 2.938163982698783e+00)
                / ((((7.784695709041462e-03 * ql + 3.224671290700398e-01) * ql
                     + 2.445134137142996e+00) * ql + 3.754408661907416e+00) * ql + 1.0))
    elif u > 1.0 - P_LOW:
        ql = sqrt(-2.0 * _plog(1.0 - u))
        return -((((((-7.784894002430293e-03 * ql + -3.223964580411365e-01) * ql
                     + -2.400758277161838e+00) * ql + -2.549732539343734e+00) * ql
                   + 4.374664141464968e+00) * ql + 2.938163982698783e+00)
                 / ((((7.784695709041462e-03 * ql + 3.224671290700398e-01) * ql
                      + 2.445134137142996e+00) * ql + 3.754408661907416e+00) * ql + 1.0))
    else:
        q = u - 0.5
        r = q * q
        return ((((((-3.969683028665376e+01 * r + 2.209460984245205e+02) * r
                    + -2.759285104469687e+02) * r + 1.383577518672690e+02) * r
                  + -3.066479806614716e+01) * r + 2.506628277459239e+00) * q
                / (((((-5.447609879822406e+01 * r + 1.615858368580409e+02) * r
                      + -1.556989798598866e+02) * r + 6.680131188771972e+01) * r
                    + -1.328068155288572e+01) * r + 1.0))


cdef inline double _blookup(const double* sk, const double* xk, Py_ssize_t nk,
                            double s) nogil:
    cdef Py_ssize_t lo, hi, mid, k
    cdef double ds
    if s >= sk[nk - 1]:
        return s
    if s < sk[0]:
        return NEVER
    lo = 0
    hi = nk
    while lo < hi:
        mid = (lo + hi) >> 1
        if sk[mid] <= s:
            lo = mid + 1
        else:
            hi = mid
    k = lo - 1
    if k > nk - 2:
        k = nk - 2
    ds = sk[k + 1] - sk[k]
    if ds > 0.0:
        return xk[k] + (xk[k + 1] - xk[k]) * (s - sk[k]) / ds
    return xk[k + 1]


def barrier_stage(unsigned long long[::1] keys, unsigned long long[::1] j,
                  double[::1] b, double[::1] s, long long[::1] steps,
                  double[::1] s_knots, double[::1] x_knots, double top,
                  double dt, long long max_steps, bint use_bridge=True):
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t nk = s_knots.shape[0]
    values_arr = np.zeros(n, dtype=np.float64)
    stop_arr = np.zeros(n, dtype=np.int64)
    exh_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] values = values_arr
    cdef long long[::1] stop_steps = stop_arr
    cdef unsigned char[::1] exhausted = exh_arr
    cdef const double* sk = &s_knots[0]
    cdef const double* xk = &x_knots[0]
    cdef Py_ssize_t i
    cdef double sdt = sqrt(dt)
    cdef double beta, bi, si, bn, m, d, uz, uu, z
    cdef unsigned long long key, jj
    cdef long long st
    with nogil:
        for i in range(n):
            key = keys[i]
            jj = j[i]
            bi = b[i]
            si = s[i]
            st = steps[i]
            beta = _blookup(sk, xk, nk, si)
            if bi <= beta:
                values[i] = beta if use_bridge else bi
                stop_steps[i] = st
                j[i] = jj
                continue
            while True:
                if st >= max_steps:
                    values[i] = bi
                    stop_steps[i] = st
                    exhausted[i] = 1
                    break
                uz = _u01(key, jj)
                uu = _u01(key, jj + 1)
                uv = _u01(key, jj + 2)
                jj = jj + 3
                st = st + 1
                z = _invnorm(uz)
                bn = bi + sdt * z
                if use_bridge:
                    d = bn - bi
                    m = 0.5 * (bi + bn + sqrt(d * d - 2.0 * dt * _plog(uu)))
                else:
                    m = bi if bi > bn else bn
                if bn <= beta:
                    # dip-driven stop: in the continuum the path sits exactly
                    # on the barrier, so the state continues from there; the
                    # segment max may postdate the dip, S keeps its value
                    values[i] = beta if use_bridge else bn
                    stop_steps[i] = st
                    bi = beta if use_bridge else bn
                    break
                if m >= top:
                    # S-driven stop: the max first met the barrier at the
                    # support top, where B = S = top exactly
                    values[i] = top if use_bridge else bn
                    stop_steps[i] = st
                    if use_bridge:
                        si = top
                        bi = top
                    else:
                        si = m
                        bi = bn
                    break
                if m > si:
                    si = m
                    beta = _blookup(sk, xk, nk, si)
                if bn <= beta:
                    values[i] = beta if use_bridge else bn
                    stop_steps[i] = st
                    bi = beta if use_bridge else bn
                    break
                if use_bridge and beta > NEVER:
                    # dips that recover inside the segment: bridge minimum
                    d = bn - bi
                    mn = 0.5 * (bi + bn - sqrt(d * d - 2.0 * dt * _plog(uv)))
                    if mn <= beta:
                        values[i] = beta
                        stop_steps[i] = st
                        bi = beta
                        break
                bi = bn
            b[i] = bi
            s[i] = si
            j[i] = jj
            steps[i] = st
    return values_arr, stop_arr, exh_arr.astype(bool)


def interval_stage(unsigned long long[::1] keys, unsigned long long[::1] j,
                   double[::1] b, long long[::1] steps,
                   double lo, double hi, double dt, long long max_steps):
    cdef Py_ssize_t n = keys.shape[0]
    values_arr = np.zeros(n, dtype=np.float64)
    stop_arr = np.zeros(n, dtype=np.int64)
    exh_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] values = values_arr
    cdef long long[::1] stop_steps = stop_arr
    cdef unsigned char[::1] exhausted = exh_arr
    cdef Py_ssize_t i
    cdef double sdt = sqrt(dt)
    cdef double bi, bn, m, mn, d, uz, u1, u2, z
    cdef unsigned long long key, jj
    cdef long long st
    with nogil:
        for i in range(n):
            key = keys[i]
            jj = j[i]
            bi = b[i]
            st = steps[i]
            if bi <= lo or bi >= hi:
                values[i] = bi
                stop_steps[i] = st
                continue
            while True:
                if st >= max_steps:
                    values[i] = bi
                    stop_steps[i] = st
                    exhausted[i] = 1
                    break
                uz = _u01(key, jj)
                u1 = _u01(key, jj + 1)
                u2 = _u01(key, jj + 2)
                jj = jj + 3
                st = st + 1
                z = _invnorm(uz)
                bn = bi + sdt * z
                if bn >= hi:
                    values[i] = hi
                    stop_steps[i] = st
                    bi = hi
                    break
                if bn <= lo:
                    values[i] = lo
                    stop_steps[i] = st
                    bi = lo
                    break
                d = bn - bi
                m = 0.5 * (bi + bn + sqrt(d * d - 2.0 * dt * _plog(u1)))
                if m >= hi:
                    values[i] = hi
                    stop_steps[i] = st
                    bi = hi
                    break
                mn = 0.5 * (bi + bn - sqrt(d * d - 2.0 * dt * _plog(u2)))
                if mn <= lo:
                    values[i] = lo
                    stop_steps[i] = st
                    bi = lo
                    break
                bi = bn
            b[i] = bi
            j[i] = jj
            steps[i] = st
    return values_arr, stop_arr, exh_arr.astype(bool)
