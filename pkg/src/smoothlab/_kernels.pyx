# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


def window_max(const double[::1] phi, const double[::1] w, double halfwidth,
               double alpha_lo, double alpha_hi):
    cdef Py_ssize_t n = phi.shape[0]
    cdef Py_ssize_t i, j = 0
    cdef double acc = 0.0, best = 0.0, best_alpha = alpha_lo, center, a, val
    cdef double width = 2.0 * halfwidth
    # two-pointer sweep over half-open windows [phi_i, phi_i + 2M)
    for i in range(n):
        if j < i:
            j = i
            acc = 0.0
        while j < n and phi[j] < phi[i] + width:
            acc += w[j]
            j += 1
        # nudge the centre down by half the slack above the last point so that
        # phi_i itself satisfies the strict |phi - alpha| < M
        center = phi[i] + halfwidth - 0.5 * (phi[i] + width - phi[j - 1])
        if center >= alpha_lo and center <= alpha_hi and acc > best:
            best = acc
            best_alpha = center
        acc -= w[i]
    for a in (alpha_lo, alpha_hi):
        val = 0.0
        for i in range(n):
            if phi[i] > a - halfwidth and phi[i] < a + halfwidth:
                val += w[i]
        if val > best:
            best = val
            best_alpha = a
    return best, best_alpha


cdef Py_ssize_t _first_above(const double[::1] phi, double x, bint strict) nogil:
    # first index with phi > x (strict) or phi >= x
    cdef Py_ssize_t lo = 0, hi = phi.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if phi[mid] > x or (not strict and phi[mid] == x):
            hi = mid
        else:
            lo = mid + 1
    return lo


def window_sums(const double[::1] phi, const double[::1] w, const double[::1] alphas,
                double halfwidth):
    cdef Py_ssize_t n = phi.shape[0], m = alphas.shape[0]
    cdef Py_ssize_t i, q
    cdef double[::1] cum = np.zeros(n + 1, dtype=np.float64)
    for i in range(n):
        cum[i + 1] = cum[i] + w[i]
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] o = out
    for q in range(m):
        o[q] = (cum[_first_above(phi, alphas[q] + halfwidth, False)]
                - cum[_first_above(phi, alphas[q] - halfwidth, True)])
    return out


def lattice_form(coords_in, long n, signs_in, phi_in, out_w_in, in_w_in,
                 double bexp, V_in, chunk=None):
    cdef long[:, ::1] coords = np.ascontiguousarray(coords_in, dtype=np.int64).astype(np.int_)
    cdef double[::1] signs = np.ascontiguousarray(signs_in, dtype=np.float64)
    cdef double[::1] phi = np.ascontiguousarray(phi_in, dtype=np.float64)
    cdef double[::1] out_w = np.ascontiguousarray(out_w_in, dtype=np.float64)
    cdef double[::1] in_w = np.ascontiguousarray(in_w_in, dtype=np.float64)
    Vc = np.ascontiguousarray(V_in, dtype=np.complex128)
    cdef double complex[:, :, ::1] V = Vc
    cdef Py_ssize_t P = coords.shape[0], d = coords.shape[1]
    cdef Py_ssize_t k = signs.shape[0] - 1
    cdef Py_ssize_t T = V.shape[0]
    cdef long half = n // 2
    cdef Py_ssize_t a, j, t, p0
    cdef long c
    cdef double Phi, wt
    cdef bint inside
    cdef double complex term
    acc_arr = np.zeros(T, dtype=np.complex128)
    cdef double complex[::1] acc = acc_arr
    cdef long[::1] idx = np.zeros(k, dtype=np.int_)
    cdef long[::1] out = np.zeros(d, dtype=np.int_)
    cdef long[::1] isg = np.zeros(k + 1, dtype=np.int_)
    for j in range(k + 1):
        isg[j] = <long>signs[j]
    # conjugate the output slot and the negative-sign inputs once
    Vw_arr = Vc.copy()
    Vw_arr[:, 0, :] = np.conj(Vw_arr[:, 0, :])
    for j in range(1, k + 1):
        if isg[j] < 0:
            Vw_arr[:, j, :] = np.conj(Vw_arr[:, j, :])
    cdef double complex[:, :, ::1] Vw = Vw_arr
    while True:
        inside = True
        p0 = 0
        for a in range(d):
            c = 0
            for j in range(k):
                c += isg[j + 1] * coords[idx[j], a]
            if c < -half or c >= n - half:
                inside = False
                break
            p0 = p0 * n + (c + half)
        if inside:
            Phi = phi[p0]
            wt = out_w[p0]
            for j in range(k):
                Phi -= signs[j + 1] * phi[idx[j]]
                wt *= in_w[idx[j]]
            wt *= pow(1.0 + Phi * Phi, 0.5 * bexp)
            for t in range(T):
                term = Vw[t, 0, p0] * wt
                for j in range(k):
                    term = term * Vw[t, j + 1, idx[j]]
                acc[t] += term
        # odometer increment, last slot fastest (matches the numpy ordering)
        j = k - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < P:
                break
            idx[j] = 0
            j -= 1
        if j < 0:
            break
    return acc_arr
