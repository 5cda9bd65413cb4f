# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled quantized MAC kernels.

Scalar loops over the same operation sequence as the numpy fallback; built
with -ffp-contract=off so results stay bit-identical to it.
"""

from libc.math cimport floor, rint, fmod

import numpy as np


cdef inline double _q(double x, double scale, double inv_scale, double lo,
                      double hi, double span, int nearest, int saturate) nogil:
    cdef double y = x * scale
    cdef double r
    if nearest:
        r = rint(y)
    else:
        r = floor(y)
    if saturate:
        if r < lo:
            r = lo
        elif r > hi:
            r = hi
    else:
        r = fmod(r - lo, span)
        if r < 0.0:
            r += span
        r += lo
    return r * inv_scale


def acf_quantized(y, params):
    """Quantized y @ y^H (no normalization): upper triangle computed through
    the fixed-point datapath, lower triangle mirrored conjugate."""
    cdef double scale, inv_scale, lo, hi, span
    cdef int nearest, saturate
    scale, inv_scale, lo, hi, span, nearest, saturate = params

    y_arr = np.ascontiguousarray(y, dtype=np.complex128)
    cdef double complex[:, ::1] a = y_arr
    cdef Py_ssize_t n_rows = a.shape[0]
    cdef Py_ssize_t n_cols = a.shape[1]

    out_arr = np.zeros((n_rows, n_rows), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr

    cdef Py_ssize_t i, j, k
    cdef double xr, xi, yr, yi, t1, t2, t3, t4, acc_re, acc_im
    with nogil:
        for i in range(n_rows):
            for j in range(i, n_rows):
                acc_re = 0.0
                acc_im = 0.0
                for k in range(n_cols):
                    xr = a[i, k].real
                    xi = a[i, k].imag
                    yr = a[j, k].real
                    yi = a[j, k].imag
                    t1 = _q(xr * yr, scale, inv_scale, lo, hi, span, nearest, saturate)
                    t2 = _q(xi * yi, scale, inv_scale, lo, hi, span, nearest, saturate)
                    t3 = _q(xi * yr, scale, inv_scale, lo, hi, span, nearest, saturate)
                    t4 = _q(xr * yi, scale, inv_scale, lo, hi, span, nearest, saturate)
                    acc_re = _q(acc_re + _q(t1 + t2, scale, inv_scale, lo, hi, span, nearest, saturate),
                                scale, inv_scale, lo, hi, span, nearest, saturate)
                    acc_im = _q(acc_im + _q(t3 - t4, scale, inv_scale, lo, hi, span, nearest, saturate),
                                scale, inv_scale, lo, hi, span, nearest, saturate)
                out[i, j] = acc_re + 1j * acc_im
                out[j, i] = acc_re - 1j * acc_im
    return out_arr


def msg_quantized(grid, vn, params):
    """Quantized spectrum denominators: for each grid column s and subspace
    column v, accumulate |s^H v|^2 through the fixed-point datapath."""
    cdef double scale, inv_scale, lo, hi, span
    cdef int nearest, saturate
    scale, inv_scale, lo, hi, span, nearest, saturate = params

    grid_arr = np.ascontiguousarray(grid, dtype=np.complex128)
    vn_arr = np.ascontiguousarray(vn, dtype=np.complex128)
    cdef double complex[:, ::1] g = grid_arr
    cdef double complex[:, ::1] v = vn_arr
    cdef Py_ssize_t n_rows = g.shape[0]
    cdef Py_ssize_t n_angles = g.shape[1]
    cdef Py_ssize_t n_sub = v.shape[1]

    denom_arr = np.zeros(n_angles)
    cdef double[::1] denom = denom_arr

    cdef Py_ssize_t p, c, l
    cdef double sr, si, wr, wi, t1, t2, t3, t4, acc_re, acc_im, m1, m2, mag, d
    with nogil:
        for p in range(n_angles):
            d = 0.0
            for c in range(n_sub):
                acc_re = 0.0
                acc_im = 0.0
                for l in range(n_rows):
                    sr = g[l, p].real
                    si = g[l, p].imag
                    wr = v[l, c].real
                    wi = v[l, c].imag
                    t1 = _q(sr * wr, scale, inv_scale, lo, hi, span, nearest, saturate)
                    t2 = _q(si * wi, scale, inv_scale, lo, hi, span, nearest, saturate)
                    t3 = _q(sr * wi, scale, inv_scale, lo, hi, span, nearest, saturate)
                    t4 = _q(si * wr, scale, inv_scale, lo, hi, span, nearest, saturate)
                    acc_re = _q(acc_re + _q(t1 + t2, scale, inv_scale, lo, hi, span, nearest, saturate),
                                scale, inv_scale, lo, hi, span, nearest, saturate)
                    acc_im = _q(acc_im + _q(t3 - t4, scale, inv_scale, lo, hi, span, nearest, saturate),
                                scale, inv_scale, lo, hi, span, nearest, saturate)
                m1 = _q(acc_re * acc_re, scale, inv_scale, lo, hi, span, nearest, saturate)
                m2 = _q(acc_im * acc_im, scale, inv_scale, lo, hi, span, nearest, saturate)
                mag = _q(m1 + m2, scale, inv_scale, lo, hi, span, nearest, saturate)
                d = _q(d + mag, scale, inv_scale, lo, hi, span, nearest, saturate)
            denom[p] = d
    return denom_arr
