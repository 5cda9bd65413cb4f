"""Pure-numpy reference implementation of the quantized hot kernels.

Every multiply and add is requantized, so the reduction over samples is
inherently sequential; the fallback vectorizes across output elements and
steps through the reduction axis one term at a time.  Operation order matches
the compiled kernel exactly, which keeps the two backends bit-identical.
"""

import numpy as np


def _q(x, scale, inv_scale, lo, hi, span, nearest, saturate):
    y = x * scale
    r = np.rint(y) if nearest else np.floor(y)
    if saturate:
        r = np.clip(r, lo, hi)
    else:
        r = lo + np.mod(r - lo, span)
    return r * inv_scale


def acf_quantized(y, params):
    """Quantized y @ y^H (no normalization): upper triangle computed through
    the fixed-point datapath, lower triangle mirrored conjugate."""
    y = np.ascontiguousarray(y, dtype=np.complex128)
    n_rows, n_cols = y.shape
    iu, ju = np.triu_indices(n_rows)
    ar, ai = y.real, y.imag
    acc_re = np.zeros(len(iu))
    acc_im = np.zeros(len(iu))
    q = lambda v: _q(v, *params)
    for k in range(n_cols):
        xr, xi = ar[iu, k], ai[iu, k]
        yr, yi = ar[ju, k], ai[ju, k]
        t1 = q(xr * yr)
        t2 = q(xi * yi)
        t3 = q(xi * yr)
        t4 = q(xr * yi)
        acc_re = q(acc_re + q(t1 + t2))
        acc_im = q(acc_im + q(t3 - t4))
    out = np.zeros((n_rows, n_rows), dtype=np.complex128)
    out[iu, ju] = acc_re + 1j * acc_im
    out[ju, iu] = acc_re - 1j * acc_im
    return out


def msg_quantized(grid, vn, params):
    """Quantized spectrum denominators: for each grid column s and subspace
    column v, accumulate |s^H v|^2 through the fixed-point datapath."""
    grid = np.ascontiguousarray(grid, dtype=np.complex128)
    vn = np.ascontiguousarray(vn, dtype=np.complex128)
    n_rows, n_angles = grid.shape
    n_sub = vn.shape[1]
    q = lambda v: _q(v, *params)
    acc_re = np.zeros((n_angles, n_sub))
    acc_im = np.zeros((n_angles, n_sub))
    gr, gi = grid.real, grid.imag
    vr, vi = vn.real, vn.imag
    for l in range(n_rows):
        sr = gr[l][:, None]
        si = gi[l][:, None]
        wr = vr[l][None, :]
        wi = vi[l][None, :]
        t1 = q(sr * wr)
        t2 = q(si * wi)
        t3 = q(sr * wi)
        t4 = q(si * wr)
        acc_re = q(acc_re + q(t1 + t2))
        acc_im = q(acc_im + q(t3 - t4))
    mag = q(q(acc_re * acc_re) + q(acc_im * acc_im))
    denom = np.zeros(n_angles)
    for c in range(n_sub):
        denom = q(denom + mag[:, c])
    return denom
