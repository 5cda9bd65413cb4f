"""Sparse-array pre-processing: rank enhancement through the difference coarray.

An antennas x K batch from a sparse array is turned into an L' x L' Hermitian
Toeplitz matrix (L' = last occupied slot): sample autocorrelation, spread its
entries over the coarray lags, average duplicate lags, and rearrange the
reduced lag vector into the smoothed matrix whose column i reads the lags
top-down from L'-i downwards.  The result behaves like the covariance of a
filled L'-slot array, which is what lets a 4-antenna array resolve more than
4 arrivals downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ShapeError
from .fixedpoint import NumericMode, apply_mode, quantize
from .linalg import as_matrix
from . import _kernels

__all__ = ["CoarrayVector", "SmoothedMatrix", "acf", "vectorize_and_reduce", "smooth", "sap_pipeline"]


@dataclass(frozen=True)
class CoarrayVector:
    """Averaged autocorrelation lags over [-(L'-1), L'-1].

    ``values[k]`` holds lag ``k - (n_slots - 1)``; ``weights`` counts the
    antenna pairs that contributed to each lag.
    """

    values: np.ndarray
    weights: np.ndarray
    n_slots: int

    def lag(self, k: int):
        return self.values[self.n_slots - 1 + k]


@dataclass(frozen=True)
class SmoothedMatrix:
    """Hermitian Toeplitz rearrangement of a coarray vector (L' x L')."""

    matrix: np.ndarray

    @property
    def n_slots(self) -> int:
        return self.matrix.shape[0]


def acf(y, mode: NumericMode | None = None) -> np.ndarray:
    """Sample autocorrelation R = (1/K) y @ y^H.

    The 1/K normalization keeps magnitudes independent of the batch length;
    downstream peak locations are invariant to positive scaling, so it cannot
    move estimates.  Under a fixed-point mode the product runs through the
    quantized MAC kernel on the scaled input and the consumer-side descale
    (exact powers of two) plus 1/K are applied after.
    """
    y = as_matrix(y)
    n_cols = y.shape[1]
    if mode is None or mode.kind == "float64":
        return (y @ y.conj().T) / n_cols
    if mode.kind == "float32":
        y32 = apply_mode(y, mode, "acf")
        return (y32 @ y32.conj().T) / n_cols
    scale = mode.scale_for("acf")
    yq = apply_mode(y, mode, "acf")
    r = _kernels.acf_quantized(yq, mode.fmt.kernel_params())
    return r * (2.0 ** (-2 * scale) / n_cols)


def vectorize_and_reduce(r, geom, mode: NumericMode | None = None) -> CoarrayVector:
    """Spread autocorrelation entries over coarray lags and average duplicates.

    Entry (i, j) lands on lag positions[i] - positions[j].  Every lag in
    [-(L'-1), L'-1] must be hit by at least one pair, otherwise the geometry
    cannot feed the smoothing step and a GeometryError names the first
    missing lag.  Non-negative lags are accumulated and the negative side is
    mirrored conjugate, so the result is conjugate-symmetric by construction.
    """
    r = as_matrix(r)
    n_ant = geom.n_antennas
    if r.shape != (n_ant, n_ant):
        raise ShapeError(
            f"autocorrelation is {r.shape} but geometry has {n_ant} antennas"
        )
    n_slots = geom.n_slots
    pos = np.asarray(geom.positions)
    lag_of = pos[:, None] - pos[None, :]

    fixed = mode is not None and mode.kind == "fixed"
    if mode is not None:
        r = apply_mode(r, mode, "sap")
    scale = mode.scale_for("sap") if mode is not None else 0

    values = np.zeros(2 * n_slots - 1, dtype=np.complex128)
    weights = np.zeros(2 * n_slots - 1, dtype=np.int64)
    for k in range(n_slots):
        ii, jj = np.nonzero(lag_of == k)
        if len(ii) == 0:
            raise GeometryError(
                f"difference coarray has a hole at lag {k}", missing_lag=k
            )
        if fixed:
            acc_re, acc_im = 0.0, 0.0
            for i, j in zip(ii, jj):
                acc_re = quantize(acc_re + r[i, j].real, mode.fmt)
                acc_im = quantize(acc_im + r[i, j].imag, mode.fmt)
            mean = complex(
                quantize(acc_re / len(ii), mode.fmt),
                quantize(acc_im / len(ii), mode.fmt),
            )
        else:
            mean = complex(np.mean(r[ii, jj]))
        values[n_slots - 1 + k] = mean
        values[n_slots - 1 - k] = np.conj(mean)
        weights[n_slots - 1 + k] = len(ii)
        weights[n_slots - 1 - k] = len(ii)
    if scale:
        values = values * 2.0 ** (-scale)
    return CoarrayVector(values=values, weights=weights, n_slots=n_slots)


def smooth(rv: CoarrayVector) -> SmoothedMatrix:
    """Rearrange the reduced lag vector into the L' x L' smoothed matrix.

    Row j, column i (1-based) takes the lag-(j - i) entry, i.e. the Hermitian
    Toeplitz matrix whose first column is lags 0..L'-1.  Pure data movement;
    no arithmetic happens here.
    """
    n_slots = rv.n_slots
    if len(rv.values) != 2 * n_slots - 1:
        raise ShapeError(
            f"lag vector has {len(rv.values)} entries, expected {2 * n_slots - 1}"
        )
    j = np.arange(n_slots)
    idx = (n_slots - 1) + (j[:, None] - j[None, :])
    return SmoothedMatrix(matrix=rv.values[idx].copy())


def sap_pipeline(y, geom, mode: NumericMode | None = None) -> SmoothedMatrix:
    """Full pre-processing chain: acf -> lag reduction -> Toeplitz smoothing."""
    r = acf(y, mode)
    rv = vectorize_and_reduce(r, geom, mode)
    return smooth(rv)
