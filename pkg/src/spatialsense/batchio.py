"""Flat binary exchange format for baseband batches.

Header: magic "WRFE", version u32, rows u32, cols u32, sampling u8,
numeric-kind u8 (all little-endian), followed by row-major float64
(re, im) pairs.  This is the contract between the simulate and estimate
CLI subcommands and is also used to dump intermediate matrices.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import SenseError
from .frontend import BasebandBatch
from .linalg import as_matrix

__all__ = ["MAGIC", "FORMAT_VERSION", "write_batch", "read_batch", "write_matrix", "read_matrix"]

MAGIC = b"WRFE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIBB")

SAMPLING_CODES = {"nyquist": 0, "sub-nyquist": 1}
SAMPLING_NAMES = {v: k for k, v in SAMPLING_CODES.items()}
NUMERIC_CODES = {"float64": 0, "float32": 1, "fixed": 2}
NUMERIC_NAMES = {v: k for k, v in NUMERIC_CODES.items()}


def _pack(samples, sampling, numeric_kind) -> bytes:
    m = as_matrix(samples)
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        m.shape[0],
        m.shape[1],
        SAMPLING_CODES[sampling],
        NUMERIC_CODES[numeric_kind],
    )
    return header + np.ascontiguousarray(m).astype("<c16").tobytes()


def write_batch(path, batch: BasebandBatch) -> None:
    with open(path, "wb") as fh:
        fh.write(_pack(batch.samples, batch.sampling, batch.numeric_kind))


def write_matrix(path, matrix, sampling="sub-nyquist", numeric_kind="float64") -> None:
    """Dump a bare complex matrix in the batch container (debug aid)."""
    with open(path, "wb") as fh:
        fh.write(_pack(matrix, sampling, numeric_kind))


def read_batch(path) -> BasebandBatch:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SenseError(f"{path}: truncated batch file")
    magic, version, rows, cols, sampling_code, numeric_code = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SenseError(f"{path}: not a batch file (bad magic {magic!r})")
    if version != FORMAT_VERSION:
        raise SenseError(f"{path}: unsupported format version {version}")
    if sampling_code not in SAMPLING_NAMES or numeric_code not in NUMERIC_NAMES:
        raise SenseError(f"{path}: unknown sampling/numeric code")
    expected = _HEADER.size + rows * cols * 16
    if len(raw) != expected:
        raise SenseError(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, "
            f"expected {rows}x{cols} complex samples"
        )
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    samples = data.reshape(rows, cols).astype(np.complex128)
    return BasebandBatch(
        samples=samples,
        sampling=SAMPLING_NAMES[sampling_code],
        numeric_kind=NUMERIC_NAMES[numeric_code],
    )


def read_matrix(path) -> np.ndarray:
    return read_batch(path).samples
