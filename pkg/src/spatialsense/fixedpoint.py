"""Parameterized fixed-point arithmetic and per-block numeric modes.

A fixed-point value in format {W, I} (W total bits, I integer bits including
the sign) is carried in a float64 container constrained to the grid of
multiples of 2**-(W-I) inside [-2**(I-1), 2**(I-1) - 2**-(W-I)].  Power-of-two
scaling and the grid snap are exact in binary floating point, so repeated
quantization is idempotent and the compiled and fallback kernels agree bit
for bit.

Grid exactness relies on the float64 mantissa, so formats wider than about
53 bits degenerate to plain float behaviour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "FxpFormat",
    "NumericMode",
    "PIPELINE_BLOCKS",
    "quantize",
    "quantize_array",
    "fxp_complex_mul",
    "apply_mode",
]

ROUNDINGS = ("truncate", "round-nearest-even")
OVERFLOWS = ("saturate", "wrap")

#: stages whose inputs a NumericMode may scale/quantize
PIPELINE_BLOCKS = ("adc", "acf", "sap", "evd", "msg")

MIN_SCALE_EXP = -16
MAX_SCALE_EXP = 16


@dataclass(frozen=True)
class FxpFormat:
    """Word-length descriptor: W total bits, I integer bits (sign included)."""

    total_bits: int
    integer_bits: int
    rounding: str = "truncate"
    overflow: str = "saturate"

    def __post_init__(self):
        if not 4 <= self.total_bits <= 64:
            raise ConfigError(f"total bits must be in [4, 64], got {self.total_bits}")
        if not 1 <= self.integer_bits <= self.total_bits:
            raise ConfigError(
                f"integer bits must be in [1, {self.total_bits}], "
                f"got {self.integer_bits}"
            )
        if self.rounding not in ROUNDINGS:
            raise ConfigError(f"unknown rounding {self.rounding!r}")
        if self.overflow not in OVERFLOWS:
            raise ConfigError(f"unknown overflow policy {self.overflow!r}")

    @property
    def fraction_bits(self) -> int:
        return self.total_bits - self.integer_bits

    @property
    def resolution(self) -> float:
        return 2.0 ** (-self.fraction_bits)

    @property
    def min_value(self) -> float:
        return -(2.0 ** (self.integer_bits - 1))

    @property
    def max_value(self) -> float:
        return 2.0 ** (self.integer_bits - 1) - self.resolution

    def kernel_params(self) -> tuple:
        """Flat parameter tuple consumed by the quantized kernels."""
        scale = 2.0**self.fraction_bits
        lo_steps = -(2.0 ** (self.total_bits - 1))
        hi_steps = 2.0 ** (self.total_bits - 1) - 1.0
        span = 2.0**self.total_bits
        round_nearest = 1 if self.rounding == "round-nearest-even" else 0
        saturate = 1 if self.overflow == "saturate" else 0
        return (scale, 1.0 / scale, lo_steps, hi_steps, span, round_nearest, saturate)

    def label(self) -> str:
        # comma-free so the tag can live in a CSV column
        return f"w{self.total_bits}i{self.integer_bits}"


def quantize(x: float, fmt: FxpFormat) -> float:
    """Snap a finite real scalar to the format's grid.

    Rounding and overflow follow the format's policy; out-of-range inputs are
    saturated or wrapped, never rejected.
    """
    if not math.isfinite(x):
        raise DomainError(f"quantize requires a finite value, got {x!r}")
    scale, inv_scale, lo, hi, span, nearest, saturate = fmt.kernel_params()
    y = x * scale
    r = math.floor(y) if not nearest else _rint(y)
    if saturate:
        r = min(max(r, lo), hi)
    else:
        r = lo + math.fmod(r - lo, span)
        if r < lo:
            r += span
    return r * inv_scale


def _rint(y: float) -> float:
    # round half to even, matching C rint / np.rint
    f = math.floor(y)
    d = y - f
    if d > 0.5:
        return f + 1.0
    if d < 0.5:
        return f
    return f if math.fmod(f, 2.0) == 0.0 else f + 1.0


def quantize_array(x: np.ndarray, fmt: FxpFormat) -> np.ndarray:
    """Elementwise quantize; complex inputs quantize re and im independently."""
    if np.iscomplexobj(x):
        return quantize_array(np.real(x), fmt) + 1j * quantize_array(np.imag(x), fmt)
    scale, inv_scale, lo, hi, span, nearest, saturate = fmt.kernel_params()
    y = np.asarray(x, dtype=np.float64) * scale
    r = np.rint(y) if nearest else np.floor(y)
    if saturate:
        r = np.clip(r, lo, hi)
    else:
        r = lo + np.mod(r - lo, span)
    return r * inv_scale


def fxp_complex_mul(a: complex, b: complex, fmt: FxpFormat) -> complex:
    """Complex product through a fixed word-length datapath.

    Four real multiplications and two additions, each requantized, exactly as
    a W-bit multiplier/adder pipeline would produce.  Operands are assumed to
    sit on the format's grid already.
    """
    q = lambda v: quantize(v, fmt)
    rr = q(a.real * b.real)
    ii = q(a.imag * b.imag)
    ri = q(a.real * b.imag)
    ir = q(a.imag * b.real)
    return complex(q(rr - ii), q(ri + ir))


@dataclass(frozen=True)
class NumericMode:
    """Numeric representation for the processing chain.

    ``kind`` selects float64 (reference), float32 (each block boundary narrows
    scalars to single precision) or fixed (block inputs are scaled by a
    power of two, snapped to the format's grid, and the block's consumer
    undoes the scale).  Scale exponents are per-block and live here so that
    producer and consumer always agree.
    """

    kind: str = "float64"
    fmt: FxpFormat | None = None
    block_scales: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("float64", "float32", "fixed"):
            raise ConfigError(f"unknown numeric kind {self.kind!r}")
        if self.kind == "fixed" and self.fmt is None:
            raise ConfigError("fixed mode requires a format")
        if self.kind != "fixed" and self.fmt is not None:
            raise ConfigError(f"{self.kind} mode takes no format")
        scales = dict(self.block_scales)
        for block, exp in scales.items():
            if block not in PIPELINE_BLOCKS:
                raise ConfigError(f"unknown pipeline block {block!r}")
            if not MIN_SCALE_EXP <= int(exp) <= MAX_SCALE_EXP:
                raise ConfigError(
                    f"scale exponent for {block!r} outside "
                    f"[{MIN_SCALE_EXP}, {MAX_SCALE_EXP}]: {exp}"
                )
        object.__setattr__(self, "block_scales", MappingProxyType(scales))

    @classmethod
    def float64(cls) -> "NumericMode":
        return cls("float64")

    @classmethod
    def float32(cls) -> "NumericMode":
        return cls("float32")

    @classmethod
    def fixed(cls, fmt: FxpFormat, scales: Mapping[str, int] | None = None) -> "NumericMode":
        return cls("fixed", fmt, dict(scales or {}))

    @classmethod
    def from_string(cls, text: str) -> "NumericMode":
        """Parse 'float64', 'float32' or 'fixed:W,I'."""
        t = text.strip().lower()
        if t == "float64":
            return cls.float64()
        if t == "float32":
            return cls.float32()
        if t.startswith("fixed:"):
            try:
                w, i = (int(p) for p in t[len("fixed:") :].split(","))
            except ValueError:
                raise ConfigError(f"cannot parse fixed format from {text!r}") from None
            return cls.fixed(FxpFormat(w, i))
        raise ConfigError(f"unknown numeric mode {text!r}")

    def scale_for(self, block: str) -> int:
        if block not in PIPELINE_BLOCKS:
            raise ConfigError(f"unknown pipeline block {block!r}")
        return int(self.block_scales.get(block, 0))

    def label(self) -> str:
        if self.kind != "fixed":
            return self.kind
        tag = f"fixed-{self.fmt.label()}"
        if any(self.block_scales.values()):
            tag += "-scaled"
        return tag


FLOAT64 = NumericMode.float64()


def apply_mode(m: np.ndarray, mode: NumericMode, block: str) -> np.ndarray:
    """Condition a matrix for one pipeline block under the active mode.

    float64 passes through untouched; float32 narrows every scalar; fixed
    multiplies by 2**scale(block) and quantizes each element.  The consumer
    inverts the recorded exponent (power-of-two scaling is exact, so the
    round trip costs nothing beyond the grid snap).
    """
    scale = mode.scale_for(block)  # validates the block name for every kind
    if mode.kind == "float64":
        return m
    if mode.kind == "float32":
        return np.asarray(m, dtype=np.complex64).astype(np.complex128)
    return quantize_array(np.asarray(m, dtype=np.complex128) * 2.0**scale, mode.fmt)
