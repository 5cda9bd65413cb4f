"""Scene synthesis and the multi-band receive chain.

The simulated span covers ``n_bands`` contiguous frequency bands of width
``band_hz``, represented by complex samples at the span rate
``n_bands * band_hz``.  A narrowband source sits inside one band; the
inter-antenna delay of a far-field arrival shows up as a constant per-antenna
phase factor exp(+j 2 pi f tau_l(theta)) on that source's waveform.

Digitization is either "nyquist" (mix one band to baseband, low-pass at half
a band, keep the full rate) or "sub-nyquist" (mix with a weighted sum of
per-band exponentials, low-pass at half a band, decimate to the band rate, so
the sample count drops by the band count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, ShapeError
from .fixedpoint import NumericMode, apply_mode
from .linalg import as_matrix

__all__ = [
    "SPEED_OF_LIGHT",
    "SETTLE_SAMPLES",
    "ArrayGeometry",
    "Source",
    "SourceScene",
    "SnsConfig",
    "RfCapture",
    "BasebandBatch",
    "tau",
    "steering_phases",
    "synthesize_rf",
    "sns_digitize",
    "nyquist_digitize",
]

SPEED_OF_LIGHT = 2.99792458e8

#: baseband samples to skip when measuring steady-state tone amplitudes
SETTLE_SAMPLES = 32

#: envelope bandwidth as a fraction of the band width (two-sided)
ENVELOPE_BANDWIDTH_FRACTION = 0.8


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna positions on a uniform grid of slots.

    ``positions`` are 1-based slot indices in units of the slot spacing; a
    uniform array occupies consecutive slots 1..L, a sparse array a strict
    subset of 1..L' with the last slot beyond its antenna count.
    """

    kind: str
    positions: tuple[int, ...]
    spacing_m: float
    wave_speed: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.kind not in ("uniform", "sparse"):
            raise ConfigError(f"unknown array kind {self.kind!r}")
        pos = tuple(int(p) for p in self.positions)
        object.__setattr__(self, "positions", pos)
        if len(pos) < 1 or pos[0] != 1:
            raise ConfigError("positions must start at slot 1")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ConfigError("positions must be strictly increasing")
        if self.kind == "uniform" and pos != tuple(range(1, len(pos) + 1)):
            raise ConfigError("uniform geometry requires consecutive slots 1..L")
        if self.kind == "sparse" and pos[-1] <= len(pos):
            raise ConfigError("sparse geometry needs its last slot beyond the antenna count")
        if not self.spacing_m > 0:
            raise ConfigError("slot spacing must be positive")

    @classmethod
    def uniform(cls, n_antennas, spacing_m, wave_speed=SPEED_OF_LIGHT):
        return cls("uniform", tuple(range(1, n_antennas + 1)), spacing_m, wave_speed)

    @classmethod
    def sparse(cls, positions, spacing_m, wave_speed=SPEED_OF_LIGHT):
        return cls("sparse", tuple(positions), spacing_m, wave_speed)

    @property
    def n_antennas(self) -> int:
        return len(self.positions)

    @property
    def n_slots(self) -> int:
        """Index of the last occupied slot (aperture in slot units)."""
        return self.positions[-1]


def tau(geom: ArrayGeometry, slot: int, theta_deg: float) -> float:
    """Relative delay, in seconds, seen at a slot for an arrival angle.

    tau = (slot - 1) * (spacing / wave speed) * cos(theta).
    """
    if not 1 <= slot <= geom.n_slots:
        raise DomainError(f"slot {slot} outside [1, {geom.n_slots}]")
    if not 0.0 <= theta_deg <= 180.0:
        raise DomainError(f"angle {theta_deg} outside [0, 180] degrees")
    return (slot - 1) * (geom.spacing_m / geom.wave_speed) * math.cos(
        math.radians(theta_deg)
    )


def steering_phases(geom: ArrayGeometry, freq_hz: float, theta_deg: float, slots=None):
    """Per-slot phase factors exp(+j 2 pi f tau_l(theta)) as a vector."""
    if slots is None:
        slots = geom.positions
    return np.array(
        [np.exp(2j * np.pi * freq_hz * tau(geom, s, theta_deg)) for s in slots]
    )


@dataclass(frozen=True)
class Source:
    """One far-field narrowband arrival."""

    theta_deg: float
    carrier_hz: float
    band: int
    amplitude: float = 1.0
    seed: int = 0
    envelope: str = "gaussian"  # "gaussian" | "constant"

    def __post_init__(self):
        if not 0.0 <= self.theta_deg <= 180.0:
            raise ConfigError(f"arrival angle {self.theta_deg} outside [0, 180]")
        if self.envelope not in ("gaussian", "constant"):
            raise ConfigError(f"unknown envelope kind {self.envelope!r}")


@dataclass(frozen=True)
class SourceScene:
    sources: tuple[Source, ...]
    snr_db: float | None
    n_rf_samples: int

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if len(self.sources) < 1:
            raise ConfigError("a scene needs at least one source")
        carriers = [s.carrier_hz for s in self.sources]
        if len(set(carriers)) != len(carriers):
            raise ConfigError("source carriers must be pairwise distinct")
        if self.n_rf_samples < 1:
            raise ConfigError("scene needs a positive sample count")

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def signal_power(self) -> float:
        return float(sum(s.amplitude**2 for s in self.sources))


@dataclass(frozen=True)
class SnsConfig:
    """Sub-Nyquist chain parameters.

    ``mixing`` holds the per-band mixing weights as an antennas x bands
    matrix.  One waveform generator drives every antenna chain, so all rows
    are identical; keeping the matrix shape makes the per-antenna gain of
    band b explicit as mixing[l, b-1].
    """

    n_bands: int
    band_hz: float
    selected_bands: frozenset[int]
    mixing: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_bands < 1:
            raise ConfigError("need at least one band")
        if not self.band_hz > 0:
            raise ConfigError("band width must be positive")
        bands = frozenset(int(b) for b in self.selected_bands)
        object.__setattr__(self, "selected_bands", bands)
        if not bands:
            raise ConfigError("at least one band must be selected")
        if not all(1 <= b <= self.n_bands for b in bands):
            raise ConfigError(f"selected bands must lie in [1, {self.n_bands}]")
        mix = np.asarray(self.mixing, dtype=np.float64)
        if mix.ndim != 2 or mix.shape[1] != self.n_bands:
            raise ConfigError(f"mixing matrix must be antennas x {self.n_bands}")
        object.__setattr__(self, "mixing", mix)

    @classmethod
    def make(cls, n_bands, band_hz, selected_bands, n_antennas, mixing_seed):
        """Draw one set of Gaussian band weights and share it across antennas."""
        rng = np.random.default_rng(mixing_seed)
        weights = rng.standard_normal(n_bands)
        mixing = np.tile(weights, (n_antennas, 1))
        return cls(n_bands, band_hz, frozenset(selected_bands), mixing)

    @property
    def decimation(self) -> int:
        return self.n_bands

    @property
    def rate_hz(self) -> float:
        """Full-span (Nyquist) sample rate."""
        return self.n_bands * self.band_hz

    def band_of(self, freq_hz: float) -> int:
        b = int(math.floor(freq_hz / self.band_hz)) + 1
        return min(max(b, 1), self.n_bands)


@dataclass(frozen=True)
class RfCapture:
    """Full-rate antenna samples plus the oracle views tests rely on."""

    samples: np.ndarray  # antennas x n_rf_samples
    noiseless: np.ndarray
    source_phases: np.ndarray  # sources x antennas

    @property
    def n_rf_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class BasebandBatch:
    """Digitizer output: antennas x K complex samples."""

    samples: np.ndarray
    sampling: str  # "nyquist" | "sub-nyquist"
    numeric_kind: str = "float64"
    source_phases: np.ndarray | None = None
    noiseless: np.ndarray | None = None

    @property
    def n_antennas(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


def _band_limits(cfg: SnsConfig, band: int) -> tuple[float, float]:
    return (band - 1) * cfg.band_hz, band * cfg.band_hz


def _bandlimited_unit_envelope(rng, n, rate_hz, cutoff_hz):
    """White circular-Gaussian samples brick-walled to |f| <= cutoff, unit power."""
    w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    spec = np.fft.fft(w)
    freqs = np.fft.fftfreq(n, d=1.0 / rate_hz)
    spec[np.abs(freqs) > cutoff_hz * (1.0 + 1e-12)] = 0.0
    a = np.fft.ifft(spec)
    rms = math.sqrt(float(np.mean(np.abs(a) ** 2)))
    return a / rms if rms > 0.0 else a


def synthesize_rf(scene, geom, cfg, seed, rate_hz=None) -> RfCapture:
    """Generate full-rate antenna samples for a scene.

    Each source is a band-limited random (or constant) unit-power envelope on
    its carrier; antenna l sees it scaled by exp(+j 2 pi f tau_l).  Circular
    Gaussian noise is added per antenna at the scene SNR, defined as summed
    source power over noise power.  Fully deterministic given ``seed`` and
    the per-source seeds.

    Parameters
    ----------
    scene : SourceScene
    geom : ArrayGeometry
    cfg : SnsConfig
        Provides the band plan; the capture is taken at ``cfg.rate_hz``.
    seed : int
        Noise stream seed.
    rate_hz : float, optional
        Must equal the full-span rate when given (sanity hook for callers
        that track rates separately).
    """
    if rate_hz is not None and not math.isclose(rate_hz, cfg.rate_hz):
        raise ConfigError(
            f"capture rate {rate_hz} must equal bands*band_hz = {cfg.rate_hz}"
        )
    rate = cfg.rate_hz
    n = scene.n_rf_samples
    for s in scene.sources:
        if not 1 <= s.band <= cfg.n_bands:
            raise ConfigError(f"source band {s.band} outside [1, {cfg.n_bands}]")
        lo, hi = _band_limits(cfg, s.band)
        if not lo <= s.carrier_hz < hi:
            raise ConfigError(
                f"carrier {s.carrier_hz} Hz falls outside band {s.band} "
                f"[{lo}, {hi}) Hz"
            )

    t = np.arange(n) / rate
    noiseless = np.zeros((geom.n_antennas, n), dtype=np.complex128)
    phases = np.zeros((scene.n_sources, geom.n_antennas), dtype=np.complex128)
    cutoff = 0.5 * ENVELOPE_BANDWIDTH_FRACTION * cfg.band_hz
    for m, src in enumerate(scene.sources):
        if src.envelope == "constant":
            envelope = np.ones(n, dtype=np.complex128)
        else:
            envelope = _bandlimited_unit_envelope(
                np.random.default_rng(src.seed), n, rate, cutoff
            )
        carrier = np.exp(2j * np.pi * src.carrier_hz * t)
        phases[m] = steering_phases(geom, src.carrier_hz, src.theta_deg)
        noiseless += src.amplitude * np.outer(phases[m], envelope * carrier)

    samples = noiseless.copy()
    if scene.snr_db is not None and scene.signal_power > 0.0:
        sigma = math.sqrt(scene.signal_power / 10.0 ** (scene.snr_db / 10.0))
        rng = np.random.default_rng(seed)
        noise = (
            rng.standard_normal(noiseless.shape)
            + 1j * rng.standard_normal(noiseless.shape)
        ) * (sigma / math.sqrt(2.0))
        samples = samples + noise
    return RfCapture(samples=samples, noiseless=noiseless, source_phases=phases)


def _lowpass_halfband(x, cfg):
    spec = np.fft.fft(x, axis=1)
    freqs = np.fft.fftfreq(x.shape[1], d=1.0 / cfg.rate_hz)
    spec[:, np.abs(freqs) > 0.5 * cfg.band_hz * (1.0 + 1e-12)] = 0.0
    return np.fft.ifft(spec, axis=1)


def _capture_views(rf):
    if isinstance(rf, RfCapture):
        return rf.samples, rf.noiseless, rf.source_phases
    return as_matrix(rf), None, None


def sns_digitize(rf, cfg: SnsConfig, mode: NumericMode | None = None) -> BasebandBatch:
    """Run the sub-Nyquist chain: mix, low-pass at band_hz/2, decimate.

    The mixing waveform is sum_{b in selected} mixing[l,b-1] *
    exp(-j 2 pi (b-1) band_hz t); any band in the selected set lands at
    baseband with its own weight, everything else is rejected by the filter.
    A tone at f in band b comes out at f - (b-1)*band_hz.  In fixed or
    float32 mode the converter output is conditioned like any block input
    ("adc").

    Accepts an RfCapture (oracle views are carried through the same linear
    chain) or a bare antennas x samples matrix.
    """
    samples, noiseless, phases = _capture_views(rf)
    n_ant, n_rf = samples.shape
    if n_ant != cfg.mixing.shape[0]:
        raise ShapeError(
            f"capture has {n_ant} antennas but mixing matrix has "
            f"{cfg.mixing.shape[0]} rows"
        )
    if n_rf % cfg.decimation != 0:
        raise ShapeError(
            f"sample count {n_rf} not divisible by the decimation {cfg.decimation}"
        )
    t = np.arange(n_rf) / cfg.rate_hz
    waves = np.exp(
        -2j * np.pi * np.arange(cfg.n_bands)[:, None] * cfg.band_hz * t[None, :]
    )
    sel = np.array(sorted(cfg.selected_bands)) - 1
    mixer = cfg.mixing[:, sel] @ waves[sel]  # antennas x n_rf

    def chain(x):
        return _lowpass_halfband(x * mixer, cfg)[:, :: cfg.decimation]

    out = chain(samples)
    numeric_kind = "float64" if mode is None else mode.kind
    if mode is not None:
        out = apply_mode(out, mode, "adc")
    return BasebandBatch(
        samples=out,
        sampling="sub-nyquist",
        numeric_kind=numeric_kind,
        source_phases=phases,
        noiseless=None if noiseless is None else chain(noiseless),
    )


def nyquist_digitize(rf, band: int, cfg: SnsConfig, mode: NumericMode | None = None) -> BasebandBatch:
    """Reference chain: ideal downconversion of one band, no decimation.

    Mixes by exp(-j 2 pi (band-1) band_hz t) with unit gain, low-passes at
    band_hz/2, and keeps every sample, so the output has ``decimation`` times
    as many columns as the sub-Nyquist chain for the same capture.
    """
    samples, noiseless, phases = _capture_views(rf)
    if not 1 <= band <= cfg.n_bands:
        raise ConfigError(f"band {band} outside [1, {cfg.n_bands}]")
    n_rf = samples.shape[1]
    t = np.arange(n_rf) / cfg.rate_hz
    shift = np.exp(-2j * np.pi * (band - 1) * cfg.band_hz * t)

    def chain(x):
        return _lowpass_halfband(x * shift[None, :], cfg)

    out = chain(samples)
    numeric_kind = "float64" if mode is None else mode.kind
    if mode is not None:
        out = apply_mode(out, mode, "adc")
    return BasebandBatch(
        samples=out,
        sampling="nyquist",
        numeric_kind=numeric_kind,
        source_phases=phases,
        noiseless=None if noiseless is None else chain(noiseless),
    )
