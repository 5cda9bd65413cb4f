"""MUSIC direction finding with a source-count-keyed reconfiguration registry.

The estimator scans a 1-degree steering grid over [0, 180] degrees: project
each grid column onto the noise subspace of the covariance, take the
reciprocal of the squared projection norm as the spectrum (no square root --
it is a monotone transform and cannot move peaks), and report the angles of
the strongest local maxima.  The noise-subspace width depends on the active
source count M, so the M-dependent stages live in a registry and can be
swapped at runtime without touching anything upstream.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .coarray import SmoothedMatrix, acf
from .errors import ConfigError, DomainError, ShapeError
from .fixedpoint import NumericMode, apply_mode, quantize_array
from .frontend import ArrayGeometry, tau
from .linalg import EigenDecomposition, as_matrix, evd_hermitian
from . import _kernels

__all__ = [
    "DENOMINATOR_FLOOR",
    "SteeringGrid",
    "NoiseSubspace",
    "MusicResult",
    "EstimatorConfig",
    "build_steering",
    "extract_vn",
    "msg",
    "find_peaks",
    "make_estimator",
    "reconfigure",
    "estimate",
    "estimate_from_covariance",
]

#: squared projection norms below this are clamped before the reciprocal
DENOMINATOR_FLOOR = 1e-12

THETA_STEP_DEG = 1
N_GRID = 181


@dataclass(frozen=True)
class SteeringGrid:
    """Unit-modulus steering vectors for every grid angle (rows x 181)."""

    matrix: np.ndarray
    thetas_deg: np.ndarray
    freq_hz: float
    virtual: bool = False

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class NoiseSubspace:
    """Orthonormal noise-eigenvector columns (dim x (dim - m))."""

    vectors: np.ndarray
    m: int

    @property
    def n_rows(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class MusicResult:
    spectrum: np.ndarray
    peak_indices: tuple[int, ...]  # all local maxima, strongest first
    doas_deg: tuple[int, ...]  # first m peak angles
    m_used: int

    @property
    def short(self) -> bool:
        """True when fewer peaks were found than sources requested."""
        return len(self.doas_deg) < self.m_used


def build_steering(geom: ArrayGeometry, freq_hz: float, virtual: bool = False) -> SteeringGrid:
    """Evaluate exp(+j 2 pi f tau_l(theta)) on the 1-degree angle grid.

    With ``virtual`` the rows run over every slot 1..L' of a sparse geometry
    (the filled aperture the coarray pre-processing reconstructs); otherwise
    rows follow the physical antenna positions.
    """
    if virtual:
        if geom.kind != "sparse":
            raise ConfigError("virtual steering grid requires a sparse geometry")
        slots = tuple(range(1, geom.n_slots + 1))
    else:
        slots = geom.positions
    thetas = np.arange(N_GRID, dtype=np.float64) * THETA_STEP_DEG
    delays = np.array([[tau(geom, s, th) for th in thetas] for s in slots])
    return SteeringGrid(
        matrix=np.exp(2j * np.pi * freq_hz * delays),
        thetas_deg=thetas,
        freq_hz=freq_hz,
        virtual=virtual,
    )


def extract_vn(evd: EigenDecomposition, m: int) -> NoiseSubspace:
    """Eigenvectors of the dim - m smallest eigenvalues, ascending by eigenvalue."""
    dim = evd.dim
    if m < 1:
        raise DomainError(f"source count must be positive, got {m}")
    if m >= dim:
        raise DomainError(f"too many sources for aperture: m={m}, dim={dim}")
    order = np.arange(dim - 1, m - 1, -1)
    return NoiseSubspace(vectors=evd.vectors[:, order].copy(), m=m)


def msg(grid: SteeringGrid, vn: NoiseSubspace, mode: NumericMode | None = None) -> np.ndarray:
    """Spectrum over the grid: 1 / ||s^H V_n||^2 per angle, floored, no sqrt.

    Skipping the square root leaves every peak comparison unchanged; the
    floor keeps exactly orthogonal angles finite instead of dividing by zero.
    """
    if grid.n_rows != vn.n_rows:
        raise ShapeError(
            f"steering grid has {grid.n_rows} rows but subspace has {vn.n_rows}"
        )
    if mode is None or mode.kind == "float64":
        q = grid.matrix.conj().T @ vn.vectors
        denom = np.sum(np.abs(q) ** 2, axis=1)
    elif mode.kind == "float32":
        g = apply_mode(grid.matrix, mode, "msg")
        v = apply_mode(vn.vectors, mode, "msg")
        q = g.conj().T @ v
        denom = np.sum(np.abs(q) ** 2, axis=1)
    else:
        scale = mode.scale_for("msg")
        g = apply_mode(grid.matrix, mode, "msg")
        v = apply_mode(vn.vectors, mode, "msg")
        denom = _kernels.msg_quantized(g, v, mode.fmt.kernel_params())
        denom = denom * 2.0 ** (-4 * scale)
    return 1.0 / np.maximum(denom, DENOMINATOR_FLOOR)


def find_peaks(p, m: int) -> MusicResult:
    """Pick the m strongest strict local maxima of a spectrum.

    Interior points must beat both neighbours strictly; index 0 only needs to
    beat index 1 and the last index its predecessor.  Plateau ties are not
    peaks.  If fewer maxima exist than requested the result simply carries
    them all (``short`` flags it).
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or len(p) < 2:
        raise ShapeError("spectrum must be a vector of at least two values")
    inner = np.nonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:]))[0] + 1
    idx = list(inner)
    if p[0] > p[1]:
        idx.insert(0, 0)
    if p[-1] > p[-2]:
        idx.append(len(p) - 1)
    idx.sort(key=lambda i: (-p[i], i))
    peaks = tuple(int(i) for i in idx)
    return MusicResult(
        spectrum=p,
        peak_indices=peaks,
        doas_deg=peaks[: min(m, len(peaks))],
        m_used=m,
    )


@dataclass(frozen=True)
class _Stage:
    """One registry entry: the subspace/spectrum pair wired for a fixed m."""

    m: int

    def noise_subspace(self, evd):
        return extract_vn(evd, self.m)

    def spectrum(self, grid, vn, mode=None):
        return msg(grid, vn, mode)


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimation pipeline wiring for one array deployment.

    ``registry`` maps each supported source count to its prepared stage; only
    ``active_m`` decides which one runs.  Swapping is a pure configuration
    change, mirroring a partial hardware reconfiguration: upstream state is
    untouched and the last swap's latency and no-op flag are kept for
    inspection.
    """

    kind: str  # "ula" | "saa"
    dim: int
    registry: Mapping[int, _Stage]
    active_m: int
    last_swap_s: float | None = None
    last_swap_noop: bool = False

    def __post_init__(self):
        object.__setattr__(self, "registry", MappingProxyType(dict(self.registry)))


def make_estimator(kind: str, dim: int, source_counts) -> EstimatorConfig:
    """Build a registry covering the given source counts; validates up front."""
    if kind not in ("ula", "saa"):
        raise ConfigError(f"unknown estimator kind {kind!r}")
    counts = sorted(set(int(m) for m in source_counts))
    if not counts:
        raise ConfigError("registry needs at least one source count")
    registry = {}
    for m in counts:
        if m < 1:
            raise DomainError(f"source count must be positive, got {m}")
        if m >= dim:
            raise DomainError(f"too many sources for aperture: m={m}, dim={dim}")
        registry[m] = _Stage(m)
    return EstimatorConfig(kind=kind, dim=dim, registry=registry, active_m=counts[0])


def reconfigure(cfg: EstimatorConfig, m_new: int) -> EstimatorConfig:
    """Switch the active source count to a registered value."""
    if m_new not in cfg.registry:
        raise ConfigError(
            f"source count {m_new} not registered; available: "
            f"{sorted(cfg.registry)}"
        )
    start = time.perf_counter()
    noop = m_new == cfg.active_m
    return replace(
        cfg,
        active_m=m_new,
        last_swap_s=time.perf_counter() - start,
        last_swap_noop=noop,
    )


def _evd_input(r, mode):
    """Condition the covariance for the eigensolver under the active mode.

    Fixed mode snaps the scaled matrix to the grid and restores exact
    Hermitian symmetry from the upper triangle (truncation rounds re and im
    independently, which would otherwise leave grid-sized asymmetry).
    """
    if mode is None or mode.kind == "float64":
        return r
    r = apply_mode(r, mode, "evd")
    if mode.kind == "fixed":
        upper = np.triu(r, 1)
        r = upper + upper.conj().T + np.diag(r.diagonal().real)
    return r


def estimate_from_covariance(r, grid: SteeringGrid, cfg: EstimatorConfig,
                             mode: NumericMode | None = None) -> MusicResult:
    """Run eigendecomposition -> noise subspace -> spectrum -> peaks on a
    covariance-like Hermitian matrix."""
    if cfg.active_m not in cfg.registry:
        raise ConfigError(f"active source count {cfg.active_m} not registered")
    stage = cfg.registry[cfg.active_m]
    evd = evd_hermitian(_evd_input(as_matrix(r), mode))
    if mode is not None and mode.kind == "fixed":
        evd = EigenDecomposition(
            values=np.real(quantize_array(evd.values, mode.fmt)),
            vectors=quantize_array(evd.vectors, mode.fmt),
        )
    vn = stage.noise_subspace(evd)
    spectrum = stage.spectrum(grid, vn, mode)
    return find_peaks(spectrum, cfg.active_m)


def estimate(mat, grid: SteeringGrid, cfg: EstimatorConfig,
             mode: NumericMode | None = None) -> MusicResult:
    """Estimate arrival angles from a batch (ULA) or a smoothed matrix (SAA).

    The ULA path forms the sample autocorrelation first; the sparse path
    receives the coarray-smoothed matrix, which is already covariance-like
    Hermitian, so correlating it again would only square the eigenvalue
    spread without moving any eigenvector or peak.
    """
    if cfg.kind == "ula":
        r = acf(as_matrix(mat), mode)
    else:
        r = mat.matrix if isinstance(mat, SmoothedMatrix) else as_matrix(mat)
    return estimate_from_covariance(r, grid, cfg, mode)
