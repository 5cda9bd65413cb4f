"""Monte-Carlo error sweeps over sample count, SNR, and word length.

The error metric is the normalized estimation error: estimated and true
angle sets are matched one-to-one by the assignment with least total
absolute error (both lists are unordered), missing estimates are charged the
worst case of 180 degrees, and the mean matched error is divided by 180 so
the metric lives in [0, 1].

Sweeps regenerate every trial from ``base seed + trial index``, so points,
numeric modes and sampling chains all see identical scenes and the whole run
is reproducible byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import permutations

import numpy as np

from .coarray import sap_pipeline
from .errors import ConfigError, DomainError, ShapeError
from .fixedpoint import FxpFormat, NumericMode
from .frontend import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    SnsConfig,
    Source,
    SourceScene,
    nyquist_digitize,
    sns_digitize,
    synthesize_rf,
)
from .music import build_steering, estimate, make_estimator

__all__ = [
    "ExperimentConfig",
    "NdeeRecord",
    "PRESETS",
    "ndee",
    "matched_errors",
    "default_experiment",
    "default_block_scales",
    "run_trial",
    "run_sweep",
    "run_preset",
    "emit_csv",
    "parse_csv",
]

SWEEP_KINDS = ("samples", "snr", "wl-integer", "wl-fraction", "none")
PRESETS = ("fig5a", "fig5b", "fig5c", "fig6")

CSV_HEADER = "sweep_param,value,array,sampling,numeric,mean_ndee,std_ndee,trials"

MIN_SCALE = -16


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep definition plus the base scene it perturbs."""

    sweep: str = "none"
    values: tuple[int, ...] = (0,)
    trials: int = 1
    # scene
    thetas_deg: tuple[float, ...] = (50.0, 110.0)
    band: int = 4
    f_ref_hz: float = 31.0e6
    carrier_step_hz: float = 5.0e3
    snr_db: float | None = 20.0
    n_rf_samples: int = 2000
    envelope: str = "gaussian"
    # geometry
    arrays: tuple[str, ...] = ("ula",)
    ula_antennas: int = 4
    sparse_positions: tuple[int, ...] = (1, 2, 3, 6)
    spacing_m: float | None = None
    # digitization
    n_bands: int = 5
    band_hz: float = 10.0e6
    selected_bands: tuple[int, ...] | None = None  # None = all bands
    mixing_seed: int | None = None  # None = fresh weights per trial
    samplings: tuple[str, ...] = ("sub-nyquist",)
    # numerics
    numeric: NumericMode = NumericMode.float64()
    wl_total_bits: int = 17
    wl_integer_bits: int = 7
    scaling: str = "off"  # wl sweeps: off | on | both
    seed: int = 1234

    def __post_init__(self):
        if self.sweep not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep kind {self.sweep!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        vals = tuple(self.values)
        if not vals or list(vals) != sorted(vals):
            raise ConfigError("sweep values must be non-empty and ascending")
        if self.scaling not in ("off", "on", "both"):
            raise ConfigError(f"unknown scaling choice {self.scaling!r}")
        for a in self.arrays:
            if a not in ("ula", "sparse"):
                raise ConfigError(f"unknown array kind {a!r}")
        for s in self.samplings:
            if s not in ("sub-nyquist", "nyquist"):
                raise ConfigError(f"unknown sampling kind {s!r}")

    @property
    def resolved_spacing_m(self) -> float:
        # half wavelength at the reference carrier unless pinned explicitly
        if self.spacing_m is not None:
            return self.spacing_m
        return SPEED_OF_LIGHT / (2.0 * self.f_ref_hz)


@dataclass(frozen=True)
class NdeeRecord:
    sweep_param: str
    value: int
    array: str
    sampling: str
    numeric: str
    mean_ndee: float
    std_ndee: float
    trials: int


def matched_errors(estimated, truth) -> list[float]:
    """Per-source absolute errors under the least-total-error assignment.

    Estimates and truths are unordered; a brute-force scan over assignments
    is exact and cheap at the source counts used here.  Missing estimates
    (shorter list) count as 180 degrees each.
    """
    truth = [float(t) for t in truth]
    if not truth:
        raise DomainError("cannot score against an empty truth set")
    est = [None if e is None else float(e) for e in estimated]
    if len(est) > len(truth):
        raise ShapeError(f"{len(est)} estimates for {len(truth)} true angles")
    est = est + [None] * (len(truth) - len(est))

    def err(e, t):
        return 180.0 if e is None else abs(e - t)

    best = None
    for perm in permutations(est):
        errs = [err(e, t) for e, t in zip(perm, truth)]
        total = sum(errs)
        if best is None or total < best[0]:
            best = (total, errs)
    return best[1]


def ndee(estimated, truth) -> float:
    """Normalized estimation error: mean matched |error| / 180."""
    errs = matched_errors(estimated, truth)
    return float(np.mean(errs)) / 180.0


def default_experiment() -> ExperimentConfig:
    return ExperimentConfig()


def default_block_scales(fmt: FxpFormat, k_baseband: int) -> dict[str, int]:
    """Empirical per-block scale exponents for a given integer-bit budget.

    The correlation accumulator sums ~K squared samples, so its input is
    scaled down until the sum fits the representable range with headroom;
    the eigensolver input only needs a nudge at the very smallest budgets.
    """
    i = fmt.integer_bits
    s_acf = math.floor((i - 2 - math.log2(max(k_baseband, 2))) / 2)
    return {
        "acf": max(MIN_SCALE, min(0, s_acf)),
        "evd": max(MIN_SCALE, min(0, i - 3)),
    }


def _scene_for(cfg: ExperimentConfig, trial_index: int, k_rf: int, snr_db) -> tuple[SourceScene, int, int]:
    """Scene plus derived noise/mixing seeds for one trial (seed = base + trial)."""
    n_src = len(cfg.thetas_deg)
    ss = np.random.SeedSequence(cfg.seed + trial_index)
    children = ss.spawn(n_src + 2)

    def child_seed(c):
        return int(c.generate_state(1, np.uint64)[0])

    sources = tuple(
        Source(
            theta_deg=theta,
            carrier_hz=cfg.f_ref_hz - i * cfg.carrier_step_hz,
            band=cfg.band,
            amplitude=1.0,
            seed=child_seed(children[i]),
            envelope=cfg.envelope,
        )
        for i, theta in enumerate(cfg.thetas_deg)
    )
    scene = SourceScene(sources=sources, snr_db=snr_db, n_rf_samples=k_rf)
    noise_seed = child_seed(children[n_src])
    mixing_seed = (
        cfg.mixing_seed if cfg.mixing_seed is not None else child_seed(children[n_src + 1])
    )
    return scene, noise_seed, mixing_seed


def _geometry_for(cfg: ExperimentConfig, array_kind: str) -> ArrayGeometry:
    spacing = cfg.resolved_spacing_m
    if array_kind == "ula":
        return ArrayGeometry.uniform(cfg.ula_antennas, spacing)
    return ArrayGeometry.sparse(cfg.sparse_positions, spacing)


def run_trial(cfg, array_kind, sampling, mode, trial_index, *,
              k_rf=None, snr_db="base", grid=None, est_cfg=None):
    """Generate, digitize and estimate one trial; returns (doas, truths)."""
    k_rf = cfg.n_rf_samples if k_rf is None else int(k_rf)
    snr = cfg.snr_db if snr_db == "base" else snr_db
    scene, noise_seed, mixing_seed = _scene_for(cfg, trial_index, k_rf, snr)
    geom = _geometry_for(cfg, array_kind)
    selected = cfg.selected_bands or tuple(range(1, cfg.n_bands + 1))
    sns = SnsConfig.make(cfg.n_bands, cfg.band_hz, selected, geom.n_antennas, mixing_seed)
    capture = synthesize_rf(scene, geom, sns, seed=noise_seed)
    if sampling == "sub-nyquist":
        batch = sns_digitize(capture, sns, mode)
    else:
        batch = nyquist_digitize(capture, cfg.band, sns, mode)
    m = scene.n_sources
    if array_kind == "ula":
        grid = grid if grid is not None else build_steering(geom, cfg.f_ref_hz)
        est_cfg = est_cfg if est_cfg is not None else make_estimator("ula", geom.n_antennas, [m])
        result = estimate(batch.samples, grid, est_cfg, mode)
    else:
        smoothed = sap_pipeline(batch.samples, geom, mode)
        grid = grid if grid is not None else build_steering(geom, cfg.f_ref_hz, virtual=True)
        est_cfg = est_cfg if est_cfg is not None else make_estimator("saa", geom.n_slots, [m])
        result = estimate(smoothed, grid, est_cfg, mode)
    return result.doas_deg, cfg.thetas_deg


def _point_params(cfg: ExperimentConfig, value, sampling):
    """Per-point (k_rf, snr, numeric modes) for one sweep value."""
    k_rf, snr = cfg.n_rf_samples, cfg.snr_db
    if cfg.sweep == "samples":
        k_rf = int(value)
    elif cfg.sweep == "snr":
        snr = float(value)
    if cfg.sweep in ("wl-integer", "wl-fraction"):
        if cfg.sweep == "wl-integer":
            fmt = FxpFormat(cfg.wl_total_bits, int(value))
        else:
            fmt = FxpFormat(cfg.wl_integer_bits + int(value), cfg.wl_integer_bits)
        k_bb = k_rf // cfg.n_bands if sampling == "sub-nyquist" else k_rf
        modes = []
        if cfg.scaling in ("off", "both"):
            modes.append(NumericMode.fixed(fmt))
        if cfg.scaling in ("on", "both"):
            modes.append(NumericMode.fixed(fmt, default_block_scales(fmt, k_bb)))
        return k_rf, snr, modes
    return k_rf, snr, [cfg.numeric]


def run_sweep(cfg: ExperimentConfig) -> list[NdeeRecord]:
    """Run every (value, array, sampling, mode) cell of the sweep.

    Trials are seeded ``base + trial`` everywhere, so cells are matched; any
    trial failure aborts the sweep with its index attached.
    """
    records = []
    grids = {}
    est_cfgs = {}
    m = len(cfg.thetas_deg)
    for kind in cfg.arrays:
        geom = _geometry_for(cfg, kind)
        if kind == "ula":
            grids[kind] = build_steering(geom, cfg.f_ref_hz)
            est_cfgs[kind] = make_estimator("ula", geom.n_antennas, [m])
        else:
            grids[kind] = build_steering(geom, cfg.f_ref_hz, virtual=True)
            est_cfgs[kind] = make_estimator("saa", geom.n_slots, [m])

    for value in cfg.values:
        for kind in cfg.arrays:
            for sampling in cfg.samplings:
                k_rf, snr, modes = _point_params(cfg, value, sampling)
                for mode in modes:
                    errs = []
                    for trial in range(cfg.trials):
                        try:
                            doas, truth = run_trial(
                                cfg, kind, sampling, mode, trial,
                                k_rf=k_rf, snr_db=snr,
                                grid=grids[kind], est_cfg=est_cfgs[kind],
                            )
                        except Exception as exc:
                            raise type(exc)(
                                f"trial {trial} failed at {cfg.sweep}={value} "
                                f"({kind}, {sampling}, {mode.label()}): {exc}"
                            ) from exc
                        errs.append(ndee(doas, truth))
                    mean = float(np.mean(errs))
                    std = float(np.std(errs, ddof=1)) if len(errs) > 1 else 0.0
                    records.append(
                        NdeeRecord(
                            sweep_param=cfg.sweep,
                            value=int(value),
                            array=kind,
                            sampling=sampling,
                            numeric=mode.label(),
                            mean_ndee=mean,
                            std_ndee=std,
                            trials=cfg.trials,
                        )
                    )
    return records


def _preset_configs(name: str) -> list[ExperimentConfig]:
    base = default_experiment()
    if name == "fig5a":
        return [replace(
            base, sweep="samples", values=(500, 1000, 2000, 4000), trials=200,
            arrays=("ula",), samplings=("sub-nyquist", "nyquist"),
        )]
    if name == "fig5b":
        return [replace(
            base, sweep="samples", values=(500, 1000, 2000, 4000), trials=200,
            arrays=("sparse",), samplings=("sub-nyquist", "nyquist"),
        )]
    if name == "fig5c":
        return [replace(
            base, sweep="snr", values=(0, 5, 10, 15, 20), trials=200,
            arrays=("ula", "sparse"), samplings=("sub-nyquist", "nyquist"),
        )]
    if name == "fig6":
        common = dict(trials=100, arrays=("ula", "sparse"), samplings=("sub-nyquist",))
        return [
            replace(base, sweep="wl-integer", values=(2, 3, 4, 5, 7), scaling="both", **common),
            replace(base, sweep="wl-fraction", values=(6, 10, 13, 16), scaling="on", **common),
        ]
    raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")


def run_preset(name: str, overrides=None) -> list[NdeeRecord]:
    """Run a bundled experiment, optionally overriding individual settings."""
    from .config import apply_overrides  # local import, config builds on this module

    records = []
    for cfg in _preset_configs(name):
        if overrides:
            cfg = apply_overrides(cfg, overrides)
        records.extend(run_sweep(cfg))
    return records


def _record_key(r: NdeeRecord):
    return (r.sweep_param, r.value, r.array, r.sampling, r.numeric)


def emit_csv(records, path) -> None:
    """Write records as UTF-8 CSV with a fixed header and deterministic order."""
    if not records:
        raise ConfigError("no records to write")
    lines = [CSV_HEADER]
    for r in sorted(records, key=_record_key):
        lines.append(
            f"{r.sweep_param},{r.value},{r.array},{r.sampling},{r.numeric},"
            f"{r.mean_ndee!r},{r.std_ndee!r},{r.trials}"
        )
    data = "\n".join(lines) + "\n"
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
    except OSError as exc:
        raise ConfigError(f"cannot write CSV to {path}: {exc}") from exc


def parse_csv(path) -> list[NdeeRecord]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: missing or unexpected CSV header")
    records = []
    for ln in lines[1:]:
        sweep_param, value, array, sampling, numeric, mean, std, trials = ln.split(",")
        records.append(
            NdeeRecord(
                sweep_param=sweep_param,
                value=int(value),
                array=array,
                sampling=sampling,
                numeric=numeric,
                mean_ndee=float(mean),
                std_ndee=float(std),
                trials=int(trials),
            )
        )
    return records
