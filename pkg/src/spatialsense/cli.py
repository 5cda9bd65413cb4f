"""The ``sense`` command line.

Subcommands: ``simulate`` (scene -> digitized batch file), ``estimate``
(batch file -> arrival angles), ``sweep`` (bundled error experiments ->
CSV), ``version``.  Exit codes: 0 success, 1 usage error, 2 runtime error.
``SENSE_SEED`` overrides the configured seed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .batchio import read_batch, write_batch, write_matrix
from .coarray import sap_pipeline
from .config import apply_overrides, load_config
from .errors import SenseError
from .experiments import (
    PRESETS,
    default_experiment,
    emit_csv,
    run_preset,
    _geometry_for,
    _scene_for,
)
from .fixedpoint import NumericMode
from .frontend import SPEED_OF_LIGHT, ArrayGeometry, SnsConfig, nyquist_digitize, sns_digitize, synthesize_rf
from .music import build_steering, estimate, make_estimator


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract here is 1
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize a scene and write a batch file")
    sim.add_argument("--config", required=True, help="flat key-value config file")
    sim.add_argument("--out", required=True, help="output batch path")

    est = sub.add_parser("estimate", help="estimate arrival angles from a batch file")
    est.add_argument("--in", dest="infile", required=True, help="input batch path")
    est.add_argument("--array", choices=("ula", "sparse"), default="ula")
    est.add_argument("--m", type=int, default=1, help="number of sources")
    est.add_argument("--band-freq", type=float, required=True,
                     help="carrier frequency (Hz) of the band being estimated")
    est.add_argument("--numeric", default="float64",
                     help="float64 | float32 | fixed:W,I")
    est.add_argument("--positions", default="1,2,3,6",
                     help="sparse slot indices (comma separated)")
    est.add_argument("--spacing-m", type=float, default=None,
                     help="slot spacing in meters (default: half wavelength at --band-freq)")
    est.add_argument("--scale", action="append", default=[], metavar="BLOCK=EXP",
                     help="fixed-mode block scale exponent (repeatable)")
    est.add_argument("--dump-spectrum", default=None, metavar="PATH",
                     help="write theta_deg,P CSV of the spectrum")
    est.add_argument("--dump-sap", default=None, metavar="PATH",
                     help="write the smoothed matrix as a batch file (sparse only)")

    swp = sub.add_parser("sweep", help="run a bundled experiment preset")
    swp.add_argument("--preset", required=True, choices=PRESETS)
    swp.add_argument("--config", default=None, help="optional override config file")
    swp.add_argument("--out", required=True, help="output CSV path")

    sub.add_parser("version", help="print the package version")
    return parser


def _cmd_simulate(args) -> int:
    kv = load_config(args.config)
    cfg = apply_overrides(default_experiment(), kv)
    if "SENSE_SEED" in os.environ:
        cfg = apply_overrides(cfg, {"seed": os.environ["SENSE_SEED"]})
    array_kind = cfg.arrays[0]
    sampling = cfg.samplings[0]
    mode = cfg.numeric
    scene, noise_seed, mixing_seed = _scene_for(cfg, 0, cfg.n_rf_samples, cfg.snr_db)
    geom = _geometry_for(cfg, array_kind)
    selected = cfg.selected_bands or tuple(range(1, cfg.n_bands + 1))
    sns = SnsConfig.make(cfg.n_bands, cfg.band_hz, selected, geom.n_antennas, mixing_seed)
    capture = synthesize_rf(scene, geom, sns, seed=noise_seed)
    if sampling == "sub-nyquist":
        batch = sns_digitize(capture, sns, mode)
    else:
        batch = nyquist_digitize(capture, cfg.band, sns, mode)
    write_batch(args.out, batch)
    print(
        f"wrote {args.out}: {batch.n_antennas} antennas x {batch.n_samples} "
        f"samples ({batch.sampling}, {batch.numeric_kind}, seed {cfg.seed})"
    )
    return 0


def _parse_scales(pairs):
    scales = {}
    for item in pairs:
        if "=" not in item:
            raise _UsageError(f"--scale expects BLOCK=EXP, got {item!r}")
        block, exp = item.split("=", 1)
        try:
            scales[block.strip()] = int(exp)
        except ValueError:
            raise _UsageError(f"--scale exponent must be an integer, got {exp!r}") from None
    return scales


def _cmd_estimate(args) -> int:
    batch = read_batch(args.infile)
    mode = NumericMode.from_string(args.numeric)
    if mode.kind == "fixed" and args.scale:
        mode = NumericMode.fixed(mode.fmt, _parse_scales(args.scale))
    spacing = args.spacing_m
    if spacing is None:
        spacing = SPEED_OF_LIGHT / (2.0 * args.band_freq)
    if args.array == "ula":
        geom = ArrayGeometry.uniform(batch.n_antennas, spacing)
        grid = build_steering(geom, args.band_freq)
        cfg = make_estimator("ula", geom.n_antennas, [args.m])
        result = estimate(batch.samples, grid, cfg, mode)
    else:
        positions = tuple(int(p) for p in args.positions.split(","))
        geom = ArrayGeometry.sparse(positions, spacing)
        if geom.n_antennas != batch.n_antennas:
            raise SenseError(
                f"batch has {batch.n_antennas} antennas but --positions lists "
                f"{geom.n_antennas}"
            )
        smoothed = sap_pipeline(batch.samples, geom, mode)
        if args.dump_sap:
            write_matrix(args.dump_sap, smoothed.matrix, batch.sampling, batch.numeric_kind)
        grid = build_steering(geom, args.band_freq, virtual=True)
        cfg = make_estimator("saa", geom.n_slots, [args.m])
        result = estimate(smoothed, grid, cfg, mode)
    if args.dump_sap and args.array == "ula":
        raise _UsageError("--dump-sap applies only to --array sparse")
    if args.dump_spectrum:
        lines = ["theta_deg,P"] + [
            f"{int(t)},{p!r}" for t, p in zip(np.arange(len(result.spectrum)), result.spectrum)
        ]
        with open(args.dump_spectrum, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    print("doa_deg: " + " ".join(str(d) for d in sorted(result.doas_deg)))
    if result.short:
        print(f"warning: only {len(result.doas_deg)} of {result.m_used} peaks found",
              file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    overrides = load_config(args.config) if args.config else {}
    if "SENSE_SEED" in os.environ:
        overrides = dict(overrides, seed=os.environ["SENSE_SEED"])
    records = run_preset(args.preset, overrides)
    emit_csv(records, args.out)
    print(f"wrote {args.out}: {len(records)} records")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "version":
            print(f"sense {__version__}")
            return 0
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        return _cmd_sweep(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SenseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
