"""Flat key-value configuration files.

Format: one ``section.key = value`` per line, ``#`` comments, blank lines
ignored.  Lists are comma-separated.  The same file drives both ``sense
simulate`` and sweep overrides; unknown keys are rejected so typos surface
immediately.
"""

from __future__ import annotations

from dataclasses import replace

from .errors import ConfigError
from .fixedpoint import PIPELINE_BLOCKS, FxpFormat, NumericMode
from .experiments import ExperimentConfig

__all__ = ["parse_config_text", "load_config", "apply_overrides"]


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _csv_floats(v):
    return tuple(float(p) for p in v.split(","))


def _csv_ints(v):
    return tuple(int(p) for p in v.split(","))


def _csv_strs(v):
    return tuple(p.strip() for p in v.split(","))


def _optional_float(v):
    return None if v.lower() in ("none", "off") else float(v)


def _optional_int(v):
    return None if v.lower() in ("none", "per-trial") else int(v)


def _bands(v):
    return None if v.lower() == "all" else _csv_ints(v)


# key -> (ExperimentConfig field, converter)
_FIELD_KEYS = {
    "sweep.kind": ("sweep", str),
    "sweep.values": ("values", _csv_ints),
    "sweep.trials": ("trials", int),
    "sweep.scaling": ("scaling", str),
    "sweep.arrays": ("arrays", _csv_strs),
    "scene.thetas_deg": ("thetas_deg", _csv_floats),
    "scene.band": ("band", int),
    "scene.f_ref_hz": ("f_ref_hz", float),
    "scene.carrier_step_hz": ("carrier_step_hz", float),
    "scene.snr_db": ("snr_db", _optional_float),
    "scene.k_rf": ("n_rf_samples", int),
    "scene.envelope": ("envelope", str),
    "array.kind": ("arrays", _csv_strs),
    "array.l": ("ula_antennas", int),
    "array.positions": ("sparse_positions", _csv_ints),
    "array.spacing_m": ("spacing_m", _optional_float),
    "sns.n_bands": ("n_bands", int),
    "sns.band_hz": ("band_hz", float),
    "sns.beta": ("selected_bands", _bands),
    "sns.mixing_seed": ("mixing_seed", _optional_int),
    "sampling.kind": ("samplings", _csv_strs),
    "seed": ("seed", int),
}

_NUMERIC_KEYS = {"numeric.kind", "numeric.total_bits", "numeric.integer_bits",
                 "numeric.rounding", "numeric.overflow"}


def _numeric_from(kv: dict[str, str], base: ExperimentConfig) -> dict:
    """Assemble numeric-mode fields from numeric.* keys."""
    updates = {}
    total = int(kv.get("numeric.total_bits", base.wl_total_bits))
    integer = int(kv.get("numeric.integer_bits", base.wl_integer_bits))
    updates["wl_total_bits"] = total
    updates["wl_integer_bits"] = integer

    scales = dict(base.numeric.block_scales)
    for key, value in kv.items():
        if key.startswith("numeric.scales."):
            block = key[len("numeric.scales.") :]
            if block not in PIPELINE_BLOCKS:
                raise ConfigError(f"unknown pipeline block in {key!r}")
            scales[block] = int(value)

    kind = kv.get("numeric.kind", base.numeric.kind)
    if kind in ("float64", "float32"):
        updates["numeric"] = NumericMode(kind)
    elif kind == "fixed":
        fmt = FxpFormat(
            total,
            integer,
            kv.get("numeric.rounding", "truncate"),
            kv.get("numeric.overflow", "saturate"),
        )
        updates["numeric"] = NumericMode.fixed(fmt, scales)
    else:
        raise ConfigError(f"unknown numeric.kind {kind!r}")
    return updates


def apply_overrides(base: ExperimentConfig, kv: dict[str, str]) -> ExperimentConfig:
    """Overlay flat config keys onto an experiment configuration."""
    updates = {}
    for key, value in kv.items():
        if key in _FIELD_KEYS:
            field, conv = _FIELD_KEYS[key]
            try:
                updates[field] = conv(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
        elif key in _NUMERIC_KEYS or key.startswith("numeric.scales."):
            continue  # handled together below
        elif key == "out":
            continue  # consumed by the CLI
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if any(k in _NUMERIC_KEYS or k.startswith("numeric.scales.") for k in kv):
        updates.update(_numeric_from(kv, base))
    return replace(base, **updates)
