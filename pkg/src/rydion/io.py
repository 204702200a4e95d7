"""Configuration files and CSV formats.

Config files are flat JSON objects.  Physical quantities carry their unit in
the key name; unknown keys are rejected.  CSV files start with ``# key = value``
header lines followed by a column header row.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .detection import SequenceParams, branch_to_d52
from .errors import ConfigError, SchemaError
from .inference import METADATA_KEYS, FitResult, MeasuredSpectrum
from .lineshape import (
    VUV_WAVENUMBER,
    ZEEMAN_FWHM_PER_TESLA,
    BroadeningParams,
    Spectrum,
    TrapDrive,
    TrapLineModel,
)
from .structure import QuantumDefectModel

# key -> (type, default); default None means "absent unless given"
CONFIG_KEYS: dict[str, tuple[type, object]] = {
    # constants
    "rydberg_constant_inf_per_cm": (float, None),
    "electron_ion_mass_ratio": (float, None),
    # structure
    "core_charge": (int, 2),
    "quantum_defects": (dict, None),
    "term_file_path": (str, None),
    "angular_shift_rule": (str, "nearest"),
    # trap and line
    "omega_drive_hz": (float, None),
    "E_ion_V_per_m": (float, 0.0),
    "x_mm_m": (float, 0.0),
    "k_rad_per_m": (float, VUV_WAVENUMBER),
    "alpha_MHz_per_Vcm2": (float, 0.0),
    "omega0_hz": (float, 0.0),
    "temperature_K": (float, 5e-3),
    "B_T": (float, 0.45e-3),
    "zeeman_fwhm_per_tesla_hz_per_T": (float, ZEEMAN_FWHM_PER_TESLA),
    "truncation_tolerance": (float, 1e-10),
    # synthesis grid
    "grid_start_hz": (float, None),
    "grid_stop_hz": (float, None),
    "grid_points": (int, 401),
    # detection sequence
    "branch_D52_value": (float, 0.07),
    "branch_interpretation": (str, "ratio"),
    "p_ryd_to_S": (float, 0.0),
    "p_pump_S_to_D52": (float, 0.90),
    "include_pumping": (bool, True),
    "dark_error": (float, 0.0),
    "bright_error": (float, 0.0),
    "background": (float, 0.0),
    "shots": (int, 50),
    "peak_excitation": (float, 1.0),
    "seed": (int, 0),
    # fitting
    "fit_free": (list, None),
    "fit_alpha_sign": (int, None),
    "fit_weights": (str, "observed"),
}


def validate_config(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {}
    for key, (typ, default) in CONFIG_KEYS.items():
        if key not in raw or raw[key] is None:
            if default is not None:
                cfg[key] = default
            continue
        value = raw[key]
        if typ is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if typ is bool and not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false")
        if typ is int and (isinstance(value, bool) or not isinstance(value, int)):
            raise ConfigError(f"{key} must be an integer")
        if not isinstance(value, typ):
            raise ConfigError(f"{key} must be of type {typ.__name__}")
        if typ is float and not math.isfinite(value):
            raise ConfigError(f"{key} must be finite")
        cfg[key] = value
    return cfg


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return validate_config({})
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return validate_config(raw)


def dump_config(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


def require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing required config key {key}")
    return cfg[key]


def constants_from_config(cfg: dict) -> PhysicalConstants:
    kw = {}
    if "rydberg_constant_inf_per_cm" in cfg:
        kw["rydberg_constant_inf"] = cfg["rydberg_constant_inf_per_cm"]
    if "electron_ion_mass_ratio" in cfg:
        kw["electron_ion_mass_ratio"] = cfg["electron_ion_mass_ratio"]
    if not kw:
        return DEFAULT_CONSTANTS
    try:
        return PhysicalConstants(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def structure_from_config(cfg: dict) -> QuantumDefectModel:
    constants = constants_from_config(cfg)
    rule = cfg.get("angular_shift_rule", "nearest")
    if cfg.get("core_charge", 2) == 2:
        return QuantumDefectModel.calcium_ion(
            cfg.get("term_file_path"),
            constants=constants,
            overrides=cfg.get("quantum_defects"),
            shift_rule=rule,
        )
    from .structure import parse_l

    defects = {parse_l(k): float(v) for k, v in (cfg.get("quantum_defects") or {}).items()}
    return QuantumDefectModel(cfg["core_charge"], defects, constants=constants, shift_rule=rule)


def drive_from_config(cfg: dict) -> TrapDrive:
    return TrapDrive(
        require(cfg, "omega_drive_hz"),
        cfg["E_ion_V_per_m"],
        cfg["x_mm_m"],
        cfg["k_rad_per_m"],
    )


def broadening_from_config(cfg: dict) -> BroadeningParams:
    return BroadeningParams(
        temperature=cfg["temperature_K"],
        magnetic_field=cfg["B_T"],
        zeeman_fwhm_per_tesla=cfg["zeeman_fwhm_per_tesla_hz_per_T"],
    )


def line_model_from_config(cfg: dict) -> TrapLineModel:
    return TrapLineModel(
        drive_from_config(cfg),
        cfg["alpha_MHz_per_Vcm2"],
        cfg["omega0_hz"],
        broadening_from_config(cfg),
        cfg["truncation_tolerance"],
    )


def sequence_from_config(cfg: dict) -> SequenceParams:
    return SequenceParams(
        p_ryd_to_D52=branch_to_d52(cfg["branch_D52_value"], cfg["branch_interpretation"]),
        p_ryd_to_S=cfg["p_ryd_to_S"],
        p_pump_S_to_D52=cfg["p_pump_S_to_D52"],
        include_pumping=cfg["include_pumping"],
        dark_error=cfg["dark_error"],
        bright_error=cfg["bright_error"],
        background=cfg["background"],
    )


# --- CSV -----------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _header(meta: dict) -> list[str]:
    out = []
    for k, v in meta.items():
        text = json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else _fmt(v)
        out.append(f"# {k} = {text}")
    return out


def write_spectrum_csv(path, spectrum: Spectrum, meta: dict) -> None:
    lines = _header(meta) + ["detuning_hz,value"]
    lines += [f"{_fmt(x)},{_fmt(y)}" for x, y in zip(spectrum.detunings, spectrum.values)]
    _write(path, lines)


def read_spectrum_csv(path) -> tuple[Spectrum, dict]:
    meta, rows, _ = _read_table(path, [("detuning_hz", "value")])
    x = np.array([float(r[0]) for r, _ in rows])
    y = np.array([float(r[1]) for r, _ in rows])
    return Spectrum(x, y), {k: v for k, (v, _) in meta.items()}


def write_measured_csv(path, data: MeasuredSpectrum, meta: dict | None = None, column="detuning_hz") -> None:
    merged = dict(data.metadata)
    merged.update(meta or {})
    lines = _header(merged) + [f"{column},shots,dark_counts"]
    lines += [
        f"{_fmt(f)},{int(n)},{int(k)}" for f, n, k in zip(data.frequency, data.shots, data.dark_counts)
    ]
    _write(path, lines)


_METADATA_TYPES = {k: float for k in METADATA_KEYS}
_METADATA_TYPES["initial_state"] = str


def read_measured_csv(path) -> MeasuredSpectrum:
    """Read ``detuning_hz|frequency_hz,shots,dark_counts`` with ``# key = value`` metadata."""
    meta, rows, _ = _read_table(
        path, [("detuning_hz", "shots", "dark_counts"), ("frequency_hz", "shots", "dark_counts")]
    )
    parsed = {}
    for key, (value, lineno) in meta.items():
        if key not in _METADATA_TYPES:
            continue  # free-form provenance lines
        try:
            parsed[key] = _METADATA_TYPES[key](value)
        except ValueError:
            raise SchemaError(f"metadata {key} = {value!r} is not a number", lineno) from None
    f, n, k = [], [], []
    for row, lineno in rows:
        try:
            fi, ni, ki = float(row[0]), int(row[1]), int(row[2])
        except ValueError:
            raise SchemaError(f"cannot parse row {','.join(row)!r}", lineno) from None
        if not math.isfinite(fi):
            raise SchemaError("non-finite frequency", lineno)
        if ni <= 0:
            raise SchemaError("shots must be > 0", lineno)
        if not 0 <= ki <= ni:
            raise SchemaError("dark_counts must lie in [0, shots]", lineno)
        f.append(fi)
        n.append(ni)
        k.append(ki)
    return MeasuredSpectrum(np.array(f), np.array(n), np.array(k), parsed)


def read_lines_file(path) -> list[tuple[float, int]]:
    """Level energies (cm^-1) from ``energy_per_cm`` or ``vacuum_wavelength_nm,initial_level`` rows."""
    from .inference import level_energy_from_wavelength

    _, rows, columns = _read_table(path, [("energy_per_cm",), ("vacuum_wavelength_nm", "initial_level")])
    out = []
    for row, lineno in rows:
        try:
            if columns[0] == "energy_per_cm":
                out.append((float(row[0]), lineno))
            else:
                out.append((level_energy_from_wavelength(float(row[0]) * 1e-9, row[1]), lineno))
        except ValueError as exc:
            raise SchemaError(str(exc), lineno) from None
    return out


def _read_table(path, schemas):
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise SchemaError(f"file not found: {path}") from None
    meta, rows, columns = {}, [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = (s.strip() for s in body.split("=", 1))
                meta[key] = (value, lineno)
            continue
        fields = [s.strip() for s in line.split(",")]
        if columns is None:
            if tuple(fields) not in schemas:
                expected = " or ".join(",".join(s) for s in schemas)
                raise SchemaError(f"header {line!r} does not match {expected}", lineno)
            columns = tuple(fields)
            continue
        if len(fields) != len(columns):
            raise SchemaError(f"expected {len(columns)} fields, found {len(fields)}", lineno)
        rows.append((fields, lineno))
    if columns is None:
        raise SchemaError("missing column header")
    if not rows:
        raise SchemaError("no data rows")
    return meta, rows, columns


def _write(path, lines) -> None:
    Path(path).write_text("\n".join(lines) + "\n")


def fit_result_json(result: FitResult) -> str:
    return json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"
