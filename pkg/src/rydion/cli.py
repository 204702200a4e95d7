"""Command-line interface: ``rydion <command> ...``.

Exit codes: 0 success, 1 computational failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .constants import provenance
from .detection import dark_probability, projection_noise, simulate_scan, simulate_sequence
from .errors import (
    ConfigError,
    DomainError,
    SchemaError,
    SelectionRuleError,
    SingularFitError,
    UnderdeterminedFitError,
    UnidentifiedSeriesError,
)
from .inference import (
    DEFAULT_FREE,
    MAX_ITERATIONS,
    PARAMETERS,
    SERIES_THRESHOLD,
    fit_lineshape,
    identify_series,
    initial_level_energy,
)
from .io import (
    dump_config,
    fit_result_json,
    line_model_from_config,
    load_config,
    read_lines_file,
    read_measured_csv,
    sequence_from_config,
    structure_from_config,
    write_measured_csv,
    write_spectrum_csv,
)
from .lineshape import line_density, synthesize_lineshape
from .structure import (
    QuantumDefectModel,
    RydbergState,
    binding_energy,
    level_energy,
    lifetime,
    parse_l,
    polarizability,
    rabi_frequency,
    transition_dipole,
)

COMPUTATIONAL = (
    DomainError,
    SelectionRuleError,
    SingularFitError,
    UnderdeterminedFitError,
    UnidentifiedSeriesError,
)


class UsageError(Exception):
    pass


def _l_arg(text):
    try:
        return parse_l(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _state_arg(text):
    try:
        return RydbergState.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _model(args) -> QuantumDefectModel:
    cfg = load_config(getattr(args, "config", None))
    return structure_from_config(cfg)


def _kv(key, value, fmt=".10g", unit=""):
    text = format(value, fmt) if isinstance(value, float) else str(value)
    print(f"{key} = {text}{(' ' + unit) if unit else ''}")


# --- commands ------------------------------------------------------------


def cmd_energy(args):
    if args.Z is not None and args.Z != 2:
        model = QuantumDefectModel.hydrogenic(args.Z)
    else:
        model = _model(args)
    if args.delta is not None:
        defects = {**model.defects, args.L: args.delta}
        levels = {k: v for k, v in model.level_defects.items() if k != (args.n, args.L)}
        model = replace(model, defects=defects, level_defects=levels)
    if args.limit_per_cm is not None:
        model = replace(model, ionization_limit=args.limit_per_cm)
    state = RydbergState(args.n, args.L, 0, args.J)
    eb = binding_energy(state, model)
    _kv("state", state.label)
    _kv("core_charge", model.core_charge)
    _kv("quantum_defect", model.defect(state.n, state.L), ".6f")
    _kv("effective_n", model.effective_n(state), ".6f")
    _kv("binding_energy", eb, ".6f", "cm^-1")
    if model.ionization_limit is not None:
        e = level_energy(state, model)
    else:
        # hydrogenic: measured from the 1s level
        e = eb - binding_energy(RydbergState(1, 0), QuantumDefectModel.hydrogenic(model.core_charge, model.constants))
    _kv("level_energy", e, ".6f", "cm^-1")
    if model.core_charge == 2:
        for name in ("D3/2", "D5/2"):
            gap = e - initial_level_energy(name)
            if gap > 0:
                _kv(f"wavelength_from_{name.replace('/', '')}", 1e7 / gap, ".6f", "nm")
    return 0


def cmd_synth(args):
    cfg = load_config(args.config)
    if args.E_ion is not None:
        cfg["E_ion_V_per_m"] = args.E_ion
    model = line_model_from_config(cfg)
    lo, hi = model.required_span()
    start = cfg.get("grid_start_hz", math.floor(lo))
    stop = cfg.get("grid_stop_hz", math.ceil(hi))
    grid = np.linspace(start, stop, cfg["grid_points"])
    spectrum = synthesize_lineshape(model, grid)
    meta = dict(cfg, grid_start_hz=float(start), grid_stop_hz=float(stop), version=__version__)
    write_spectrum_csv(args.output, spectrum, meta)
    _kv("points", grid.size)
    _kv("peak_detuning", spectrum.peak_detuning(), ".6f", "Hz")
    _kv("fwhm", spectrum.fwhm(), ".6f", "Hz")
    return 0


def cmd_simulate_scan(args):
    cfg = load_config(args.config)
    model = line_model_from_config(cfg)
    lo, hi = model.required_span()
    grid = np.linspace(cfg.get("grid_start_hz", lo), cfg.get("grid_stop_hz", hi), cfg["grid_points"])
    density = line_density(model, grid)
    p_exc = np.clip(cfg["peak_excitation"] * density / density.max(), 0.0, 1.0)
    d = model.drive
    metadata = {
        "E_ion_V_per_m": d.field_amplitude,
        "omega_drive_hz": d.drive_frequency,
        "k_rad_per_m": d.laser_wavenumber,
        "x_mm_m": d.micromotion_amplitude,
        "temperature_K": cfg["temperature_K"],
        "B_T": cfg["B_T"],
    }
    data = simulate_scan(grid, p_exc, sequence_from_config(cfg), cfg["shots"], cfg["seed"], metadata)
    write_measured_csv(args.output, data, {"seed": cfg["seed"], "version": __version__})
    _kv("points", len(data))
    _kv("seed", cfg["seed"])
    return 0


def cmd_fit(args):
    cfg = load_config(args.config)
    data = read_measured_csv(args.data)
    for key in ("omega_drive_hz", "E_ion_V_per_m", "x_mm_m", "k_rad_per_m", "temperature_K", "B_T"):
        if key in data.metadata:
            cfg[key] = data.metadata[key]
    template = line_model_from_config(cfg)
    free = tuple(args.free or cfg.get("fit_free") or DEFAULT_FREE)
    bad = [p for p in free if p not in PARAMETERS]
    if bad:
        raise UsageError(f"unknown fit parameters {bad}; choose from {', '.join(PARAMETERS)}")
    initial = {}
    if args.omega0_hz is not None:
        initial["omega0"] = args.omega0_hz
    sign = args.alpha_sign if args.alpha_sign is not None else cfg.get("fit_alpha_sign")
    weights = args.weights or cfg["fit_weights"]
    result = fit_lineshape(
        data, template, free, initial, alpha_sign=sign, weights=weights, max_iterations=args.max_iterations
    )
    print(result.report())
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(fit_result_json(result))
    if not result.converged:
        print("error: fit did not converge", file=sys.stderr)
        return 1
    return 0


def cmd_identify(args):
    rows = read_lines_file(args.lines)
    energies = [e for e, _ in rows]
    model = _model(args)
    try:
        result = identify_series(
            energies,
            args.Z,
            (args.n_min, args.n_max),
            model,
            L=args.L,
            threshold=args.threshold,
            fixed_defect=args.fixed_defect,
            series_limit=args.series_limit,
        )
    except UnidentifiedSeriesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for c in exc.candidates:
            print(f"candidate n = {list(c.n)} defect = {c.defect:.6f} residual_norm = {c.residual_norm:.6g}", file=sys.stderr)
        return 1
    for label, e, r in zip(result.labels, result.energies, result.residuals):
        print(f"line {e:.6f} cm^-1 -> {label} (residual {r:+.3e} cm^-1)")
    _kv("quantum_defect", result.defect, ".8f")
    _kv("series_limit", result.limit, ".6f", "cm^-1")
    _kv("residual_norm", result.residual_norm, ".3e", "cm^-1")
    return 0


def cmd_polarizability(args):
    model = _model(args)
    state = RydbergState(args.n, args.L, args.m_L)
    res = polarizability(state, model, (args.n_min, args.n_max))
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _kv("state", state.label)
    _kv("coupling_n_range", f"{args.n_min}..{args.n_max}")
    _kv("alpha", res.alpha, ".6g", "MHz/(V/cm)^2")
    _kv("alpha_half", res.alpha_half, ".6g", "MHz/(V/cm)^2")
    _kv("alpha_SI", res.alpha_hz_per_v2m2, ".6g", "Hz/(V/m)^2")
    return 0


def cmd_lifetime(args):
    model = _model(args)
    lower = args.decay_to or [RydbergState(4, 0), RydbergState(3, 2)]
    tau = lifetime(args.state, model, lower)
    _kv("state", args.state.label)
    _kv("decay_channels", " ".join(s.label for s in lower))
    _kv("lifetime", tau * 1e9, ".6g", "ns")
    return 0


def cmd_rabi(args):
    model = _model(args)
    d = transition_dipole(args.lower, args.upper, model)
    omega = rabi_frequency(args.power_W, args.waist_m, d, model.constants)
    _kv("transition", f"{args.lower.label} -> {args.upper.label} (pi, m_L = 0)")
    _kv("dipole_moment", d, ".6g", "C m")
    _kv("rabi_frequency", omega / (2 * math.pi), ".6g", "Hz (times 2 pi)")
    return 0


def cmd_simulate_detect(args):
    cfg = load_config(args.config)
    if args.no_pumping:
        cfg["include_pumping"] = False
    params = sequence_from_config(cfg)
    rec = simulate_sequence(args.p_exc, params, args.shots, args.seed)
    p = dark_probability(args.p_exc, params)
    _kv("shots", rec.shots)
    _kv("dark_counts", rec.dark_counts)
    _kv("seed", rec.seed)
    _kv("dark_fraction", rec.dark_fraction, ".6f")
    _kv("analytic_dark_probability", p, ".6f")
    _kv("projection_noise", projection_noise(p, rec.shots), ".6f")
    return 0


def cmd_dump_config(args):
    sys.stdout.write(dump_config(load_config(args.config)))
    return 0


# --- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rydion",
        description="Single-ion Rydberg spectroscopy toolkit",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"rydion {__version__}\n{provenance()}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="JSON config file")
        return sp

    sp = with_config(sub.add_parser("energy", help="level energy report"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--L", type=_l_arg, required=True)
    sp.add_argument("--J", type=float)
    sp.add_argument("--Z", type=int)
    sp.add_argument("--delta", type=float, help="quantum defect for this L")
    sp.add_argument("--limit-per-cm", type=float, help="series limit override")
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("synth", help="synthesize a lineshape CSV")
    sp.add_argument("config")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--E-ion", type=float, help="override E_ion_V_per_m")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("simulate-scan", help="simulate a measured scan CSV")
    sp.add_argument("config")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_simulate_scan)

    sp = with_config(sub.add_parser("fit", help="fit a measured spectrum"))
    sp.add_argument("data")
    sp.add_argument("--free", nargs="+")
    sp.add_argument("--alpha-sign", type=int, choices=(-1, 1))
    sp.add_argument("--omega0-hz", type=float, help="initial or fixed bare line centre")
    sp.add_argument("--weights", choices=("observed", "model"))
    sp.add_argument("--max-iterations", type=int, default=MAX_ITERATIONS)
    sp.add_argument("--json", help="write the result as JSON")
    sp.set_defaults(func=cmd_fit)

    sp = with_config(sub.add_parser("identify", help="assign lines to a Rydberg series"))
    sp.add_argument("lines")
    sp.add_argument("--Z", type=int, default=2)
    sp.add_argument("--n-min", type=int, default=20)
    sp.add_argument("--n-max", type=int, default=100)
    sp.add_argument("--L", type=_l_arg)
    sp.add_argument("--threshold", type=float, default=SERIES_THRESHOLD)
    sp.add_argument("--fixed-defect", type=float)
    sp.add_argument("--series-limit", type=float)
    sp.set_defaults(func=cmd_identify)

    sp = with_config(sub.add_parser("polarizability", help="second-order polarizability"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--L", type=_l_arg, required=True)
    sp.add_argument("--m-L", type=int, default=0)
    sp.add_argument("--n-min", type=int, default=40)
    sp.add_argument("--n-max", type=int, default=60)
    sp.set_defaults(func=cmd_polarizability)

    sp = with_config(sub.add_parser("lifetime", help="radiative lifetime"))
    sp.add_argument("--state", type=_state_arg, required=True)
    sp.add_argument("--decay-to", type=_state_arg, nargs="+")
    sp.set_defaults(func=cmd_lifetime)

    sp = with_config(sub.add_parser("rabi", help="Rabi frequency in a focused beam"))
    sp.add_argument("--power-W", type=float, default=3e-6)
    sp.add_argument("--waist-m", type=float, default=10e-6)
    sp.add_argument("--lower", type=_state_arg, default=RydbergState(3, 2))
    sp.add_argument("--upper", type=_state_arg, default=RydbergState(52, 1))
    sp.set_defaults(func=cmd_rabi)

    sp = with_config(sub.add_parser("simulate-detect", help="shelving detection Monte Carlo"))
    sp.add_argument("--p-exc", type=float, required=True)
    sp.add_argument("--shots", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-pumping", action="store_true")
    sp.set_defaults(func=cmd_simulate_detect)

    sp = with_config(sub.add_parser("dump-config", help="print the effective config"))
    sp.set_defaults(func=cmd_dump_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except COMPUTATIONAL as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, SchemaError, UsageError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
