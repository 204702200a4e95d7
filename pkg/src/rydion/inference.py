"""Line identification and lineshape fitting.

Two independent jobs live here: turning measured VUV wavelengths into level
energies and assigning them to a Rydberg series, and fitting a measured
dark-fraction spectrum with the trap lineshape model under binomial
projection noise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .constants import DEFAULT_CONSTANTS
from .errors import (
    DomainError,
    SingularFitError,
    UnderdeterminedFitError,
    UnidentifiedSeriesError,
)
from .lineshape import FWHM_PER_SIGMA, TrapDrive, TrapLineModel, line_density
from .structure import l_label, parse_l

# 4s 2S1/2 - 3d 2D5/2 clock transition and the 3d fine-structure splitting (Hz)
NU_S_D52 = 411.042129776393e12
NU_D52_D32 = 1.819599021504e12

SERIES_THRESHOLD = 0.5  # cm^-1
_SPEED_OF_LIGHT_CM = DEFAULT_CONSTANTS.speed_of_light * 100.0


def initial_level_energy(initial_level: str) -> float:
    """Energy (cm^-1) of 3d D5/2 or D3/2 above the ground state."""
    key = initial_level.replace(" ", "").upper().lstrip("3")
    if key in ("D5/2", "D52"):
        return NU_S_D52 / _SPEED_OF_LIGHT_CM
    if key in ("D3/2", "D32"):
        return (NU_S_D52 - NU_D52_D32) / _SPEED_OF_LIGHT_CM
    raise ValueError(f"unknown initial level {initial_level!r}; expected D3/2 or D5/2")


def level_energy_from_wavelength(vacuum_wavelength: float, initial_level: str) -> float:
    """Level energy above the ground state (cm^-1) reached from a 3d level.

    ``vacuum_wavelength`` in metres.
    """
    if not vacuum_wavelength > 0:
        raise DomainError("wavelength must be positive")
    return initial_level_energy(initial_level) + 1.0 / (vacuum_wavelength * 100.0)


# --- series identification ------------------------------------------------


@dataclass(frozen=True)
class SeriesAssignment:
    energies: tuple[float, ...]  # cm^-1, ascending
    n: tuple[int, ...]
    L: int | None
    defect: float
    limit: float  # cm^-1
    residuals: tuple[float, ...]  # measured - model, cm^-1
    accepted: bool = True
    threshold: float = SERIES_THRESHOLD
    candidates: tuple = ()

    @property
    def labels(self) -> list[str]:
        tail = l_label(self.L) if self.L is not None else ""
        return [f"{n}{tail}" for n in self.n]

    @property
    def residual_norm(self) -> float:
        return math.sqrt(math.fsum(r * r for r in self.residuals))

    @property
    def skipped(self) -> int:
        return sum(b - a - 1 for a, b in zip(self.n, self.n[1:]))


def _series_fit(E, n, scale, defect=None, limit=None, seed=0.0):
    """Least-squares (limit, defect) for fixed integer n; either may be held fixed."""
    E = np.asarray(E, dtype=float)
    n = np.asarray(n, dtype=float)
    if defect is None:
        delta = seed
        for _ in range(100):
            ns = n - delta
            b = scale / ns**2
            lim = float(np.mean(E + b)) if limit is None else limit
            r = E - (lim - b)
            J = (-2.0 * scale / ns**3)[:, None]
            if limit is None:
                J = np.column_stack([np.ones_like(E), J[:, 0]])
            step = np.linalg.lstsq(J, r, rcond=None)[0]
            new = min(delta + step[-1], float(n.min()) - 0.5)
            done = abs(new - delta) < 1e-14 * max(1.0, abs(delta))
            delta = new
            if done:
                break
        defect = delta
    if limit is None:
        limit = float(np.mean(E + scale / (n - defect) ** 2))
    resid = E - (limit - scale / (n - defect) ** 2)
    return float(limit), float(defect), resid


def identify_series(
    lines: Sequence[float],
    Z: int = 2,
    n_candidates: tuple[int, int] = (20, 100),
    model=None,
    *,
    L: int | str | None = None,
    threshold: float = SERIES_THRESHOLD,
    fixed_defect: float | None = None,
    series_limit: float | None = None,
    defect_bounds: tuple[float, float] = (-1.0, 4.0),
    tie_tolerance: float = 1e-6,
) -> SeriesAssignment:
    """Assign level energies (cm^-1) to one Rydberg series E = limit - Z^2 R/(n - delta)^2.

    Integer assignments in ``n_candidates`` are scored by residual norm; within
    ``tie_tolerance`` the assignment with the fewest skipped levels and then
    the smallest |delta| wins.  ``fixed_defect`` / ``series_limit`` test a
    hypothesis with that quantity held fixed.
    """
    if len(lines) < 2:
        raise ValueError("need at least two lines")
    consts = model.constants if model is not None else DEFAULT_CONSTANTS
    scale = Z * Z * consts.rydberg_constant
    E = np.sort(np.asarray(lines, dtype=float))
    n_lo, n_hi = n_candidates
    Lval = parse_l(L) if L is not None else None

    def complete(n0, defect, limit):
        """Assign the remaining lines by rounding n* + delta."""
        ns = [n0]
        for e in E[1:]:
            if limit <= e:
                return None
            nstar = math.sqrt(scale / (limit - e))
            ns.append(int(round(nstar + defect)))
        if any(b <= a for a, b in zip(ns, ns[1:])) or ns[-1] > n_hi:
            return None
        return tuple(ns)

    seeds = {}
    for n0 in range(n_lo, n_hi + 1):
        if fixed_defect is not None and series_limit is not None:
            nstar = math.sqrt(scale / (series_limit - E[0])) if series_limit > E[0] else None
            if nstar is None:
                break
            seeds[complete(int(round(nstar + fixed_defect)), fixed_defect, series_limit)] = fixed_defect
            break
        if fixed_defect is not None:
            if n0 - fixed_defect <= 0:
                continue
            limit = E[0] + scale / (n0 - fixed_defect) ** 2
            seeds[complete(n0, fixed_defect, limit)] = fixed_defect
        elif series_limit is not None:
            if series_limit <= E[0]:
                break
            defect = n0 - math.sqrt(scale / (series_limit - E[0]))
            seeds.setdefault(complete(n0, defect, series_limit), defect)
        else:
            for n1 in range(n0 + 1, n_hi + 1):
                target = E[1] - E[0]

                def gap(d):
                    return scale / (n0 - d) ** 2 - scale / (n1 - d) ** 2 - target

                lo, hi = defect_bounds[0], min(defect_bounds[1], n0 - 0.5)
                if lo >= hi or gap(lo) * gap(hi) > 0:
                    continue
                defect = brentq(gap, lo, hi, xtol=1e-14)
                limit = E[0] + scale / (n0 - defect) ** 2
                seeds.setdefault(complete(n0, defect, limit), defect)
    seeds.pop(None, None)

    results = []
    for ns, seed in seeds.items():
        limit, defect, resid = _series_fit(E, ns, scale, fixed_defect, series_limit, seed)
        if not (defect_bounds[0] <= defect <= defect_bounds[1]) and fixed_defect is None:
            continue
        results.append(
            SeriesAssignment(
                tuple(E.tolist()), ns, Lval, defect, limit, tuple(resid.tolist()), threshold=threshold
            )
        )
    if not results:
        raise UnidentifiedSeriesError("no integer assignment in the candidate range", ())
    best_norm = min(r.residual_norm for r in results)
    results.sort(
        key=lambda r: (r.residual_norm > best_norm + tie_tolerance, r.skipped, abs(r.defect), r.residual_norm)
    )
    top = tuple(results[:5])
    best = replace(results[0], candidates=top)
    if max(abs(x) for x in best.residuals) >= threshold:
        raise UnidentifiedSeriesError(
            f"best assignment {best.n} leaves residual "
            f"{max(abs(x) for x in best.residuals):.4g} cm^-1 >= {threshold} cm^-1",
            top,
        )
    return best


# --- measured spectra ----------------------------------------------------


METADATA_KEYS = (
    "initial_state",
    "E_ion_V_per_m",
    "omega_drive_hz",
    "k_rad_per_m",
    "x_mm_m",
    "temperature_K",
    "B_T",
)


@dataclass
class MeasuredSpectrum:
    frequency: np.ndarray  # Hz, absolute or detuning
    shots: np.ndarray
    dark_counts: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequency = np.asarray(self.frequency, dtype=float)
        self.shots = np.asarray(self.shots, dtype=int)
        self.dark_counts = np.asarray(self.dark_counts, dtype=int)
        if not (self.frequency.shape == self.shots.shape == self.dark_counts.shape):
            raise ValueError("frequency, shots and dark_counts must have equal length")
        if np.any(self.shots <= 0):
            raise DomainError("shots must be > 0")
        if np.any((self.dark_counts < 0) | (self.dark_counts > self.shots)):
            raise DomainError("dark counts must lie in [0, shots]")

    def __len__(self):
        return self.frequency.size

    @property
    def dark_fraction(self) -> np.ndarray:
        return self.dark_counts / self.shots

    @property
    def sigma(self) -> np.ndarray:
        """Projection-noise error; p = 0 or 1 is replaced by (k + 1/2)/(N + 1)."""
        p = self.dark_fraction
        edge = (self.dark_counts == 0) | (self.dark_counts == self.shots)
        p = np.where(edge, (self.dark_counts + 0.5) / (self.shots + 1.0), p)
        return np.sqrt(p * (1.0 - p) / self.shots)

    def drive(self) -> TrapDrive:
        md = self.metadata
        try:
            return TrapDrive(
                float(md["omega_drive_hz"]),
                float(md.get("E_ion_V_per_m", 0.0)),
                float(md.get("x_mm_m", 0.0)),
                float(md["k_rad_per_m"]) if "k_rad_per_m" in md else TrapDrive(1.0).laser_wavenumber,
            )
        except KeyError as exc:
            raise KeyError(f"metadata lacks {exc.args[0]}") from None


# --- lineshape fitting ---------------------------------------------------

PARAMETERS = ("omega0", "alpha", "amplitude", "baseline", "E_ion", "beta_mm", "beta_alpha")
UNITS = {
    "omega0": "Hz",
    "alpha": "MHz/(V/cm)^2",
    "amplitude": "Hz",
    "baseline": "1",
    "E_ion": "V/m",
    "beta_mm": "1",
    "beta_alpha": "1",
}
DEFAULT_FREE = ("omega0", "alpha", "amplitude", "baseline")

CHI2_RTOL = 1e-8
MAX_ITERATIONS = 500
JACOBIAN_STEP = 1e-6


@dataclass
class FitResult:
    parameters: dict[str, float]
    errors: dict[str, float]
    free: tuple[str, ...]
    covariance: np.ndarray  # over ``free``, physical units
    chi_square: float
    degrees_of_freedom: int
    converged: bool
    iterations: int
    message: str = ""

    @property
    def reduced_chi_square(self) -> float:
        return self.chi_square / self.degrees_of_freedom if self.degrees_of_freedom else math.nan

    @property
    def alpha_half(self) -> float:
        return 0.5 * self.parameters["alpha"]

    def to_dict(self) -> dict:
        return {
            "parameters": dict(self.parameters),
            "errors": dict(self.errors),
            "units": {k: UNITS[k] for k in self.parameters},
            "free": list(self.free),
            "covariance": self.covariance.tolist(),
            "chi_square": self.chi_square,
            "degrees_of_freedom": self.degrees_of_freedom,
            "reduced_chi_square": self.reduced_chi_square,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
        }

    def report(self) -> str:
        lines = []
        for k, v in self.parameters.items():
            err = self.errors.get(k)
            if err is None:
                tag = " (fixed)"
            else:
                tag = f" +/- {err:.6g}" + ("" if k in self.free else " (derived)")
            lines.append(f"{k} = {v:.10g}{tag} {UNITS[k]}")
        lines.append(f"alpha_half = {self.alpha_half:.6g} MHz/(V/cm)^2")
        lines.append(f"chi_square = {self.chi_square:.6g}")
        lines.append(f"degrees_of_freedom = {self.degrees_of_freedom}")
        lines.append(f"reduced_chi_square = {self.reduced_chi_square:.6g}")
        lines.append(f"converged = {str(self.converged).lower()}")
        lines.append(f"iterations = {self.iterations}")
        if self.message:
            lines.append(f"message = {self.message}")
        return "\n".join(lines)


class _LineModel:
    """Maps a full parameter dict to predicted dark fractions."""

    def __init__(self, template: TrapLineModel, frequency, reference):
        self.template = template
        self.x = np.asarray(frequency, dtype=float) - reference

    def line(self, p: Mapping[str, float]) -> TrapLineModel:
        t = self.template
        d = t.drive
        E = p["E_ion"]
        alpha = p["alpha"]
        if "beta_alpha" in p and p.get("_use_beta_alpha"):
            alpha = alpha_from_beta(p["beta_alpha"], E, d.drive_frequency)
        k = d.laser_wavenumber
        x_mm = p["beta_mm"] / k if k > 0 else 0.0
        drive = TrapDrive(d.drive_frequency, abs(E), abs(x_mm), k)
        return replace(t, drive=drive, alpha=alpha, omega0=p["omega0"])

    def __call__(self, p: Mapping[str, float]) -> np.ndarray:
        return p["baseline"] + p["amplitude"] * line_density(self.line(p), self.x)


def alpha_from_beta(beta_alpha: float, field_amplitude: float, drive_frequency: float) -> float:
    """alpha in MHz/(V/cm)^2 from beta_alpha = alpha E^2 / (8 Omega)."""
    if field_amplitude == 0:
        raise DomainError("beta_alpha parametrization needs a nonzero field")
    return 8.0 * drive_frequency * beta_alpha / field_amplitude**2 / 100.0


def _initial_guess(data: MeasuredSpectrum, template: TrapLineModel, x, fixed, alpha_sign, alpha_factor=1.0):
    y = data.dark_fraction
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    edge = max(1, len(xs) // 10)
    baseline = float(np.mean(np.concatenate([ys[:edge], ys[-edge:]])))
    w = np.clip(ys - baseline, 0.0, None)
    if w.sum() == 0:
        w = np.ones_like(ys)
    centre = float(np.sum(w * xs) / w.sum())
    var = float(np.sum(w * (xs - centre) ** 2) / w.sum())
    drive = template.drive
    E = fixed.get("E_ion", drive.field_amplitude)
    sig_k = template.kernel().sigma
    beta_mm = fixed.get("beta_mm", drive.laser_wavenumber * drive.micromotion_amplitude)
    excess = var - sig_k**2 - 0.5 * (beta_mm * drive.drive_frequency) ** 2
    sign = alpha_sign if alpha_sign else 1.0
    guess = {"baseline": baseline, "E_ion": E, "beta_mm": beta_mm}
    if "alpha" in fixed:
        guess["alpha"] = fixed["alpha"]
    elif "omega0" in fixed and E > 0:
        # static shift inversion: centroid - omega0 = -alpha E^2 / 4
        guess["alpha"] = -4.0 * (centre - fixed["omega0"]) / E**2 / 100.0
        if alpha_sign and guess["alpha"] * alpha_sign <= 0:
            guess["alpha"] = alpha_sign * 1.0
    elif E > 0:
        # width excess of the Stark comb: variance = alpha^2 E^4 / 32 (Hz^2)
        a_hz = math.sqrt(32.0 * max(excess, 0.01 * sig_k**2)) / E**2
        guess["alpha"] = sign * a_hz / 100.0
    else:
        guess["alpha"] = template.alpha
    guess["alpha"] *= alpha_factor
    shift = -100.0 * guess["alpha"] * E**2 / 4.0
    guess["omega0"] = fixed.get("omega0", centre - shift)
    peak = max(float(ys.max()) - baseline, 1e-3)
    guess["amplitude"] = peak * math.sqrt(2 * math.pi) * math.sqrt(max(var, sig_k**2))
    guess["beta_alpha"] = (
        100.0 * guess["alpha"] * E**2 / (8.0 * drive.drive_frequency) if E > 0 else 0.0
    )
    return guess


ALPHA_STARTS = (1.0, 0.8, 1.25, 0.6, 1.6)
MODEL_WEIGHT_PASSES = 3


def fit_lineshape(
    data: MeasuredSpectrum,
    template: TrapLineModel,
    free: Sequence[str] = DEFAULT_FREE,
    initial: Mapping[str, float] | None = None,
    *,
    alpha_sign: int | None = None,
    alpha_starts: Sequence[float] = ALPHA_STARTS,
    weights: str = "observed",
    max_iterations: int = MAX_ITERATIONS,
    chi2_rtol: float = CHI2_RTOL,
) -> FitResult:
    """Weighted least-squares fit of the trap lineshape to a dark-fraction spectrum.

    Model: dark fraction = baseline + amplitude * unit-area line density, so
    ``amplitude`` is the integrated excitation (Hz).  ``omega0`` is the
    unshifted line centre in the frame of ``data.frequency``.  Parameters not
    in ``free`` are held at ``initial`` or at the template/metadata values.
    ``alpha_sign`` restricts alpha to one sign (fitted as log|alpha|).

    The comb makes chi-square multimodal in alpha, so unless alpha is given in
    ``initial`` the automatic guess is scaled by each of ``alpha_starts`` and
    the lowest chi-square is returned.

    ``weights="observed"`` uses the regularized projection noise of the data;
    ``"model"`` re-evaluates it from the fitted dark fraction and refits,
    which removes the small bias of observed-proportion weights.
    """
    if weights not in ("observed", "model"):
        raise ValueError("weights must be 'observed' or 'model'")
    free = tuple(free)
    unknown = set(free) - set(PARAMETERS)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}")
    if "alpha" in free and "beta_alpha" in free:
        raise ValueError("alpha and beta_alpha are alternative parametrizations")
    if len(data) < len(free) + 1:
        raise UnderdeterminedFitError(
            f"{len(data)} points cannot constrain {len(free)} free parameters"
        )
    use_beta = "beta_alpha" in free
    reference = float(np.median(data.frequency))
    model = _LineModel(template, data.frequency, reference)
    initial = dict(initial or {})
    if "omega0" in initial:
        initial["omega0"] -= reference
    fixed = {k: v for k, v in initial.items() if k not in free}
    if "omega0" not in free and "omega0" not in fixed:
        fixed["omega0"] = template.omega0 - reference
    if "alpha" not in free and not use_beta and "alpha" not in fixed:
        fixed["alpha"] = template.alpha
    given_alpha = "alpha" in initial or "beta_alpha" in initial or "alpha" in fixed
    factors = (1.0,) if given_alpha or not (use_beta or "alpha" in free) else tuple(alpha_starts)

    best = None
    first_error = None
    for factor in factors:
        guess = _initial_guess(data, template, model.x, fixed, alpha_sign, factor)
        guess.update(initial)
        if use_beta and "beta_alpha" in initial:
            guess["alpha"] = alpha_from_beta(initial["beta_alpha"], guess["E_ion"], template.drive.drive_frequency)
        params = {k: float(guess[k]) for k in PARAMETERS}
        if use_beta and params["E_ion"] == 0:
            raise DomainError("beta_alpha parametrization needs a nonzero field")
        try:
            result = _levenberg_marquardt(
                data, data.sigma, model, params, free, alpha_sign, max_iterations, chi2_rtol
            )
        except (DomainError, SingularFitError) as exc:
            first_error = first_error or exc
            continue
        if best is None or result.chi_square < best.chi_square:
            best = result
    if best is None:
        raise first_error
    if weights == "model":
        floor = 0.5 / (data.shots + 1.0)
        for _ in range(MODEL_WEIGHT_PASSES):
            p = np.clip(model(dict(best.parameters, _use_beta_alpha=use_beta)), floor, 1.0 - floor)
            best = _levenberg_marquardt(
                data,
                np.sqrt(p * (1.0 - p) / data.shots),
                model,
                best.parameters,
                free,
                alpha_sign,
                max_iterations,
                chi2_rtol,
            )
    best.parameters["omega0"] += reference
    return best


def _levenberg_marquardt(data, sigma, model, params, free, alpha_sign, max_iterations, chi2_rtol):
    template = model.template
    use_beta = "beta_alpha" in free
    params = dict(params, _use_beta_alpha=use_beta)
    sig_k = template.kernel().sigma
    span = float(np.ptp(model.x)) or 1.0
    scales = {
        "omega0": max(sig_k, span / 100.0),
        "alpha": max(abs(params["alpha"]), 1.0),
        "amplitude": max(abs(params["amplitude"]), 1.0),
        "baseline": 0.1,
        "E_ion": max(abs(params["E_ion"]), 1.0),
        "beta_mm": max(abs(params["beta_mm"]), 0.1),
        "beta_alpha": max(abs(params["beta_alpha"]), 0.1),
    }
    log_alpha = alpha_sign is not None and "alpha" in free
    if log_alpha:
        if params["alpha"] * alpha_sign <= 0:
            params["alpha"] = alpha_sign * scales["alpha"]
        scales["alpha"] = 1.0

    def unpack(v):
        p = dict(params)
        for name, val in zip(free, v):
            if name == "alpha" and log_alpha:
                p["alpha"] = alpha_sign * math.exp(val)
            else:
                p[name] = val * scales[name]
        return p

    def pack(p):
        out = []
        for name in free:
            if name == "alpha" and log_alpha:
                out.append(math.log(abs(p["alpha"])))
            else:
                out.append(p[name] / scales[name])
        return np.array(out)

    y = data.dark_fraction
    w = 1.0 / sigma

    def residuals(v):
        try:
            r = (y - model(unpack(v))) * w
        except DomainError:
            return None
        return r if np.all(np.isfinite(r)) else None

    v = pack(params)
    r = residuals(v)
    if r is None:
        raise DomainError("model cannot be evaluated at the initial guess")
    chi2 = float(r @ r)
    lam = 1e-3
    converged = False
    message = ""
    it = 0
    while it < max_iterations:
        it += 1
        J = _jacobian(residuals, v, r)
        A = J.T @ J
        g = J.T @ r
        _check_singular(A, free)
        accepted = False
        while True:
            D = np.diag(np.diag(A))
            step = np.linalg.solve(A + lam * D, -g)
            r_new = residuals(v + step)
            predicted = chi2 - float(np.sum((r + J @ step) ** 2))
            if r_new is not None:
                chi2_new = float(r_new @ r_new)
                if chi2_new < chi2:
                    accepted = True
                    break
            if predicted <= chi2_rtol * chi2 or lam > 1e16:
                break
            lam *= 10.0
        if not accepted:
            # no downhill step left: at the minimum up to the tolerance
            converged = predicted <= chi2_rtol * chi2
            if not converged:
                message = "damping overflow without reaching the chi-square tolerance"
            break
        change = chi2 - chi2_new
        v, r, chi2 = v + step, r_new, chi2_new
        lam = max(lam / 10.0, 1e-12)
        if change <= chi2_rtol * chi2 or chi2 == 0.0:
            converged = True
            break
    else:
        message = f"no convergence after {max_iterations} iterations"

    J = _jacobian(residuals, v, r)
    A = J.T @ J
    _check_singular(A, free)
    cov_v = np.linalg.inv(A)
    p = unpack(v)
    jac = np.array(
        [abs(p["alpha"]) if (name == "alpha" and log_alpha) else scales[name] for name in free]
    )
    cov = cov_v * np.outer(jac, jac)
    del p["_use_beta_alpha"]
    errors = {name: float(math.sqrt(cov[i, i])) for i, name in enumerate(free)}
    drive_frequency = template.drive.drive_frequency
    if use_beta:
        p["alpha"] = alpha_from_beta(p["beta_alpha"], p["E_ion"], drive_frequency)
        errors["alpha"] = (
            abs(p["alpha"] / p["beta_alpha"]) * errors["beta_alpha"] if p["beta_alpha"] else math.nan
        )
    else:
        p["beta_alpha"] = 100.0 * p["alpha"] * p["E_ion"] ** 2 / (8.0 * drive_frequency)
        if "alpha" in errors:
            errors["beta_alpha"] = abs(p["beta_alpha"] / p["alpha"]) * errors["alpha"] if p["alpha"] else math.nan
    return FitResult(
        {k: float(p[k]) for k in PARAMETERS},
        errors,
        free,
        cov,
        chi2,
        len(data) - len(free),
        converged,
        it,
        message,
    )


def _jacobian(fun, v, r0):
    J = np.empty((r0.size, v.size))
    for i in range(v.size):
        h = JACOBIAN_STEP * max(1.0, abs(v[i]))
        vp = v.copy()
        vp[i] += h
        rp = fun(vp)
        if rp is None:
            vp[i] = v[i] - h
            rp = fun(vp)
            if rp is None:
                raise DomainError("model undefined around the current parameters")
            h = -h
        J[:, i] = (rp - r0) / h
    return J


def _check_singular(A, names, cond_limit=1e12):
    d = np.sqrt(np.diag(A))
    for i, di in enumerate(d):
        if di == 0 or not np.isfinite(di):
            other = names[(i + 1) % len(names)] if len(names) > 1 else names[i]
            raise SingularFitError((names[i], other))
    C = A / np.outer(d, d)
    vals, vecs = np.linalg.eigh(C)
    if vals[0] <= vals[-1] / cond_limit:
        v = np.abs(vecs[:, 0])
        i, j = np.argsort(v)[-2:][::-1]
        raise SingularFitError((names[i], names[j]))


def compare_sign_hypotheses(data, template, free=DEFAULT_FREE, initial=None):
    """Fit with alpha > 0 (F-like) and alpha < 0 (P-like); returns both results."""
    return (
        fit_lineshape(data, template, free, initial, alpha_sign=+1),
        fit_lineshape(data, template, free, initial, alpha_sign=-1),
    )


def kernel_fwhm(template: TrapLineModel) -> float:
    return FWHM_PER_SIGMA * template.kernel().sigma
