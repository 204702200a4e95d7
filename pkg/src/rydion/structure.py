"""Quantum-defect atomic structure of a Rydberg ion.

Level energies follow the Rydberg formula with a reduced-mass Rydberg constant
and a per-L quantum defect.  Radial wavefunctions are the analytic
quantum-defect (supersymmetry-inspired) functions: the hydrogenic radial form
with n -> n* = n - delta and L -> L* = L - delta + I, normalized numerically on
a logarithmic grid.  Everything else (matrix elements, polarizabilities,
Einstein coefficients) is built on top of those functions.

Units: energies in cm^-1, lengths in Bohr radii, polarizabilities in
MHz/(V/cm)^2 with the convention dE = -(alpha/2) E^2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.special import eval_genlaguerre

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .errors import DomainError, SelectionRuleError

L_LABELS = "SPDFGHIKLMNOQ"

DEFAULT_DEFECT_F = 0.026
DEFAULT_DEFECT_P = 1.44
DEFAULT_DEFECT_G = 0.004

INNER_CUTOFF = 1e-3  # a0 / Z
TAIL_FRACTION = 1e-12
QUAD_RTOL = 1e-8
_MAX_POINTS = 2**21


def parse_l(label: str | int) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"negative orbital angular momentum {label}")
        return int(label)
    s = str(label).strip()
    if s.isdigit():
        return int(s)
    if len(s) != 1 or s.upper() not in L_LABELS:
        raise ValueError(f"unknown orbital angular momentum label {label!r}")
    return L_LABELS.index(s.upper())


def l_label(L: int) -> str:
    return L_LABELS[L] if L < len(L_LABELS) else f"L{L}"


@dataclass(frozen=True)
class RydbergState:
    n: int
    L: int
    m_L: int = 0
    J: float | None = None

    def __post_init__(self):
        if self.L < 0:
            raise DomainError(f"L must be >= 0, got {self.L}")
        if self.n < self.L + 1:
            raise DomainError(f"n={self.n} must be >= L+1={self.L + 1}")
        if abs(self.m_L) > self.L:
            raise DomainError(f"|m_L|={abs(self.m_L)} exceeds L={self.L}")
        if self.J is not None and abs(abs(self.J - self.L) - 0.5) > 1e-12:
            raise DomainError(f"J={self.J} incompatible with L={self.L}, s=1/2")

    @classmethod
    def parse(cls, text: str, m_L: int = 0) -> "RydbergState":
        """Parse labels such as ``51F``, ``3D3/2`` or ``4P1/2``."""
        m = re.fullmatch(r"\s*(\d+)\s*([A-Za-z])\s*(?:(\d+)/2)?\s*", text)
        if not m:
            raise ValueError(f"cannot parse state label {text!r}")
        J = int(m.group(3)) / 2 if m.group(3) else None
        return cls(int(m.group(1)), parse_l(m.group(2)), m_L, J)

    @property
    def label(self) -> str:
        s = f"{self.n}{l_label(self.L)}"
        if self.J is not None:
            s += f"{int(round(2 * self.J))}/2"
        return s


def _frozen(mapping):
    return MappingProxyType(dict(mapping))


@dataclass(frozen=True)
class QuantumDefectModel:
    """Per-L quantum defects plus optional per-level overrides.

    ``level_defects`` maps (n, L) to a defect that replaces the per-L value for
    that single level; it carries the low-lying levels calibrated from term
    energies.  L values missing from ``defects`` are treated as hydrogenic.
    """

    core_charge: int = 2
    defects: Mapping[int, float] = field(default_factory=dict)
    level_defects: Mapping[tuple[int, int], float] = field(default_factory=dict)
    ionization_limit: float | None = None  # cm^-1 above the ground level
    constants: PhysicalConstants = DEFAULT_CONSTANTS
    shift_rule: str = "nearest"
    angular_shifts: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.core_charge) != self.core_charge or self.core_charge < 1:
            raise DomainError(f"core charge must be an integer >= 1, got {self.core_charge}")
        object.__setattr__(self, "defects", _frozen({int(k): float(v) for k, v in self.defects.items()}))
        object.__setattr__(
            self,
            "level_defects",
            _frozen({(int(n), int(L)): float(v) for (n, L), v in self.level_defects.items()}),
        )
        object.__setattr__(self, "angular_shifts", _frozen({int(k): int(v) for k, v in self.angular_shifts.items()}))

    @classmethod
    def hydrogenic(cls, Z: int = 1, constants: PhysicalConstants = DEFAULT_CONSTANTS):
        return cls(core_charge=Z, defects={}, constants=constants)

    @classmethod
    def calcium_ion(
        cls,
        term_file: str | Path | None = None,
        defect_F: float = DEFAULT_DEFECT_F,
        defect_P: float = DEFAULT_DEFECT_P,
        defect_G: float = DEFAULT_DEFECT_G,
        constants: PhysicalConstants = DEFAULT_CONSTANTS,
        overrides: Mapping[int, float] | None = None,
        shift_rule: str = "nearest",
    ) -> "QuantumDefectModel":
        """Ca+ Rydberg series (Z = 2) with low-L defects calibrated from term energies.

        S and D take their defect from the 4S and 3D terms; the P series keeps
        the Rydberg value ``defect_P`` while the 4P level gets its own
        calibrated defect.
        """
        terms = load_term_energies(term_file)
        limit = terms.pop("limit")
        level = calibrate_defects(terms, limit, 2, constants.rydberg_constant)
        defects = {
            0: level[(4, 0)],
            1: defect_P,
            2: level[(3, 2)],
            3: defect_F,
            4: defect_G,
        }
        if overrides:
            defects.update({parse_l(k): float(v) for k, v in overrides.items()})
        return cls(2, defects, level, limit, constants, shift_rule)

    def defect(self, n: int, L: int) -> float:
        if (n, L) in self.level_defects:
            return self.level_defects[(n, L)]
        return self.defects.get(L, 0.0)

    def effective_n(self, state: RydbergState) -> float:
        return state.n - self.defect(state.n, state.L)

    def angular_shift(self, L: int) -> int:
        """Integer I in L* = L - delta + I, fixed once per L series.

        ``"nearest"`` rounds the defect of the lowest calibrated level of the
        series (or the per-L defect if none is calibrated) so L* stays close to
        L, capped so that lowest level keeps a non-negative node count.
        ``"smallest"`` takes the smallest I with L* > -1/2.  Both then raise I
        until every defect of the series gives L* > -1/2.
        """
        if L in self.angular_shifts:
            return self.angular_shifts[L]
        levels = sorted((n, d) for (n, l), d in self.level_defects.items() if l == L)
        deltas = [self.defects.get(L, 0.0)] + [d for _, d in levels]
        if self.shift_rule == "nearest":
            anchor = levels[0][1] if levels else deltas[0]
            I = math.floor(anchor + 0.5)
            if levels:
                I = min(I, levels[0][0] - L - 1)
        elif self.shift_rule == "smallest":
            I = 0
        else:
            raise ValueError(f"unknown shift rule {self.shift_rule!r}")
        while L - max(deltas) + I <= -0.5:
            I += 1
        return max(I, 0)

    def effective_l(self, state: RydbergState) -> float:
        return state.L - self.defect(state.n, state.L) + self.angular_shift(state.L)

    def to_dict(self) -> dict:
        return {
            "core_charge": self.core_charge,
            "quantum_defects": {l_label(L): d for L, d in sorted(self.defects.items())},
            "level_defects": {
                f"{n}{l_label(L)}": d for (n, L), d in sorted(self.level_defects.items())
            },
            "ionization_limit_per_cm": self.ionization_limit,
            "angular_shift_rule": self.shift_rule,
        }


def load_term_energies(path: str | Path | None = None) -> dict[str, float]:
    """Read a ``level, energy_cm^-1`` table; ``#`` starts a comment line."""
    if path is None:
        text = resources.files("rydion").joinpath("data/ca_ii_terms.txt").read_text()
    else:
        text = Path(path).read_text()
    terms = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ValueError(f"term file line {lineno}: expected 'level, energy'")
        terms[parts[0]] = float(parts[1])
    if "limit" not in terms:
        raise ValueError("term file has no 'limit' row")
    return terms


def calibrate_defects(
    terms: Mapping[str, float], limit: float, Z: int, rydberg: float
) -> dict[tuple[int, int], float]:
    """Quantum defect of each (n, L) term from its (2J+1)-weighted centroid."""
    groups: dict[tuple[int, int], list[tuple[float, float]]] = {}
    for label, energy in terms.items():
        s = RydbergState.parse(label)
        weight = 2 * s.J + 1 if s.J is not None else 1.0
        groups.setdefault((s.n, s.L), []).append((weight, energy))
    out = {}
    for (n, L), rows in groups.items():
        w = sum(r[0] for r in rows)
        centroid = sum(r[0] * r[1] for r in rows) / w
        binding = limit - centroid
        if binding <= 0:
            raise DomainError(f"term {n}{l_label(L)} lies above the ionization limit")
        out[(n, L)] = n - math.sqrt(Z * Z * rydberg / binding)
    return out


def binding_energy(state: RydbergState, model: QuantumDefectModel) -> float:
    """-R Z^2 / (n - delta)^2 in cm^-1 (negative for bound levels)."""
    nstar = model.effective_n(state)
    if nstar <= 0:
        raise DomainError(f"effective quantum number {nstar} <= 0 for {state.label}")
    Z = model.core_charge
    return -model.constants.rydberg_constant * Z * Z / nstar**2


def level_energy(state: RydbergState, model: QuantumDefectModel) -> float:
    """Energy above the ground level (needs the model's ionization limit)."""
    if model.ionization_limit is None:
        raise DomainError("model has no ionization limit")
    return model.ionization_limit + binding_energy(state, model)


# --- radial wavefunctions -------------------------------------------------


@dataclass(frozen=True)
class _RadialParams:
    nstar: float
    lstar: float
    degree: int
    Z: int


def _radial_params(state: RydbergState, model: QuantumDefectModel) -> _RadialParams:
    nstar = model.effective_n(state)
    lstar = model.effective_l(state)
    degree = state.n - state.L - 1 - model.angular_shift(state.L)
    if nstar <= 0 or lstar <= -0.5 or degree < 0:
        raise DomainError(
            f"{state.label}: n*={nstar:.4f}, L*={lstar:.4f} cannot be normalized"
        )
    return _RadialParams(nstar, lstar, degree, model.core_charge)


def _shape(p: _RadialParams, r: np.ndarray) -> np.ndarray:
    x = 2.0 * p.Z * r / p.nstar
    with np.errstate(divide="ignore", under="ignore"):
        envelope = np.exp(p.lstar * np.log(x) - 0.5 * x)
    return envelope * eval_genlaguerre(p.degree, 2.0 * p.lstar + 1.0, x)


def _min_points(nstar: float, span: float) -> int:
    # local phase advance per unit ln(r) never exceeds about n*
    return int(16 * nstar * span / (2 * math.pi)) + 256


@lru_cache(maxsize=4096)
def _outer_radius(p: _RadialParams) -> float:
    r_far = (4.0 * p.nstar**2 + 40.0 * p.nstar + 60.0) / p.Z
    while True:
        r = np.geomspace(INNER_CUTOFF / p.Z, r_far, 4096)
        y = np.abs(_shape(p, r))
        big = np.nonzero(y >= TAIL_FRACTION * y.max())[0][-1]
        if big < len(r) - 1:
            return max(r[big + 1], 3.0 * p.nstar**2 / p.Z)
        r_far *= 1.5


def _simpson_converged(integrand, u_lo, u_hi, n0, rtol):
    """Simpson rule in u = ln r, doubling the grid until successive estimates agree."""
    n = n0 + (n0 % 2)
    prev = None
    while n <= _MAX_POINTS:
        u = np.linspace(u_lo, u_hi, n + 1)
        f = integrand(u)
        val = simpson(f, x=u)
        scale = simpson(np.abs(f), x=u)
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-3 * scale):
            return val, n
        prev = val
        n *= 2
    raise DomainError("radial quadrature failed to converge")


@lru_cache(maxsize=4096)
def _normalization(p: _RadialParams, rtol: float = QUAD_RTOL) -> tuple[float, int]:
    u_lo = math.log(INNER_CUTOFF / p.Z)
    u_hi = math.log(_outer_radius(p))

    def integrand(u):
        r = np.exp(u)
        return _shape(p, r) ** 2 * r**3

    norm2, n = _simpson_converged(integrand, u_lo, u_hi, _min_points(p.nstar, u_hi - u_lo), rtol)
    return 1.0 / math.sqrt(norm2), n


@dataclass(frozen=True)
class RadialWavefunction:
    grid: np.ndarray  # a0
    values: np.ndarray  # a0^-3/2
    state: RydbergState
    n_star: float
    l_star: float
    degree: int  # Laguerre polynomial degree = number of radial nodes
    core_charge: int

    def __call__(self, r):
        """Evaluate on arbitrary radii (a0) from the analytic form."""
        p = _RadialParams(self.n_star, self.l_star, self.degree, self.core_charge)
        return _normalization(p)[0] * _shape(p, np.asarray(r, dtype=float))

    def norm(self) -> float:
        u = np.log(self.grid)
        return float(simpson(self.values**2 * self.grid**3, x=u))


def radial_wavefunction(
    state: RydbergState, model: QuantumDefectModel, rtol: float = QUAD_RTOL
) -> RadialWavefunction:
    p = _radial_params(state, model)
    c, n = _normalization(p, rtol)
    r = np.geomspace(INNER_CUTOFF / p.Z, _outer_radius(p), n + 1)
    return RadialWavefunction(r, c * _shape(p, r), state, p.nstar, p.lstar, p.degree, p.Z)


def radial_matrix_element(
    a: RydbergState, b: RydbergState, model: QuantumDefectModel, rtol: float = QUAD_RTOL
) -> float:
    """<a| r |b> in Bohr radii."""
    if abs(a.L - b.L) != 1:
        raise SelectionRuleError(f"{a.label} -> {b.label}: |dL| must be 1")
    pa, pb = _radial_params(a, model), _radial_params(b, model)
    # order so the integral is symmetric bit-for-bit
    if (pa.nstar, pa.lstar) > (pb.nstar, pb.lstar):
        pa, pb = pb, pa
    ca, cb = _normalization(pa, rtol)[0], _normalization(pb, rtol)[0]
    u_lo = math.log(INNER_CUTOFF / max(pa.Z, pb.Z))
    u_hi = math.log(max(_outer_radius(pa), _outer_radius(pb)))
    nstar = max(pa.nstar, pb.nstar)

    def integrand(u):
        r = np.exp(u)
        return ca * cb * _shape(pa, r) * _shape(pb, r) * r**4

    val, _ = _simpson_converged(integrand, u_lo, u_hi, _min_points(nstar, u_hi - u_lo), rtol)
    return float(val)


def angular_factor_z(L: int, Lp: int, m_L: int = 0) -> float:
    """<L', m| cos(theta) |L, m>."""
    if abs(m_L) > L:
        raise SelectionRuleError(f"|m_L|={abs(m_L)} exceeds L={L}")
    if Lp == L + 1:
        return math.sqrt(((L + 1) ** 2 - m_L**2) / ((2 * L + 1) * (2 * L + 3)))
    if Lp == L - 1:
        return math.sqrt((L**2 - m_L**2) / ((2 * L - 1) * (2 * L + 1)))
    raise SelectionRuleError(f"L={L} -> L'={Lp} is not dipole allowed")


def transition_dipole(a: RydbergState, b: RydbergState, model: QuantumDefectModel) -> float:
    """|<b| e z |a>| in C m for pi light, m_L conserved (taken from ``a``)."""
    if a.m_L != b.m_L:
        raise SelectionRuleError("pi transition requires equal m_L")
    c = model.constants
    rho = radial_matrix_element(a, b, model)
    return abs(c.elementary_charge * c.bohr_radius * rho * angular_factor_z(a.L, b.L, a.m_L))


# --- second-order Stark shift ---------------------------------------------


@dataclass(frozen=True)
class Polarizability:
    state: RydbergState
    alpha: float  # MHz/(V/cm)^2
    coupling_n_range: tuple[int, int]
    contributions: tuple[tuple[int, int, float], ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def alpha_half(self) -> float:
        return 0.5 * self.alpha

    @property
    def alpha_hz_per_v2m2(self) -> float:
        """alpha in Hz/(V/m)^2."""
        return mhz_per_vcm2_to_hz_per_vm2(self.alpha)


def mhz_per_vcm2_to_hz_per_vm2(alpha: float) -> float:
    return alpha * 1e6 / 1e4


def polarizability(
    state: RydbergState,
    model: QuantumDefectModel,
    coupling_n_range: tuple[int, int] = (40, 60),
    rtol: float = QUAD_RTOL,
) -> Polarizability:
    """Scalar polarizability of ``state`` from second-order perturbation theory.

    Sums over n' in ``coupling_n_range`` (inclusive) and L' = L +- 1 with
    m_L' = m_L, spin-orbit coupling neglected.  Contributions are summed in a
    fixed order with ``math.fsum``.
    """
    n_lo, n_hi = coupling_n_range
    c = model.constants
    warnings = []
    missing = [n for n in range(state.n - 3, state.n + 4) if n < n_lo or n > n_hi]
    if missing:
        warnings.append(
            f"coupling range {n_lo}..{n_hi} omits near-degenerate partners n'={missing}"
        )
    e0 = binding_energy(state, model)
    ea0 = c.elementary_charge * c.bohr_radius
    terms = []
    for Lp in (state.L - 1, state.L + 1):
        if Lp < 0 or abs(state.m_L) > Lp:
            continue
        ang = angular_factor_z(state.L, Lp, state.m_L)
        for n in range(max(n_lo, Lp + 1), n_hi + 1):
            other = RydbergState(n, Lp, state.m_L)
            try:
                _radial_params(other, model)
            except DomainError as exc:
                warnings.append(f"skipped {other.label}: {exc}")
                continue
            rho = radial_matrix_element(state, other, model, rtol)
            gap = c.wavenumber_to_joule(binding_energy(other, model) - e0)
            if gap == 0.0:
                if rho != 0.0:
                    raise DomainError(f"{state.label} is degenerate with {other.label}")
                continue
            # J/(V/m)^2 -> MHz/(V/cm)^2
            term = 2.0 * (ea0 * rho * ang) ** 2 / gap / c.planck * 1e4 / 1e6
            terms.append((n, Lp, term))
    alpha = math.fsum(t[2] for t in terms)
    return Polarizability(state, alpha, (n_lo, n_hi), tuple(terms), tuple(warnings))


# --- radiative decay ------------------------------------------------------


def einstein_A(
    upper: RydbergState,
    lower: RydbergState,
    transition_frequency: float,
    model: QuantumDefectModel | None = None,
    radial_element: float | None = None,
) -> float:
    """Spontaneous emission rate (1/s), averaged over the upper m_L.

    ``transition_frequency`` is an ordinary frequency in Hz.  The radial
    integral is computed from ``model`` unless ``radial_element`` (a0) is given.
    """
    if abs(upper.L - lower.L) != 1:
        raise SelectionRuleError(f"{upper.label} -> {lower.label} is not dipole allowed")
    if not transition_frequency > 0:
        raise DomainError("transition frequency must be positive")
    if radial_element is None:
        if model is None:
            raise ValueError("need a model or an explicit radial element")
        radial_element = radial_matrix_element(upper, lower, model)
    c = model.constants if model is not None else DEFAULT_CONSTANTS
    omega = 2 * math.pi * transition_frequency
    # sum over lower m and polarizations, averaged over upper m: l_> / (2 L_u + 1)
    line = max(upper.L, lower.L) / (2 * upper.L + 1)
    d2 = (c.elementary_charge * c.bohr_radius * radial_element) ** 2 * line
    return omega**3 * d2 / (3 * math.pi * c.vacuum_permittivity * c.reduced_planck * c.speed_of_light**3)


def lifetime(
    state: RydbergState, model: QuantumDefectModel, lower_levels: Sequence[RydbergState]
) -> float:
    """Radiative lifetime (s) from the listed decay channels."""
    if not lower_levels:
        raise ValueError("lifetime needs at least one decay channel")
    e_up = binding_energy(state, model)
    rates = []
    for low in lower_levels:
        gap = e_up - binding_energy(low, model)
        if gap <= 0:
            raise DomainError(f"{low.label} is not below {state.label}")
        rates.append(einstein_A(state, low, model.constants.wavenumber_to_hz(gap), model))
    return 1.0 / math.fsum(rates)


def rabi_frequency(
    power: float, waist: float, dipole_moment: float, constants: PhysicalConstants = DEFAULT_CONSTANTS
) -> float:
    """Resonant Rabi frequency (rad/s) at the centre of a Gaussian beam.

    ``waist`` is the 1/e^2 intensity radius; peak intensity 2P/(pi w^2).
    """
    if power < 0 or not waist > 0:
        raise DomainError("need power >= 0 and waist > 0")
    c = constants
    intensity = 2.0 * power / (math.pi * waist**2)
    field_peak = math.sqrt(2.0 * intensity / (c.speed_of_light * c.vacuum_permittivity))
    return abs(dipole_moment) * field_peak / c.reduced_planck


def states_from_labels(labels: Iterable[str], m_L: int = 0) -> list[RydbergState]:
    return [RydbergState.parse(s, m_L) for s in labels]
