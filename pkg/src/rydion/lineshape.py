"""Trap-modulated Rydberg resonance lineshape.

The residual RF field at the ion modulates the transition frequency twice:
through the Doppler effect of driven micromotion (sidebands at q * Omega) and
through the quadratic Stark shift (static red shift plus sidebands at
2 * q * Omega).  The resulting phase-modulation comb is convolved with a
Gaussian kernel for thermal Doppler and unresolved Zeeman broadening.

All frequencies exposed here are ordinary frequencies in Hz; the drive
frequency Omega is Omega_rf / 2 pi.  Polarizabilities are in MHz/(V/cm)^2 with
dE = -(alpha/2) E^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as sc
from scipy.integrate import trapezoid
from scipy.special import jv

from .constants import CA40_ION_MASS_KG
from .errors import DomainError
from .structure import mhz_per_vcm2_to_hz_per_vm2

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
VUV_WAVELENGTH = 122.04e-9  # m
VUV_WAVENUMBER = 2.0 * math.pi / VUV_WAVELENGTH

# Unresolved Zeeman multiplet as one Gaussian: FWHM per tesla (about 2.05 mu_B/h).
# At 0.45 mT and 5 mK this brings the combined kernel sigma to 10 MHz.
ZEEMAN_FWHM_PER_TESLA = 2.87e10

TRUNCATION_TOLERANCE = 1e-10
MAX_ORDER = 200


@dataclass(frozen=True)
class TrapDrive:
    drive_frequency: float  # Hz
    field_amplitude: float = 0.0  # V/m
    micromotion_amplitude: float = 0.0  # m
    laser_wavenumber: float = VUV_WAVENUMBER  # rad/m, projected on the micromotion

    def __post_init__(self):
        if not self.drive_frequency > 0:
            raise DomainError("drive frequency must be > 0")
        if self.field_amplitude < 0 or self.micromotion_amplitude < 0 or self.laser_wavenumber < 0:
            raise DomainError("field, micromotion amplitude and wavenumber must be >= 0")


def micromotion_amplitude(
    field_amplitude: float,
    drive_frequency: float,
    mass: float = CA40_ION_MASS_KG,
    charge: float = sc.e,
) -> float:
    """Driven excursion (m) of an ion in a uniform field oscillating at ``drive_frequency`` Hz."""
    w = 2.0 * math.pi * drive_frequency
    return charge * field_amplitude / (mass * w * w)


@dataclass(frozen=True)
class BroadeningParams:
    temperature: float = 5e-3  # K
    magnetic_field: float = 0.45e-3  # T
    ion_mass: float = CA40_ION_MASS_KG
    zeeman_fwhm_per_tesla: float = ZEEMAN_FWHM_PER_TESLA

    def __post_init__(self):
        if self.temperature < 0 or self.magnetic_field < 0:
            raise DomainError("temperature and magnetic field must be >= 0")
        if not self.ion_mass > 0:
            raise DomainError("ion mass must be > 0")

    @property
    def zeeman_fwhm(self) -> float:
        return self.zeeman_fwhm_per_tesla * self.magnetic_field


def doppler_sigma(temperature: float, ion_mass: float, k: float) -> float:
    """Gaussian standard deviation (Hz) of the thermal Doppler profile."""
    if temperature < 0:
        raise DomainError("temperature must be >= 0")
    return k / (2.0 * math.pi) * math.sqrt(sc.k * temperature / ion_mass)


@dataclass(frozen=True)
class GaussianKernel:
    """Unit-area Gaussian in detuning (Hz)."""

    sigma: float

    @property
    def fwhm(self) -> float:
        return FWHM_PER_SIGMA * self.sigma

    def __call__(self, detuning):
        x = np.asarray(detuning, dtype=float)
        if self.sigma == 0:
            return np.where(x == 0, np.inf, 0.0)
        return np.exp(-0.5 * (x / self.sigma) ** 2) / (math.sqrt(2 * math.pi) * self.sigma)

    def on_grid(self, grid, center: float = 0.0) -> np.ndarray:
        """Sample on ``grid``; a zero-width kernel becomes a one-bin spike of unit area."""
        grid = np.asarray(grid, dtype=float)
        spacing = np.min(np.diff(grid)) if grid.size > 1 else 1.0
        if self.sigma < 0.5 * spacing:
            out = np.zeros_like(grid)
            i = int(np.argmin(np.abs(grid - center)))
            lo = grid[i] - grid[i - 1] if i > 0 else spacing
            hi = grid[i + 1] - grid[i] if i < grid.size - 1 else spacing
            out[i] = 2.0 / (lo + hi)
            return out
        return self(grid - center)


def broadening_kernel(params: BroadeningParams, k: float = VUV_WAVENUMBER) -> GaussianKernel:
    """Doppler and Zeeman contributions added in quadrature."""
    sd = doppler_sigma(params.temperature, params.ion_mass, k)
    sz = params.zeeman_fwhm / FWHM_PER_SIGMA
    return GaussianKernel(math.hypot(sd, sz))


def modulation_indices(
    alpha: float, field_amplitude: float, drive_frequency: float, k: float, x_mm: float
) -> tuple[float, float, float]:
    """(beta_mm, beta_alpha, static_shift_hz) for one drive configuration.

    ``alpha`` in MHz/(V/cm)^2, field in V/m, drive frequency in Hz.  The static
    shift -alpha E^2 / 4 is negative (red) for alpha > 0.
    """
    if not drive_frequency > 0:
        raise DomainError("drive frequency must be > 0")
    a = mhz_per_vcm2_to_hz_per_vm2(alpha)
    e2 = field_amplitude**2
    return k * x_mm, a * e2 / (8.0 * drive_frequency), -a * e2 / 4.0


@dataclass(frozen=True)
class SidebandSpectrum:
    carrier_shift: float  # Hz
    orders: np.ndarray  # integer q
    offsets: np.ndarray  # Hz, q * Omega
    amplitudes: np.ndarray  # complex A_q
    discarded_power: float = 0.0

    @property
    def powers(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def total_power(self) -> float:
        return float(math.fsum(self.powers))

    def components(self):
        return list(zip(self.orders.tolist(), self.offsets.tolist(), self.amplitudes.tolist()))

    def amplitude(self, q: int) -> complex:
        idx = np.nonzero(self.orders == q)[0]
        return complex(self.amplitudes[idx[0]]) if idx.size else 0j


def _bessel_orders(beta: float, tol: float, cap: int) -> int:
    """Smallest N with sum_{|n|>N} J_n(beta)^2 < tol (or ``cap``)."""
    if beta == 0:
        return 0
    n = np.arange(0, cap + 1)
    p = jv(n, beta) ** 2
    inside = p[0] + 2.0 * np.cumsum(p[1:])
    inside = np.concatenate(([p[0]], inside))
    ok = np.nonzero(1.0 - inside < tol)[0]
    return int(ok[0]) if ok.size else cap


def sideband_amplitudes(
    beta_mm: float,
    beta_alpha: float,
    truncation_tolerance: float = TRUNCATION_TOLERANCE,
    *,
    drive_frequency: float = 1.0,
    carrier_shift: float = 0.0,
    max_order: int = MAX_ORDER,
) -> SidebandSpectrum:
    """Phase-modulation comb A_q = sum_{n+2m=q} J_n(b_mm) i^n (-1)^m J_m(b_alpha).

    Offsets are q * ``drive_frequency``; with the default of 1 they are in
    units of the drive frequency.  Raises DomainError if the |q| <= max_order
    cap discards more than the tolerated tail power.
    """
    if not (math.isfinite(beta_mm) and math.isfinite(beta_alpha)):
        raise DomainError("modulation indices must be finite")
    tol = truncation_tolerance / 4.0
    nmax = _bessel_orders(abs(beta_mm), tol, 2 * max_order)
    mmax = _bessel_orders(abs(beta_alpha), tol, max_order)
    n = np.arange(-nmax, nmax + 1)
    m = np.arange(-mmax, mmax + 1)
    a = jv(n, beta_mm) * (1j) ** (n % 4)
    b = np.zeros(4 * mmax + 1, dtype=complex)
    b[::2] = np.where(m % 2, -1.0, 1.0) * jv(m, beta_alpha)
    amps = np.convolve(a, b)
    orders = np.arange(-(nmax + 2 * mmax), nmax + 2 * mmax + 1)
    keep = np.abs(orders) <= max_order
    orders, amps = orders[keep], amps[keep]
    discarded = max(0.0, 1.0 - float(math.fsum(np.abs(amps) ** 2)))
    if discarded > truncation_tolerance:
        raise DomainError(
            f"comb needs orders beyond |q|={max_order} "
            f"(beta_mm={beta_mm:g}, beta_alpha={beta_alpha:g})"
        )
    return SidebandSpectrum(carrier_shift, orders, orders * drive_frequency, amps, discarded)


@dataclass(frozen=True)
class TrapLineModel:
    drive: TrapDrive
    alpha: float  # MHz/(V/cm)^2
    omega0: float = 0.0  # Hz, unshifted line centre in the detuning frame
    broadening: BroadeningParams = field(default_factory=BroadeningParams)
    truncation_tolerance: float = TRUNCATION_TOLERANCE

    def indices(self) -> tuple[float, float, float]:
        d = self.drive
        return modulation_indices(
            self.alpha, d.field_amplitude, d.drive_frequency, d.laser_wavenumber, d.micromotion_amplitude
        )

    def comb(self) -> SidebandSpectrum:
        beta_mm, beta_alpha, shift = self.indices()
        return sideband_amplitudes(
            beta_mm,
            beta_alpha,
            self.truncation_tolerance,
            drive_frequency=self.drive.drive_frequency,
            carrier_shift=shift,
        )

    def kernel(self) -> GaussianKernel:
        return broadening_kernel(self.broadening, self.drive.laser_wavenumber)

    def required_span(self) -> tuple[float, float]:
        comb = self.comb()
        significant = comb.orders[comb.powers > self.truncation_tolerance]
        qmax = int(np.max(np.abs(significant))) if significant.size else 0
        half = qmax * self.drive.drive_frequency + 8.0 * self.kernel().sigma
        centre = self.omega0 + comb.carrier_shift
        return centre - half, centre + half


@dataclass(frozen=True)
class Spectrum:
    detunings: np.ndarray  # Hz relative to the bare line
    values: np.ndarray

    def __post_init__(self):
        if self.detunings.shape != self.values.shape:
            raise ValueError("detunings and values differ in shape")

    def peak_detuning(self) -> float:
        return float(self.detunings[np.argmax(self.values)])

    def centroid(self) -> float:
        return float(trapezoid(self.detunings * self.values, self.detunings) / trapezoid(self.values, self.detunings))

    def fwhm(self) -> float:
        """Width between the outermost half-maximum crossings (linear interpolation)."""
        x, y = self.detunings, self.values
        half = 0.5 * y.max()
        above = np.nonzero(y >= half)[0]
        i, j = above[0], above[-1]
        left = x[i] if i == 0 else np.interp(half, [y[i - 1], y[i]], [x[i - 1], x[i]])
        right = x[j] if j == len(x) - 1 else np.interp(half, [y[j + 1], y[j]], [x[j + 1], x[j]])
        return float(right - left)


def line_density(model: TrapLineModel, detunings) -> np.ndarray:
    """Unit-area spectral density (1/Hz) at ``detunings``, without span checks."""
    x = np.asarray(detunings, dtype=float)
    comb = model.comb()
    kernel = model.kernel()
    centres = model.omega0 + comb.carrier_shift + comb.offsets
    if kernel.sigma == 0:
        out = np.zeros_like(x)
        for c, p in zip(centres, comb.powers):
            out += p * kernel.on_grid(x, c)
        return out
    w = comb.powers
    sig = kernel.sigma
    # skip components whose Gaussian is far from every requested point
    lo, hi = x.min() - 40 * sig, x.max() + 40 * sig
    sel = (centres > lo) & (centres < hi) & (w > 0)
    d = (x[:, None] - centres[None, sel]) / sig
    return np.exp(-0.5 * d * d) @ w[sel] / (math.sqrt(2 * math.pi) * sig)


def synthesize_lineshape(model: TrapLineModel, grid) -> Spectrum:
    """Peak-normalized spectrum sum_q |A_q|^2 kernel(delta - shift - q Omega)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-D array")
    lo, hi = model.required_span()
    if grid[0] > lo or grid[-1] < hi:
        raise DomainError(
            f"grid [{grid[0]:.6g}, {grid[-1]:.6g}] Hz must span [{lo:.6g}, {hi:.6g}] Hz"
        )
    values = line_density(model, grid)
    return Spectrum(grid, values / values.max())
