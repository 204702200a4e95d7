"""Independent oracles and synthetic data shared by the test modules."""

import numpy as np

from rydion.constants import CA40_ION_MASS_KG, DEFAULT_CONSTANTS
from rydion.detection import SequenceParams, simulate_scan
from rydion.lineshape import TrapDrive, TrapLineModel, line_density, micromotion_amplitude


def fft_comb(beta_mm, beta_alpha, n_samples=256, n_gauss=16):
    """Fourier components of exp(i phi(t)) with phi integrated numerically.

    Time in units of 1/Omega.  The instantaneous detuning relative to the
    carrier is beta_mm sin t - 4 beta_alpha (cos^2 t - 1/2); its integral is
    taken segment by segment with Gauss-Legendre quadrature from a time origin
    half a drive period in, and the mean phase is removed.
    Returns a dict q -> complex amplitude for |q| < n_samples / 2.
    """
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    t0 = np.pi
    h = 2 * np.pi / n_samples
    edges = t0 + h * np.arange(n_samples)

    def detuning(t):
        return beta_mm * np.sin(t) - 4.0 * beta_alpha * (np.cos(t) ** 2 - 0.5)

    seg = np.array([0.5 * h * np.sum(w * detuning(a + 0.5 * h * (x + 1))) for a in edges])
    phase = np.concatenate([[0.0], np.cumsum(seg[:-1])])
    phase -= phase.mean()
    c = np.fft.fft(np.exp(1j * phase)) / n_samples
    return {q: c[q % n_samples] for q in range(-n_samples // 2 + 1, n_samples // 2)}


OMEGA_DRIVE = 10e6  # Hz
ALPHA_TRUE = 1000.0  # MHz/(V/cm)^2, alpha/2 = 500
BASELINE = 0.02
PEAK_EXCITATION = 0.4
N_POINTS = 81
SHOTS = 50


def scan_template(E_ion, alpha=ALPHA_TRUE):
    x_mm = micromotion_amplitude(E_ion, OMEGA_DRIVE, CA40_ION_MASS_KG, DEFAULT_CONSTANTS.elementary_charge)
    return TrapLineModel(TrapDrive(OMEGA_DRIVE, E_ion, x_mm), alpha)


def synthetic_scan(E_ion, seed, shots=SHOTS, n_points=N_POINTS):
    """Simulated shelving scan of the line at field E_ion; detuning axis in Hz."""
    model = scan_template(E_ion)
    lo, hi = model.required_span()
    f = np.linspace(lo, hi, n_points)
    dens = line_density(model, f)
    p_exc = PEAK_EXCITATION * dens / dens.max()
    seq = SequenceParams(p_ryd_to_D52=1.0, background=BASELINE)
    md = {
        "omega_drive_hz": OMEGA_DRIVE,
        "E_ion_V_per_m": E_ion,
        "x_mm_m": model.drive.micromotion_amplitude,
    }
    return simulate_scan(f, p_exc, seq, shots, seed, md), model
