"""Acceptance criteria, one test each, at the stated tolerances."""

import math

import numpy as np
import pytest
from scipy.special import jv

from helpers import ALPHA_TRUE, fft_comb, scan_template, synthetic_scan
from rydion.constants import CA40_ION_MASS_KG
from rydion.detection import SequenceParams, dark_probability, simulate_sequence
from rydion.errors import UnidentifiedSeriesError
from rydion.inference import fit_lineshape, identify_series, level_energy_from_wavelength
from rydion.lineshape import (
    VUV_WAVENUMBER,
    BroadeningParams,
    broadening_kernel,
    doppler_sigma,
    sideband_amplitudes,
)
from rydion.structure import (
    QuantumDefectModel,
    RydbergState,
    einstein_A,
    lifetime,
    polarizability,
    rabi_frequency,
    radial_matrix_element,
    transition_dipole,
)

MEASURED_LINES = [
    (122.041913e-9, "D3/2", 95589.258, 0.02),
    (122.032384e-9, "D3/2", 95595.656, 0.02),
    (122.04050e-9, "D5/2", 95650.901, 0.1),
]
F_LINES = (95589.258, 95595.656)


def test_c01_energies(criterion):
    got = [level_energy_from_wavelength(lam, lvl) for lam, lvl, _, _ in MEASURED_LINES]
    ok = all(abs(g - ref) <= tol for g, (_, _, ref, tol) in zip(got, MEASURED_LINES))
    detail = ", ".join(f"{g:.4f} (ref {ref})" for g, (_, _, ref, _) in zip(got, MEASURED_LINES))
    criterion(1, ok, f"measured level energies {detail} cm^-1")
    assert ok


def test_c02_series_identification(criterion, ca_model):
    a = identify_series(F_LINES, 2, (20, 100), ca_model)
    f_ok = a.n == (51, 52) and 0.0 <= a.defect <= 0.2
    try:
        p = identify_series(F_LINES, 2, (20, 100), ca_model, fixed_defect=1.44)
        p_rejected, p_text = False, f"P hypothesis accepted as n={p.n}, residual norm {p.residual_norm:.3g} cm^-1"
    except UnidentifiedSeriesError:
        p_rejected, p_text = True, "P hypothesis rejected"
    ok = f_ok and p_rejected
    criterion(2, ok, f"F lines -> n={a.n}, delta={a.defect:.4f} (need 51,52 and [0,0.2]); {p_text}")
    assert f_ok, f"assignment n={a.n}, delta={a.defect}"
    assert p_rejected, p_text


def test_c03_polarizability_signs(criterion, ca_model):
    f = polarizability(RydbergState(51, 3), ca_model, (40, 60)).alpha_half
    p = polarizability(RydbergState(51, 1), ca_model, (40, 60)).alpha_half
    ok = f > 0 and 200.0 <= f <= 800.0 and p < 0
    criterion(3, ok, f"alpha/2: 51F = {f:.1f}, 51P = {p:.2f} MHz/(V/cm)^2")
    assert ok


def test_c04_lifetime_4p(criterion, ca_model):
    tau = lifetime(RydbergState(4, 1), ca_model, [RydbergState(4, 0), RydbergState(3, 2)])
    ok = abs(tau - 6.55e-9) <= 0.15 * 6.55e-9
    criterion(4, ok, f"4P lifetime {tau * 1e9:.3f} ns vs 6.55 ns (15%)")
    assert ok


def test_c05_hydrogen_oracle(criterion):
    h = QuantumDefectModel.hydrogenic(1)
    s, p = RydbergState(1, 0), RydbergState(2, 1)
    rho = radial_matrix_element(s, p, h)
    exact = 128 * math.sqrt(6) / 243
    c = h.constants
    nu = c.wavenumber_to_hz(c.rydberg_constant * 0.75)
    A = einstein_A(p, s, nu, h)
    ok = abs(rho / exact - 1) <= 1e-6 and abs(A / 6.27e8 - 1) <= 0.01
    criterion(5, ok, f"1s-2p radial {rho:.10f} a0 (exact {exact:.10f}); A(2p) = {A:.4e} 1/s")
    assert ok


def test_c06_comb_against_fft(criterion):
    rng = np.random.default_rng(6)
    worst = 0.0
    for bm, ba in rng.uniform(0.0, 2.0, size=(20, 2)):
        oracle = fft_comb(bm, ba)
        comb = sideband_amplitudes(bm, ba, 1e-14)
        worst = max(worst, max(abs(comb.amplitude(q) - a) for q, a in oracle.items()))
    parseval = max(
        abs(sideband_amplitudes(bm, ba).total_power - 1.0) for bm, ba in rng.uniform(0.0, 2.0, size=(20, 2))
    )
    ok = worst <= 1e-6 and parseval <= 1e-9
    criterion(6, ok, f"max |A_q - FFT| = {worst:.2e}, max Parseval deficit = {parseval:.2e}")
    assert ok


def test_c07_outlook_ratio(criterion):
    comb = sideband_amplitudes(0.0, 0.6)
    ratio = abs(comb.amplitude(0)) / abs(comb.amplitude(2))
    ref = jv(0, 0.6) / jv(1, 0.6)
    ok = abs(ratio / ref - 1) <= 0.01 and abs(ratio / 3.18 - 1) <= 0.01
    criterion(7, ok, f"carrier / first Stark sideband = {ratio:.4f} (J0/J1 = {ref:.4f})")
    assert ok


def test_c08_broadening(criterion):
    sigma = doppler_sigma(5e-3, CA40_ION_MASS_KG, VUV_WAVENUMBER)
    fwhm = broadening_kernel(BroadeningParams()).fwhm
    doppler_ok = abs(sigma / 8.4e6 - 1) <= 0.01
    fwhm_ok = abs(fwhm - 10e6) <= 0.5 * 10e6
    criterion(8, doppler_ok and fwhm_ok, f"Doppler sigma {sigma / 1e6:.3f} MHz; kernel FWHM {fwhm / 1e6:.2f} MHz (need 5..15)")
    assert doppler_ok
    assert fwhm_ok


def _fit_pair(seed):
    """84 V/m with omega0 free, then 24 V/m with omega0 fixed to that result."""
    d84, t84 = synthetic_scan(84.0, seed)
    d24, t24 = synthetic_scan(24.0, seed + 1)
    r84 = fit_lineshape(d84, t84)
    w0, s_w0 = r84.parameters["omega0"], r84.errors["omega0"]
    r24 = fit_lineshape(d24, t24, ("alpha", "amplitude", "baseline"), {"omega0": w0})
    a84, e84 = r84.alpha_half, 0.5 * r84.errors["alpha"]
    a24 = r24.alpha_half
    # the omega0 uncertainty enters through the static shift -alpha E^2 / 4
    e_w0 = 0.5 * 4.0 * s_w0 / 24.0**2 / 100.0
    e24 = math.hypot(0.5 * r24.errors["alpha"], e_w0)
    return a84, e84, a24, e24, r84.converged and r24.converged


def test_c09_fit_round_trip(criterion):
    true = ALPHA_TRUE / 2
    runs = [_fit_pair(1000 + 2 * i) for i in range(100)]
    a84, e84, a24, e24, conv = runs[0]
    each = abs(a84 - true) <= 0.25 * true and abs(a24 - true) <= 0.25 * true
    agree = abs(a84 - a24) <= math.hypot(e84, e24)
    arr = np.array(runs, dtype=float)
    bias_z = []
    for col in (0, 2):
        x = arr[:, col]
        bias_z.append((x.mean() - true) / (x.std(ddof=1) / math.sqrt(x.size)))
    unbiased = all(abs(z) < 2 for z in bias_z)
    converged = bool(arr[:, 4].all())
    ok = each and agree and unbiased and converged
    criterion(
        9,
        ok,
        f"alpha/2 = {a84:.1f}+/-{e84:.1f} (84 V/m), {a24:.1f}+/-{e24:.1f} (24 V/m); "
        f"MC bias/SE = {bias_z[0]:+.2f}, {bias_z[1]:+.2f}; all converged {converged}",
    )
    assert each and agree
    assert unbiased
    assert converged


def test_c10_detection_monte_carlo(criterion):
    params = SequenceParams(p_ryd_to_S=0.3, dark_error=0.02, bright_error=0.01, background=0.03)
    worst = 0.0
    for i, p_exc in enumerate((0.1, 0.5, 0.9)):
        rec = simulate_sequence(p_exc, params, 100_000, seed=10 + i)
        p = dark_probability(p_exc, params)
        worst = max(worst, abs(rec.dark_fraction - p) / math.sqrt(p * (1 - p) / rec.shots))
    zero = simulate_sequence(0.0, SequenceParams(), 100_000, seed=3).dark_counts
    ok = worst < 3 and zero == 0 and dark_probability(0.0, SequenceParams()) == 0.0
    criterion(10, ok, f"max deviation {worst:.2f} sigma at 1e5 shots; p_exc=0 -> {zero} dark")
    assert ok


def test_c11_rabi_52p(criterion, ca_model):
    d = transition_dipole(RydbergState(3, 2), RydbergState(52, 1), ca_model)
    f = rabi_frequency(3e-6, 10e-6, d) / (2 * math.pi)
    ok = 150e3 / 3 <= f <= 150e3 * 3
    criterion(11, ok, f"3D -> 52P Rabi frequency 2pi x {f / 1e3:.1f} kHz (50..450)")
    assert ok


@pytest.mark.parametrize("E", [24.0, 84.0])
def test_scan_template_indices(E):
    """Sanity check on the synthetic conditions: static shift -alpha E^2 / 4."""
    t = scan_template(E)
    _, _, shift = t.indices()
    assert shift == pytest.approx(-100.0 * ALPHA_TRUE * E**2 / 4)
