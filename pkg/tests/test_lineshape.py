import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import k as kB
from scipy.integrate import trapezoid
from scipy.special import jv

from helpers import fft_comb
from rydion.constants import CA40_ION_MASS_KG
from rydion.errors import DomainError
from rydion.lineshape import (
    FWHM_PER_SIGMA,
    VUV_WAVENUMBER,
    BroadeningParams,
    GaussianKernel,
    TrapDrive,
    TrapLineModel,
    broadening_kernel,
    doppler_sigma,
    line_density,
    micromotion_amplitude,
    modulation_indices,
    sideband_amplitudes,
    synthesize_lineshape,
)

betas = st.floats(0.0, 3.0)
# truncation tolerance and the largest amplitude it may drop
TIGHT = 1e-15
DROPPED = math.sqrt(TIGHT)


def test_doppler_sigma_closed_form():
    sigma = doppler_sigma(5e-3, CA40_ION_MASS_KG, VUV_WAVENUMBER)
    ref = math.sqrt(kB * 5e-3 / CA40_ION_MASS_KG) / 122.04e-9
    assert sigma == pytest.approx(ref, rel=1e-12)
    assert sigma == pytest.approx(8.3575e6, rel=1e-4)


def test_default_kernel_combines_doppler_and_zeeman():
    b = BroadeningParams()
    k = broadening_kernel(b)
    zeeman_sigma = b.zeeman_fwhm / FWHM_PER_SIGMA
    dop = doppler_sigma(b.temperature, b.ion_mass, VUV_WAVENUMBER)
    assert k.sigma == pytest.approx(math.hypot(dop, zeeman_sigma))
    assert k.fwhm == pytest.approx(FWHM_PER_SIGMA * k.sigma)


def test_zero_width_kernel_is_unit_spike():
    grid = np.linspace(-5, 5, 11)
    v = GaussianKernel(0.0).on_grid(grid, 0.0)
    assert trapezoid(v, grid) == pytest.approx(1.0)
    assert np.count_nonzero(v) == 1


def test_modulation_indices_values():
    bmm, ba, shift = modulation_indices(1000.0, 24.0, 10e6, VUV_WAVENUMBER, 1e-8)
    assert ba == pytest.approx(1000.0 * 100 * 24.0**2 / (8 * 10e6))
    assert ba == pytest.approx(0.72)
    assert shift == pytest.approx(-1000.0 * 100 * 24.0**2 / 4)
    assert bmm == pytest.approx(VUV_WAVENUMBER * 1e-8)


def test_micromotion_amplitude_closed_form():
    e = 1.602176634e-19
    x = micromotion_amplitude(84.0, 10e6, CA40_ION_MASS_KG, e)
    assert x == pytest.approx(e * 84.0 / (CA40_ION_MASS_KG * (2 * math.pi * 10e6) ** 2))


@settings(max_examples=40, deadline=None)
@given(betas, betas)
def test_parseval(bmm, ba):
    assert sideband_amplitudes(bmm, ba).total_power == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_comb_matches_time_domain_oracle(bmm, ba):
    oracle = fft_comb(bmm, ba)
    comb = sideband_amplitudes(bmm, ba, 1e-14)
    assert max(abs(comb.amplitude(q) - a) for q, a in oracle.items()) < 1e-6


@given(betas)
def test_pure_micromotion_is_bessel(b):
    comb = sideband_amplitudes(b, 0.0, TIGHT)
    for q in range(-5, 6):
        assert abs(comb.amplitude(q)) == pytest.approx(abs(jv(q, b)), abs=DROPPED)


@given(betas)
def test_pure_stark_has_even_orders_only(b):
    comb = sideband_amplitudes(0.0, b, TIGHT)
    for q in range(-7, 8, 2):
        assert abs(comb.amplitude(q)) < 1e-15
    for m in range(-3, 4):
        assert abs(comb.amplitude(2 * m)) == pytest.approx(abs(jv(m, b)), abs=DROPPED)


@given(betas, betas)
def test_sign_flip_mirrors_comb(bmm, ba):
    plus = sideband_amplitudes(bmm, ba, TIGHT)
    minus = sideband_amplitudes(bmm, -ba, TIGHT)
    for q in range(-6, 7):
        assert abs(minus.amplitude(q)) == pytest.approx(abs(plus.amplitude(-q)), abs=1e-14)


def test_zero_modulation_is_single_line():
    comb = sideband_amplitudes(0.0, 0.0)
    assert comb.amplitude(0) == pytest.approx(1.0)
    assert comb.orders.tolist() == [0]


def test_truncation_cap_raises():
    with pytest.raises(DomainError):
        sideband_amplitudes(50.0, 0.0, max_order=10)


def test_outlook_carrier_ratio():
    comb = sideband_amplitudes(0.0, 0.6)
    assert abs(comb.amplitude(0) / comb.amplitude(2)) == pytest.approx(3.181, abs=1e-3)


def test_drive_validation():
    with pytest.raises(ValueError):
        TrapDrive(0.0)
    with pytest.raises(ValueError):
        TrapDrive(1e7, -1.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 90.0), st.floats(-2000.0, 2000.0))
def test_line_density_has_unit_area(E, alpha):
    m = TrapLineModel(TrapDrive(10e6, E, 0.0), alpha)
    lo, hi = m.required_span()
    grid = np.linspace(lo, hi, 6001)
    assert trapezoid(line_density(m, grid), grid) == pytest.approx(1.0, abs=1e-4)


def test_zero_field_gives_single_gaussian():
    m = TrapLineModel(TrapDrive(10e6), 1000.0)
    lo, hi = m.required_span()
    grid = np.linspace(lo, hi, 2001)
    s = synthesize_lineshape(m, grid)
    k = m.kernel()
    assert np.allclose(s.values, np.exp(-0.5 * (grid / k.sigma) ** 2), atol=1e-12)
    assert s.fwhm() == pytest.approx(k.fwhm, rel=1e-3)


def test_peak_red_shifts_with_field():
    peaks = []
    for E in (0.0, 20.0, 40.0, 60.0, 84.0):
        m = TrapLineModel(TrapDrive(10e6, E, 0.0), 1000.0)
        grid = np.linspace(-1e9, 5e8, 30001)
        peaks.append(synthesize_lineshape(m, grid).centroid())
    assert all(b < a for a, b in zip(peaks, peaks[1:]))
    assert peaks[-1] == pytest.approx(-1000.0 * 100 * 84.0**2 / 4, rel=1e-3)


def test_grid_must_cover_span():
    m = TrapLineModel(TrapDrive(10e6, 84.0, 0.0), 1000.0)
    with pytest.raises(DomainError):
        synthesize_lineshape(m, np.linspace(-1e6, 1e6, 11))
    with pytest.raises(ValueError):
        synthesize_lineshape(m, np.array([1.0, 0.0]))


def test_centroid_equals_static_shift():
    m = TrapLineModel(TrapDrive(10e6, 30.0, 3e-8), 800.0, omega0=2e6)
    lo, hi = m.required_span()
    grid = np.linspace(lo, hi, 20001)
    s = synthesize_lineshape(m, grid)
    assert s.centroid() == pytest.approx(2e6 - 800.0 * 100 * 900 / 4, abs=1e3)
