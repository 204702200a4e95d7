"""Physical constants (CODATA values shipped with scipy.constants)."""

from __future__ import annotations

from dataclasses import dataclass, fields

import scipy
from scipy import constants as sc

# 40Ca atomic mass (AME2020) minus one electron
CA40_ATOM_MASS_U = 39.962590850
ELECTRON_MASS_U = sc.physical_constants["electron mass in u"][0]
CA40_ION_MASS_U = CA40_ATOM_MASS_U - ELECTRON_MASS_U
CA40_ION_MASS_KG = CA40_ION_MASS_U * sc.atomic_mass


@dataclass(frozen=True)
class PhysicalConstants:
    rydberg_constant_inf: float = sc.Rydberg / 100.0  # cm^-1
    electron_ion_mass_ratio: float = ELECTRON_MASS_U / CA40_ION_MASS_U
    speed_of_light: float = sc.c
    bohr_radius: float = sc.physical_constants["Bohr radius"][0]
    boltzmann_constant: float = sc.k
    elementary_charge: float = sc.e
    reduced_planck: float = sc.hbar
    vacuum_permittivity: float = sc.epsilon_0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be strictly positive")

    @property
    def rydberg_constant(self) -> float:
        """Reduced-mass Rydberg constant R_inf / (1 + m_e/m_ion) in cm^-1."""
        return self.rydberg_constant_inf / (1.0 + self.electron_ion_mass_ratio)

    @property
    def planck(self) -> float:
        return 2.0 * sc.pi * self.reduced_planck

    def wavenumber_to_joule(self, sigma_per_cm: float) -> float:
        return sigma_per_cm * 100.0 * self.planck * self.speed_of_light

    def wavenumber_to_hz(self, sigma_per_cm: float) -> float:
        return sigma_per_cm * 100.0 * self.speed_of_light


DEFAULT_CONSTANTS = PhysicalConstants()


def provenance() -> str:
    return (
        f"CODATA constants from scipy {scipy.__version__} (scipy.constants); "
        f"40Ca+ mass {CA40_ION_MASS_U:.9f} u"
    )
