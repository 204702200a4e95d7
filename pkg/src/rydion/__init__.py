"""Rydberg excitation spectra of a single trapped ion.

Quantum-defect level structure, trap-modulated lineshapes, spectrum fitting
under projection noise and the electron-shelving detection sequence.
"""

__version__ = "0.1.0"
