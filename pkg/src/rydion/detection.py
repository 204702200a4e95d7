"""Electron-shelving detection: excitation probability to observed dark fraction.

Sequence per shot: the ion starts in 3d D3/2, a Rydberg pulse excites it with
probability ``p_exc``, the Rydberg state decays to D5/2, S1/2 or back to
D3/2, optional 393 nm pumping shelves S1/2 population into D5/2, and a
397/866 nm fluorescence check reads D5/2 as dark.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

BRANCH_D52_D32 = 0.07  # decay ratio D5/2 : D3/2 from the Rydberg F level
PUMP_EFFICIENCY = 0.90
CHUNK_SHOTS = 8192


def branch_to_d52(value: float = BRANCH_D52_D32, interpretation: str = "ratio") -> float:
    """D5/2 branch probability from the quoted figure.

    ``"ratio"`` reads it as p(D5/2)/p(D3/2), ``"absolute"`` as p(D5/2) itself.
    """
    if interpretation == "ratio":
        return value / (1.0 + value)
    if interpretation == "absolute":
        return value
    raise ValueError("interpretation must be 'ratio' or 'absolute'")


def _check_probability(name, p):
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"{name} = {p} outside [0, 1]")


@dataclass(frozen=True)
class SequenceParams:
    p_ryd_to_D52: float = branch_to_d52()
    p_ryd_to_S: float = 0.0
    p_pump_S_to_D52: float = PUMP_EFFICIENCY
    include_pumping: bool = True
    dark_error: float = 0.0  # dark ion read as bright
    bright_error: float = 0.0  # bright ion read as dark
    background: float = 0.0  # dark probability without Rydberg excitation

    def __post_init__(self):
        for name in ("p_ryd_to_D52", "p_ryd_to_S", "p_pump_S_to_D52", "dark_error", "bright_error", "background"):
            _check_probability(name, getattr(self, name))
        if self.p_ryd_to_D52 + self.p_ryd_to_S > 1.0 + 1e-15:
            raise DomainError("p_ryd_to_D52 + p_ryd_to_S exceeds 1")

    @classmethod
    def f_state(cls, interpretation: str = "ratio", **kw) -> "SequenceParams":
        return cls(p_ryd_to_D52=branch_to_d52(BRANCH_D52_D32, interpretation), **kw)

    @property
    def shelving_probability(self) -> float:
        """Probability an excited ion ends dark before readout."""
        pumped = self.p_pump_S_to_D52 * self.p_ryd_to_S if self.include_pumping else 0.0
        return self.p_ryd_to_D52 + pumped


@dataclass(frozen=True)
class ShotRecord:
    shots: int
    dark_counts: int
    seed: int

    def __post_init__(self):
        if not (0 <= self.dark_counts <= self.shots):
            raise DomainError("dark_counts outside [0, shots]")

    @property
    def dark_fraction(self) -> float:
        return self.dark_counts / self.shots


def dark_probability(p_exc: float, params: SequenceParams = SequenceParams()) -> float:
    """Probability a single shot is read as dark."""
    _check_probability("p_exc", p_exc)
    b = params.background
    signal = b + (1.0 - b) * p_exc * params.shelving_probability
    return signal * (1.0 - params.dark_error) + (1.0 - signal) * params.bright_error


def projection_noise(p: float, shots: int):
    """Standard deviation sqrt(p(1-p)/N) of a dark fraction from N shots."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("p outside [0, 1]")
    if np.any(np.asarray(shots) < 1):
        raise DomainError("shots must be >= 1")
    out = np.sqrt(p * (1.0 - p) / shots)
    return float(out) if out.ndim == 0 else out


def _chunk_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _dark_in_chunk(p_exc, params, n, rng):
    """Sample n shots through the outcome tree; returns the number read dark."""
    u = rng.random((n, 5))
    background = u[:, 0] < params.background
    excited = u[:, 1] < p_exc
    to_d52 = u[:, 2] < params.p_ryd_to_D52
    to_s = (~to_d52) & (u[:, 2] < params.p_ryd_to_D52 + params.p_ryd_to_S)
    pumped = params.include_pumping & to_s & (u[:, 3] < params.p_pump_S_to_D52)
    dark = background | (excited & (to_d52 | pumped))
    flip = np.where(dark, u[:, 4] < params.dark_error, u[:, 4] < params.bright_error)
    return int(np.count_nonzero(dark ^ flip))


def simulate_sequence(
    p_exc: float,
    params: SequenceParams = SequenceParams(),
    shots: int = 50,
    seed: int = 0,
    *,
    point: int = 0,
    workers: int = 1,
) -> ShotRecord:
    """Monte-Carlo shot record.

    Shots are split into fixed chunks, each with its own generator keyed by
    (seed, point, chunk index), so the record does not depend on ``workers``.
    """
    _check_probability("p_exc", p_exc)
    if shots < 1:
        raise DomainError("shots must be >= 1")
    sizes = [CHUNK_SHOTS] * (shots // CHUNK_SHOTS)
    if shots % CHUNK_SHOTS:
        sizes.append(shots % CHUNK_SHOTS)

    def run(i):
        return _dark_in_chunk(p_exc, params, sizes[i], _chunk_rng(seed, point, i))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as pool:
            counts = list(pool.map(run, range(len(sizes))))
    else:
        counts = [run(i) for i in range(len(sizes))]
    return ShotRecord(shots, sum(counts), seed)


def simulate_scan(frequencies, p_exc_values, params=SequenceParams(), shots=50, seed=0, metadata=None):
    """Shot records for a frequency scan, as a MeasuredSpectrum."""
    from .inference import MeasuredSpectrum

    p_exc_values = np.asarray(p_exc_values, dtype=float)
    counts = [
        simulate_sequence(float(p), params, shots, seed, point=i).dark_counts
        for i, p in enumerate(p_exc_values)
    ]
    n = len(counts)
    return MeasuredSpectrum(np.asarray(frequencies, dtype=float), np.full(n, shots), np.array(counts), dict(metadata or {}))


def binomial_z(record: ShotRecord, p: float) -> float:
    """Deviation of the observed dark fraction from p in binomial standard deviations."""
    sd = math.sqrt(p * (1.0 - p) / record.shots)
    diff = record.dark_fraction - p
    return diff / sd if sd > 0 else (0.0 if diff == 0 else math.inf)
