"""Per-symbol state generation for one time-bin transmitter.

Each transmitter emits one BB84 symbol per slot (clock / cycles_per_symbol).
A symbol is a basis/bit/intensity-class draw plus a fresh uniform global
phase; its physical realisation is a pair of coherent time-bin amplitudes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .optics import FWHM_TO_SIGMA, TWO_PI, relative_bin_phase


class Basis(enum.IntEnum):
    Z = 0
    X = 1


class IntensityClass(enum.IntEnum):
    """The four emitted intensity levels. SIGNAL is Z-encoded, the rest X."""

    SIGNAL = 0
    DECOY1 = 1
    DECOY2 = 2
    VACUUM = 3


N_CLASSES = 4


@dataclass(frozen=True)
class TransmitterConfig:
    clock_hz: float = 2e9
    cycles_per_symbol: int = 8
    bin_separation_s: float = 500e-12
    pulse_fwhm_s: float = 130e-12
    extinction_db: float = 30.0
    intensity_signal: float = 0.2
    intensity_decoy1: float = 0.1
    intensity_decoy2: float = 0.01
    intensity_vacuum: float = 5e-4
    prob_signal: float = 0.5
    prob_decoy1: float = 1.0 / 6.0
    prob_decoy2: float = 1.0 / 6.0
    prob_vacuum: float = 1.0 / 6.0
    wavelength_offset_hz: float = 0.0

    def __post_init__(self):
        if self.clock_hz <= 0 or self.cycles_per_symbol < 1:
            raise ValueError("clock_hz must be > 0 and cycles_per_symbol >= 1")
        if self.bin_separation_s <= 0 or self.pulse_fwhm_s <= 0:
            raise ValueError("bin_separation_s and pulse_fwhm_s must be > 0")
        probs = self.class_probabilities()
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"class probabilities must be >= 0 and sum to 1, got {probs}")
        ints = self.intensities()
        if not (ints[0] > ints[1] > ints[2] > ints[3] > 0.0):
            raise ValueError(
                "intensities must be strictly ordered signal > decoy1 > decoy2 > vacuum > 0, "
                f"got {ints}"
            )
        if self.bin_separation_s >= self.symbol_period_s:
            raise ValueError("bin separation must fit inside one symbol period")

    def intensities(self) -> tuple[float, float, float, float]:
        return (
            self.intensity_signal,
            self.intensity_decoy1,
            self.intensity_decoy2,
            self.intensity_vacuum,
        )

    def class_probabilities(self) -> tuple[float, float, float, float]:
        return (self.prob_signal, self.prob_decoy1, self.prob_decoy2, self.prob_vacuum)

    @property
    def symbol_rate_hz(self) -> float:
        return self.clock_hz / self.cycles_per_symbol

    @property
    def symbol_period_s(self) -> float:
        return self.cycles_per_symbol / self.clock_hz

    @property
    def pulse_sigma_s(self) -> float:
        return self.pulse_fwhm_s / FWHM_TO_SIGMA

    @property
    def leak_fraction(self) -> float:
        """Intensity fraction leaking into the nominally empty bin of a Z state."""
        return 10.0 ** (-self.extinction_db / 10.0)


@dataclass(frozen=True)
class StateSymbol:
    slot_index: int
    basis: Basis
    bit: int
    intensity_class: IntensityClass
    global_phase: float


@dataclass(frozen=True)
class PulsePair:
    """Two coherent time-bin amplitudes realising one symbol.

    ``relative_phase`` is the optical phase of the late bin relative to the
    early bin; ``global_phase`` is the shared per-symbol random phase.
    """

    early_intensity: float
    late_intensity: float
    relative_phase: float
    global_phase: float

    @property
    def total_intensity(self) -> float:
        return self.early_intensity + self.late_intensity


def class_basis(intensity_class: IntensityClass) -> Basis:
    return Basis.Z if intensity_class == IntensityClass.SIGNAL else Basis.X


def sample_symbol(rng: np.random.Generator, config: TransmitterConfig, slot_index: int = 0) -> StateSymbol:
    """Draw one symbol: class per the protocol bias, uniform bit, uniform phase."""
    cls = IntensityClass(int(rng.choice(N_CLASSES, p=config.class_probabilities())))
    bit = int(rng.integers(0, 2))
    phase = float(rng.uniform(0.0, TWO_PI))
    return StateSymbol(slot_index, class_basis(cls), bit, cls, phase)


def sample_symbol_arrays(
    rng: np.random.Generator, config: TransmitterConfig, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised symbol draw: (classes, bits, global_phases) arrays of length n.

    Identical marginal distributions to ``sample_symbol``; used by the Monte
    Carlo engine where per-slot objects would dominate the runtime.
    """
    probs = np.asarray(config.class_probabilities())
    cut = np.cumsum(probs)
    classes = np.searchsorted(cut, rng.random(n), side="right").astype(np.int8)
    bits = rng.integers(0, 2, size=n, dtype=np.int8)
    phases = rng.random(n) * TWO_PI
    return classes, bits, phases


def encode_pulses(symbol: StateSymbol, config: TransmitterConfig) -> PulsePair:
    """Map one symbol to its two-bin coherent intensities.

    Z states put the class intensity in the bit's bin up to the finite
    extinction leak; X states split evenly with a 0/pi relative phase.
    Vacuum-class slots are emitted as maximally attenuated X states so
    that every X-basis intensity level shares one encoding distribution.
    """
    intensity = config.intensities()[symbol.intensity_class]
    eps = config.leak_fraction
    if symbol.basis == Basis.Z:
        active, leak = intensity * (1.0 - eps), intensity * eps
        if symbol.bit == 0:
            early, late = active, leak
        else:
            early, late = leak, active
        rel = 0.0
    else:
        early = late = 0.5 * intensity
        rel = math.pi if symbol.bit == 1 else 0.0
    return PulsePair(early, late, rel, symbol.global_phase)


def apply_detuning(pulse: PulsePair, delta_nu_hz: float, config: TransmitterConfig) -> PulsePair:
    """Rotate the late bin by the phase a frequency offset accumulates over one bin."""
    if delta_nu_hz == 0.0:
        return pulse
    shift = relative_bin_phase(delta_nu_hz, config.bin_separation_s)
    return replace(pulse, relative_phase=math.fmod(pulse.relative_phase + shift, TWO_PI))


def slot_time_s(slot_index: int, config: TransmitterConfig) -> float:
    """Absolute start time of a slot; symbol k occupies [k, k+1) / symbol_rate."""
    return slot_index * config.symbol_period_s
