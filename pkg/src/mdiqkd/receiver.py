"""Receiver: combiner interference, banked threshold detectors, Bell classification.

The receiver interferes the two incoming pulse trains on a 50:50 combiner.
Each output port feeds a bank of detectors through an even splitter so that
same-port early/late coincidences survive detector dead time. Detector ids
are ``2 * port + bank_index`` (0, 1 on port 0; 2, 3 on port 1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .optics import beamsplitter_intensities, click_probability
from .transmitter import Basis, IntensityClass, PulsePair, StateSymbol


class Bin(enum.IntEnum):
    EARLY = 0
    LATE = 1
    OUTSIDE = 2


class Bell(enum.Enum):
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"


@dataclass(frozen=True)
class DetectorConfig:
    efficiency: float = 0.8
    dead_time_s: float = 100e-9
    jitter_sigma_s: float = 30e-12
    dark_rate_hz: float = 100.0
    bank_size_per_port: int = 2
    bin_window_s: float = 250e-12  # acceptance half-width around each bin centre

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.dead_time_s < 0 or self.jitter_sigma_s < 0 or self.dark_rate_hz < 0:
            raise ValueError("dead time, jitter and dark rate must be >= 0")
        if self.bank_size_per_port < 1:
            raise ValueError("bank_size_per_port must be >= 1")
        if self.bin_window_s <= 0:
            raise ValueError("bin_window_s must be > 0")

    @property
    def n_detectors(self) -> int:
        return 2 * self.bank_size_per_port

    @property
    def dark_click_probability(self) -> float:
        """Dark probability per detector per bin over the full gated window."""
        return self.dark_rate_hz * 2.0 * self.bin_window_s


@dataclass(frozen=True)
class Click:
    detector_id: int
    time_s: float
    slot_index: int
    bin: Bin


@dataclass(frozen=True)
class BellOutcome:
    slot_index: int
    outcome: Bell | None


@dataclass(frozen=True)
class SiftedRecord:
    slot_index: int
    basis: Basis
    class_a: IntensityClass
    class_b: IntensityClass
    error: bool


@dataclass
class DetectorBank:
    """Mutable dead-time state: first slot at which each detector is live again."""

    next_live_slot: np.ndarray = field(default_factory=lambda: np.full(4, -(2**62), dtype=np.int64))

    @classmethod
    def for_config(cls, cfg: DetectorConfig) -> "DetectorBank":
        return cls(np.full(cfg.n_detectors, -(2**62), dtype=np.int64))


def dead_slots(cfg: DetectorConfig, slot_period_s: float) -> int:
    """Dead time quantised to whole slots (conservative ceil).

    A click suppresses the remainder of its own slot plus this many
    subsequent slots, which guarantees kept clicks on one detector are
    separated by more than the configured dead time.
    """
    if cfg.dead_time_s <= 0.0:
        return 0
    return int(math.ceil(cfg.dead_time_s / slot_period_s - 1e-12))


@dataclass(frozen=True)
class SlotIntensities:
    """Per-bin mean photon numbers at the two combiner outputs."""

    early_port0: float
    early_port1: float
    late_port0: float
    late_port1: float

    def port_bin(self, port: int, bin_: int) -> float:
        return (self.early_port0, self.early_port1, self.late_port0, self.late_port1)[2 * bin_ + port]


def interfere_slot(
    alice: PulsePair,
    bob: PulsePair,
    xi: float,
    rng: np.random.Generator | None = None,
) -> SlotIntensities:
    """Combine two time-aligned pulse pairs on the 50:50 combiner.

    Each bin interferes independently; the relative optical phase per bin is
    the global-phase difference plus the encoded bin phases carried by the
    pulses. ``rng`` is accepted for interface symmetry with the stochastic
    stages but the interference itself is deterministic given the phases.
    """
    dphi = bob.global_phase - alice.global_phase
    e0, e1 = beamsplitter_intensities(alice.early_intensity, bob.early_intensity, dphi, xi)
    l0, l1 = beamsplitter_intensities(
        alice.late_intensity,
        bob.late_intensity,
        dphi + (bob.relative_phase - alice.relative_phase),
        xi,
    )
    return SlotIntensities(e0, e1, l0, l1)


def detect_slot(
    intensities: SlotIntensities,
    cfg: DetectorConfig,
    rng: np.random.Generator,
    bank: DetectorBank,
    slot_index: int = 0,
    slot_period_s: float = 4e-9,
    bin_separation_s: float = 500e-12,
) -> list[Click]:
    """Sample detector clicks for one slot.

    Each port's light splits evenly over its bank; a live detector clicks in
    a bin with probability 1 - exp(-efficiency * intensity / bank_size),
    dark counts add within the gated windows, and a click makes its detector
    dead for the remainder of the slot plus the quantised dead window.
    Click times are the bin centre plus Gaussian jitter (timing only; the
    dead-time and bin bookkeeping use the unjittered bin grid).
    """
    n_dead = dead_slots(cfg, slot_period_s)
    p_dark = cfg.dark_click_probability
    early_centre = slot_index * slot_period_s + 0.5 * (slot_period_s - bin_separation_s)
    clicks: list[Click] = []
    for det in range(cfg.n_detectors):
        if slot_index < bank.next_live_slot[det]:
            continue
        port = det // cfg.bank_size_per_port
        for bin_ in (0, 1):
            p_photon = click_probability(
                intensities.port_bin(port, bin_) / cfg.bank_size_per_port, cfg.efficiency
            )
            p_click = 1.0 - (1.0 - float(p_photon)) * (1.0 - p_dark)
            if rng.random() < p_click:
                t = early_centre + bin_ * bin_separation_s
                if cfg.jitter_sigma_s > 0.0:
                    t += rng.normal(0.0, cfg.jitter_sigma_s)
                clicks.append(Click(det, t, slot_index, _assign_bin(t, early_centre, bin_separation_s, cfg)))
                if n_dead > 0:
                    bank.next_live_slot[det] = slot_index + n_dead + 1
                break  # a click silences this detector for the rest of the slot
    return clicks


def _assign_bin(t: float, early_centre: float, bin_separation_s: float, cfg: DetectorConfig) -> Bin:
    for bin_, centre in ((Bin.EARLY, early_centre), (Bin.LATE, early_centre + bin_separation_s)):
        if abs(t - centre) <= cfg.bin_window_s:
            return bin_
    return Bin.OUTSIDE


def classify_bell(clicks: list[Click], bank_size_per_port: int = 2) -> Bell | None:
    """Classify one slot's clicks into a Bell announcement.

    Exactly one early and one late in-window click are required. Different
    output ports announce psi-minus; the same port on two distinct physical
    detectors announces psi-plus. Everything else (no clicks, single clicks,
    extra clicks, same-bin coincidences, both clicks on one detector) is
    not an announcement.
    """
    early = [c for c in clicks if c.bin == Bin.EARLY]
    late = [c for c in clicks if c.bin == Bin.LATE]
    outside = [c for c in clicks if c.bin == Bin.OUTSIDE]
    if len(early) != 1 or len(late) != 1 or len(clicks) - len(outside) != 2:
        return None
    d_early, d_late = early[0].detector_id, late[0].detector_id
    if d_early == d_late:
        return None
    if d_early // bank_size_per_port != d_late // bank_size_per_port:
        return Bell.PSI_MINUS
    return Bell.PSI_PLUS


def sift(outcome: Bell | None, alice: StateSymbol, bob: StateSymbol) -> SiftedRecord | None:
    """Keep announced slots with matching non-vacuum bases and flag errors.

    Z announcements imply anti-correlated bits (Bob flips); in X, psi-minus
    implies anti-correlated (flip) and psi-plus correlated (no flip).
    """
    if alice.slot_index != bob.slot_index:
        raise ValueError(
            f"mismatched slot indices {alice.slot_index} != {bob.slot_index}"
        )
    if outcome is None:
        return None
    if alice.basis != bob.basis:
        return None
    if IntensityClass.VACUUM in (alice.intensity_class, bob.intensity_class):
        return None
    flip = outcome == Bell.PSI_MINUS or alice.basis == Basis.Z
    corrected = bob.bit ^ 1 if flip else bob.bit
    return SiftedRecord(
        alice.slot_index,
        alice.basis,
        alice.intensity_class,
        bob.intensity_class,
        error=alice.bit != corrected,
    )
