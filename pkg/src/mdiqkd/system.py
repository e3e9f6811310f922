"""Resolved physical parameters for one operating point.

Everything both engines need, with channel/detuning/overlap already folded
into plain numbers: per-arm survival probabilities, the detuning phase on
the second transmitter's late bin, the combined amplitude overlap and the
quantised dead window.
"""

from __future__ import annotations

from dataclasses import dataclass

from .channel import ChannelConfig, transmittance
from .optics import relative_bin_phase, spectral_overlap
from .receiver import DetectorConfig, dead_slots
from .transmitter import TransmitterConfig


@dataclass(frozen=True)
class SystemParams:
    intensities: tuple[float, float, float, float]
    class_probs: tuple[float, float, float, float]
    leak: float              # Z-state extinction leak fraction
    beta: float              # detuning phase on Bob's late bin
    xi: float                # total amplitude overlap (misalignment x spectral)
    eta_ch_a: float          # channel-only transmittance per arm
    eta_ch_b: float
    eta_det: float
    bank: int
    p_dark: float            # per detector per bin
    dead_slots: int
    slot_s: float
    bin_sep_s: float
    jitter_s: float
    symbol_rate_hz: float

    @property
    def eta_a(self) -> float:
        """Source-to-click survival of one of Alice's photons (channel x detector)."""
        return self.eta_ch_a * self.eta_det

    @property
    def eta_b(self) -> float:
        return self.eta_ch_b * self.eta_det

    @property
    def n_detectors(self) -> int:
        return 2 * self.bank


def build_system(
    tx: TransmitterConfig,
    channel_a: ChannelConfig,
    channel_b: ChannelConfig,
    det: DetectorConfig,
) -> SystemParams:
    """Fold configs into one operating point.

    The detuning (``tx.wavelength_offset_hz``) belongs to the second
    transmitter relative to the first; the residual misalignment overlap is
    taken from the second arm's channel (one scalar describes the pair).
    """
    dnu = tx.wavelength_offset_hz
    xi = channel_b.misalignment_xi * spectral_overlap(dnu, tx.pulse_sigma_s)
    beta = relative_bin_phase(dnu, tx.bin_separation_s)
    return SystemParams(
        intensities=tx.intensities(),
        class_probs=tx.class_probabilities(),
        leak=tx.leak_fraction,
        beta=beta,
        xi=xi,
        eta_ch_a=transmittance(channel_a),
        eta_ch_b=transmittance(channel_b),
        eta_det=det.efficiency,
        bank=det.bank_size_per_port,
        p_dark=det.dark_click_probability,
        dead_slots=dead_slots(det, tx.symbol_period_s),
        slot_s=tx.symbol_period_s,
        bin_sep_s=tx.bin_separation_s,
        jitter_s=det.jitter_sigma_s,
        symbol_rate_hz=tx.symbol_rate_hz,
    )
