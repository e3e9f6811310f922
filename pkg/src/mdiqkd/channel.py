"""Fiber attenuation and residual mode mismatch between a transmitter and the receiver."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .transmitter import PulsePair


@dataclass(frozen=True)
class ChannelConfig:
    """One arm (transmitter to receiver). ``misalignment_xi`` is the residual
    amplitude overlap at zero detuning from polarisation/timing imperfections."""

    length_km: float = 12.5
    alpha_db_per_km: float = 0.2
    extra_loss_db: float = 0.0
    misalignment_xi: float = 1.0

    def __post_init__(self):
        if self.length_km < 0 or self.alpha_db_per_km < 0 or self.extra_loss_db < 0:
            raise ValueError("length, attenuation and extra loss must be >= 0")
        if not 0.0 <= self.misalignment_xi <= 1.0:
            raise ValueError(f"misalignment_xi must lie in [0, 1], got {self.misalignment_xi}")


def transmittance(cfg: ChannelConfig) -> float:
    """Power transmittance 10^-(alpha*L + extra)/10 of one arm."""
    return 10.0 ** (-(cfg.alpha_db_per_km * cfg.length_km + cfg.extra_loss_db) / 10.0)


def attenuate(pulse: PulsePair, cfg: ChannelConfig) -> PulsePair:
    """Scale both bin intensities by the arm transmittance; coherent states
    stay coherent under loss, so phases are untouched."""
    eta = transmittance(cfg)
    return replace(
        pulse,
        early_intensity=pulse.early_intensity * eta,
        late_intensity=pulse.late_intensity * eta,
    )
