"""Coherent-pulse mathematics shared by the transmitters, receiver and rate engines.

All functions are pure and accept numpy arrays wherever that is useful for
quadrature; scalars in, scalars out.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi

# Conversion between the intensity-profile FWHM of a Gaussian pulse and its
# standard deviation: FWHM = 2*sqrt(2*ln 2) * sigma.
FWHM_TO_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


def poisson_pn(mu: float, n: int) -> float:
    """Probability that a pulse of mean photon number ``mu`` carries ``n`` photons.

    Evaluated in log space so that vacuum-level intensities (~5e-4) stay
    accurate out to large ``n``.
    """
    if not math.isfinite(mu) or mu < 0.0:
        raise ValueError(f"mean photon number must be finite and >= 0, got {mu}")
    if n < 0 or n != int(n):
        raise ValueError(f"photon count must be a non-negative integer, got {n}")
    n = int(n)
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def binary_entropy(e: float) -> float:
    """Shannon binary entropy H2(e) in bits; H2(0) = H2(1) = 0 by continuity."""
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {e}")
    if e == 0.0 or e == 1.0:
        return 0.0
    return -e * math.log2(e) - (1.0 - e) * math.log2(1.0 - e)


def relative_bin_phase(delta_nu_hz: float, bin_separation_s: float) -> float:
    """Phase accumulated between two time bins by a frequency offset.

    A transmitter detuned by ``delta_nu_hz`` rotates its late bin by
    2*pi*dnu*dt relative to an on-frequency reference; returned reduced
    modulo 2*pi into [0, 2*pi).
    """
    if bin_separation_s <= 0.0:
        raise ValueError(f"bin separation must be > 0, got {bin_separation_s}")
    phase = math.fmod(TWO_PI * delta_nu_hz * bin_separation_s, TWO_PI)
    if phase < 0.0:
        phase += TWO_PI
    return phase


def spectral_overlap(delta_nu_hz: float, pulse_sigma_s: float) -> float:
    """Amplitude overlap of two Gaussian pulses offset in frequency.

    Gaussian model: xi = exp(-(2*pi*dnu)^2 * sigma_t^2 / 2), where sigma_t is
    the standard deviation of the intensity profile. xi(0) = 1 and xi decays
    monotonically with |dnu|.
    """
    if pulse_sigma_s <= 0.0:
        raise ValueError(f"pulse sigma must be > 0, got {pulse_sigma_s}")
    arg = TWO_PI * delta_nu_hz * pulse_sigma_s
    return math.exp(-0.5 * arg * arg)


def beamsplitter_intensities(alpha_sq, beta_sq, rel_phase, xi):
    """Mean output intensities of a lossless 50:50 combiner of two coherent fields.

    ``alpha_sq``/``beta_sq`` are the input mean photon numbers, ``rel_phase``
    the optical phase of the second input relative to the first, and ``xi``
    the amplitude mode overlap in [0, 1] that scales the interference
    cross-term. Energy is conserved: port0 + port1 == alpha_sq + beta_sq.

    Accepts scalars or broadcastable numpy arrays.
    """
    a = np.asarray(alpha_sq, dtype=float)
    b = np.asarray(beta_sq, dtype=float)
    if np.any(a < 0.0) or np.any(b < 0.0):
        raise ValueError("input intensities must be >= 0")
    half = 0.5 * (a + b)
    cross = xi * np.sqrt(a * b) * np.cos(rel_phase)
    port0 = half + cross
    port1 = half - cross
    if np.ndim(alpha_sq) == 0 and np.ndim(beta_sq) == 0 and np.ndim(rel_phase) == 0:
        return float(port0), float(port1)
    return port0, port1


def click_probability(intensity, efficiency: float):
    """Threshold-detector click probability for coherent light of a given intensity."""
    return -np.expm1(-efficiency * np.asarray(intensity, dtype=float))
