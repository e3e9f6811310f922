"""Exact output-count statistics for photon-number states meeting at the combiner.

Conditioned on the two transmitters having emitted definite photon numbers
(the phase-randomised source is an exact Poisson mixture of number states),
the slot reduces to n photons in Alice's pulse mode and m photons in the
matched component of Bob's, interfering on the 50:50 combiner. This module
enumerates the exact joint count distribution over the four observable
(port, bin) modes. Global laser phases cancel for number states, so the
distribution depends only on the encoded bin structure and any detuning
phase, which keeps the state space small enough to tabulate.

Mode order everywhere: (port0 early, port1 early, port0 late, port1 late).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

# Shape ids for the four distinct two-bin amplitude structures.
SHAPE_Z0 = 0
SHAPE_Z1 = 1
SHAPE_XP = 2
SHAPE_XM = 3


def shape_amplitudes(shape: int, leak: float, late_phase: float = 0.0) -> tuple[complex, complex]:
    """Normalised (early, late) amplitudes of a pulse shape.

    ``leak`` is the extinction leak fraction for Z states; ``late_phase`` is
    an extra optical phase on the late bin (detuning walk-off).
    """
    rot = complex(math.cos(late_phase), math.sin(late_phase))
    if shape == SHAPE_Z0:
        return math.sqrt(1.0 - leak), math.sqrt(leak) * rot
    if shape == SHAPE_Z1:
        return math.sqrt(leak), math.sqrt(1.0 - leak) * rot
    s = 1.0 / math.sqrt(2.0)
    if shape == SHAPE_XP:
        return s, s * rot
    if shape == SHAPE_XM:
        return s, -s * rot
    raise ValueError(f"unknown shape id {shape}")


def shape_for(intensity_class: int, bit: int) -> int:
    """Shape of a (class, bit) symbol; every X-basis class shares the X shapes."""
    if intensity_class == 0:
        return SHAPE_Z1 if bit else SHAPE_Z0
    return SHAPE_XM if bit else SHAPE_XP


def output_vectors(u: tuple[complex, complex], v: tuple[complex, complex]) -> tuple[np.ndarray, np.ndarray]:
    """Output-mode coefficient vectors for the two input pulse modes.

    The combiner maps input A to (port0 + port1)/sqrt(2) and input B to
    (port0 - port1)/sqrt(2); each bin transforms identically.
    """
    s = 1.0 / math.sqrt(2.0)
    c = np.array([u[0] * s, u[0] * s, u[1] * s, u[1] * s], dtype=complex)
    e = np.array([v[0] * s, -v[0] * s, v[1] * s, -v[1] * s], dtype=complex)
    return c, e


@lru_cache(maxsize=None)
def _compositions(total: int, parts: int) -> tuple[tuple[int, ...], ...]:
    if parts == 1:
        return ((total,),)
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def _log_factorials(n: int) -> np.ndarray:
    return np.array([math.lgamma(k + 1) for k in range(n + 1)])


def pattern_distribution(
    u: tuple[complex, complex],
    v: tuple[complex, complex],
    n: int,
    m: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Joint count distribution over the four (port, bin) modes.

    Input: n photons in pulse mode ``u`` (first combiner input) and m photons
    in pulse mode ``v`` (second input), both already reduced to the matched
    spatial/spectral component. Returns ``(patterns, probs)`` where patterns
    has shape (P, 4) with rows summing to n + m.

    The amplitude of an occupation pattern K is the sum over ways of
    splitting the two input powers across modes:
        A(K) = sqrt(prod K_j! / (n! m!)) *
               sum_{nv+mv=K} n!/prod(nv!) m!/prod(mv!) prod c^nv e^mv
    """
    if n < 0 or m < 0:
        raise ValueError("photon numbers must be >= 0")
    c, e = output_vectors(u, v)
    total = n + m
    patterns = _compositions(total, 4)
    index = {p: i for i, p in enumerate(patterns)}
    amps = np.zeros(len(patterns), dtype=complex)

    lfac = _log_factorials(max(total, 1))
    log_n_fac = lfac[n]
    log_m_fac = lfac[m]

    def split_weights(count: int, coeff: np.ndarray, log_count_fac: float):
        rows = []
        for comp in _compositions(count, 4):
            w = complex(math.exp(log_count_fac - sum(lfac[k] for k in comp)))
            for j, k in enumerate(comp):
                if k:
                    w *= coeff[j] ** k
            rows.append((comp, w))
        return rows

    a_rows = split_weights(n, c, log_n_fac)
    b_rows = split_weights(m, e, log_m_fac)
    for nv, wa in a_rows:
        if wa == 0:
            continue
        for mv, wb in b_rows:
            if wb == 0:
                continue
            key = (nv[0] + mv[0], nv[1] + mv[1], nv[2] + mv[2], nv[3] + mv[3])
            amps[index[key]] += wa * wb

    pat = np.array(patterns, dtype=np.int16)
    log_kfac = np.array([sum(lfac[k] for k in p) for p in patterns])
    probs = (np.abs(amps) ** 2) * np.exp(log_kfac - log_n_fac - log_m_fac)
    norm = probs.sum()
    if not math.isclose(norm, 1.0, rel_tol=0, abs_tol=1e-9):
        raise AssertionError(f"pattern distribution not normalised: sum={norm!r}")
    keep = probs > 0.0
    return pat[keep], probs[keep]


@lru_cache(maxsize=None)
def cached_distribution(
    shape_a: int,
    shape_b: int,
    n: int,
    m: int,
    leak: float,
    beta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Memoised ``pattern_distribution`` keyed by discrete shape ids.

    ``beta`` is the detuning phase applied to the second transmitter's late
    bin; it is baked into the table because it is constant within a run.
    """
    u = shape_amplitudes(shape_a, leak)
    v = shape_amplitudes(shape_b, leak, late_phase=beta)
    return pattern_distribution(u, v, n, m)


def routing_probabilities(shape: int, leak: float) -> np.ndarray:
    """Single-pulse multinomial routing over the four (port, bin) modes.

    With no interference partner every photon of the pulse lands
    independently: bin per the shape's intensity split, port 50:50.
    """
    u = shape_amplitudes(shape, leak)
    w_early = abs(u[0]) ** 2
    w_late = abs(u[1]) ** 2
    return np.array([0.5 * w_early, 0.5 * w_early, 0.5 * w_late, 0.5 * w_late])
