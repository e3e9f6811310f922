"""Deterministic expectation engine: gains and error rates without sampling.

Averages the slot model over the per-symbol random phases with a periodic
quadrature (the average over the two independent global phases reduces
exactly to an average over their difference) and over the bit/class draws,
and sums the Bell-classifier click patterns in closed form. Detector dead
time enters through the stationary live probability of the quantised
dead-window renewal process; distinct detectors are treated as independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .multiphoton import cached_distribution, routing_probabilities, shape_amplitudes, shape_for
from .optics import TWO_PI, beamsplitter_intensities, click_probability
from .system import SystemParams
from .transmitter import IntensityClass

SIGNAL = int(IntensityClass.SIGNAL)
VACUUM = int(IntensityClass.VACUUM)


@dataclass(frozen=True)
class AnalyticGains:
    """Expected per-cell statistics; indices are (alice class, bob class)."""

    q: np.ndarray                 # (4, 4) announcement probability per sent pair
    eq: np.ndarray                # (4, 4) error-weighted announcement probability
    error_defined: np.ndarray     # (4, 4) bool, cells where the sifter defines errors
    qbar: np.ndarray              # per-detector click probability per slot while live
    live: np.ndarray              # per-detector stationary live probability
    announce_per_slot: float      # class-averaged announcement probability

    def e(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.q > 0, self.eq / self.q, np.nan)


def _pair_error_flags(class_a: int, bit_a: int, class_b: int, bit_b: int) -> tuple[float, float] | None:
    """(error under psi_minus, error under psi_plus), or None if no matching basis."""
    za, zb = class_a == SIGNAL, class_b == SIGNAL
    if za != zb:
        return None
    if za:
        err = 1.0 if bit_a == bit_b else 0.0
        return err, err
    return (1.0 if bit_a == bit_b else 0.0), (1.0 if bit_a != bit_b else 0.0)


def bell_probabilities(
    p_early: np.ndarray,
    p_late: np.ndarray,
    live: np.ndarray,
    bank: int,
    suppress_same_slot: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Announcement probabilities from per-detector per-bin click probabilities.

    ``p_early``/``p_late`` have shape (..., n_det) and already include dark
    counts. An announcement is exactly one early-only and one late-only click
    on two distinct detectors, everything else silent. Detectors that are
    dead (probability 1 - live) are silent. Returns (psi_minus, psi_plus).
    """
    if suppress_same_slot:
        p_e_only = p_early
        p_l_only = (1.0 - p_early) * p_late
    else:
        p_e_only = p_early * (1.0 - p_late)
        p_l_only = (1.0 - p_early) * p_late
    p_silent = (1.0 - p_early) * (1.0 - p_late)
    effective_silent = (1.0 - live) + live * p_silent

    n_det = p_early.shape[-1]
    shape = np.broadcast_shapes(p_early.shape[:-1], p_late.shape[:-1])
    p_minus = np.zeros(shape)
    p_plus = np.zeros(shape)
    for a in range(n_det):
        for b in range(n_det):
            if a == b:
                continue
            term = live[a] * live[b] * p_e_only[..., a] * p_l_only[..., b]
            for d in range(n_det):
                if d != a and d != b:
                    term = term * effective_silent[..., d]
            if a // bank == b // bank:
                p_plus = p_plus + term
            else:
                p_minus = p_minus + term
    return p_minus, p_plus


def _combo_click_probs(
    sys: SystemParams, class_a: int, bit_a: int, class_b: int, bit_b: int, delta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-detector click probabilities (photon plus dark) over the phase grid."""
    u = shape_amplitudes(shape_for(class_a, bit_a), sys.leak)
    v = shape_amplitudes(shape_for(class_b, bit_b), sys.leak, late_phase=sys.beta)
    i_a = sys.intensities[class_a] * sys.eta_ch_a
    i_b = sys.intensities[class_b] * sys.eta_ch_b

    ports = []
    for (ua, vb) in ((u[0], v[0]), (u[1], v[1])):
        a_int = i_a * abs(ua) ** 2
        b_int = i_b * abs(vb) ** 2
        phi = delta + (np.angle(vb) - np.angle(ua))
        p0, p1 = beamsplitter_intensities(a_int, b_int, phi, sys.xi)
        ports.append((p0, p1))
    (e0, e1), (l0, l1) = ports

    def det_probs(port0: np.ndarray, port1: np.ndarray) -> np.ndarray:
        per_port = [
            click_probability(port0 / sys.bank, sys.eta_det),
            click_probability(port1 / sys.bank, sys.eta_det),
        ]
        cols = [per_port[d // sys.bank] for d in range(sys.n_detectors)]
        p = np.stack(cols, axis=-1)
        return 1.0 - (1.0 - p) * (1.0 - sys.p_dark)

    return det_probs(e0, e1), det_probs(l0, l1)


def expected_gains(sys: SystemParams, n_phase: int = 64) -> AnalyticGains:
    """Expected gain/error table of the full slot model.

    ``n_phase`` quadrature points per global phase; the periodic trapezoid
    rule is spectrally exact here well below 64 points for the intensities
    involved.
    """
    delta = (np.arange(n_phase) + 0.5) * (TWO_PI / n_phase)
    suppress = sys.dead_slots > 0
    n_det = sys.n_detectors

    combos = list(product(range(4), range(2), range(4), range(2)))
    click_cache = {}
    qbar = np.zeros(n_det)
    for ca, ba, cb, bb in combos:
        p_e, p_l = _combo_click_probs(sys, ca, ba, cb, bb, delta)
        click_cache[(ca, ba, cb, bb)] = (p_e, p_l)
        weight = sys.class_probs[ca] * sys.class_probs[cb] * 0.25
        q_det = 1.0 - (1.0 - p_e) * (1.0 - p_l)
        qbar += weight * q_det.mean(axis=0)

    live = 1.0 / (1.0 + sys.dead_slots * qbar)

    q = np.zeros((4, 4))
    eq = np.zeros((4, 4))
    error_defined = np.zeros((4, 4), dtype=bool)
    for ca, ba, cb, bb in combos:
        p_e, p_l = click_cache[(ca, ba, cb, bb)]
        p_minus, p_plus = bell_probabilities(p_e, p_l, live, sys.bank, suppress)
        mean_minus = float(p_minus.mean())
        mean_plus = float(p_plus.mean())
        q[ca, cb] += 0.25 * (mean_minus + mean_plus)
        flags = _pair_error_flags(ca, ba, cb, bb)
        if flags is not None:
            eq[ca, cb] += 0.25 * (flags[0] * mean_minus + flags[1] * mean_plus)
            if VACUUM not in (ca, cb):
                error_defined[ca, cb] = True

    probs = np.asarray(sys.class_probs)
    announce = float(probs @ q @ probs)
    return AnalyticGains(q, eq, error_defined, qbar, live, announce)


def single_photon_pair_reference(sys: SystemParams, live: np.ndarray | None = None) -> tuple[float, float]:
    """Exact (yield, error rate) for one source photon per side in the X basis.

    Both emissions carry uniform X-basis bits. Photons survive their arms
    independently; the survivor on the second arm matches the reference mode
    with probability xi^2. Matched pairs interfere exactly; everything else
    routes independently. Dark counts and dead time are included, so this is
    the model value the decoy bounds are validated against.
    """
    if live is None:
        live = expected_gains(sys).live
    bank = sys.bank
    n_det = sys.n_detectors
    suppress = sys.dead_slots > 0
    y_total = 0.0
    err_total = 0.0

    for bit_a, bit_b in product(range(2), range(2)):
        sa = shape_for(1, bit_a)
        sb = shape_for(1, bit_b)
        flags = (1.0 if bit_a == bit_b else 0.0), (1.0 if bit_a != bit_b else 0.0)
        # survival cases: (alice photon kept, bob kept matched, bob kept orthogonal)
        cases = []
        pa, pb = sys.eta_a, sys.eta_b
        cases.append(((0, 0, 0), (1 - pa) * (1 - pb)))
        cases.append(((1, 0, 0), pa * (1 - pb)))
        cases.append(((0, 1, 0), (1 - pa) * pb * sys.xi**2))
        cases.append(((0, 0, 1), (1 - pa) * pb * (1 - sys.xi**2)))
        cases.append(((1, 1, 0), pa * pb * sys.xi**2))
        cases.append(((1, 0, 1), pa * pb * (1 - sys.xi**2)))
        for (ka, km, ko), p_case in cases:
            if p_case == 0.0:
                continue
            placements = _placement_distribution(sys, sa, sb, ka, km, ko)
            for counts, p_place in placements:
                p_minus, p_plus = _discrete_pattern_bell(sys, counts, live, bank, n_det, suppress)
                weight = 0.25 * p_case * p_place
                y_total += weight * (p_minus + p_plus)
                err_total += weight * (flags[0] * p_minus + flags[1] * p_plus)

    e11 = err_total / y_total if y_total > 0 else 0.0
    return y_total, e11


def _placement_distribution(sys, shape_a, shape_b, ka, km, ko):
    """Distribution of (port, bin) photon counts for up to one photon per source."""
    out = []
    if ka and km:
        patterns, probs = cached_distribution(shape_a, shape_b, 1, 1, sys.leak, sys.beta)
        for pat, pr in zip(patterns, probs):
            out.append((tuple(int(x) for x in pat), float(pr)))
        return out
    addends = []
    if ka:
        addends.append(routing_probabilities(shape_a, sys.leak))
    if km or ko:
        addends.append(routing_probabilities(shape_b, sys.leak))
    if not addends:
        return [((0, 0, 0, 0), 1.0)]
    if len(addends) == 1:
        return [(tuple(int(i == j) for j in range(4)), float(p)) for i, p in enumerate(addends[0]) if p > 0]
    for i, pi in enumerate(addends[0]):
        for j, pj in enumerate(addends[1]):
            counts = [0, 0, 0, 0]
            counts[i] += 1
            counts[j] += 1
            out.append((tuple(counts), float(pi * pj)))
    return out


def _discrete_pattern_bell(sys, counts, live, bank, n_det, suppress):
    """Bell probabilities for a definite photon placement, enumerating bank splits."""
    cells = [(idx, counts[idx]) for idx in range(4) if counts[idx]]
    splits = [[]]
    for idx, k in cells:
        port = idx % 2
        bin_ = idx // 2
        new = []
        for assignment in splits:
            for members in product(range(bank), repeat=k):
                new.append(assignment + [(port * bank + mem, bin_) for mem in members])
        splits = new
    p_split = 1.0 / (bank ** sum(k for _, k in cells)) if cells else 1.0

    p_minus = 0.0
    p_plus = 0.0
    for assignment in splits:
        p_e = np.full(n_det, sys.p_dark)
        p_l = np.full(n_det, sys.p_dark)
        for det, bin_ in assignment:
            if bin_ == 0:
                p_e[det] = 1.0
            else:
                p_l[det] = 1.0
        m, p = bell_probabilities(p_e, p_l, live, bank, suppress)
        p_minus += p_split * float(m)
        p_plus += p_split * float(p)
    return p_minus, p_plus
