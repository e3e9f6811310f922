"""Vectorised Monte Carlo over symbol slots with exact photon-number tagging.

Each slot draws the two transmitters' symbols and their emitted photon
numbers (the phase-randomised source is an exact Poisson mixture of number
states). Photons are thinned by channel and detector losses, the surviving
pair interferes with the exact number-conditioned statistics from
``multiphoton``, banked detectors click on counts plus dark draws, and a
sequential dead-time scan filters the click stream before Bell
classification and sifting. Because the per-slot tags are genuine source
photon numbers, per-(n, m) yields and error rates can be measured directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .keyrate import GainTable
from .multiphoton import cached_distribution, routing_probabilities, shape_for
from .system import SystemParams
from .transmitter import IntensityClass

try:  # the scan is a plain loop over click events; jit it when numba is around
    from numba import njit as _njit
except ImportError:  # pragma: no cover - exercised only without numba
    _njit = None

TAG_MAX = 4  # photon-number tags above this are pooled into the last bucket

_VAC = int(IntensityClass.VACUUM)
_D1 = int(IntensityClass.DECOY1)
_D2 = int(IntensityClass.DECOY2)


@dataclass
class McResult:
    slots: int
    sent: np.ndarray
    accepted: np.ndarray
    accepted_plus: np.ndarray
    errors: np.ndarray
    # photon-number tags pooled over all X-basis intensity pairs
    tag_sent: np.ndarray
    tag_accepted: np.ndarray
    tag_err_accepted: np.ndarray      # accepted within error-defined X cells
    tag_errors: np.ndarray
    # psi+ bookkeeping: cross-bin same-port photon pairs and their announcements
    psiplus_physical: int
    psiplus_observed: int
    kept_clicks: int
    click_rows: list = field(default_factory=list)

    def gain_table(self) -> GainTable:
        table = GainTable.zeros(statistical=True)
        table.sent = self.sent.astype(float)
        table.accepted = self.accepted.astype(float)
        table.errors = self.errors.astype(float)
        return table

    def empirical_y11(self) -> float:
        sent = self.tag_sent[1, 1]
        return float(self.tag_accepted[1, 1] / sent) if sent > 0 else np.nan

    def empirical_e11(self) -> float:
        acc = self.tag_err_accepted[1, 1]
        return float(self.tag_errors[1, 1] / acc) if acc > 0 else np.nan


def _dead_scan_py(det, slot, next_live, dead_slots):
    keep = np.ones(det.shape[0], dtype=np.bool_)
    for i in range(det.shape[0]):
        d = det[i]
        s = slot[i]
        if s < next_live[d]:
            keep[i] = False
        elif dead_slots > 0:
            next_live[d] = s + dead_slots + 1
    return keep


_dead_scan = _njit(cache=True)(_dead_scan_py) if _njit is not None else _dead_scan_py


def _bank_split(counts: np.ndarray, bank: int, rng: np.random.Generator) -> np.ndarray:
    """Split per-(port, bin) photon counts over the bank members of each port.

    ``counts`` has columns (p0 early, p1 early, p0 late, p1 late); returns
    (slots, 2 * bank, 2) detector-level counts with detector d on port d // bank.
    """
    n = counts.shape[0]
    det = np.zeros((n, 2 * bank, 2), dtype=np.int16)
    for col, (port, bin_) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)]):
        k = counts[:, col].astype(np.int64)
        if bank == 1:
            det[:, port, bin_] = k
        elif bank == 2:
            first = rng.binomial(k, 0.5).astype(np.int16)
            det[:, 2 * port, bin_] = first
            det[:, 2 * port + 1, bin_] = (k - first).astype(np.int16)
        else:
            split = rng.multinomial(k, np.full(bank, 1.0 / bank))
            det[:, port * bank : (port + 1) * bank, bin_] = split.astype(np.int16)
    return det


def run_mc(
    sys: SystemParams,
    slots: int,
    seed: int,
    chunk_size: int = 1 << 21,
    collect_clicks: bool = False,
    max_click_rows: int = 1_000_000,
) -> McResult:
    """Simulate ``slots`` symbol slots and tally gains, errors and tags."""
    rng_a = np.random.default_rng(np.random.SeedSequence([seed, 0xA11CE]))
    rng_b = np.random.default_rng(np.random.SeedSequence([seed, 0xB0B]))
    rng_r = np.random.default_rng(np.random.SeedSequence([seed, 0x6EC]))

    intensities = np.asarray(sys.intensities)
    class_cut = np.cumsum(np.asarray(sys.class_probs))
    bank = sys.bank
    n_det = 2 * bank
    xi_sq = sys.xi**2
    routing = {s: routing_probabilities(s, sys.leak) for s in range(4)}

    res = McResult(
        slots=slots,
        sent=np.zeros((4, 4), dtype=np.int64),
        accepted=np.zeros((4, 4), dtype=np.int64),
        accepted_plus=np.zeros((4, 4), dtype=np.int64),
        errors=np.zeros((4, 4), dtype=np.int64),
        tag_sent=np.zeros((TAG_MAX + 1, TAG_MAX + 1), dtype=np.int64),
        tag_accepted=np.zeros((TAG_MAX + 1, TAG_MAX + 1), dtype=np.int64),
        tag_err_accepted=np.zeros((TAG_MAX + 1, TAG_MAX + 1), dtype=np.int64),
        tag_errors=np.zeros((TAG_MAX + 1, TAG_MAX + 1), dtype=np.int64),
        psiplus_physical=0,
        psiplus_observed=0,
        kept_clicks=0,
    )
    next_live = np.full(n_det, -(2**62), dtype=np.int64)

    done = 0
    while done < slots:
        n = min(chunk_size, slots - done)
        _run_chunk(sys, n, done, rng_a, rng_b, rng_r, intensities, class_cut, routing,
                   xi_sq, bank, n_det, next_live, res, collect_clicks, max_click_rows)
        done += n
    return res


def _run_chunk(sys, n, offset, rng_a, rng_b, rng_r, intensities, class_cut, routing,
               xi_sq, bank, n_det, next_live, res, collect_clicks, max_click_rows):
    # transmitters: class, bit, global phase (phases cancel in the number-state
    # picture and are drawn only to preserve each stream's contract)
    class_a = np.searchsorted(class_cut, rng_a.random(n), side="right").astype(np.int8)
    bit_a = rng_a.integers(0, 2, size=n, dtype=np.int8)
    rng_a.random(n)
    class_b = np.searchsorted(class_cut, rng_b.random(n), side="right").astype(np.int8)
    bit_b = rng_b.integers(0, 2, size=n, dtype=np.int8)
    rng_b.random(n)

    n_src = rng_a.poisson(intensities[class_a])
    m_src = rng_b.poisson(intensities[class_b])

    # loss thinning: channel and detector efficiency commute with the passive
    # optics, so survivors are exactly the photons that can produce clicks
    n_arr = rng_r.binomial(n_src, sys.eta_a)
    m_arr = rng_r.binomial(m_src, sys.eta_b)
    # mode mismatch: each of Bob's survivors matches the reference mode w.p. xi^2
    m_par = rng_r.binomial(m_arr, xi_sq) if xi_sq < 1.0 else m_arr
    m_perp = m_arr - m_par

    shape_a = np.where(class_a == 0, bit_a, 2 + bit_a).astype(np.int8)
    shape_b = np.where(class_b == 0, bit_b, 2 + bit_b).astype(np.int8)

    counts = np.zeros((n, 4), dtype=np.int16)
    both = (n_arr > 0) & (m_par > 0)

    # interference-free routing: any group of photons without a partner in the
    # matched mode lands via an independent multinomial
    for shape in range(4):
        sel = (~both) & (n_arr > 0) & (shape_a == shape)
        if np.any(sel):
            counts[sel] += rng_r.multinomial(n_arr[sel], routing[shape]).astype(np.int16)
        sel = (~both) & (m_par > 0) & (shape_b == shape)
        if np.any(sel):
            counts[sel] += rng_r.multinomial(m_par[sel], routing[shape]).astype(np.int16)
        sel = (m_perp > 0) & (shape_b == shape)
        if np.any(sel):
            counts[sel] += rng_r.multinomial(m_perp[sel], routing[shape]).astype(np.int16)

    # exact number-conditioned interference for slots with photons on both inputs
    if np.any(both):
        idx = np.flatnonzero(both)
        key = (((n_arr[idx].astype(np.int64) << 8) + m_par[idx]) << 4) + shape_a[idx] * 4 + shape_b[idx]
        order = np.argsort(key, kind="stable")
        idx = idx[order]
        key = key[order]
        starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
        bounds = np.r_[starts, key.size]
        for g in range(starts.size):
            lo, hi = bounds[g], bounds[g + 1]
            members = idx[lo:hi]
            k = int(key[lo])
            sa, sb = (k >> 2) & 3, k & 3
            mp = (k >> 4) & 0xFF
            na = k >> 12
            patterns, probs = cached_distribution(int(sa), int(sb), int(na), int(mp),
                                                  sys.leak, sys.beta)
            cum = np.cumsum(probs)
            draw = np.searchsorted(cum, rng_r.random(members.size) * cum[-1], side="right")
            np.clip(draw, 0, len(probs) - 1, out=draw)
            counts[members] += patterns[draw]

    # cross-bin same-port photon pairs: the pool psi+ announcements come from
    phys_p0 = (counts[:, 0] == 1) & (counts[:, 2] == 1) & (counts[:, 1] == 0) & (counts[:, 3] == 0)
    phys_p1 = (counts[:, 1] == 1) & (counts[:, 3] == 1) & (counts[:, 0] == 0) & (counts[:, 2] == 0)
    physical_plus = phys_p0 | phys_p1

    det_counts = _bank_split(counts, bank, rng_r)
    clicks = det_counts > 0
    if sys.p_dark > 0.0:
        clicks |= rng_r.random((n, n_det, 2)) < sys.p_dark

    # dead-time scan over the click events, per detector in time order
    ev = np.argwhere(clicks.transpose(1, 0, 2))
    if ev.size:
        ev_det = ev[:, 0].astype(np.int64)
        ev_slot = ev[:, 1].astype(np.int64) + offset
        keep = _dead_scan(ev_det, ev_slot, next_live, sys.dead_slots)
        kept = clicks.copy()
        drop = ~keep
        kept[ev[drop, 1], ev[drop, 0], ev[drop, 2]] = False
    else:
        kept = clicks

    n_early = kept[:, :, 0].sum(axis=1)
    n_late = kept[:, :, 1].sum(axis=1)
    announced = (n_early == 1) & (n_late == 1)
    det_early = np.argmax(kept[:, :, 0], axis=1)
    det_late = np.argmax(kept[:, :, 1], axis=1)
    announced &= det_early != det_late
    same_port = (det_early // bank) == (det_late // bank)
    psi_plus = announced & same_port
    psi_minus = announced & ~same_port

    is_z = class_a == 0
    same_basis = (class_a == 0) == (class_b == 0)
    non_vac = (class_a != _VAC) & (class_b != _VAC)
    sifted = announced & same_basis & non_vac
    bits_equal = bit_a == bit_b
    err = sifted & np.where(is_z | psi_minus, bits_equal, ~bits_equal)

    cell = (class_a.astype(np.int64) * 4 + class_b).astype(np.int64)
    res.sent += np.bincount(cell, minlength=16).reshape(4, 4)
    res.accepted += np.bincount(cell[announced], minlength=16).reshape(4, 4)
    res.accepted_plus += np.bincount(cell[psi_plus], minlength=16).reshape(4, 4)
    res.errors += np.bincount(cell[err], minlength=16).reshape(4, 4)

    xx = (class_a != 0) & (class_b != 0)
    x_err_cells = np.isin(class_a, (_D1, _D2)) & np.isin(class_b, (_D1, _D2))
    tag = (np.minimum(n_src, TAG_MAX) * (TAG_MAX + 1) + np.minimum(m_src, TAG_MAX)).astype(np.int64)
    size = (TAG_MAX + 1) ** 2
    res.tag_sent += np.bincount(tag[xx], minlength=size).reshape(TAG_MAX + 1, TAG_MAX + 1)
    res.tag_accepted += np.bincount(tag[xx & announced], minlength=size).reshape(TAG_MAX + 1, TAG_MAX + 1)
    res.tag_err_accepted += np.bincount(tag[x_err_cells & announced], minlength=size).reshape(TAG_MAX + 1, TAG_MAX + 1)
    res.tag_errors += np.bincount(tag[x_err_cells & err], minlength=size).reshape(TAG_MAX + 1, TAG_MAX + 1)

    res.psiplus_physical += int(physical_plus.sum())
    res.psiplus_observed += int((physical_plus & psi_plus).sum())
    res.kept_clicks += int(kept.sum())

    if collect_clicks and len(res.click_rows) < max_click_rows:
        slot_idx, det_idx, bin_idx = np.nonzero(kept)
        early_centre = 0.5 * (sys.slot_s - sys.bin_sep_s)
        times = (slot_idx + offset) * sys.slot_s + early_centre + bin_idx * sys.bin_sep_s
        if sys.jitter_s > 0:
            times = times + rng_r.normal(0.0, sys.jitter_s, size=times.size)
        room = max_click_rows - len(res.click_rows)
        for s, d, b, t in list(zip(slot_idx + offset, det_idx, bin_idx, times))[:room]:
            res.click_rows.append((int(s), int(d), t * 1e12, int(b)))
