"""Gain bookkeeping, decoy-state bounds via a photon-number LP, and the key rate.

The decoy analysis treats the announcement probability of an intensity pair
as a Poisson mixture of unknown per-photon-number yields. Truncating the
photon number at a cutoff and giving the tail slack in [0, 1] keeps the
bounds valid; statistical tables additionally widen each gain constraint to
a Clopper-Pearson interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.stats import beta as beta_dist

from .optics import binary_entropy, poisson_pn
from .transmitter import IntensityClass

# Classes entering the decoy analysis (all X-basis levels), and the subset
# whose sifted bits define error rates.
X_CLASSES = (int(IntensityClass.DECOY1), int(IntensityClass.DECOY2), int(IntensityClass.VACUUM))
X_ERROR_CLASSES = (int(IntensityClass.DECOY1), int(IntensityClass.DECOY2))

_SIGNAL = int(IntensityClass.SIGNAL)


@dataclass
class GainTable:
    """Per (alice class, bob class) tallies of sent, announced and error events.

    ``statistical`` distinguishes integer Monte Carlo counts (subject to
    binomial noise, so LP constraints get confidence-interval widening) from
    exact expected values produced by the deterministic engine, where
    ``sent`` holds the class-pair probabilities instead of counts.
    """

    sent: np.ndarray
    accepted: np.ndarray
    errors: np.ndarray
    error_defined: np.ndarray
    statistical: bool = True

    @classmethod
    def zeros(cls, statistical: bool = True) -> "GainTable":
        defined = np.zeros((4, 4), dtype=bool)
        defined[_SIGNAL, _SIGNAL] = True
        for a in X_ERROR_CLASSES:
            for b in X_ERROR_CLASSES:
                defined[a, b] = True
        return cls(
            sent=np.zeros((4, 4)),
            accepted=np.zeros((4, 4)),
            errors=np.zeros((4, 4)),
            error_defined=defined,
            statistical=statistical,
        )

    @classmethod
    def from_probabilities(cls, q: np.ndarray, eq: np.ndarray, error_defined: np.ndarray,
                           class_probs) -> "GainTable":
        p = np.asarray(class_probs)
        pair = np.outer(p, p)
        return cls(
            sent=pair.copy(),
            accepted=pair * q,
            errors=pair * eq,
            error_defined=error_defined.copy(),
            statistical=False,
        )

    def q(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.sent > 0, self.accepted / self.sent, np.nan)

    def e(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(self.accepted > 0, self.errors / self.accepted, np.nan)
        return np.where(self.error_defined, out, np.nan)

    def announce_rate_per_slot(self) -> float:
        total = self.sent.sum()
        return float(self.accepted.sum() / total) if total > 0 else 0.0


@dataclass(frozen=True)
class SlotTally:
    """One slot's contribution to the table (engine-internal and for tests)."""

    class_a: int
    class_b: int
    announced: bool
    error: bool | None = None


def accumulate(table: GainTable, records) -> GainTable:
    """Fold per-slot tallies into the table. Counts stay exact integers."""
    for rec in records:
        if not (0 <= rec.class_a < 4 and 0 <= rec.class_b < 4):
            raise ValueError(f"unknown intensity class pair ({rec.class_a}, {rec.class_b})")
        table.sent[rec.class_a, rec.class_b] += 1
        if rec.announced:
            table.accepted[rec.class_a, rec.class_b] += 1
            if rec.error:
                table.errors[rec.class_a, rec.class_b] += 1
    return table


def clopper_pearson(k: float, n: float, alpha: float) -> tuple[float, float]:
    """Two-sided (1 - alpha) Clopper-Pearson interval for k successes in n trials."""
    if n <= 0:
        return 0.0, 1.0
    k = float(k)
    lo = 0.0 if k <= 0 else float(beta_dist.ppf(alpha / 2.0, k, n - k + 1.0))
    hi = 1.0 if k >= n else float(beta_dist.ppf(1.0 - alpha / 2.0, k + 1.0, n - k))
    return lo, hi


@dataclass(frozen=True)
class DecoyBounds:
    y11_lower: float
    e11_upper: float
    feasible: bool
    alpha_used: float | None = None


def _cell_intervals(table: GainTable, alpha: float):
    """[lo, hi] intervals for Q and error-weighted Q over the X-basis cells."""
    q_lo = {}
    q_hi = {}
    eq_lo = {}
    eq_hi = {}
    for a in X_CLASSES:
        for b in X_CLASSES:
            sent = table.sent[a, b]
            if sent <= 0:
                raise ValueError(f"missing X-basis gain for class pair ({a}, {b})")
            if table.statistical:
                q_lo[a, b], q_hi[a, b] = clopper_pearson(table.accepted[a, b], sent, alpha)
                if a in X_ERROR_CLASSES and b in X_ERROR_CLASSES:
                    eq_lo[a, b], eq_hi[a, b] = clopper_pearson(table.errors[a, b], sent, alpha)
            else:
                q_val = table.accepted[a, b] / sent
                pad = 1e-9 * q_val + 1e-15  # solver tolerance slack, widening only
                q_lo[a, b], q_hi[a, b] = max(0.0, q_val - pad), min(1.0, q_val + pad)
                if a in X_ERROR_CLASSES and b in X_ERROR_CLASSES:
                    eq_val = table.errors[a, b] / sent
                    pad = 1e-9 * eq_val + 1e-15
                    eq_lo[a, b], eq_hi[a, b] = max(0.0, eq_val - pad), min(1.0, eq_val + pad)
    return q_lo, q_hi, eq_lo, eq_hi


def decoy_bounds_lp(
    table: GainTable,
    intensities,
    cutoff_n: int = 10,
    alpha: float = 0.01,
) -> DecoyBounds:
    """Bound the single-photon yield (below) and error rate (above).

    Two linear programs over unknown yields Y_nm and error-weighted yields
    Z_nm = (eY)_nm for photon numbers up to ``cutoff_n``: X-basis gains pin
    Poisson mixtures of the unknowns to their observed intervals, the
    truncation tail is given slack in [0, 1], 0 <= Z <= Y <= 1, and we
    minimise Y11 / maximise Z11. The error bound is the conservative
    quotient max(Z11) / min(Y11), clamped to 0.5.

    For statistical tables an infeasible program is retried with constraint
    intervals widened by powers of ten in alpha.
    """
    if cutoff_n < 4:
        raise ValueError("cutoff_n must be >= 4")
    alphas = [alpha, alpha * 0.1, alpha * 0.01] if table.statistical else [alpha]
    last = DecoyBounds(0.0, 0.5, False, None)
    for a_try in alphas:
        result = _solve_decoy(table, intensities, cutoff_n, a_try)
        if result is not None:
            return result
        last = DecoyBounds(0.0, 0.5, False, a_try)
    return last


def _solve_decoy(table, intensities, cutoff_n, alpha):
    q_lo, q_hi, eq_lo, eq_hi = _cell_intervals(table, alpha)
    n_ph = cutoff_n + 1
    n_var = n_ph * n_ph
    mu_of = {c: intensities[c] for c in X_CLASSES}
    pn = {c: np.array([poisson_pn(mu_of[c], k) for k in range(n_ph)]) for c in X_CLASSES}

    def mix_row(a, b):
        return np.outer(pn[a], pn[b]).ravel()

    rows = []
    rhs = []
    for a in X_CLASSES:
        for b in X_CLASSES:
            coeff = mix_row(a, b)
            tail = 1.0 - coeff.sum()
            row_y = np.concatenate([coeff, np.zeros(n_var)])
            rows.append(row_y)
            rhs.append(q_hi[a, b])
            rows.append(-row_y)
            rhs.append(-(q_lo[a, b] - tail))
            if a in X_ERROR_CLASSES and b in X_ERROR_CLASSES:
                row_z = np.concatenate([np.zeros(n_var), coeff])
                rows.append(row_z)
                rhs.append(eq_hi[a, b])
                rows.append(-row_z)
                rhs.append(-(eq_lo[a, b] - tail))
    # coupling Z_nm <= Y_nm
    couple = np.hstack([-np.eye(n_var), np.eye(n_var)])
    a_ub = np.vstack(rows + [couple])
    b_ub = np.array(rhs + [0.0] * n_var)

    idx11 = 1 * n_ph + 1
    c_min_y = np.zeros(2 * n_var)
    c_min_y[idx11] = 1.0
    res_y = linprog(c_min_y, A_ub=a_ub, b_ub=b_ub, bounds=(0.0, 1.0), method="highs")
    if not res_y.success:
        return None
    y11_lower = min(max(float(res_y.fun), 0.0), 1.0)

    c_max_z = np.zeros(2 * n_var)
    c_max_z[n_var + idx11] = -1.0
    res_z = linprog(c_max_z, A_ub=a_ub, b_ub=b_ub, bounds=(0.0, 1.0), method="highs")
    if not res_z.success:
        return None
    z11_upper = min(max(float(-res_z.fun), 0.0), 1.0)

    if y11_lower <= 1e-12:
        e11_upper = 0.5
    else:
        e11_upper = min(0.5, z11_upper / y11_lower)
    return DecoyBounds(y11_lower, e11_upper, True, alpha)


@dataclass(frozen=True)
class KeyRateReport:
    r_per_pulse: float            # secret bits per transmitted symbol slot
    r_bps: float                  # clamped at zero
    qber_z: float
    qber_x: float
    y11_lower: float
    e11_upper: float
    gain_term: float              # single-photon contribution, per signal pair
    privacy_factor: float         # 1 - H2(e11_upper)
    ec_cost: float                # error-correction cost, per signal pair
    seconds_per_1000_bell_events: float

    def to_flat_dict(self) -> dict[str, float]:
        return {
            "r_per_pulse": self.r_per_pulse,
            "r_bps": self.r_bps,
            "qber_z": self.qber_z,
            "qber_x": self.qber_x,
            "y11_lower": self.y11_lower,
            "e11_upper": self.e11_upper,
            "gain_term": self.gain_term,
            "privacy_factor": self.privacy_factor,
            "ec_cost": self.ec_cost,
            "seconds_per_1000_bell_events": self.seconds_per_1000_bell_events,
        }


def secret_key_rate(
    table: GainTable,
    bounds: DecoyBounds,
    f_ec: float,
    mu_signal: float,
    symbol_rate_hz: float,
    p_both_signal: float,
) -> KeyRateReport:
    """Asymptotic secret key rate from the signal gains and the decoy bounds.

    Per signal pair: P11 * Y11_lower * (1 - H2(e11_upper)) minus the
    error-correction cost Q_zz * f_ec * H2(E_zz). The bits-per-second figure
    normalises by the symbol rate times the probability that both parties
    emitted a Z signal.
    """
    if f_ec < 1.0:
        raise ValueError("error-correction efficiency must be >= 1")
    q_zz = table.q()[_SIGNAL, _SIGNAL]
    e_zz = table.e()[_SIGNAL, _SIGNAL]
    if not math.isfinite(q_zz) or q_zz <= 0.0:
        raise ValueError("secret_key_rate requires a positive signal-signal gain")
    if not math.isfinite(e_zz):
        e_zz = 0.0
    p11 = mu_signal**2 * math.exp(-2.0 * mu_signal)
    gain_term = p11 * bounds.y11_lower * (1.0 - binary_entropy(bounds.e11_upper))
    ec_cost = q_zz * f_ec * binary_entropy(min(max(e_zz, 0.0), 1.0))
    r_pair = gain_term - ec_cost
    r_per_pulse = r_pair * p_both_signal
    r_bps = max(0.0, r_per_pulse * symbol_rate_hz)

    announce = table.announce_rate_per_slot()
    secs = 1000.0 / (announce * symbol_rate_hz) if announce > 0 else math.inf

    qx = table.e()[int(IntensityClass.DECOY1), int(IntensityClass.DECOY1)]
    return KeyRateReport(
        r_per_pulse=r_per_pulse,
        r_bps=r_bps,
        qber_z=float(e_zz),
        qber_x=float(qx) if math.isfinite(qx) else math.nan,
        y11_lower=bounds.y11_lower,
        e11_upper=bounds.e11_upper,
        gain_term=gain_term,
        privacy_factor=1.0 - binary_entropy(bounds.e11_upper),
        ec_cost=ec_cost,
        seconds_per_1000_bell_events=secs,
    )
