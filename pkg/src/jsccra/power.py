"""Per user-RB minimum power: largest latency-feasible CR, then minimum SNR, then SNR-equalizing power."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .psnr_model import DEFAULT_TOL_DB

OK = "ok"
LATENCY_INFEASIBLE = "latency-infeasible"
PSNR_INFEASIBLE = "psnr-infeasible"
ZERO_GAIN = "zero-gain"

# Relative slack when comparing a CR against o_max, or a delay against T_k.
REL_TOL = 1e-12


def transmission_delay(o, config):
    """Seconds to send D_i * o symbols over S0 parallel sub-channels."""
    return config.source_symbols * float(o) / config.subchannels_per_rb * config.symbol_duration_s


def max_cr(user, config):
    """Largest real compression ratio meeting the user's delay bound."""
    return (
        user.delay_bound_s * config.subchannels_per_rb
        / (config.symbol_duration_s * config.source_symbols)
    )


def max_feasible_cr(user, config):
    """Largest element of ``config.cr_set`` not above o_max, or None if none fits."""
    o_max = max_cr(user, config) * (1.0 + REL_TOL)
    feasible = [c for c in config.cr_set if c <= o_max]
    return max(feasible) if feasible else None


def subchannel_powers(gains, snr_db, noise_power_w):
    """Power per sub-channel so every sub-channel is received at ``snr_db``."""
    gains = np.asarray(gains, dtype=float)
    with np.errstate(divide="ignore"):
        return noise_power_w / gains * 10.0 ** (snr_db / 10.0)


def rb_power_for_snr(user, rb, snr_db, config):
    """(total, per-sub-channel) power on RB ``rb`` at a common received SNR.

    A zero gain on any sub-channel makes the total infinite.
    """
    per = subchannel_powers(user.rb_gains(rb, config), snr_db, config.noise_power_w)
    return float(per.sum()), per


@dataclass(frozen=True, eq=False)
class PairSolution:
    user: int
    rb: int
    cr: object  # Fraction or None
    snr_db: float | None
    power_w: float
    per_subchannel_w: np.ndarray
    status: str

    @property
    def feasible(self):
        return self.status == OK


def _infeasible(user, rb, config, status, cr=None):
    return PairSolution(user.id, rb, cr, None, math.inf,
                        np.full(config.subchannels_per_rb, math.inf), status)


def required_snr(user, model, config, cr=None, tol=DEFAULT_TOL_DB):
    """(cr, snr_db, status) for a user; independent of which RB it gets.

    ``cr`` pins the compression ratio instead of taking the largest feasible one.
    """
    if cr is None:
        cr = max_feasible_cr(user, config)
        if cr is None:
            return None, None, LATENCY_INFEASIBLE
    elif transmission_delay(cr, config) > user.delay_bound_s * (1.0 + REL_TOL):
        return cr, None, LATENCY_INFEASIBLE
    snr = model.min_snr_for_psnr(cr, user.psnr_bound_db, tol)
    if snr is None:
        return cr, None, PSNR_INFEASIBLE
    return cr, snr, OK


def solve_p2(user, rb, model, config, cr=None, tol=DEFAULT_TOL_DB):
    """Minimum RB power for one user-RB pair under its delay and PSNR bounds."""
    cr, snr, status = required_snr(user, model, config, cr, tol)
    if status != OK:
        return _infeasible(user, rb, config, status, cr)
    total, per = rb_power_for_snr(user, rb, snr, config)
    if not math.isfinite(total):
        return _infeasible(user, rb, config, ZERO_GAIN, cr)
    return PairSolution(user.id, rb, cr, snr, total, per, OK)


@dataclass(frozen=True, eq=False)
class PowerMatrix:
    """K x M grid of pair solutions, stored column-wise as arrays.

    ``power`` holds np.inf wherever ``status`` is not ``"ok"``.
    """

    power: np.ndarray
    per_subchannel_w: np.ndarray
    cr: np.ndarray
    snr_db: np.ndarray
    status: np.ndarray

    @property
    def shape(self):
        return self.power.shape

    @property
    def costs(self):
        return self.power

    @property
    def feasible(self):
        return self.status == OK

    def pair(self, k, m):
        cr = self.cr[k, m]
        snr = self.snr_db[k, m]
        return PairSolution(
            k, m, cr, None if math.isnan(snr) else float(snr), float(self.power[k, m]),
            self.per_subchannel_w[k, m], str(self.status[k, m]),
        )

    def to_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["user", "rb", "cr", "snr_db", "power_w", "status"])
            K, M = self.shape
            for k in range(K):
                for m in range(M):
                    cr, snr = self.cr[k, m], self.snr_db[k, m]
                    writer.writerow([
                        k, m, "" if cr is None else str(cr),
                        "" if math.isnan(snr) else repr(float(snr)),
                        repr(float(self.power[k, m])), self.status[k, m],
                    ])


def build_power_matrix(scenario, model, cr=None, tol=DEFAULT_TOL_DB):
    """Solve the per-pair problem for every user-RB pair.

    The required SNR depends only on the user, so it is found once per row and
    the RB dimension is vectorized. Entries match ``solve_p2`` exactly.
    """
    config = scenario.config
    K, M, s0 = config.num_users, config.num_rbs, config.subchannels_per_rb
    power = np.full((K, M), math.inf)
    per = np.full((K, M, s0), math.inf)
    crs = np.full((K, M), None, dtype=object)
    snrs = np.full((K, M), math.nan)
    status = np.full((K, M), OK, dtype=object)
    for k, user in enumerate(scenario.users):
        c, snr, st = required_snr(user, model, config, cr, tol)
        crs[k, :] = c
        if st != OK:
            status[k, :] = st
            continue
        blocks = user.channel_gain_sq[: M * s0].reshape(M, s0)
        row = subchannel_powers(blocks, snr, config.noise_power_w)
        totals = row.sum(axis=1)
        ok = np.isfinite(totals)
        per[k, ok] = row[ok]
        power[k, ok] = totals[ok]
        snrs[k, ok] = snr
        status[k, ~ok] = ZERO_GAIN
    return PowerMatrix(power, per, crs, snrs, status)
