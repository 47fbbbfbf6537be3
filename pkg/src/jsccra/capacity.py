"""Maximum number of satisfied users: outer bisection on J over minimum-power k-assignments."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assignment import KCardinalitySolver
from .power import REL_TOL, build_power_matrix, transmission_delay
from .psnr_model import DEFAULT_TOL_DB

# Slack on the PSNR check when re-deriving it from a transmitted power (float round trip).
PSNR_TOL_DB = 1e-9


@dataclass(frozen=True)
class AllocatedPair:
    user: int
    rb: int
    cr: object
    snr_db: float
    power_w: float


@dataclass(frozen=True, eq=False)
class AllocationResult:
    method: str
    J_star: int
    pairs: tuple
    total_power_w: float
    utilities: np.ndarray
    budget_w: float
    num_solves: int | None = None

    @property
    def assignment(self):
        return tuple((p.user, p.rb) for p in self.pairs)

    def per_user(self, K):
        """Arrays (cr, snr_db, power_w) indexed by user, NaN/None where unallocated."""
        cr = [None] * K
        snr = np.full(K, np.nan)
        power = np.full(K, np.nan)
        for p in self.pairs:
            cr[p.user], snr[p.user], power[p.user] = p.cr, p.snr_db, p.power_w
        return cr, snr, power

    def to_dict(self):
        return {
            "method": self.method,
            "J_star": self.J_star,
            "total_power_w": self.total_power_w,
            "budget_w": self.budget_w,
            "pairs": [
                {"user": p.user, "rb": p.rb, "cr": str(p.cr), "snr_db": p.snr_db,
                 "power_w": p.power_w}
                for p in self.pairs
            ],
        }


def save_allocation(result, path):
    Path(path).write_text(json.dumps(result.to_dict(), indent=1) + "\n")


def realized_snr_db(user, rb, power_w, config):
    """Common received SNR when ``power_w`` is split to equalize SNR across the RB."""
    inv = config.noise_power_w / user.rb_gains(rb, config)
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(power_w / inv.sum()))


def evaluate_utility(user, alloc, model, config):
    """1 if the allocation meets both the delay and the PSNR bound of ``user``, else 0.

    ``alloc`` is an AllocatedPair (or anything with rb, cr, power_w) or None.
    """
    if alloc is None:
        return 0
    delay = transmission_delay(alloc.cr, config)
    if delay > user.delay_bound_s * (1.0 + REL_TOL):
        return 0
    snr = realized_snr_db(user, alloc.rb, alloc.power_w, config)
    if math.isnan(snr):
        return 0
    psnr = model.evaluate(alloc.cr, snr)
    return int(psnr >= user.psnr_bound_db - PSNR_TOL_DB)


def result_from_pairs(scenario, model, matrix, pairs, method, num_solves=None, power=None):
    """Build an AllocationResult from chosen (user, rb) pairs of ``matrix``.

    ``power`` overrides the transmitted power per pair (defaults to p*).
    """
    config = scenario.config
    allocated = []
    for k, m in sorted(pairs):
        sol = matrix.pair(k, m)
        allocated.append(AllocatedPair(k, m, sol.cr, sol.snr_db,
                                       sol.power_w if power is None else power))
    utilities = np.zeros(config.num_users, dtype=int)
    for a in allocated:
        utilities[a.user] = evaluate_utility(scenario.users[a.user], a, model, config)
    return AllocationResult(
        method=method,
        J_star=int(utilities.sum()),
        pairs=tuple(allocated),
        total_power_w=math.fsum(a.power_w for a in allocated),
        utilities=utilities,
        budget_w=config.bs_power_w,
        num_solves=num_solves,
    )


def bisect_supported(solver, budget):
    """Largest J whose minimum total power fits ``budget``, with its assignment.

    Upper bound starts at the largest matchable J; if that fits it is returned
    at once, otherwise bisection keeps P*_{J_l} <= budget < P*_{J_u}.
    Returns (J, assignment, number of solves).
    """
    j_up = solver.max_size
    solves = 1
    top = solver.solve(j_up)
    if top.cost <= budget:
        return j_up, top, solves
    j_lo, best = 0, solver.solve(0)
    while j_up - j_lo > 1:
        j = (j_lo + j_up) // 2
        a = solver.solve(j)
        solves += 1
        # every J below the maximum matching size is matchable
        assert a is not None, f"J={j} infeasible below max matching size {solver.max_size}"
        if a.cost > budget:
            j_up = j
        else:
            j_lo, best = j, a
    return j_lo, best, solves


def solve_capacity(scenario, model, backend="flow", power_matrix=None, solver=None,
                   tol=DEFAULT_TOL_DB, method="optimal"):
    """Optimal allocation maximizing the number of satisfied users under the BS budget.

    ``power_matrix`` and ``solver`` may be passed in to reuse work across budgets.
    """
    matrix = power_matrix if power_matrix is not None else build_power_matrix(scenario, model, tol=tol)
    if solver is None:
        solver = KCardinalitySolver(matrix.costs, backend)
    _, assignment, solves = bisect_supported(solver, scenario.config.bs_power_w)
    return result_from_pairs(scenario, model, matrix, assignment.pairs, method, num_solves=solves)


def linear_scan_supported(solver, budget):
    """Reference for the bisection: scan J from the top down to the first affordable one."""
    for j in range(solver.max_size, -1, -1):
        if solver.solve(j).cost <= budget:
            return j
    return 0


def brute_force_p1(scenario, model, snr_step_db=0.25, max_users=5, max_rbs=5):
    """Joint exhaustive optimum of the original problem on a tiny instance.

    Every (CR, grid SNR) choice for every (user, RB) is scored directly from the
    link model, without the max-CR rule, the SNR bisection or any matching
    solver. The total power of a partial injective user->RB map is separable, so
    the cheapest admissible choice per (user, RB) is exhaustive over the product.
    Returns the largest number of users satisfiable within the budget.
    """
    config = scenario.config
    K, M = config.num_users, config.num_rbs
    if K > max_users or M > max_rbs:
        raise ValueError(f"brute force refused for K={K}, M={M} (limits {max_users}, {max_rbs})")
    n_steps = int(math.floor((model.snr_max - model.snr_min) / snr_step_db + 1e-9))
    grid = model.snr_min + snr_step_db * np.arange(n_steps + 1)
    s0 = config.subchannels_per_rb
    cheapest = np.full((K, M), math.inf)
    for k, user in enumerate(scenario.users):
        for cr in config.cr_set:
            delay = config.source_symbols * float(cr) / s0 * config.symbol_duration_s
            if delay > user.delay_bound_s * (1.0 + REL_TOL):
                continue
            psnr = np.interp(grid, model.snr_grid_db, model.row(cr))
            ok = psnr >= user.psnr_bound_db
            if not ok.any():
                continue
            for m in range(M):
                gains = user.channel_gain_sq[m * s0:(m + 1) * s0]
                if np.any(gains <= 0):
                    continue
                watts = np.sum(config.noise_power_w / gains) * 10.0 ** (grid[ok] / 10.0)
                cheapest[k, m] = min(cheapest[k, m], float(watts.min()))
    budget = config.bs_power_w
    for j in range(min(K, M), 0, -1):
        for users in itertools.combinations(range(K), j):
            for rbs in itertools.permutations(range(M), j):
                total = math.fsum(cheapest[k, m] for k, m in zip(users, rbs))
                if total <= budget:
                    return j
    return 0


def power_slack_factor(snr_step_db):
    """Power ratio spanned by one SNR grid step."""
    return 10.0 ** (snr_step_db / 10.0)
