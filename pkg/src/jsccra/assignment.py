"""Minimum-cost k-cardinality assignment: exact flow solver, interior-point LP, Hungarian.

Cost matrices are K x M float arrays; ``np.inf`` marks a forbidden pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotConverged, RoundingFailed


@dataclass(frozen=True)
class Assignment:
    pairs: tuple  # sorted (user, rb) tuples
    cost: float
    forced: tuple = field(default=(), compare=False)  # big-M pairs stripped by the Hungarian solver

    @property
    def J(self):
        return len(self.pairs)

    def matrix(self, shape):
        alpha = np.zeros(shape, dtype=int)
        for k, m in self.pairs:
            alpha[k, m] = 1
        return alpha


def _check_costs(costs):
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if np.isnan(costs).any() or (costs < 0).any():
        raise ValueError("costs must be >= 0 (np.inf marks forbidden pairs)")
    if np.isneginf(costs).any():
        raise ValueError("costs must not be -inf")
    return costs


def _make_assignment(costs, pairs, forced=()):
    pairs = tuple(sorted((int(k), int(m)) for k, m in pairs))
    return Assignment(pairs, math.fsum(costs[k, m] for k, m in pairs), tuple(forced))


def max_matching_size(allowed):
    """Maximum bipartite matching size over the True entries of ``allowed`` (Kuhn)."""
    allowed = np.asarray(allowed, dtype=bool)
    K, M = allowed.shape
    adj = [np.flatnonzero(allowed[k]) for k in range(K)]
    match_rb = [-1] * M

    def augment(k, seen):
        for m in adj[k]:
            if not seen[m]:
                seen[m] = True
                if match_rb[m] < 0 or augment(match_rb[m], seen):
                    match_rb[m] = k
                    return True
        return False

    return sum(augment(k, [False] * M) for k in range(K))


class FlowAssignment:
    """Successive shortest paths on source -> users -> RBs -> sink, unit capacities.

    After ``j`` augmentations the matching is a minimum-cost matching of size
    ``j``, so states are kept and later queries resume where earlier ones stopped.
    Dijkstra runs on dense reduced costs with node potentials.
    """

    def __init__(self, costs):
        self.costs = _check_costs(costs)
        K, M = self.costs.shape
        self.K, self.M = K, M
        self.match_user = np.full(K, -1)
        self.match_rb = np.full(M, -1)
        self.pot_user = np.zeros(K)
        self.pot_rb = np.zeros(M)
        self.pot_sink = 0.0
        self.history = [_make_assignment(self.costs, ())]
        self.exhausted = K == 0 or M == 0

    def _augment(self):
        c, K, M = self.costs, self.K, self.M
        inf = math.inf
        # Reduced cost of arc a->b is cost + pot[a] - pot[b]; the source keeps potential 0.
        d_user = np.where(self.match_user < 0, -self.pot_user, inf)
        d_rb = np.full(M, inf)
        parent_rb = np.full(M, -1)  # user preceding each RB on its shortest path
        done_user = np.zeros(K, dtype=bool)
        done_rb = np.zeros(M, dtype=bool)
        while True:
            du = np.where(done_user, inf, d_user)
            dr = np.where(done_rb, inf, d_rb)
            ku, kr = int(np.argmin(du)), int(np.argmin(dr))
            if du[ku] == inf and dr[kr] == inf:
                break
            if du[ku] <= dr[kr]:
                done_user[ku] = True
                red = d_user[ku] + c[ku] + self.pot_user[ku] - self.pot_rb
                if self.match_user[ku] >= 0:
                    red[self.match_user[ku]] = inf
                better = (red < d_rb) & ~done_rb
                d_rb[better] = red[better]
                parent_rb[better] = ku
            else:
                done_rb[kr] = True
                k2 = self.match_rb[kr]
                if k2 >= 0 and not done_user[k2]:
                    cand = d_rb[kr] - c[k2, kr] + self.pot_rb[kr] - self.pot_user[k2]
                    if cand < d_user[k2]:
                        d_user[k2] = cand
        free_rbs = np.flatnonzero(self.match_rb < 0)
        to_sink = d_rb[free_rbs] + self.pot_rb[free_rbs] - self.pot_sink
        if free_rbs.size == 0 or not np.isfinite(to_sink).any():
            return False
        i = int(np.argmin(to_sink))
        end, d_sink = int(free_rbs[i]), float(to_sink[i])
        # pot += min(d, d_sink) keeps all residual reduced costs >= 0
        self.pot_user += np.minimum(d_user, d_sink)
        self.pot_rb += np.minimum(d_rb, d_sink)
        self.pot_sink += d_sink
        m = end
        while True:
            k = int(parent_rb[m])
            prev = int(self.match_user[k])
            self.match_user[k] = m
            self.match_rb[m] = k
            if prev < 0:
                break
            m = prev
        return True

    def solve(self, J):
        """Minimum-cost assignment with exactly J pairs, or None if no J-matching exists."""
        if not 0 <= J <= min(self.K, self.M):
            raise ValueError(f"J={J} outside [0, min(K, M)] = [0, {min(self.K, self.M)}]")
        while len(self.history) <= J and not self.exhausted:
            if self._augment():
                pairs = [(k, int(m)) for k, m in enumerate(self.match_user) if m >= 0]
                self.history.append(_make_assignment(self.costs, pairs))
            else:
                self.exhausted = True
        return self.history[J] if J < len(self.history) else None


def solve_k_assignment_flow(costs, J):
    """Exact minimum-cost assignment of exactly J pairs; None when infeasible."""
    return FlowAssignment(costs).solve(J)


def solve_hungarian(costs):
    """Classic O(n^3) assignment of size min(K, M).

    Forbidden entries are priced at big-M = 1 + sum of finite costs, so a big-M
    pair is used only when no matching of that size avoids it. Such pairs are
    removed from ``pairs`` and listed in ``forced``.
    """
    costs = _check_costs(costs)
    K, M = costs.shape
    if K == 0 or M == 0:
        return _make_assignment(costs, ())
    finite = np.isfinite(costs)
    big_m = 1.0 + math.fsum(costs[finite])
    dense = np.where(finite, costs, big_m)
    transposed = K > M
    if transposed:
        dense = dense.T
    rows = _hungarian_rows(dense)
    pairs = [(i, j) for i, j in enumerate(rows)]
    if transposed:
        pairs = [(j, i) for i, j in pairs]
    kept = [(k, m) for k, m in pairs if finite[k, m]]
    forced = tuple(sorted((k, m) for k, m in pairs if not finite[k, m]))
    return _make_assignment(costs, kept, forced)


def _hungarian_rows(a):
    """Row -> column assignment for an n x m matrix with n <= m (potentials method)."""
    n, m = a.shape
    inf = math.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[j]: row (1-based) matched to column j; p[0] is the row being added
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = a[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            upd = free & (cur < minv[1:])
            minv[1:][upd] = cur[upd]
            way[1:][upd] = j0
            masked = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    rows = np.full(n, -1)
    for j in range(1, m + 1):
        if p[j]:
            rows[p[j] - 1] = j - 1
    return rows


# Objectives below this fraction of the largest cost count as zero for the gap test.
GAP_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class LPSolution:
    alpha: np.ndarray  # K x M fractional assignment
    objective: float
    iterations: int
    gap: float


def _lp_data(costs, J):
    K, M = costs.shape
    allowed = np.argwhere(np.isfinite(costs))
    na = len(allowed)
    n = na + K + M
    A = np.zeros((K + M + 1, n))
    A[allowed[:, 0], np.arange(na)] = 1.0
    A[K + allowed[:, 1], np.arange(na)] = 1.0
    A[K + M, :na] = 1.0
    A[np.arange(K), na + np.arange(K)] = 1.0
    A[K + np.arange(M), na + K + np.arange(M)] = 1.0
    b = np.concatenate([np.ones(K + M), [float(J)]])
    c = np.zeros(n)
    c[:na] = costs[allowed[:, 0], allowed[:, 1]]
    return A, b, c, allowed


def _max_step(v, dv):
    neg = dv < 0
    if not neg.any():
        return math.inf
    return float(np.min(-v[neg] / dv[neg]))


def solve_p5_interior_point(costs, J, tol=1e-8, max_iter=500, step=0.99):
    """LP relaxation of the J-cardinality assignment, by a primal-dual interior-point method.

    Variables: alpha over allowed pairs plus row and column slacks; constraints
    row sums + slack = 1, column sums + slack = 1, total = J. Each iteration takes
    an affine-scaling predictor and a centering corrector (Mehrotra), moving a
    fraction ``step`` of the way to the boundary. Stops when primal and dual
    residuals and the relative duality gap are all below ``tol``.

    Returns None when no J-matching exists on the allowed pairs.
    """
    costs = _check_costs(costs)
    K, M = costs.shape
    if not 0 <= J <= min(K, M):
        raise ValueError(f"J={J} outside [0, min(K, M)] = [0, {min(K, M)}]")
    if J == 0:
        return LPSolution(np.zeros((K, M)), 0.0, 0, 0.0)
    if max_matching_size(np.isfinite(costs)) < J:
        return None
    A, b, c_raw, allowed = _lp_data(costs, J)
    scale = float(c_raw.max()) if c_raw.max() > 0 else 1.0
    c = c_raw / scale
    n = c.size

    def newton(x, s, r1, r2, r3):
        # Normal equations, then refinement on the full system to keep A dx = r1 accurate.
        d = x / s
        normal = (A * d) @ A.T
        normal[np.diag_indices_from(normal)] += 1e-14 * normal.diagonal().max()
        try:
            factor = np.linalg.cholesky(normal)
            solve = lambda v: np.linalg.solve(factor.T, np.linalg.solve(factor, v))  # noqa: E731
        except np.linalg.LinAlgError:
            solve = lambda v: np.linalg.lstsq(normal, v, rcond=None)[0]  # noqa: E731
        dx, dy, ds = np.zeros_like(x), np.zeros(A.shape[0]), np.zeros_like(s)
        e1, e2, e3 = r1, r2, r3
        for _ in range(3):
            ddy = solve(e1 - A @ ((e3 - x * e2) / s))
            dds = e2 - A.T @ ddy
            ddx = (e3 - x * dds) / s
            dx, dy, ds = dx + ddx, dy + ddy, ds + dds
            e1 = r1 - A @ dx
            e2 = r2 - A.T @ dy - ds
            e3 = r3 - s * dx - x * ds
        return dx, dy, ds

    # Mehrotra's starting point
    gram = A @ A.T
    x = A.T @ np.linalg.solve(gram, b)
    y = np.linalg.solve(gram, A @ c)
    s = c - A.T @ y
    x += max(-1.5 * x.min(), 0.0)
    s += max(-1.5 * s.min(), 0.0)
    if x.sum() <= 0 or s.sum() <= 0 or (x @ s) <= 0:
        x, s = np.ones(n), np.ones(n)
    else:
        xs = x @ s
        x += 0.5 * xs / s.sum()
        s += 0.5 * xs / x.sum()

    bnorm, cnorm = 1.0 + np.linalg.norm(b), 1.0 + np.linalg.norm(c)
    gap = math.inf
    for it in range(1, max_iter + 1):
        r_b = A @ x - b
        r_c = A.T @ y + s - c
        pobj, dobj = float(c @ x), float(b @ y)
        gap = abs(pobj - dobj)
        if (
            np.linalg.norm(r_b) / bnorm <= tol
            and np.linalg.norm(r_c) / cnorm <= tol
            and gap <= tol * max(abs(pobj), abs(dobj), GAP_FLOOR)
        ):
            break
        mu = (x @ s) / n
        dx_a, dy_a, ds_a = newton(x, s, -r_b, -r_c, -x * s)
        ap = min(1.0, _max_step(x, dx_a))
        ad = min(1.0, _max_step(s, ds_a))
        mu_aff = ((x + ap * dx_a) @ (s + ad * ds_a)) / n
        sigma = (mu_aff / mu) ** 3
        dx, dy, ds = newton(x, s, -r_b, -r_c, -x * s - dx_a * ds_a + sigma * mu)
        ap = min(1.0, step * _max_step(x, dx))
        ad = min(1.0, step * _max_step(s, ds))
        x = x + ap * dx
        y = y + ad * dy
        s = s + ad * ds
    else:
        raise NotConverged(
            f"interior point did not converge in {max_iter} iterations (gap {gap:.3g})",
            best_bound=float(b @ y) * scale,
        )
    alpha = np.zeros((K, M))
    na = len(allowed)
    alpha[allowed[:, 0], allowed[:, 1]] = np.clip(x[:na], 0.0, 1.0)
    objective = float(c_raw[:na] @ x[:na])
    return LPSolution(alpha, objective, it, gap * scale)


def round_lp_solution(alpha, costs, J, objective, rtol=1e-6, support_eps=1e-6):
    """Integral assignment of exactly J pairs costing no more than the LP objective.

    Thresholds at 0.5 when the solution is near-integral; otherwise solves the
    exact flow problem restricted to the LP support.
    """
    costs = _check_costs(costs)
    alpha = np.asarray(alpha, dtype=float)
    bound = objective + rtol * max(abs(objective), 1e-300) + 1e-15
    pairs = [tuple(p) for p in np.argwhere(alpha > 0.5)]
    if len(pairs) == J and all(np.isfinite(costs[k, m]) for k, m in pairs):
        candidate = _make_assignment(costs, pairs)
        rows = {k for k, _ in candidate.pairs}
        cols = {m for _, m in candidate.pairs}
        if len(rows) == len(cols) == J and candidate.cost <= bound:
            return candidate
    restricted = np.where(alpha > support_eps, costs, np.inf)
    candidate = solve_k_assignment_flow(restricted, J)
    if candidate is None or candidate.cost > bound:
        raise RoundingFailed(
            f"no integral J={J} assignment within the LP objective {objective!r} on its support"
        )
    return candidate


class KCardinalitySolver:
    """Cached minimum-power queries P*_J for one cost matrix; ``backend`` is 'flow' or 'lp'.

    P*_J does not depend on the power budget, so sweeps over the budget reuse
    these results. ``calls`` counts queries (cache hits included).
    """

    def __init__(self, costs, backend="flow", lp_options=None):
        if backend not in ("flow", "lp"):
            raise ValueError(f"unknown backend {backend!r}")
        self.costs = _check_costs(costs)
        self.backend = backend
        self.lp_options = lp_options or {}
        self._flow = FlowAssignment(self.costs) if backend == "flow" else None
        self._cache = {}
        self.calls = 0
        self._max_size = None

    @property
    def max_size(self):
        if self._max_size is None:
            self._max_size = max_matching_size(np.isfinite(self.costs))
        return self._max_size

    def solve(self, J):
        self.calls += 1
        if J not in self._cache:
            if self.backend == "flow":
                self._cache[J] = self._flow.solve(J)
            else:
                lp = solve_p5_interior_point(self.costs, J, **self.lp_options)
                self._cache[J] = (
                    None if lp is None
                    else round_lp_solution(lp.alpha, self.costs, J, lp.objective)
                )
        return self._cache[J]
