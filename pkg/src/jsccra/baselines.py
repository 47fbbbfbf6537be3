"""Benchmark allocators, fixed-CR ablations, and a per-drop dispatcher over method names."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .assignment import KCardinalitySolver, solve_hungarian
from .capacity import result_from_pairs, solve_capacity
from .errors import ConfigError
from .power import build_power_matrix

BASE_METHODS = ("optimal", "hungarian", "random", "uniform")


def greedy_admission(pairs, costs, budget):
    """Admit pairs in ascending power until the next one would exceed the budget."""
    order = sorted(pairs, key=lambda p: (costs[p], p))
    admitted, used = [], 0.0
    for p in order:
        if not np.isfinite(costs[p]) or used + costs[p] > budget:
            break
        admitted.append(p)
        used += costs[p]
    return admitted


def random_injection(num_users, num_rbs, seed):
    """Uniform random injective pairing; with K > M a random subset of M users gets RBs."""
    rng = np.random.default_rng(seed)
    if num_users <= num_rbs:
        rbs = rng.permutation(num_rbs)[:num_users]
        return [(k, int(rbs[k])) for k in range(num_users)]
    users = rng.permutation(num_users)[:num_rbs]
    return sorted((int(users[m]), m) for m in range(num_rbs))


def hungarian_greedy(scenario, model, power_matrix=None, hungarian=None):
    """Full assignment by the Hungarian method, then greedy admission by ascending power."""
    matrix = power_matrix if power_matrix is not None else build_power_matrix(scenario, model)
    if hungarian is None:
        hungarian = solve_hungarian(matrix.costs)
    admitted = greedy_admission(hungarian.pairs, matrix.costs, scenario.config.bs_power_w)
    return result_from_pairs(scenario, model, matrix, admitted, "hungarian")


def random_pairing(scenario, model, seed, power_matrix=None):
    """Random RB per user, minimum power per pair, greedy admission by ascending power."""
    matrix = power_matrix if power_matrix is not None else build_power_matrix(scenario, model)
    config = scenario.config
    pairs = random_injection(config.num_users, config.num_rbs, seed)
    admitted = greedy_admission(pairs, matrix.costs, config.bs_power_w)
    return result_from_pairs(scenario, model, matrix, admitted, "random")


def uniform_power(scenario, model, seed, power_matrix=None, share="user"):
    """Random pairing with an equal power split; a user is served iff its share covers p*.

    ``share="user"`` splits the budget as P/K, ``share="rb"`` as P/M.
    """
    matrix = power_matrix if power_matrix is not None else build_power_matrix(scenario, model)
    config = scenario.config
    if share == "user":
        portion = config.bs_power_w / max(config.num_users, 1)
    elif share == "rb":
        portion = config.bs_power_w / config.num_rbs
    else:
        raise ValueError(f"share must be 'user' or 'rb', got {share!r}")
    pairs = random_injection(config.num_users, config.num_rbs, seed)
    served = [p for p in pairs if matrix.costs[p] <= portion]
    return result_from_pairs(scenario, model, matrix, served, "uniform", power=portion)


def fixed_cr(scenario, model, cr, backend="flow", power_matrix=None, solver=None):
    """Same optimizer as ``solve_capacity`` with every user's CR pinned to ``cr``."""
    cr = Fraction(cr)
    if cr not in scenario.config.cr_set:
        raise ConfigError(f"fixed CR {cr} is not in the configured CR set")
    matrix = power_matrix if power_matrix is not None else build_power_matrix(scenario, model, cr=cr)
    return solve_capacity(scenario, model, backend, power_matrix=matrix, solver=solver,
                          method=f"fixed-cr:{cr}")


def parse_method(name):
    """Validate a method name; returns (kind, fixed CR or None)."""
    if name in BASE_METHODS:
        return name, None
    if name.startswith("fixed-cr:"):
        try:
            return "fixed-cr", Fraction(name.split(":", 1)[1])
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(
        f"unknown method {name!r}; expected one of {', '.join(BASE_METHODS)} or fixed-cr:<ratio>"
    )


class Allocator:
    """Runs any method on one scenario, caching everything that does not depend on the budget.

    Power matrices, k-assignment solvers and the Hungarian matching are computed
    once; ``run(method, budget)`` then only redoes budget-dependent steps.
    """

    def __init__(self, scenario, model, backend="flow", seed=0, uniform_share="user"):
        self.scenario = scenario
        self.model = model
        self.backend = backend
        self.seed = seed
        self.uniform_share = uniform_share
        self._matrices = {}
        self._solvers = {}
        self._hungarian = None

    def matrix(self, cr=None):
        if cr not in self._matrices:
            self._matrices[cr] = build_power_matrix(self.scenario, self.model, cr=cr)
        return self._matrices[cr]

    def solver(self, cr=None):
        if cr not in self._solvers:
            self._solvers[cr] = KCardinalitySolver(self.matrix(cr).costs, self.backend)
        return self._solvers[cr]

    def run(self, method, budget=None):
        kind, cr = parse_method(method)
        scenario = self.scenario
        if budget is not None and budget != scenario.config.bs_power_w:
            scenario = scenario.with_config(bs_power_w=budget)
        if kind == "optimal":
            return solve_capacity(scenario, self.model, self.backend,
                                  power_matrix=self.matrix(), solver=self.solver())
        if kind == "hungarian":
            if self._hungarian is None:
                self._hungarian = solve_hungarian(self.matrix().costs)
            return hungarian_greedy(scenario, self.model, self.matrix(), self._hungarian)
        if kind == "random":
            return random_pairing(scenario, self.model, self.seed, self.matrix())
        if kind == "uniform":
            return uniform_power(scenario, self.model, self.seed, self.matrix(), self.uniform_share)
        return fixed_cr(scenario, self.model, cr, self.backend,
                        power_matrix=self.matrix(cr), solver=self.solver(cr))


def allocate(method, scenario, model, backend="flow", seed=0, uniform_share="user"):
    return Allocator(scenario, model, backend, seed, uniform_share).run(method)
