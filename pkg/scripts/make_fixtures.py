"""Regenerate the checked-in test fixtures under tests/fixtures/.

tiny_scenario.json / tiny_golden.json: a 4-user, 3-RB drop and its J* from the
exhaustive oracle, used by the CLI golden test.
golden_scenario.json / golden_values.json: a default-size drop plus derived
numbers (power matrix digest, J* per budget) for cross-platform comparison.
"""

import json
from pathlib import Path

import numpy as np

from jsccra.baselines import Allocator
from jsccra.capacity import brute_force_p1, solve_capacity
from jsccra.psnr_model import default_model
from jsccra.scenario import SystemConfig, generate_scenario, save_scenario

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
TINY = SystemConfig(num_users=4, num_rbs=3, num_subchannels=9, bs_power_w=2e-3, rng_seed=11)
GOLDEN = SystemConfig(rng_seed=20240601)
BUDGETS = (0.01, 0.1, 1.0)


def dump(obj, name):
    (OUT / name).write_text(json.dumps(obj, indent=1) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    model = default_model()

    tiny = generate_scenario(TINY)
    oracle = brute_force_p1(tiny, model)
    ours = solve_capacity(tiny, model).J_star
    assert oracle == ours, (oracle, ours)
    save_scenario(tiny, OUT / "tiny_scenario.json")
    dump({"budget_w": TINY.bs_power_w, "J_star": oracle}, "tiny_golden.json")
    dump(TINY.to_dict(), "tiny_config.json")

    golden = generate_scenario(GOLDEN)
    save_scenario(golden, OUT / "golden_scenario.json")
    allocator = Allocator(golden, model)
    costs = allocator.matrix().costs
    finite = np.isfinite(costs)
    dump(
        {
            "config": GOLDEN.to_dict(),
            "power_sum_w": float(costs[finite].sum()),
            "power_min_w": float(costs[finite].min()),
            "num_infeasible": int((~finite).sum()),
            "optimal_J_star": {str(p): allocator.run("optimal", p).J_star for p in BUDGETS},
            "optimal_power_w": {str(p): allocator.run("optimal", p).total_power_w for p in BUDGETS},
        },
        "golden_values.json",
    )
    print(f"tiny J*={oracle}; fixtures written to {OUT}")


if __name__ == "__main__":
    main()
