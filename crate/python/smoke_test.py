"""Smoke test for the rulesched Python extension.

Build the extension and put it on the import path first, e.g.

    PYO3_BUILD_EXTENSION_MODULE=1 cargo build --release -p rulesched-py
    cp target/release/librulesched_py.so python/rulesched.so
    python3 python/smoke_test.py
"""

import json
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import rulesched  # noqa: E402


def main():
    assert rulesched.RULE_COUNT == 4
    assert rulesched.RULE_NAMES[0] == "CostGreedy"

    worked = rulesched.Instance.parse(json.dumps({
        "days": 1, "shifts_per_day": 1, "undercover_weight": 10,
        "demand": [[1]],
        "nurses": [
            {"patterns": [{"cover": [1], "cost": 2}, {"cover": [0], "cost": 0}]},
            {"patterns": [{"cover": [1], "cost": 1}, {"cover": [0], "cost": 0}]},
        ],
    }))
    assert worked.nurse_count == 2
    assert worked.evaluate([1, 0]).total == 1.0
    assert worked.decode([0, 0])[1].total == 10.0
    assert worked.decode([1, 1]) == ([1, 0], worked.decode([1, 1])[1])
    schedule, fitness = worked.enumerate_optimum()
    assert schedule == [1, 0] and fitness.total == 1.0

    try:
        rulesched.Instance.parse('{"days": 1, "shifts_per_day": 1, "demand": [[1]], '
                                 '"nurses": [{"patterns": [{"cover": [1], "cost": -1}]}]}')
    except ValueError as e:
        assert "cost" in str(e)
    else:
        raise AssertionError("negative cost accepted")

    model = rulesched.BoaModel.learn([[0, 1], [0, 0], [1, 1]], n_steps=2, k=2, alpha=0.0)
    assert abs(model.marginal[0] - 2 / 3) < 1e-12
    assert model.transition(1, 1) == [0.0, 1.0]
    assert all(len(s) == 5 for s in rulesched.BoaModel.uniform(5).sample(10, seed=3))

    assert rulesched.roulette([1.0, 0.0, 0.0], seed=9) == 0

    table = rulesched.StrengthTable(2)
    table.reinforce([0, 1], 0.1)
    assert table.row(0) == [1.1, 1.0, 1.0, 1.0]
    rules, fit = table.hill_climb(worked, [0, 0], iterations=50, seed=1)
    assert fit.total <= 10.0 and len(rules) == 2

    planted = rulesched.Instance.generate(6, mode="planted", seed=7)
    assert planted.enumerate_optimum()[1].total == 0.0
    report = rulesched.evolve(planted, seed=1, lcs=True)
    best = report["records"]["best_fitness"]
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert report["best"]["fitness"].total == 0.0

    out = rulesched.solve(planted, "random", seed=2, budget=300)
    assert out["evaluations"] == 300

    rows = rulesched.run_experiment(json.dumps({
        "instances": [{"generate": {"nurses": 4, "seed": 1}}],
        "algorithms": ["boa", "fixed:0"],
        "seeds": [1, 2],
        "budget": 500,
    }))
    assert len(rows) == 4
    assert [r["algorithm"] for r in rows] == ["boa", "boa", "fixed:0", "fixed:0"]

    print("smoke test passed")


if __name__ == "__main__":
    main()
