"""Smoke test for the hsc_park extension: build with `maturin develop` or
`pip install --no-build-isolation crates/py`, then run this file."""

import math

import hsc_park


def main():
    path = hsc_park.plan_path((0.0, 0.0, 0.0), (-15.0, -12.0, math.pi / 2), min_turn_radius=8.0)
    assert path.max_curvature() <= 1.001 / 8.0
    assert path.control_points[0] == (0.0, 0.0)
    print(f"path length {path.length():.4f} m, max curvature {path.max_curvature():.5f} 1/m")

    try:
        hsc_park.plan_path((0.0, 0.0, math.pi), (0.0, -1.0, 0.0), min_turn_radius=4.5)
    except hsc_park.PlanningError as e:
        print(f"infeasible geometry rejected: {e}")
    else:
        raise AssertionError("expected PlanningError")

    assert hsc_park.classify(0.5, 0.3, 0.1, 0.1) == "I"
    assert hsc_park.classify(0.5, -0.3, 0.1, 0.1) == "II"
    assert hsc_park.classify(0.0, 0.0) == "V"

    n = 101
    t = [i * 0.01 for i in range(n)]
    labels = hsc_park.classify_series(t, [2.0] * n, [1.0] * n, [0.5] * n, window=0.5)
    assert labels[49] is None and labels[50] == (1.0, 0.5, "I")

    cfg = hsc_park.RunConfig()
    out = cfg.simulate(condition="A", skill=1.0)
    m = out["metrics"]
    assert m["captured"] and m["rms_e"] <= 0.05
    assert all(x == 0.0 for x in out["log"]["tau_das"])
    again = cfg.simulate(condition="A", skill=1.0)
    assert again["log_csv"] == out["log_csv"]
    print(f"expert trial: captured {m['captured']}, rms_e {m['rms_e']:.4f} m, {len(out['log']['t'])} records")

    small = hsc_park.RunConfig(
        '[experiment]\nconditions = ["A", "C"]\ndrivers_per_condition = 2\n'
        "trials_before = 2\ntrials_during = 2\ntrials_after_fixed = 1\ntrials_after_self = 1\n"
    )
    report = small.experiment()
    rows = report["trials_csv"].strip().splitlines()
    assert len(rows) == 1 + 2 * 2 * 6, len(rows)
    assert report["failures"] == []
    print(f"experiment: {len(rows) - 1} trials, correlation {report['correlation']}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
