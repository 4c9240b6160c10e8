"""Smoke test for the lte_mlb_py extension.

Build and install first, e.g. `maturin develop --release` from crates/py,
then run `python python/smoke_test.py`.
"""

import json

import lte_mlb_py as m


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    assert close(m.path_loss(1.0), 34.5)
    assert close(m.path_loss(500.0), 34.5 + 35.0 * 2.69897000433, 1e-6)
    assert m.antenna_gain(0.0) == 0.0
    assert m.antenna_gain(180.0) == -20.0

    assert m.a3_condition(-90.0, -86.0, 3.0)
    assert not m.a3_condition(-90.0, -87.0, 3.0)

    assert m.alpha(0.5) == 0.0
    assert m.alpha(0.25) == 1.0
    assert m.alpha(0.35, algorithm="mlb2") == 0.5
    assert m.alpha(0.35, algorithm="none") == 1.0
    assert m.effective_hysteresis(0.5) == 1.5
    assert m.effective_hysteresis(1.0) == 3.0

    assert m.mcs_from_sinr(0.0) == 5
    assert m.mcs_from_sinr(20.0) == 20
    assert m.prbs_required(1e6, 5) == 2

    cfg = json.loads(m.default_config())
    assert cfg["ue_count"] == 37 and cfg["tick_s"] == 0.01

    out = m.run(ue_count=20, duration_s=5.0, algorithm="mlb1", seed=3)
    kpi = out["kpi"]
    assert kpi["ue_count"] == 20 and kpi["algorithm"] == "mlb1"
    assert 0.0 <= kpi["loss_ratio"] <= 1.0
    assert kpi["ho_count"] == len(out["handovers"])
    assert out["conservation"]["max_granted_prbs"] <= 25
    again = m.run({"ue_count": 20, "duration_s": 5.0, "algorithm": "mlb1", "seed": 3})
    assert again["kpi"] == kpi

    sim = m.Simulation(ue_count=10, duration_s=1.0)
    assert sim.total_ticks == 100
    assert sim.advance(40) == 40 and sim.tick == 40
    assert len(sim.ues()) == 10
    assert sim.hysteresis(0, 1) == 3.0
    assert set(sim.mlb_phases()) <= {"active", "inactive"}
    final = sim.finish()
    assert final["kpi"]["ticks"] == 100
    try:
        sim.step()
        raise AssertionError("stepping a finished simulation must fail")
    except m.SimulationError:
        pass

    mat = m.run_matrix(["none", "mlb2"], [10, 20], [1, 2], duration_s=1.0)
    assert len(mat["runs"]) == 8 and len(mat["cells"]) == 4

    for bad in ({"ue_cont": 3}, {"tick_s": -1.0}):
        try:
            m.run(**bad)
            raise AssertionError(f"{bad} must be rejected")
        except m.SimulationError as e:
            assert next(iter(bad)) in str(e), e

    print("lte_mlb_py smoke test passed")


if __name__ == "__main__":
    main()
