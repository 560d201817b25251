import math

import numpy as np
import pytest

import cbfrl


def test_kinematics():
    s = cbfrl.step(cbfrl.UnicycleState(0.0, 0.0, 0.0), cbfrl.Control(0.2, 0.7), 0.1)
    assert (s.x, s.y) == pytest.approx((0.02, 0.0))
    assert s.theta == pytest.approx(0.07)
    assert np.allclose(cbfrl.rotation_matrix(math.pi / 2), [[0, -1], [1, 0]])
    assert np.allclose(cbfrl.shifted_point(cbfrl.UnicycleState(1.0, 0.0, math.pi), 0.05), [0.95, 0.0])


def test_hand_solved_qp():
    params = cbfrl.CbfParams()
    s = cbfrl.UnicycleState(0.0, 0.46, 0.0)
    assert cbfrl.barrier_value(s, params) == pytest.approx(-0.0359)
    assert cbfrl.constraint_coefficients(s, params) == pytest.approx((0.1, 0.046))
    out = cbfrl.solve_safe_control(s, cbfrl.Control(0.2, 0.0), params)
    assert out.active and out.slack == 0.0
    assert out.control.v == pytest.approx(0.2, abs=1e-3)
    assert out.control.omega == pytest.approx(0.3457, abs=1e-3)
    ref = cbfrl.oracle_solve(s, cbfrl.Control(0.2, 0.0), params, 1e-7)
    assert ref.omega == pytest.approx(out.control.omega, abs=1e-5)


def test_oracle_suite_small():
    report = cbfrl.run_oracle_suite(20, seed=3)
    assert report["instances"] == 20
    assert report["max_objective_gap"] <= 1e-6
    assert report["min_constraint_residual"] >= -1e-9


def test_modes():
    params = cbfrl.CbfParams()
    s = cbfrl.UnicycleState(0.0, 0.46, 0.0)
    assert cbfrl.decay_beta(0, 100) == 1.0
    assert cbfrl.decay_beta(100, 100) == 0.0
    res = cbfrl.resolve_action(cbfrl.ModeConfig(cbfrl.Mode.decay, 1000), s, 0.0, params, 500)
    assert res.cbf_active
    assert res.executed.omega == pytest.approx(0.5 * res.cbf.omega)
    sac = cbfrl.resolve_action(cbfrl.ModeConfig(cbfrl.Mode.sac), s, 0.1, params, 0)
    assert sac.cbf is None and sac.executed.omega == 0.1
    mode = cbfrl.ModeConfig(cbfrl.Mode.reward)
    reward = cbfrl.resolve_action(mode, s, 0.0, params, 0)
    assert cbfrl.shaped_reward(mode, 0.0, reward, 0.2) == pytest.approx(-0.3457, abs=1e-3)


def test_environment_rollout():
    cfg = cbfrl.WorldConfig()
    rng = cbfrl.Rng(7)
    world = cbfrl.reset(cfg, cbfrl.CbfParams(), rng)
    assert world.step_count == 0
    gap = np.hypot(world.agent.x - world.obstacle[0], world.agent.y - world.obstacle[1])
    assert gap >= 0.55
    for _ in range(10):
        result = cbfrl.env_step(world, cbfrl.Control(0.2, 0.3), cfg)
        assert not result.truncated
    assert world.step_count == 10
    obs = cbfrl.observe(world)
    assert obs.as_vector().shape == (4,)


def test_errors_map_to_python():
    with pytest.raises(cbfrl.CheckpointError):
        cbfrl.load_agent("/nonexistent/checkpoint.json")
    bad = cbfrl.CbfParams()
    bad.delta = -1.0
    with pytest.raises(ValueError):
        bad.validate()
