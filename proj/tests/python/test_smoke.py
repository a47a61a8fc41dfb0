"""Smoke tests for the Python bindings."""

import numpy as np
import pytest

import opsrl


def test_media_model_shapes():
    model = opsrl.build_media()
    assert model.num_states == 21
    assert model.num_actions == 2
    assert model.horizon == 10
    assert model.budget == pytest.approx(5.0)
    assert model.transition.shape == (21, 2, 21)
    rows = model.transition.sum(axis=2)
    assert np.allclose(rows, 1.0, atol=1e-9)
    assert np.all(model.constraint_cost[:, 1] == 1.0)
    assert np.all(model.constraint_cost[:, 0] == 0.0)


def test_plan_cmdp_respects_budget():
    model = opsrl.build_media()
    plan = opsrl.plan_cmdp(model)
    assert plan["constraint_value"] <= model.budget + 1e-6
    # Exact re-evaluation of the returned policy reproduces the reported value.
    value = opsrl.policy_value(model, plan["policy"], model.objective_cost)
    assert value == pytest.approx(plan["value"], abs=1e-9)


def test_occupancy_round_trip():
    model = opsrl.build_random(seed=5, num_states=3, num_actions=2, horizon=4,
                               budget_frac=0.5)
    plan = opsrl.plan_cmdp(model)
    w = opsrl.occupancy_of_policy(model, plan["policy"])
    assert w.shape == (4, 3, 2)
    assert np.allclose(w.sum(axis=(1, 2)), 1.0, atol=1e-8)
    recovered = opsrl.policy_from_occupancy(w)
    w2 = opsrl.occupancy_of_policy(model, recovered)
    assert np.allclose(w, w2, atol=1e-8)


def test_value_matches_occupancy_dot_cost():
    model = opsrl.build_random(seed=8, num_states=3, num_actions=2, horizon=3,
                               budget_frac=0.8)
    plan = opsrl.plan_cmdp(model)
    w = opsrl.occupancy_of_policy(model, plan["policy"])
    dot = float((w * model.objective_cost[None, :, :]).sum())
    assert dot == pytest.approx(plan["value"], abs=1e-9)


def test_sample_episode_deterministic():
    model = opsrl.build_media()
    plan = opsrl.plan_cmdp(model)
    a = opsrl.sample_episode(model, plan["policy"], seed=42)
    b = opsrl.sample_episode(model, plan["policy"], seed=42)
    assert a["states"] == b["states"]
    assert a["actions"] == b["actions"]
    assert len(a["states"]) == model.horizon + 1
    assert len(a["actions"]) == model.horizon


def test_build_random_deterministic():
    a = opsrl.build_random(seed=77, num_states=4, num_actions=2, horizon=3,
                           budget_frac=0.5)
    b = opsrl.build_random(seed=77, num_states=4, num_actions=2, horizon=3,
                           budget_frac=0.5)
    assert np.array_equal(a.transition, b.transition)
    assert np.array_equal(a.objective_cost, b.objective_cost)


def test_run_experiment_records():
    result = opsrl.run_experiment(env="inventory", agent="opsrl", episodes=40,
                                  num_seeds=2, master_seed=3, delta=0.1,
                                  baseline_frac=0.1)
    assert len(result["per_seed"]) == 2
    for run in result["per_seed"]:
        assert run["cum_opt_regret"].shape == (40,)
        assert run["cum_cons_regret"].shape == (40,)
        # Exact safety: OPSRL never exceeds the budget.
        assert np.all(run["value_c"] <= result["budget"] + 1e-6)
        # Cumulative columns are nondecreasing for a safe agent.
        assert np.all(np.diff(run["cum_opt_regret"]) >= -1e-12)
    # Determinism: an identical call reproduces the records bit for bit.
    again = opsrl.run_experiment(env="inventory", agent="opsrl", episodes=40,
                                 num_seeds=2, master_seed=3, delta=0.1,
                                 baseline_frac=0.1)
    for run_a, run_b in zip(result["per_seed"], again["per_seed"]):
        assert np.array_equal(run_a["cum_opt_regret"], run_b["cum_opt_regret"])
        assert np.array_equal(run_a["value_c"], run_b["value_c"])


def test_make_baseline_stricter_value():
    model = opsrl.build_media()
    baseline = opsrl.make_baseline(model, 0.2 * model.budget)
    assert baseline["value"] <= 0.2 * model.budget + 1e-6


def test_invalid_model_rejected():
    transition = np.zeros((2, 1, 2))
    transition[:, :, 0] = 0.7  # rows do not sum to one
    with pytest.raises(ValueError):
        opsrl.TabularCmdp(transition, np.zeros((2, 1)), np.zeros((2, 1)),
                          horizon=3, budget=1.0)
