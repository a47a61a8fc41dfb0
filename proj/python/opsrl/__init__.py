"""Tabular constrained-MDP safe-exploration toolkit.

Thin Python surface over the C++ core: benchmark environment builders, exact
policy evaluation and occupancy transforms, the occupancy-LP planner, and the
episodic learning harness with exact regret accounting.
"""

from opsrl._core import (
    Policy,
    TabularCmdp,
    build_inventory,
    build_media,
    build_random,
    evaluate_policy,
    make_baseline,
    model_to_text,
    occupancy_of_policy,
    plan_cmdp,
    policy_from_occupancy,
    policy_value,
    run_experiment,
    sample_episode,
)

__all__ = [
    "Policy",
    "TabularCmdp",
    "build_inventory",
    "build_media",
    "build_random",
    "evaluate_policy",
    "make_baseline",
    "model_to_text",
    "occupancy_of_policy",
    "plan_cmdp",
    "policy_from_occupancy",
    "policy_value",
    "run_experiment",
    "sample_episode",
]

__version__ = "0.1.0"
