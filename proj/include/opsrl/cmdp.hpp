#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "opsrl/rng.hpp"

namespace opsrl {

/// Finite-horizon tabular constrained MDP with a fixed initial state.
///
/// The model carries a transition kernel P(s'|s,a), an objective cost table
/// r(s,a) and a constraint cost table c(s,a), both bounded in [0,1], a horizon
/// H, and a cumulative constraint budget. Tables are stored flat and row-major;
/// use the index helpers rather than hand-rolled offsets.
struct TabularCmdp {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<double> transition;      // [s][a][s'] -> num_states*num_actions*num_states
    std::vector<double> objective_cost;  // [s][a]
    std::vector<double> constraint_cost; // [s][a]
    double budget = 0.0;
    int initial_state = 0;

    std::size_t sa(int s, int a) const {
        return static_cast<std::size_t>(s) * num_actions + a;
    }
    std::size_t sas(int s, int a, int s_next) const {
        return (static_cast<std::size_t>(s) * num_actions + a) * num_states + s_next;
    }
    double p(int s, int a, int s_next) const { return transition[sas(s, a, s_next)]; }
};

/// Non-stationary randomized policy: one distribution over actions per (h, s).
struct Policy {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> probs; // [h][s][a]

    std::size_t hsa(int h, int s, int a) const {
        return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
    }
    double prob(int h, int s, int a) const { return probs[hsa(h, s, a)]; }
};

/// State-action occupancy measure w^h(s,a) of a policy: the probability of
/// being in state s and choosing action a at step h.
struct OccupancyMeasure {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> w; // [h][s][a]

    std::size_t hsa(int h, int s, int a) const {
        return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
    }
};

/// One sampled episode. `states` has horizon+1 entries because the final
/// transition's successor is observed and consumed by the count updates.
struct EpisodeTrace {
    std::vector<int> states;            // length horizon + 1
    std::vector<int> actions;           // length horizon
    std::vector<double> objective_costs;  // length horizon
    std::vector<double> constraint_costs; // length horizon
};

/// Per-step state values V^h(s) for h in 1..H+1 (stored 0-based, row H is the
/// terminal all-zero row).
struct ValueTable {
    int horizon = 0;
    int num_states = 0;
    std::vector<double> v; // [(horizon+1)][s]

    double at(int h, int s) const { return v[static_cast<std::size_t>(h) * num_states + s]; }
};

/// Throws std::invalid_argument if the model violates its invariants:
/// stochastic rows within 1e-9, costs inside [0,1], 0 < budget <= H.
void validate_model(const TabularCmdp& model);

/// Throws std::invalid_argument if the policy rows are not distributions
/// within 1e-9 or the dimensions disagree with the model.
void validate_policy(const TabularCmdp& model, const Policy& policy);

/// Exact policy evaluation by backward recursion for an arbitrary (S,A) cost
/// table. Returns the full V^h(s) table; V^1(s_init) is the scalar value of
/// the policy.
ValueTable evaluate_policy(const TabularCmdp& model, const Policy& policy,
                           std::span<const double> cost);

/// Same recursion but under a step-dependent transition stack (H tables of
/// shape S*A*S). Used for models extracted from the extended LP, whose
/// transitions may differ per step.
ValueTable evaluate_policy_nonstationary(int num_states, int num_actions, int horizon,
                                         std::span<const double> transitions_per_step,
                                         const Policy& policy,
                                         std::span<const double> cost);

/// Scalar convenience: V^1 at the model's initial state.
double policy_value(const TabularCmdp& model, const Policy& policy,
                    std::span<const double> cost);

/// Occupancy measure of a policy by forward recursion.
OccupancyMeasure occupancy_of_policy(const TabularCmdp& model, const Policy& policy);

/// Occupancy under a step-dependent transition stack.
OccupancyMeasure occupancy_nonstationary(int num_states, int num_actions, int horizon,
                                         std::span<const double> transitions_per_step,
                                         const Policy& policy, int initial_state);

/// Recovers the policy that generated an occupancy measure. Rows with zero
/// mass (unvisited states) become the uniform distribution, which keeps the
/// result a valid policy. Negative entries are a contract violation.
Policy policy_from_occupancy(const OccupancyMeasure& w);

/// Samples one episode of length H following the policy from the model's
/// initial state. The trace records the H+1-th state.
EpisodeTrace sample_episode(const TabularCmdp& model, const Policy& policy, Rng& rng);

/// Residual of the value-difference identity for two models sharing costs and
/// differing only in P. Evaluates
///   | V(P_a) - V(P_b) - sum_h w_b^h . (P_a - P_b) V_a^{h+1} |
/// exactly through the occupancy expansion; a test oracle that should vanish
/// to numerical precision.
double value_difference_check(const TabularCmdp& model_a, const TabularCmdp& model_b,
                              const Policy& policy, std::span<const double> cost);

/// Maximum violation of the occupancy-measure constraints (flow conservation,
/// initial-state row, nonnegativity) of `w` with respect to the model.
double occupancy_constraint_residual(const TabularCmdp& model, const OccupancyMeasure& w);

/// Value of the unconstrained MDP under cost table `cost` by backward
/// induction (greedy minimization). Deterministic tie-break toward lower
/// action indices. Returns the optimal value from the initial state.
double unconstrained_optimum(const TabularCmdp& model, std::span<const double> cost);

} // namespace opsrl
