#pragma once

#include <optional>
#include <span>
#include <vector>

#include "opsrl/cmdp.hpp"
#include "opsrl/lp.hpp"

namespace opsrl {

/// State-action-state occupancy z^h(s,a,s'), the variable space of the
/// extended LP. z^h(s,a,s') = P'(s'|s,a) w^h(s,a) for the chosen model P'.
struct ExtendedOccupancy {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> z; // [h][s][a][s']

    std::size_t idx(int h, int s, int a, int t) const {
        return ((static_cast<std::size_t>(h) * num_states + s) * num_actions + a) *
                   num_states + t;
    }
};

/// Occupancy-measure LP for a known model: minimize the objective subject to
/// the budget row, flow conservation, the initial-state rows, and
/// nonnegativity. Variables are w^h(s,a) ordered h-major.
LinearProgram build_cmdp_lp(const TabularCmdp& model, std::span<const double> objective,
                            std::span<const double> constraint_cost, double budget);

struct PlanResult {
    Policy policy;
    double value = 0.0;            // exact objective value of the extracted policy
    double constraint_value = 0.0; // exact constraint value of the extracted policy
    OccupancyMeasure occupancy;
};

/// Solves the CMDP planning problem for a known model through the occupancy
/// LP and extracts the optimal policy. Throws std::runtime_error when the
/// CMDP is infeasible.
PlanResult plan_cmdp(const TabularCmdp& model);

/// Same, with the budget overridden (used for stricter baseline problems).
PlanResult plan_cmdp_with_budget(const TabularCmdp& model, double budget);

/// Extended LP over z^h(s,a,s') for an empirical model and per-transition
/// confidence radii. The confidence box is intersected with [0,1] per
/// coordinate; box rows that the intersection makes vacuous are omitted,
/// which leaves the feasible set unchanged. Passing no budget drops the
/// budget row (the unconstrained optimistic problem).
LinearProgram build_extended_lp(std::span<const double> p_hat, std::span<const double> beta,
                                std::span<const double> objective,
                                std::span<const double> constraint_cost,
                                std::optional<double> budget, int num_states,
                                int num_actions, int horizon, int initial_state);

struct ExtractedPlan {
    Policy policy;
    std::vector<double> transitions_per_step; // [h][s][a][s'], uniform rows where z mass is 0
    std::vector<double> transition_aggregate; // [s][a][s'], occupancy-weighted across steps
};

/// Recovers (policy, model) from an extended-occupancy solution. Zero
/// denominators produce uniform rows. The per-step transitions are the
/// faithful representation; the aggregate is a reporting convenience.
ExtractedPlan extract_policy_model(const ExtendedOccupancy& z);

/// Convenience: reshape a flat LP solution vector into an ExtendedOccupancy,
/// clamping roundoff negatives above -1e-9 to zero.
ExtendedOccupancy extended_occupancy_from_values(const std::vector<double>& values,
                                                 int num_states, int num_actions,
                                                 int horizon);

} // namespace opsrl
