#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "opsrl/cmdp.hpp"
#include "opsrl/cmdp_lp.hpp"
#include "opsrl/confidence.hpp"
#include "opsrl/extended_solver.hpp"

namespace opsrl {

enum class AgentKind { Opsrl, OptCmdp, UcrlUnconstrained, FixedBaseline };

enum class SelectStatus { Optimal, Infeasible, Skipped };

struct SelectionOutcome {
    Policy policy;
    bool used_baseline = false;
    SelectStatus lp_status = SelectStatus::Skipped;
    // Objective and budget-row values of the selected (policy, model) pair
    // under the solved problem's costs; NaN when no LP was solved.
    double model_value_objective = 0.0;
    double model_value_constraint = 0.0;
    // Extraction detail for audits (per-step transitions), present when an
    // LP solution was extracted.
    std::optional<ExtractedPlan> extracted;
};

/// Episode-level policy selection. The agent sees the CMDP dimensions, the
/// known cost tables and the budget, but never the true transitions; model
/// knowledge enters only through the ConfidenceState. One agent instance
/// drives one run: the extended-LP solver inside is warm-started across
/// episodes.
class Agent {
public:
    /// baseline_policy/baseline_value are required for Opsrl and
    /// FixedBaseline; Opsrl additionally requires baseline_value < budget.
    /// fixed_k0 switches Opsrl from the adaptive feasibility fallback to the
    /// fixed warm-start prefix of Algorithm-1 fidelity experiments.
    Agent(AgentKind kind, int num_states, int num_actions, int horizon, int initial_state,
          std::vector<double> objective_cost, std::vector<double> constraint_cost,
          double budget, std::optional<Policy> baseline_policy = {},
          double baseline_value = 0.0, std::optional<std::int64_t> fixed_k0 = {});

    SelectionOutcome select(const ConfidenceState& conf);

    /// Test seam: selection from an explicit empirical model and bonus table
    /// (e.g. zero bonuses), bypassing the count-derived quantities.
    SelectionOutcome select_with_model(std::span<const double> p_hat,
                                       const BonusTable& bonus, std::int64_t episode);

    AgentKind kind() const { return kind_; }
    long long total_lp_pivots() const;

private:
    SelectionOutcome baseline_outcome(SelectStatus status) const;

    AgentKind kind_;
    int S_, A_, H_, s1_;
    std::vector<double> objective_cost_, constraint_cost_;
    double budget_;
    std::optional<Policy> baseline_policy_;
    double baseline_value_ = 0.0;
    std::optional<std::int64_t> fixed_k0_;
    std::optional<ExtendedLpSolver> solver_;
};

/// Solves the stricter CMDP with budget `target_value` on the true model and
/// returns the resulting policy together with its exact constraint value,
/// which is the baseline value the agents are given. Throws when the stricter
/// problem is infeasible.
std::pair<Policy, double> make_baseline(const TabularCmdp& model, double target_value);

// One-shot functional forms of the per-episode selections (fresh solver).
SelectionOutcome opsrl_select(const ConfidenceState& conf,
                              std::span<const double> objective_cost,
                              std::span<const double> constraint_cost, double budget,
                              double baseline_value, const Policy& baseline_policy,
                              int initial_state,
                              std::optional<std::int64_t> fixed_k0 = {});
SelectionOutcome optcmdp_select(const ConfidenceState& conf,
                                std::span<const double> objective_cost,
                                std::span<const double> constraint_cost, double budget,
                                int initial_state);
SelectionOutcome ucrl_select(const ConfidenceState& conf,
                             std::span<const double> objective_cost, int initial_state);

} // namespace opsrl
