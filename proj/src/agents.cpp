#include "opsrl/agents.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace opsrl {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

Agent::Agent(AgentKind kind, int num_states, int num_actions, int horizon,
             int initial_state, std::vector<double> objective_cost,
             std::vector<double> constraint_cost, double budget,
             std::optional<Policy> baseline_policy, double baseline_value,
             std::optional<std::int64_t> fixed_k0)
    : kind_(kind),
      S_(num_states),
      A_(num_actions),
      H_(horizon),
      s1_(initial_state),
      objective_cost_(std::move(objective_cost)),
      constraint_cost_(std::move(constraint_cost)),
      budget_(budget),
      baseline_policy_(std::move(baseline_policy)),
      baseline_value_(baseline_value),
      fixed_k0_(fixed_k0) {
    if (kind_ == AgentKind::Opsrl || kind_ == AgentKind::FixedBaseline) {
        if (!baseline_policy_.has_value())
            throw std::invalid_argument("agent: baseline policy required");
        if (kind_ == AgentKind::Opsrl && !(baseline_value_ < budget_))
            throw std::invalid_argument(
                "agent: baseline value must be strictly below the budget");
    }
    if (kind_ != AgentKind::FixedBaseline)
        solver_.emplace(S_, A_, H_, s1_, kind_ != AgentKind::UcrlUnconstrained);
}

long long Agent::total_lp_pivots() const {
    return solver_ ? solver_->total_pivots() : 0;
}

SelectionOutcome Agent::baseline_outcome(SelectStatus status) const {
    SelectionOutcome out;
    out.policy = *baseline_policy_;
    out.used_baseline = true;
    out.lp_status = status;
    out.model_value_objective = kNan;
    out.model_value_constraint = kNan;
    return out;
}

SelectionOutcome Agent::select(const ConfidenceState& conf) {
    if (kind_ == AgentKind::FixedBaseline) return baseline_outcome(SelectStatus::Skipped);
    if (kind_ == AgentKind::Opsrl && fixed_k0_.has_value() &&
        conf.episode_index <= *fixed_k0_)
        return baseline_outcome(SelectStatus::Skipped);
    const std::vector<double> p_hat = empirical_model(conf);
    const BonusTable bonus = bonuses(conf);
    return select_with_model(p_hat, bonus, conf.episode_index);
}

SelectionOutcome Agent::select_with_model(std::span<const double> p_hat,
                                          const BonusTable& bonus, std::int64_t episode) {
    if (kind_ == AgentKind::FixedBaseline) return baseline_outcome(SelectStatus::Skipped);

    ExtendedProblem problem;
    problem.num_states = S_;
    problem.num_actions = A_;
    problem.horizon = H_;
    problem.initial_state = s1_;
    problem.p_hat = p_hat;
    problem.beta = bonus.beta;

    std::vector<double> transformed_objective, transformed_constraint;
    switch (kind_) {
    case AgentKind::Opsrl:
        transformed_objective =
            optimistic_cost(objective_cost_, bonus, H_, budget_, baseline_value_);
        transformed_constraint = pessimistic_cost(constraint_cost_, bonus, H_);
        problem.objective = transformed_objective;
        problem.budget_cost = transformed_constraint;
        problem.budget = budget_;
        break;
    case AgentKind::OptCmdp:
        problem.objective = objective_cost_;
        problem.budget_cost = constraint_cost_;
        problem.budget = budget_;
        break;
    case AgentKind::UcrlUnconstrained:
        problem.objective = objective_cost_;
        break;
    case AgentKind::FixedBaseline:
        break;
    }

    const ExtendedSolution sol = solver_->solve(problem);
    if (sol.status == LpStatus::Unbounded)
        throw std::runtime_error(
            "extended LP unbounded; the occupancy mass constraints should prevent this");
    if (sol.status == LpStatus::Infeasible) {
        if (kind_ == AgentKind::Opsrl) return baseline_outcome(SelectStatus::Infeasible);
        double min_cost = problem.budget_cost.empty() ? 0.0 : problem.budget_cost[0];
        for (double c : problem.budget_cost) min_cost = std::min(min_cost, c);
        throw std::runtime_error(
            "extended LP infeasible at episode " + std::to_string(episode) +
            " for an agent with no baseline fallback (budget " +
            std::to_string(budget_) + ", H * min cost " +
            std::to_string(H_ * min_cost) + ")");
    }

    ExtendedOccupancy z = extended_occupancy_from_values(sol.z, S_, A_, H_);
    SelectionOutcome out;
    out.extracted = extract_policy_model(z);
    out.policy = out.extracted->policy;
    out.used_baseline = false;
    out.lp_status = SelectStatus::Optimal;
    out.model_value_objective = sol.objective_value;
    out.model_value_constraint = sol.budget_value;
    if (kind_ == AgentKind::UcrlUnconstrained) {
        // No budget row was solved; report the selected pair's constraint
        // value under the original cost for diagnostics.
        double vc = 0.0;
        for (int j = 0; j < static_cast<int>(sol.z.size()); ++j) {
            const int sa = (j / S_) % (S_ * A_);
            vc += constraint_cost_[sa] * sol.z[j];
        }
        out.model_value_constraint = vc;
    }
    return out;
}

std::pair<Policy, double> make_baseline(const TabularCmdp& model, double target_value) {
    if (!(target_value > 0.0))
        throw std::invalid_argument("baseline target value must be positive");
    if (target_value > model.budget)
        throw std::invalid_argument("baseline target value must not exceed the budget");
    const PlanResult plan = plan_cmdp_with_budget(model, target_value);
    return {plan.policy, plan.constraint_value};
}

namespace {

Agent one_shot_agent(AgentKind kind, const ConfidenceState& conf,
                     std::span<const double> objective_cost,
                     std::span<const double> constraint_cost, double budget,
                     int initial_state, std::optional<Policy> baseline, double baseline_value,
                     std::optional<std::int64_t> fixed_k0) {
    return Agent(kind, conf.num_states, conf.num_actions, conf.horizon, initial_state,
                 std::vector<double>(objective_cost.begin(), objective_cost.end()),
                 std::vector<double>(constraint_cost.begin(), constraint_cost.end()),
                 budget, std::move(baseline), baseline_value, fixed_k0);
}

} // namespace

SelectionOutcome opsrl_select(const ConfidenceState& conf,
                              std::span<const double> objective_cost,
                              std::span<const double> constraint_cost, double budget,
                              double baseline_value, const Policy& baseline_policy,
                              int initial_state, std::optional<std::int64_t> fixed_k0) {
    Agent agent = one_shot_agent(AgentKind::Opsrl, conf, objective_cost, constraint_cost,
                                 budget, initial_state, baseline_policy, baseline_value,
                                 fixed_k0);
    return agent.select(conf);
}

SelectionOutcome optcmdp_select(const ConfidenceState& conf,
                                std::span<const double> objective_cost,
                                std::span<const double> constraint_cost, double budget,
                                int initial_state) {
    Agent agent = one_shot_agent(AgentKind::OptCmdp, conf, objective_cost, constraint_cost,
                                 budget, initial_state, {}, 0.0, {});
    return agent.select(conf);
}

SelectionOutcome ucrl_select(const ConfidenceState& conf,
                             std::span<const double> objective_cost, int initial_state) {
    const std::vector<double> dummy(objective_cost.size(), 0.0);
    Agent agent = one_shot_agent(AgentKind::UcrlUnconstrained, conf, objective_cost, dummy,
                                 0.0, initial_state, {}, 0.0, {});
    return agent.select(conf);
}

} // namespace opsrl
