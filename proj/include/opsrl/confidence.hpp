#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "opsrl/cmdp.hpp"

namespace opsrl {

/// Visit counts and the parameters of the Bernstein confidence sets.
/// L = log(2*S*A*H*K/delta) uses the planned episode budget K.
struct ConfidenceState {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::int64_t planned_episodes = 0; // K
    double delta = 0.0;
    std::int64_t episode_index = 1; // k, advances with each recorded episode
    std::vector<std::int64_t> pair_counts;   // n_k(s,a)
    std::vector<std::int64_t> triple_counts; // n_k(s,a,s')

    std::size_t sa(int s, int a) const {
        return static_cast<std::size_t>(s) * num_actions + a;
    }
    std::size_t sas(int s, int a, int t) const {
        return (static_cast<std::size_t>(s) * num_actions + a) * num_states + t;
    }
    double log_term() const; // L
};

ConfidenceState make_confidence_state(int num_states, int num_actions, int horizon,
                                      std::int64_t planned_episodes, double delta);

/// Per-transition Bernstein radii and their per-pair aggregates.
struct BonusTable {
    std::vector<double> beta;     // beta_k(s,a,s')
    std::vector<double> beta_bar; // sum over s'
};

/// Folds one episode into the counts. Every step with an observed successor
/// contributes a full (s,a,s') triple; a trace without the final successor
/// state contributes only to n(s,a) at the last step.
void update(ConfidenceState& state, const EpisodeTrace& trace);

/// P_hat_k(s'|s,a) = n(s,a,s') / max(n(s,a), 1); unvisited pairs give the
/// all-zero row.
std::vector<double> empirical_model(const ConfidenceState& state);

/// beta_k(s,a,s') = sqrt(4 Var(P_hat) L / max(n,1)) + 14 L / (3 max(n,1)),
/// with the plug-in variance P_hat (1 - P_hat).
BonusTable bonuses(const ConfidenceState& state);

/// c_k(s,a) = c(s,a) + H * beta_bar(s,a). Not clipped.
std::vector<double> pessimistic_cost(std::span<const double> constraint_cost,
                                     const BonusTable& bonus, int horizon);

/// r_k(s,a) = r(s,a) - (H^2 / (budget - baseline_value)) * beta_bar(s,a).
/// May be negative; throws unless baseline_value < budget.
std::vector<double> optimistic_cost(std::span<const double> objective_cost,
                                    const BonusTable& bonus, int horizon, double budget,
                                    double baseline_value);

/// epsilon_k^pi(P') = H * sum_h E[beta_bar(s^h,a^h)], evaluated exactly as
/// H * beta_bar . w_pi(P') through the occupancy measure.
double epsilon_diag(const ConfidenceState& state, const Policy& policy,
                    std::span<const double> transitions, int horizon, int initial_state);

/// Same diagnostic under a step-dependent transition stack (H tables), used
/// to audit plans extracted from the extended LP.
double epsilon_diag_nonstationary(const BonusTable& bonus, const Policy& policy,
                                  std::span<const double> transitions_per_step,
                                  int num_states, int num_actions, int horizon,
                                  int initial_state);

} // namespace opsrl
