#include "opsrl/confidence.hpp"

#include <cmath>
#include <stdexcept>

namespace opsrl {

double ConfidenceState::log_term() const {
    return std::log(2.0 * num_states * num_actions * horizon *
                    static_cast<double>(planned_episodes) / delta);
}

ConfidenceState make_confidence_state(int num_states, int num_actions, int horizon,
                                      std::int64_t planned_episodes, double delta) {
    if (num_states < 1 || num_actions < 1 || horizon < 1 || planned_episodes < 1)
        throw std::invalid_argument("confidence state: dimensions must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("confidence state: delta must lie in (0,1)");
    ConfidenceState state;
    state.num_states = num_states;
    state.num_actions = num_actions;
    state.horizon = horizon;
    state.planned_episodes = planned_episodes;
    state.delta = delta;
    state.pair_counts.assign(static_cast<std::size_t>(num_states) * num_actions, 0);
    state.triple_counts.assign(
        static_cast<std::size_t>(num_states) * num_actions * num_states, 0);
    if (!(state.log_term() > 0.0))
        throw std::invalid_argument("confidence state: log term is not positive");
    return state;
}

void update(ConfidenceState& state, const EpisodeTrace& trace) {
    const std::size_t steps = trace.actions.size();
    if (steps != static_cast<std::size_t>(state.horizon))
        throw std::invalid_argument("trace length does not match horizon");
    const bool has_final_successor = trace.states.size() == steps + 1;
    if (!has_final_successor && trace.states.size() != steps)
        throw std::invalid_argument("trace states/actions lengths are inconsistent");
    for (std::size_t h = 0; h < steps; ++h) {
        const int s = trace.states[h];
        const int a = trace.actions[h];
        state.pair_counts[state.sa(s, a)] += 1;
        if (h + 1 < trace.states.size())
            state.triple_counts[state.sas(s, a, trace.states[h + 1])] += 1;
    }
    state.episode_index += 1;
}

std::vector<double> empirical_model(const ConfidenceState& state) {
    const int S = state.num_states, A = state.num_actions;
    std::vector<double> p_hat(static_cast<std::size_t>(S) * A * S, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double denom =
                static_cast<double>(std::max<std::int64_t>(state.pair_counts[state.sa(s, a)], 1));
            for (int t = 0; t < S; ++t)
                p_hat[state.sas(s, a, t)] =
                    static_cast<double>(state.triple_counts[state.sas(s, a, t)]) / denom;
        }
    }
    return p_hat;
}

BonusTable bonuses(const ConfidenceState& state) {
    const int S = state.num_states, A = state.num_actions;
    const double L = state.log_term();
    BonusTable table;
    table.beta.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    table.beta_bar.assign(static_cast<std::size_t>(S) * A, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double n =
                static_cast<double>(std::max<std::int64_t>(state.pair_counts[state.sa(s, a)], 1));
            const double denom =
                static_cast<double>(std::max<std::int64_t>(state.pair_counts[state.sa(s, a)], 1));
            double bar = 0.0;
            for (int t = 0; t < S; ++t) {
                const double p_hat =
                    static_cast<double>(state.triple_counts[state.sas(s, a, t)]) / denom;
                const double variance = p_hat * (1.0 - p_hat);
                const double radius =
                    std::sqrt(4.0 * variance * L / n) + 14.0 * L / (3.0 * n);
                table.beta[state.sas(s, a, t)] = radius;
                bar += radius;
            }
            table.beta_bar[state.sa(s, a)] = bar;
        }
    }
    return table;
}

std::vector<double> pessimistic_cost(std::span<const double> constraint_cost,
                                     const BonusTable& bonus, int horizon) {
    std::vector<double> cost(constraint_cost.begin(), constraint_cost.end());
    for (std::size_t i = 0; i < cost.size(); ++i)
        cost[i] += horizon * bonus.beta_bar[i];
    return cost;
}

std::vector<double> optimistic_cost(std::span<const double> objective_cost,
                                    const BonusTable& bonus, int horizon, double budget,
                                    double baseline_value) {
    if (!(baseline_value < budget))
        throw std::invalid_argument("optimistic cost requires baseline value < budget");
    const double scale = static_cast<double>(horizon) * horizon / (budget - baseline_value);
    std::vector<double> cost(objective_cost.begin(), objective_cost.end());
    for (std::size_t i = 0; i < cost.size(); ++i)
        cost[i] -= scale * bonus.beta_bar[i];
    return cost;
}

namespace {

double epsilon_from_occupancy(const BonusTable& bonus, const OccupancyMeasure& occ,
                              int horizon) {
    double total = 0.0;
    for (int h = 0; h < occ.horizon; ++h)
        for (int s = 0; s < occ.num_states; ++s)
            for (int a = 0; a < occ.num_actions; ++a)
                total += occ.w[occ.hsa(h, s, a)] *
                         bonus.beta_bar[static_cast<std::size_t>(s) * occ.num_actions + a];
    return horizon * total;
}

} // namespace

double epsilon_diag(const ConfidenceState& state, const Policy& policy,
                    std::span<const double> transitions, int horizon, int initial_state) {
    if (transitions.size() !=
        static_cast<std::size_t>(state.num_states) * state.num_actions * state.num_states)
        throw std::invalid_argument("epsilon_diag: transition table has wrong size");
    const BonusTable bonus = bonuses(state);
    TabularCmdp shell;
    shell.num_states = state.num_states;
    shell.num_actions = state.num_actions;
    shell.horizon = horizon;
    shell.transition.assign(transitions.begin(), transitions.end());
    shell.initial_state = initial_state;
    const OccupancyMeasure occ = occupancy_of_policy(shell, policy);
    return epsilon_from_occupancy(bonus, occ, horizon);
}

double epsilon_diag_nonstationary(const BonusTable& bonus, const Policy& policy,
                                  std::span<const double> transitions_per_step,
                                  int num_states, int num_actions, int horizon,
                                  int initial_state) {
    const OccupancyMeasure occ = occupancy_nonstationary(
        num_states, num_actions, horizon, transitions_per_step, policy, initial_state);
    return epsilon_from_occupancy(bonus, occ, horizon);
}

} // namespace opsrl
