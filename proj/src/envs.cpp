#include "opsrl/envs.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "opsrl/rng.hpp"

namespace opsrl {

TabularCmdp build_media(const MediaParams& params) {
    if (!(params.mu_slow >= 0.0 && params.mu_slow < params.mu_fast && params.mu_fast <= 1.0))
        throw std::invalid_argument("media: need 0 <= mu_slow < mu_fast <= 1");
    if (!(params.gamma >= 0.0 && params.gamma <= 1.0))
        throw std::invalid_argument("media: gamma must lie in [0,1]");
    if (params.buffer_cap < 1) throw std::invalid_argument("media: buffer_cap must be >= 1");

    const int S = params.buffer_cap + 1;
    const int A = 2; // 0 = slow service, 1 = fast service
    TabularCmdp model;
    model.num_states = S;
    model.num_actions = A;
    model.horizon = params.horizon;
    model.budget = params.budget_frac * params.horizon;
    model.initial_state = 0;
    model.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    model.objective_cost.assign(static_cast<std::size_t>(S) * A, 0.0);
    model.constraint_cost.assign(static_cast<std::size_t>(S) * A, 0.0);

    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double mu = (a == 1) ? params.mu_fast : params.mu_slow;
            // Enumerate the four (arrival, playback) outcomes.
            for (int arrival = 0; arrival <= 1; ++arrival) {
                for (int playback = 0; playback <= 1; ++playback) {
                    const double prob = (arrival ? mu : 1.0 - mu) *
                                        (playback ? params.gamma : 1.0 - params.gamma);
                    const int next =
                        std::min(std::max(0, s + arrival - playback), params.buffer_cap);
                    model.transition[model.sas(s, a, next)] += prob;
                }
            }
            model.objective_cost[model.sa(s, a)] = (s == 0) ? 1.0 : 0.0;
            model.constraint_cost[model.sa(s, a)] = (a == 1) ? 1.0 : 0.0;
        }
    }
    validate_model(model);
    return model;
}

TabularCmdp build_inventory(const InventoryParams& params,
                            InventoryNormalization* normalization) {
    const int N = params.capacity;
    const int S = N + 1;
    const int A = N + 1; // purchase amount; a > N - s is remapped to N - s
    const int D = 5;     // demand support {0..4}

    double weight_sum = 0.0;
    for (double w : params.demand_weights) weight_sum += w;
    if (!(weight_sum > 0.0)) throw std::invalid_argument("inventory: demand weights sum to 0");
    double demand_prob[D];
    for (int d = 0; d < D; ++d) demand_prob[d] = params.demand_weights[d] / weight_sum;

    // Raw tables first; effective action = min(a, N - s).
    std::vector<double> raw_revenue(static_cast<std::size_t>(S) * A, 0.0);
    std::vector<double> raw_cost(static_cast<std::size_t>(S) * A, 0.0);
    TabularCmdp model;
    model.num_states = S;
    model.num_actions = A;
    model.horizon = params.horizon;
    model.budget = params.budget_frac * params.horizon;
    model.initial_state = 0;
    model.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    model.objective_cost.assign(static_cast<std::size_t>(S) * A, 0.0);
    model.constraint_cost.assign(static_cast<std::size_t>(S) * A, 0.0);

    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const int eff = std::min(a, N - s);
            double expected_revenue = 0.0;
            for (int d = 0; d < D; ++d) {
                const int next = std::max(0, s + eff - d);
                model.transition[model.sas(s, a, next)] += demand_prob[d];
                if (next > 0)
                    expected_revenue +=
                        demand_prob[d] * params.revenue_unit * (s + eff - next);
            }
            raw_revenue[model.sa(s, a)] = expected_revenue;
            raw_cost[model.sa(s, a)] = params.purchase_fixed + params.purchase_var * eff +
                                       params.holding_coeff * s;
        }
    }

    // Min-max normalization over legal pairs (a <= N - s).
    double rev_min = raw_revenue[0], rev_max = raw_revenue[0];
    double cost_min = raw_cost[0], cost_max = raw_cost[0];
    bool first = true;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a <= N - s; ++a) {
            const double rev = raw_revenue[model.sa(s, a)];
            const double cost = raw_cost[model.sa(s, a)];
            if (first) {
                rev_min = rev_max = rev;
                cost_min = cost_max = cost;
                first = false;
            } else {
                rev_min = std::min(rev_min, rev);
                rev_max = std::max(rev_max, rev);
                cost_min = std::min(cost_min, cost);
                cost_max = std::max(cost_max, cost);
            }
        }
    }
    const double rev_span = rev_max > rev_min ? rev_max - rev_min : 1.0;
    const double cost_span = cost_max > cost_min ? cost_max - cost_min : 1.0;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double rev = (raw_revenue[model.sa(s, a)] - rev_min) / rev_span;
            const double cost = (raw_cost[model.sa(s, a)] - cost_min) / cost_span;
            model.objective_cost[model.sa(s, a)] = 1.0 - rev;
            model.constraint_cost[model.sa(s, a)] = cost;
        }
    }
    if (normalization) {
        normalization->revenue_min = rev_min;
        normalization->revenue_max = rev_max;
        normalization->cost_min = cost_min;
        normalization->cost_max = cost_max;
    }
    validate_model(model);
    return model;
}

TabularCmdp build_random(std::uint64_t seed, int num_states, int num_actions, int horizon,
                         double budget_frac) {
    if (num_states < 1 || num_actions < 1 || horizon < 1)
        throw std::invalid_argument("random model: dimensions must be >= 1");
    if (!(budget_frac > 0.0 && budget_frac <= 1.0))
        throw std::invalid_argument("random model: budget_frac must lie in (0,1]");
    Rng rng(seed);
    const int S = num_states, A = num_actions;
    TabularCmdp model;
    model.num_states = S;
    model.num_actions = A;
    model.horizon = horizon;
    model.budget = budget_frac * horizon;
    model.initial_state = 0;
    model.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    model.objective_cost.assign(static_cast<std::size_t>(S) * A, 0.0);
    model.constraint_cost.assign(static_cast<std::size_t>(S) * A, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double row_sum = 0.0;
            for (int t = 0; t < S; ++t) {
                const double u = rng.uniform01() + 1e-6; // keep rows strictly positive
                model.transition[model.sas(s, a, t)] = u;
                row_sum += u;
            }
            for (int t = 0; t < S; ++t) model.transition[model.sas(s, a, t)] /= row_sum;
            model.objective_cost[model.sa(s, a)] = rng.uniform01();
            model.constraint_cost[model.sa(s, a)] = rng.uniform01();
        }
    }
    validate_model(model);
    return model;
}

std::string model_to_text(const TabularCmdp& model) {
    std::ostringstream out;
    out << "states " << model.num_states << "\nactions " << model.num_actions << "\nhorizon "
        << model.horizon << "\nbudget " << model.budget << "\ninitial_state "
        << model.initial_state << "\n";
    for (int s = 0; s < model.num_states; ++s) {
        for (int a = 0; a < model.num_actions; ++a) {
            out << "P s=" << s << " a=" << a << " :";
            for (int t = 0; t < model.num_states; ++t) out << ' ' << model.p(s, a, t);
            out << "\n";
        }
    }
    out << "r :";
    for (double v : model.objective_cost) out << ' ' << v;
    out << "\nc :";
    for (double v : model.constraint_cost) out << ' ' << v;
    out << "\n";
    return out.str();
}

} // namespace opsrl
