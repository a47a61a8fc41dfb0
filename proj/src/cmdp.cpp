#include "opsrl/cmdp.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace opsrl {

namespace {

constexpr double kRowSumTol = 1e-9;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

} // namespace

void validate_model(const TabularCmdp& model) {
    const int S = model.num_states, A = model.num_actions, H = model.horizon;
    require(S >= 1 && A >= 1 && H >= 1, "model dimensions must be positive");
    require(model.initial_state >= 0 && model.initial_state < S, "initial state out of range");
    require(model.transition.size() == static_cast<std::size_t>(S) * A * S,
            "transition tensor has wrong size");
    require(model.objective_cost.size() == static_cast<std::size_t>(S) * A,
            "objective cost table has wrong size");
    require(model.constraint_cost.size() == static_cast<std::size_t>(S) * A,
            "constraint cost table has wrong size");
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double row_sum = 0.0;
            for (int t = 0; t < S; ++t) {
                const double p = model.p(s, a, t);
                require(p >= 0.0, "negative transition probability");
                row_sum += p;
            }
            require(std::abs(row_sum - 1.0) <= kRowSumTol,
                    "transition row does not sum to 1 at (s=" + std::to_string(s) +
                        ", a=" + std::to_string(a) + ")");
            const double r = model.objective_cost[model.sa(s, a)];
            const double c = model.constraint_cost[model.sa(s, a)];
            require(r >= 0.0 && r <= 1.0, "objective cost outside [0,1]");
            require(c >= 0.0 && c <= 1.0, "constraint cost outside [0,1]");
        }
    }
    require(model.budget > 0.0 && model.budget <= static_cast<double>(H),
            "budget must satisfy 0 < budget <= H");
}

void validate_policy(const TabularCmdp& model, const Policy& policy) {
    require(policy.horizon == model.horizon && policy.num_states == model.num_states &&
                policy.num_actions == model.num_actions,
            "policy dimensions do not match model");
    require(policy.probs.size() ==
                static_cast<std::size_t>(policy.horizon) * policy.num_states * policy.num_actions,
            "policy table has wrong size");
    for (int h = 0; h < policy.horizon; ++h) {
        for (int s = 0; s < policy.num_states; ++s) {
            double row_sum = 0.0;
            for (int a = 0; a < policy.num_actions; ++a) {
                const double p = policy.prob(h, s, a);
                require(p >= 0.0, "negative policy probability");
                row_sum += p;
            }
            require(std::abs(row_sum - 1.0) <= kRowSumTol,
                    "policy row does not sum to 1 at (h=" + std::to_string(h) +
                        ", s=" + std::to_string(s) + ")");
        }
    }
}

namespace {

ValueTable backward_recursion(int S, int A, int H, std::span<const double> transitions,
                              bool per_step_transitions, const Policy& policy,
                              std::span<const double> cost) {
    ValueTable table;
    table.horizon = H;
    table.num_states = S;
    table.v.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
    const std::size_t step_stride = static_cast<std::size_t>(S) * A * S;
    for (int h = H - 1; h >= 0; --h) {
        const double* p_step =
            transitions.data() + (per_step_transitions ? step_stride * h : 0);
        const double* v_next = table.v.data() + static_cast<std::size_t>(h + 1) * S;
        double* v_here = table.v.data() + static_cast<std::size_t>(h) * S;
        for (int s = 0; s < S; ++s) {
            double value = 0.0;
            for (int a = 0; a < A; ++a) {
                const double pi = policy.prob(h, s, a);
                if (pi == 0.0) continue;
                const double* row = p_step + (static_cast<std::size_t>(s) * A + a) * S;
                double q = cost[static_cast<std::size_t>(s) * A + a];
                for (int t = 0; t < S; ++t) q += row[t] * v_next[t];
                value += pi * q;
            }
            v_here[s] = value;
        }
    }
    return table;
}

OccupancyMeasure forward_recursion(int S, int A, int H, std::span<const double> transitions,
                                   bool per_step_transitions, const Policy& policy,
                                   int initial_state) {
    OccupancyMeasure occ;
    occ.horizon = H;
    occ.num_states = S;
    occ.num_actions = A;
    occ.w.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    std::vector<double> state_mass(S, 0.0);
    state_mass[initial_state] = 1.0;
    const std::size_t step_stride = static_cast<std::size_t>(S) * A * S;
    std::vector<double> next_mass(S);
    for (int h = 0; h < H; ++h) {
        double* w_step = occ.w.data() + static_cast<std::size_t>(h) * S * A;
        for (int s = 0; s < S; ++s) {
            const double m = state_mass[s];
            if (m == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                w_step[static_cast<std::size_t>(s) * A + a] = m * policy.prob(h, s, a);
            }
        }
        if (h + 1 == H) break;
        const double* p_step =
            transitions.data() + (per_step_transitions ? step_stride * h : 0);
        next_mass.assign(S, 0.0);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double mass = w_step[static_cast<std::size_t>(s) * A + a];
                if (mass == 0.0) continue;
                const double* row = p_step + (static_cast<std::size_t>(s) * A + a) * S;
                for (int t = 0; t < S; ++t) next_mass[t] += mass * row[t];
            }
        }
        state_mass.swap(next_mass);
    }
    return occ;
}

} // namespace

ValueTable evaluate_policy(const TabularCmdp& model, const Policy& policy,
                           std::span<const double> cost) {
    if (cost.size() != static_cast<std::size_t>(model.num_states) * model.num_actions)
        throw std::invalid_argument("cost table has wrong size");
    if (policy.horizon != model.horizon || policy.num_states != model.num_states ||
        policy.num_actions != model.num_actions)
        throw std::invalid_argument("policy dimensions do not match model");
    return backward_recursion(model.num_states, model.num_actions, model.horizon,
                              model.transition, false, policy, cost);
}

ValueTable evaluate_policy_nonstationary(int num_states, int num_actions, int horizon,
                                         std::span<const double> transitions_per_step,
                                         const Policy& policy,
                                         std::span<const double> cost) {
    if (transitions_per_step.size() !=
        static_cast<std::size_t>(horizon) * num_states * num_actions * num_states)
        throw std::invalid_argument("transition stack has wrong size");
    return backward_recursion(num_states, num_actions, horizon, transitions_per_step, true,
                              policy, cost);
}

double policy_value(const TabularCmdp& model, const Policy& policy,
                    std::span<const double> cost) {
    return evaluate_policy(model, policy, cost).at(0, model.initial_state);
}

OccupancyMeasure occupancy_of_policy(const TabularCmdp& model, const Policy& policy) {
    if (policy.horizon != model.horizon || policy.num_states != model.num_states ||
        policy.num_actions != model.num_actions)
        throw std::invalid_argument("policy dimensions do not match model");
    return forward_recursion(model.num_states, model.num_actions, model.horizon,
                             model.transition, false, policy, model.initial_state);
}

OccupancyMeasure occupancy_nonstationary(int num_states, int num_actions, int horizon,
                                         std::span<const double> transitions_per_step,
                                         const Policy& policy, int initial_state) {
    return forward_recursion(num_states, num_actions, horizon, transitions_per_step, true,
                             policy, initial_state);
}

Policy policy_from_occupancy(const OccupancyMeasure& occ) {
    Policy policy;
    policy.horizon = occ.horizon;
    policy.num_states = occ.num_states;
    policy.num_actions = occ.num_actions;
    policy.probs.assign(occ.w.size(), 0.0);
    const int A = occ.num_actions;
    for (int h = 0; h < occ.horizon; ++h) {
        for (int s = 0; s < occ.num_states; ++s) {
            double row_sum = 0.0;
            for (int a = 0; a < A; ++a) {
                const double mass = occ.w[occ.hsa(h, s, a)];
                if (mass < 0.0)
                    throw std::invalid_argument("occupancy measure has a negative entry");
                row_sum += mass;
            }
            if (row_sum > 0.0) {
                for (int a = 0; a < A; ++a)
                    policy.probs[policy.hsa(h, s, a)] = occ.w[occ.hsa(h, s, a)] / row_sum;
            } else {
                // Unvisited state: conditional is 0/0, take the uniform row.
                for (int a = 0; a < A; ++a)
                    policy.probs[policy.hsa(h, s, a)] = 1.0 / A;
            }
        }
    }
    return policy;
}

EpisodeTrace sample_episode(const TabularCmdp& model, const Policy& policy, Rng& rng) {
    EpisodeTrace trace;
    const int H = model.horizon, A = model.num_actions, S = model.num_states;
    trace.states.reserve(H + 1);
    trace.actions.reserve(H);
    trace.objective_costs.reserve(H);
    trace.constraint_costs.reserve(H);
    int state = model.initial_state;
    trace.states.push_back(state);
    for (int h = 0; h < H; ++h) {
        std::span<const double> action_row(policy.probs.data() + policy.hsa(h, state, 0), A);
        const int action = rng.categorical(action_row);
        std::span<const double> next_row(
            model.transition.data() + model.sas(state, action, 0), S);
        const int next_state = rng.categorical(next_row);
        trace.actions.push_back(action);
        trace.objective_costs.push_back(model.objective_cost[model.sa(state, action)]);
        trace.constraint_costs.push_back(model.constraint_cost[model.sa(state, action)]);
        trace.states.push_back(next_state);
        state = next_state;
    }
    return trace;
}

double value_difference_check(const TabularCmdp& model_a, const TabularCmdp& model_b,
                              const Policy& policy, std::span<const double> cost) {
    if (model_a.num_states != model_b.num_states ||
        model_a.num_actions != model_b.num_actions || model_a.horizon != model_b.horizon ||
        model_a.initial_state != model_b.initial_state)
        throw std::invalid_argument("models are not comparable");
    const int S = model_a.num_states, A = model_a.num_actions, H = model_a.horizon;
    const ValueTable v_a = evaluate_policy(model_a, policy, cost);
    const ValueTable v_b = evaluate_policy(model_b, policy, cost);
    const OccupancyMeasure w_b = occupancy_of_policy(model_b, policy);
    double expansion = 0.0;
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double mass = w_b.w[w_b.hsa(h, s, a)];
                if (mass == 0.0) continue;
                double dot = 0.0;
                for (int t = 0; t < S; ++t)
                    dot += (model_a.p(s, a, t) - model_b.p(s, a, t)) * v_a.at(h + 1, t);
                expansion += mass * dot;
            }
        }
    }
    const double lhs =
        v_a.at(0, model_a.initial_state) - v_b.at(0, model_b.initial_state);
    return std::abs(lhs - expansion);
}

double occupancy_constraint_residual(const TabularCmdp& model, const OccupancyMeasure& occ) {
    const int S = model.num_states, A = model.num_actions, H = model.horizon;
    double residual = 0.0;
    for (double mass : occ.w) residual = std::max(residual, -mass);
    for (int s = 0; s < S; ++s) {
        double first_row = 0.0;
        for (int a = 0; a < A; ++a) first_row += occ.w[occ.hsa(0, s, a)];
        const double target = (s == model.initial_state) ? 1.0 : 0.0;
        residual = std::max(residual, std::abs(first_row - target));
    }
    for (int h = 1; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            double out_mass = 0.0;
            for (int a = 0; a < A; ++a) out_mass += occ.w[occ.hsa(h, s, a)];
            double in_mass = 0.0;
            for (int sp = 0; sp < S; ++sp)
                for (int ap = 0; ap < A; ++ap)
                    in_mass += model.p(sp, ap, s) * occ.w[occ.hsa(h - 1, sp, ap)];
            residual = std::max(residual, std::abs(out_mass - in_mass));
        }
    }
    return residual;
}

double unconstrained_optimum(const TabularCmdp& model, std::span<const double> cost) {
    const int S = model.num_states, A = model.num_actions, H = model.horizon;
    std::vector<double> v_next(S, 0.0), v_here(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            double best = 0.0;
            for (int a = 0; a < A; ++a) {
                double q = cost[model.sa(s, a)];
                const double* row = model.transition.data() + model.sas(s, a, 0);
                for (int t = 0; t < S; ++t) q += row[t] * v_next[t];
                if (a == 0 || q < best) best = q;
            }
            v_here[s] = best;
        }
        v_next.swap(v_here);
    }
    return v_next[model.initial_state];
}

} // namespace opsrl
