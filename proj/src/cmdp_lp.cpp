#include "opsrl/cmdp_lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace opsrl {

LinearProgram build_cmdp_lp(const TabularCmdp& model, std::span<const double> objective,
                            std::span<const double> constraint_cost, double budget) {
    const int S = model.num_states, A = model.num_actions, H = model.horizon;
    const auto var = [&](int h, int s, int a) {
        return (h * S + s) * A + a;
    };
    LinearProgram lp;
    lp.num_vars = H * S * A;
    lp.objective.assign(lp.num_vars, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                lp.objective[var(h, s, a)] = objective[model.sa(s, a)];

    LpConstraint budget_row;
    budget_row.relation = Relation::LessEqual;
    budget_row.rhs = budget;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double c = constraint_cost[model.sa(s, a)];
                if (c != 0.0) budget_row.coeffs.emplace_back(var(h, s, a), c);
            }
    lp.constraints.push_back(std::move(budget_row));

    for (int s = 0; s < S; ++s) {
        LpConstraint init_row;
        init_row.relation = Relation::Equal;
        init_row.rhs = (s == model.initial_state) ? 1.0 : 0.0;
        for (int a = 0; a < A; ++a) init_row.coeffs.emplace_back(var(0, s, a), 1.0);
        lp.constraints.push_back(std::move(init_row));
    }

    for (int h = 1; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            LpConstraint flow;
            flow.relation = Relation::Equal;
            flow.rhs = 0.0;
            for (int a = 0; a < A; ++a) flow.coeffs.emplace_back(var(h, s, a), 1.0);
            for (int sp = 0; sp < S; ++sp)
                for (int ap = 0; ap < A; ++ap) {
                    const double p = model.p(sp, ap, s);
                    if (p != 0.0) flow.coeffs.emplace_back(var(h - 1, sp, ap), -p);
                }
            lp.constraints.push_back(std::move(flow));
        }
    }
    return lp;
}

namespace {

PlanResult plan_from_solution(const TabularCmdp& model, const LpSolution& sol) {
    const int S = model.num_states, A = model.num_actions, H = model.horizon;
    OccupancyMeasure occ;
    occ.horizon = H;
    occ.num_states = S;
    occ.num_actions = A;
    occ.w = sol.values;
    for (double& mass : occ.w) {
        if (mass < 0.0) {
            if (mass < -1e-9) throw std::runtime_error("LP returned a negative occupancy");
            mass = 0.0;
        }
    }
    PlanResult result;
    result.policy = policy_from_occupancy(occ);
    result.occupancy = std::move(occ);
    result.value = policy_value(model, result.policy, model.objective_cost);
    result.constraint_value = policy_value(model, result.policy, model.constraint_cost);
    return result;
}

} // namespace

PlanResult plan_cmdp_with_budget(const TabularCmdp& model, double budget) {
    const LinearProgram lp =
        build_cmdp_lp(model, model.objective_cost, model.constraint_cost, budget);
    const LpSolution sol = solve(lp);
    if (sol.status == LpStatus::Infeasible)
        throw std::runtime_error("infeasible CMDP: no policy satisfies the budget");
    if (sol.status != LpStatus::Optimal)
        throw std::runtime_error("CMDP occupancy LP did not solve to optimality");
    return plan_from_solution(model, sol);
}

PlanResult plan_cmdp(const TabularCmdp& model) {
    return plan_cmdp_with_budget(model, model.budget);
}

LinearProgram build_extended_lp(std::span<const double> p_hat, std::span<const double> beta,
                                std::span<const double> objective,
                                std::span<const double> constraint_cost,
                                std::optional<double> budget, int num_states,
                                int num_actions, int horizon, int initial_state) {
    const int S = num_states, A = num_actions, H = horizon;
    const auto var = [&](int h, int s, int a, int t) {
        return ((h * S + s) * A + a) * S + t;
    };
    const auto sa = [&](int s, int a) { return s * A + a; };
    const auto sas = [&](int s, int a, int t) { return (s * A + a) * S + t; };

    LinearProgram lp;
    lp.num_vars = H * S * A * S;
    lp.objective.assign(lp.num_vars, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double r = objective[sa(s, a)];
                if (r == 0.0) continue;
                for (int t = 0; t < S; ++t) lp.objective[var(h, s, a, t)] = r;
            }

    if (budget.has_value()) {
        LpConstraint budget_row;
        budget_row.relation = Relation::LessEqual;
        budget_row.rhs = *budget;
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const double c = constraint_cost[sa(s, a)];
                    if (c == 0.0) continue;
                    for (int t = 0; t < S; ++t)
                        budget_row.coeffs.emplace_back(var(h, s, a, t), c);
                }
        lp.constraints.push_back(std::move(budget_row));
    }

    for (int s = 0; s < S; ++s) {
        LpConstraint init_row;
        init_row.relation = Relation::Equal;
        init_row.rhs = (s == initial_state) ? 1.0 : 0.0;
        for (int a = 0; a < A; ++a)
            for (int t = 0; t < S; ++t) init_row.coeffs.emplace_back(var(0, s, a, t), 1.0);
        lp.constraints.push_back(std::move(init_row));
    }

    for (int h = 1; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            LpConstraint flow;
            flow.relation = Relation::Equal;
            flow.rhs = 0.0;
            for (int a = 0; a < A; ++a)
                for (int t = 0; t < S; ++t) flow.coeffs.emplace_back(var(h, s, a, t), 1.0);
            for (int sp = 0; sp < S; ++sp)
                for (int ap = 0; ap < A; ++ap)
                    flow.coeffs.emplace_back(var(h - 1, sp, ap, s), -1.0);
            lp.constraints.push_back(std::move(flow));
        }
    }

    // Confidence-box rows, intersected with [0,1]: an upper row at 1 or a
    // lower row at 0 is implied by nonnegativity and is omitted.
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                for (int t = 0; t < S; ++t) {
                    const double center = p_hat[sas(s, a, t)];
                    const double radius = beta[sas(s, a, t)];
                    const double ub = std::min(1.0, center + radius);
                    const double lb = std::max(0.0, center - radius);
                    if (ub < 1.0) {
                        LpConstraint row;
                        row.relation = Relation::LessEqual;
                        row.rhs = 0.0;
                        for (int y = 0; y < S; ++y) {
                            const double coeff = (y == t ? 1.0 : 0.0) - ub;
                            if (coeff != 0.0) row.coeffs.emplace_back(var(h, s, a, y), coeff);
                        }
                        lp.constraints.push_back(std::move(row));
                    }
                    if (lb > 0.0) {
                        LpConstraint row;
                        row.relation = Relation::LessEqual;
                        row.rhs = 0.0;
                        for (int y = 0; y < S; ++y) {
                            const double coeff = (y == t ? -1.0 : 0.0) + lb;
                            if (coeff != 0.0) row.coeffs.emplace_back(var(h, s, a, y), coeff);
                        }
                        lp.constraints.push_back(std::move(row));
                    }
                }
            }
        }
    }
    return lp;
}

ExtendedOccupancy extended_occupancy_from_values(const std::vector<double>& values,
                                                 int num_states, int num_actions,
                                                 int horizon) {
    ExtendedOccupancy z;
    z.horizon = horizon;
    z.num_states = num_states;
    z.num_actions = num_actions;
    z.z = values;
    for (double& mass : z.z) {
        if (mass < 0.0) {
            if (mass < -1e-9)
                throw std::invalid_argument("extended occupancy has a negative entry");
            mass = 0.0;
        }
    }
    return z;
}

ExtractedPlan extract_policy_model(const ExtendedOccupancy& z) {
    const int S = z.num_states, A = z.num_actions, H = z.horizon;
    for (double mass : z.z)
        if (mass < -1e-9)
            throw std::invalid_argument("extended occupancy has a negative entry");

    ExtractedPlan plan;
    plan.policy.horizon = H;
    plan.policy.num_states = S;
    plan.policy.num_actions = A;
    plan.policy.probs.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    plan.transitions_per_step.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
    plan.transition_aggregate.assign(static_cast<std::size_t>(S) * A * S, 0.0);

    std::vector<double> aggregate_mass(static_cast<std::size_t>(S) * A, 0.0);
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            std::vector<double> block_mass(A, 0.0);
            double state_mass = 0.0;
            for (int a = 0; a < A; ++a) {
                double m = 0.0;
                for (int t = 0; t < S; ++t) m += std::max(0.0, z.z[z.idx(h, s, a, t)]);
                block_mass[a] = m;
                state_mass += m;
            }
            for (int a = 0; a < A; ++a) {
                const std::size_t pi_at = plan.policy.hsa(h, s, a);
                plan.policy.probs[pi_at] =
                    state_mass > 0.0 ? block_mass[a] / state_mass : 1.0 / A;
                double* p_row = plan.transitions_per_step.data() +
                                ((static_cast<std::size_t>(h) * S + s) * A + a) * S;
                if (block_mass[a] > 0.0) {
                    for (int t = 0; t < S; ++t)
                        p_row[t] = std::max(0.0, z.z[z.idx(h, s, a, t)]) / block_mass[a];
                } else {
                    for (int t = 0; t < S; ++t) p_row[t] = 1.0 / S;
                }
                aggregate_mass[static_cast<std::size_t>(s) * A + a] += block_mass[a];
                double* agg_row =
                    plan.transition_aggregate.data() + (static_cast<std::size_t>(s) * A + a) * S;
                for (int t = 0; t < S; ++t)
                    agg_row[t] += std::max(0.0, z.z[z.idx(h, s, a, t)]);
            }
        }
    }
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double m = aggregate_mass[static_cast<std::size_t>(s) * A + a];
            double* agg_row =
                plan.transition_aggregate.data() + (static_cast<std::size_t>(s) * A + a) * S;
            if (m > 0.0) {
                for (int t = 0; t < S; ++t) agg_row[t] /= m;
            } else {
                for (int t = 0; t < S; ++t) agg_row[t] = 1.0 / S;
            }
        }
    }
    return plan;
}

} // namespace opsrl
