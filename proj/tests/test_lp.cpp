#include "doctest.h"

#include <cmath>

#include "opsrl/cmdp_lp.hpp"
#include "opsrl/confidence.hpp"
#include "opsrl/envs.hpp"
#include "opsrl/extended_solver.hpp"
#include "opsrl/lp.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace opsrl;
using namespace opsrl::test;

TEST_CASE("simplex solves textbook one-variable programs") {
    SUBCASE("min x subject to x >= 3") {
        LinearProgram lp;
        lp.num_vars = 1;
        lp.objective = {1.0};
        lp.constraints.push_back({{{0, -1.0}}, Relation::LessEqual, -3.0});
        const LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.values[0] == doctest::Approx(3.0));
        CHECK(sol.objective_value == doctest::Approx(3.0));
    }
    SUBCASE("contradictory bounds are infeasible") {
        LinearProgram lp;
        lp.num_vars = 1;
        lp.objective = {1.0};
        lp.constraints.push_back({{{0, 1.0}}, Relation::LessEqual, 1.0});
        lp.constraints.push_back({{{0, -1.0}}, Relation::LessEqual, -2.0});
        CHECK(solve(lp).status == LpStatus::Infeasible);
    }
    SUBCASE("an uncapped improving ray is unbounded") {
        LinearProgram lp;
        lp.num_vars = 1;
        lp.objective = {-1.0};
        CHECK(solve(lp).status == LpStatus::Unbounded);
    }
}

TEST_CASE("solver determinism: identical input, identical solution vector") {
    const TabularCmdp m = build_random(31, 3, 2, 3, 1.0);
    const LinearProgram lp =
        build_cmdp_lp(m, m.objective_cost, m.constraint_cost, m.budget);
    const LpSolution a = solve(lp);
    const LpSolution b = solve(lp);
    REQUIRE(a.status == LpStatus::Optimal);
    REQUIRE(b.status == LpStatus::Optimal);
    CHECK(a.values == b.values);
}

TEST_CASE("degenerate single-chain CMDP LP") {
    TabularCmdp m;
    m.num_states = 1;
    m.num_actions = 1;
    m.horizon = 2;
    m.budget = 2.0;
    m.initial_state = 0;
    m.transition = {1.0};
    m.objective_cost = {0.3};
    m.constraint_cost = {0.1};
    const LinearProgram lp =
        build_cmdp_lp(m, m.objective_cost, m.constraint_cost, m.budget);
    CHECK(lp.num_vars == 2);
    const LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.values[0] == doctest::Approx(1.0));
    CHECK(sol.values[1] == doctest::Approx(1.0));
}

TEST_CASE("a vacuous budget reduces the CMDP to the unconstrained MDP") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TabularCmdp m = build_random(seed, 3, 3, 4, 1.0); // budget = H, c <= 1
        const PlanResult plan = plan_cmdp(m);
        const double dp = unconstrained_optimum(m, m.objective_cost);
        CHECK(plan.value == doctest::Approx(dp).epsilon(1e-7));
    }
}

TEST_CASE("an unreachable budget is reported infeasible") {
    // Both actions incur constraint cost 1 at every state, so V_c = H for
    // every policy; the two deterministic policies confirm min V_c = 2.
    TabularCmdp m;
    m.num_states = 2;
    m.num_actions = 2;
    m.horizon = 2;
    m.budget = 0.5;
    m.initial_state = 0;
    m.transition.assign(8, 0.0);
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) m.transition[m.sas(s, a, (s + a) % 2)] = 1.0;
    m.objective_cost = {0.1, 0.2, 0.3, 0.4};
    m.constraint_cost = {1.0, 1.0, 1.0, 1.0};
    for (int a0 = 0; a0 < 2; ++a0) {
        const Policy pi = deterministic_policy(2, 2, 2, [&](int, int) { return a0; });
        CHECK(policy_value(m, pi, m.constraint_cost) == doctest::Approx(2.0));
    }
    const LinearProgram lp =
        build_cmdp_lp(m, m.objective_cost, m.constraint_cost, m.budget);
    CHECK(solve(lp).status == LpStatus::Infeasible);
    CHECK_THROWS_AS(plan_cmdp(m), std::runtime_error);
}

TEST_CASE("planner beats every feasible policy from a random grid") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const TabularCmdp m = build_random(seed, 3, 2, 3, 0.7);
        PlanResult plan;
        try {
            plan = plan_cmdp(m);
        } catch (const std::runtime_error&) {
            continue; // infeasible random instance
        }
        CHECK(plan.constraint_value <= m.budget + 1e-6);
        Rng rng(seed + 555);
        for (int i = 0; i < 100; ++i) {
            const Policy candidate = grid_policy(rng, 3, 2, 3);
            const double vc = policy_value(m, candidate, m.constraint_cost);
            if (vc > m.budget) continue;
            const double vr = policy_value(m, candidate, m.objective_cost);
            CHECK(plan.value <= vr + 1e-7);
        }
    }
}

TEST_CASE("planner on the media environment respects its budget exactly") {
    MediaParams params;
    const TabularCmdp media = build_media(params);
    const PlanResult plan = plan_cmdp(media);
    CHECK(plan.constraint_value <= media.budget + 1e-6);
    // Optimum must use some fast service: all-slow is strictly worse.
    const Policy slow_only =
        deterministic_policy(media.num_states, 2, media.horizon, [](int, int) { return 0; });
    CHECK(plan.value < policy_value(media, slow_only, media.objective_cost));
}

TEST_CASE("two-state planner matches a fine policy-grid search") {
    const TabularCmdp m = build_random(97, 2, 2, 2, 0.6);
    PlanResult plan;
    try {
        plan = plan_cmdp(m);
    } catch (const std::runtime_error&) {
        return;
    }
    double best_feasible = 1e9;
    Rng rng(4242);
    for (int i = 0; i < 4000; ++i) {
        const Policy candidate = grid_policy(rng, 2, 2, 2);
        if (policy_value(m, candidate, m.constraint_cost) > m.budget) continue;
        best_feasible = std::min(best_feasible,
                                 policy_value(m, candidate, m.objective_cost));
    }
    CHECK(plan.value <= best_feasible + 0.02);
}

TEST_CASE("planner extraction reproduces the LP objective and constraint rows") {
    for (std::uint64_t seed = 11; seed <= 16; ++seed) {
        const TabularCmdp m = build_random(seed, 4, 2, 3, 0.8);
        const LinearProgram lp =
            build_cmdp_lp(m, m.objective_cost, m.constraint_cost, m.budget);
        const LpSolution sol = solve(lp);
        if (sol.status != LpStatus::Optimal) continue;
        const PlanResult plan = plan_cmdp(m);
        CHECK(std::abs(plan.value - sol.objective_value) < 1e-6);
        double lp_cons = 0.0;
        for (const auto& [var, weight] : lp.constraints[0].coeffs)
            lp_cons += weight * sol.values[var];
        CHECK(std::abs(plan.constraint_value - lp_cons) < 1e-6);
    }
}

namespace {

// Builds an extended LP instance from a model treated as the empirical
// center, with constant radii.
struct ExtendedFixture {
    std::vector<double> p_hat, beta;
    TabularCmdp model;
    explicit ExtendedFixture(const TabularCmdp& m, double radius) : model(m) {
        p_hat = m.transition;
        beta.assign(p_hat.size(), radius);
    }
    LinearProgram build(std::optional<double> budget) const {
        return build_extended_lp(p_hat, beta, model.objective_cost, model.constraint_cost,
                                 budget, model.num_states, model.num_actions,
                                 model.horizon, model.initial_state);
    }
    ExtendedProblem problem(bool with_budget) const {
        ExtendedProblem prob;
        prob.num_states = model.num_states;
        prob.num_actions = model.num_actions;
        prob.horizon = model.horizon;
        prob.initial_state = model.initial_state;
        prob.p_hat = p_hat;
        prob.beta = beta;
        prob.objective = model.objective_cost;
        if (with_budget) {
            prob.budget_cost = model.constraint_cost;
            prob.budget = model.budget;
        }
        return prob;
    }
};

} // namespace

TEST_CASE("zero-radius extended LP collapses to the known-model planner") {
    for (std::uint64_t seed = 21; seed <= 24; ++seed) {
        const TabularCmdp m = build_random(seed, 3, 2, 3, 0.8);
        const ExtendedFixture fx(m, 0.0);
        const LpSolution sol = solve(fx.build(m.budget));
        PlanResult plan;
        try {
            plan = plan_cmdp(m);
        } catch (const std::runtime_error&) {
            CHECK(sol.status == LpStatus::Infeasible);
            continue;
        }
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(std::abs(sol.objective_value - plan.value) < 1e-6);
    }
}

TEST_CASE("a full-width confidence set dominates planning on any model") {
    const TabularCmdp base = build_random(31, 3, 2, 3, 0.9);
    const ExtendedFixture fx(base, 1.0); // box covers [0,1] everywhere
    const LpSolution sol = solve(fx.build(base.budget));
    REQUIRE(sol.status == LpStatus::Optimal);
    for (std::uint64_t seed = 41; seed <= 43; ++seed) {
        TabularCmdp other = build_random(seed, 3, 2, 3, 0.9);
        other.objective_cost = base.objective_cost;
        other.constraint_cost = base.constraint_cost;
        other.budget = base.budget;
        try {
            const PlanResult plan = plan_cmdp(other);
            CHECK(sol.objective_value <= plan.value + 1e-6);
        } catch (const std::runtime_error&) {
        }
    }
}

TEST_CASE("an unvisited pair keeps the extended LP feasible") {
    // Two states, pair (1, a) never visited: empirical row is zero and the
    // radius is the zero-count value 14L/3.
    const int S = 2, A = 2, H = 3;
    ConfidenceState conf = make_confidence_state(S, A, H, 100, 0.1);
    // Visits recorded only at state 0.
    EpisodeTrace trace;
    trace.states = {0, 0, 0, 0};
    trace.actions = {0, 1, 0};
    trace.objective_costs = trace.constraint_costs = {0.0, 0.0, 0.0};
    update(conf, trace);
    const std::vector<double> p_hat = empirical_model(conf);
    const BonusTable bonus = bonuses(conf);
    for (int t = 0; t < S; ++t) {
        CHECK(p_hat[conf.sas(1, 0, t)] == 0.0);
        CHECK(bonus.beta[conf.sas(1, 0, t)] ==
              doctest::Approx(14.0 * conf.log_term() / 3.0));
    }
    const std::vector<double> r = {0.2, 0.4, 0.6, 0.8};
    const std::vector<double> c = {0.0, 1.0, 0.0, 1.0};
    const LinearProgram lp = build_extended_lp(p_hat, bonus.beta, r, c, 3.0, S, A, H, 0);
    CHECK(solve(lp).status == LpStatus::Optimal);
}

TEST_CASE("extraction inverts the z construction") {
    const TabularCmdp m = build_random(51, 3, 2, 4, 0.5);
    const Policy pi = random_policy(52, 3, 2, 4);
    const OccupancyMeasure w = occupancy_of_policy(m, pi);
    ExtendedOccupancy z;
    z.horizon = 4;
    z.num_states = 3;
    z.num_actions = 2;
    z.z.assign(w.w.size() * 3, 0.0);
    for (int h = 0; h < 4; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a)
                for (int t = 0; t < 3; ++t)
                    z.z[z.idx(h, s, a, t)] = w.w[w.hsa(h, s, a)] * m.p(s, a, t);
    const ExtractedPlan plan = extract_policy_model(z);
    // Rows with zero occupancy extract as uniform by design; only visited
    // rows must reproduce the generating pair.
    for (int h = 0; h < 4; ++h)
        for (int s = 0; s < 3; ++s) {
            double state_mass = 0.0;
            for (int a = 0; a < 2; ++a) state_mass += w.w[w.hsa(h, s, a)];
            if (state_mass < 1e-12) continue;
            for (int a = 0; a < 2; ++a) {
                CHECK(std::abs(plan.policy.prob(h, s, a) - pi.prob(h, s, a)) < 1e-8);
                if (w.w[w.hsa(h, s, a)] < 1e-12) continue;
                for (int t = 0; t < 3; ++t) {
                    const double got =
                        plan.transitions_per_step[((static_cast<std::size_t>(h) * 3 + s) * 2 +
                                                   a) * 3 + t];
                    CHECK(std::abs(got - m.p(s, a, t)) < 1e-8);
                    CHECK(std::abs(plan.transition_aggregate[m.sas(s, a, t)] -
                                   m.p(s, a, t)) < 1e-8);
                }
            }
        }
}

TEST_CASE("all-zero blocks extract uniform rows") {
    ExtendedOccupancy z;
    z.horizon = 1;
    z.num_states = 2;
    z.num_actions = 2;
    z.z.assign(8, 0.0);
    z.z[z.idx(0, 0, 0, 1)] = 1.0;
    const ExtractedPlan plan = extract_policy_model(z);
    CHECK(plan.policy.prob(0, 1, 0) == doctest::Approx(0.5));
    CHECK(plan.policy.prob(0, 1, 1) == doctest::Approx(0.5));
    const double* row = plan.transitions_per_step.data() + ((0 * 2 + 1) * 2 + 1) * 2;
    CHECK(row[0] == doctest::Approx(0.5));
    CHECK(row[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(extract_policy_model(ExtendedOccupancy{1, 1, 1, {-1e-3}}),
                    std::invalid_argument);
}

TEST_CASE("extended solution re-evaluates to its LP objective at zero radius") {
    const TabularCmdp m = build_random(61, 3, 2, 3, 0.9);
    const ExtendedFixture fx(m, 0.0);
    const LpSolution sol = solve(fx.build(m.budget));
    if (sol.status != LpStatus::Optimal) return;
    const ExtendedOccupancy z = extended_occupancy_from_values(sol.values, 3, 2, 3);
    const ExtractedPlan plan = extract_policy_model(z);
    const ValueTable v = evaluate_policy_nonstationary(3, 2, 3, plan.transitions_per_step,
                                                       plan.policy, m.objective_cost);
    CHECK(std::abs(v.at(0, m.initial_state) - sol.objective_value) < 1e-6);
}

TEST_CASE("the true occupancy is feasible when the box contains the truth") {
    const TabularCmdp m = build_random(71, 3, 2, 3, 0.8);
    const Policy pi = random_policy(72, 3, 2, 3);
    const OccupancyMeasure w = occupancy_of_policy(m, pi);
    // Center the box on a perturbed copy but keep the radius large enough to
    // contain the true kernel.
    std::vector<double> p_hat = build_random(73, 3, 2, 3, 0.8).transition;
    std::vector<double> beta(p_hat.size());
    for (std::size_t i = 0; i < beta.size(); ++i)
        beta[i] = std::abs(p_hat[i] - m.transition[i]) + 1e-9;
    const double vc = policy_value(m, pi, m.constraint_cost);
    const LinearProgram lp =
        build_extended_lp(p_hat, beta, m.objective_cost, m.constraint_cost, vc + 1e-9, 3,
                          2, 3, m.initial_state);
    std::vector<double> z_true(lp.num_vars, 0.0);
    for (int h = 0; h < 3; ++h)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a)
                for (int t = 0; t < 3; ++t)
                    z_true[((h * 3 + s) * 2 + a) * 3 + t] =
                        w.w[w.hsa(h, s, a)] * m.p(s, a, t);
    CHECK(lp_residual(lp, z_true) <= 1e-7);
}

TEST_CASE("shrinking radii never improves the extended optimum") {
    const TabularCmdp m = build_random(81, 3, 2, 3, 0.9);
    ExtendedFixture wide(m, 0.3);
    ExtendedFixture narrow(m, 0.15);
    const LpSolution sol_wide = solve(wide.build(m.budget));
    const LpSolution sol_narrow = solve(narrow.build(m.budget));
    REQUIRE(sol_wide.status == LpStatus::Optimal);
    REQUIRE(sol_narrow.status == LpStatus::Optimal);
    CHECK(sol_wide.objective_value <= sol_narrow.objective_value + 1e-9);
}

TEST_CASE("lp_to_text renders constraints one per line") {
    LinearProgram lp;
    lp.num_vars = 2;
    lp.objective = {1.0, 0.0};
    lp.constraints.push_back({{{0, 2.0}, {1, -1.0}}, Relation::LessEqual, 3.0});
    lp.constraints.push_back({{{1, 1.0}}, Relation::Equal, 1.0});
    const std::string text = lp_to_text(lp);
    CHECK(text == "min: 1*x0\n2*x0 + -1*x1 <= 3\n1*x1 = 1\n");
}

// ---------------------------------------------------------------------------
// Structured engine versus the reference dense solver.
// ---------------------------------------------------------------------------

TEST_CASE("extended engine matches the reference solver on random instances") {
    for (std::uint64_t seed = 101; seed <= 118; ++seed) {
        const int S = 2 + static_cast<int>(seed % 3);
        const int A = 2 + static_cast<int>(seed % 2);
        const int H = 2 + static_cast<int>(seed % 3);
        const TabularCmdp m = build_random(seed, S, A, H, 0.5 + 0.1 * (seed % 4));
        const double radius = (seed % 5) * 0.05; // includes exact zero
        const ExtendedFixture fx(m, radius);
        const bool with_budget = seed % 3 != 0;
        const LpSolution ref =
            solve(fx.build(with_budget ? std::optional<double>(m.budget) : std::nullopt));
        const ExtendedSolution eng = solve_extended(fx.problem(with_budget));
        REQUIRE(eng.status == ref.status);
        if (ref.status != LpStatus::Optimal) continue;
        CHECK(std::abs(eng.objective_value - ref.objective_value) < 1e-6);
        // The engine's z must be feasible for the full reference LP and carry
        // unit mass per step.
        const LinearProgram full =
            fx.build(with_budget ? std::optional<double>(m.budget) : std::nullopt);
        CHECK(lp_residual(full, eng.z) < 1e-6);
        for (int h = 0; h < H; ++h) {
            double mass = 0.0;
            const std::size_t step = static_cast<std::size_t>(S) * A * S;
            for (std::size_t i = 0; i < step; ++i) mass += eng.z[step * h + i];
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-7));
        }
    }
}

TEST_CASE("extended engine warm start stays consistent across perturbed solves") {
    const int S = 3, A = 2, H = 3;
    const TabularCmdp m = build_random(301, S, A, H, 0.7);
    ExtendedLpSolver warm(S, A, H, m.initial_state, true);
    Rng rng(777);
    for (int step = 0; step < 12; ++step) {
        ExtendedFixture fx(m, 0.02 + 0.03 * (step % 4));
        // Drift the center slightly and renormalize rows.
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double sum = 0.0;
                for (int t = 0; t < S; ++t) {
                    auto& v = fx.p_hat[(static_cast<std::size_t>(s) * A + a) * S + t];
                    v = std::max(1e-6, v + 0.05 * (rng.uniform01() - 0.5));
                    sum += v;
                }
                for (int t = 0; t < S; ++t)
                    fx.p_hat[(static_cast<std::size_t>(s) * A + a) * S + t] /= sum;
            }
        const ExtendedSolution warm_sol = warm.solve(fx.problem(true));
        const ExtendedSolution cold_sol = solve_extended(fx.problem(true));
        REQUIRE(warm_sol.status == cold_sol.status);
        if (warm_sol.status == LpStatus::Optimal)
            CHECK(std::abs(warm_sol.objective_value - cold_sol.objective_value) < 1e-6);
    }
}

TEST_CASE("extended engine agrees with the box backward-induction oracle") {
    // Without a budget row the extended LP is plain optimistic planning,
    // which backward induction over the box solves independently.
    for (std::uint64_t seed = 201; seed <= 210; ++seed) {
        const int S = 2 + static_cast<int>(seed % 3);
        const TabularCmdp m = build_random(seed, S, 2, 3, 0.8);
        const double radius = 0.05 * (seed % 4);
        const ExtendedFixture fx(m, radius);
        const ExtendedSolution eng = solve_extended(fx.problem(false));
        REQUIRE(eng.status == LpStatus::Optimal);
        const double oracle =
            box_min_value(S, 2, 3, fx.p_hat, fx.beta, m.objective_cost, m.initial_state);
        CHECK(eng.objective_value == doctest::Approx(oracle).epsilon(1e-7));
    }
}

TEST_CASE("warm engine tracks the reference along a real learning trajectory") {
    // Drive an optimistic agent for 60 episodes on a small model and
    // cross-check the warm-started engine against a fresh reference solve of
    // the full LP at every episode.
    const int S = 3, A = 2, H = 3;
    const TabularCmdp m = build_random(501, S, A, H, 0.8);
    ExtendedLpSolver warm(S, A, H, m.initial_state, true);
    ConfidenceState conf = make_confidence_state(S, A, H, 60, 0.1);
    Rng rng(606);
    for (int k = 1; k <= 60; ++k) {
        const std::vector<double> p_hat = empirical_model(conf);
        const BonusTable bonus = bonuses(conf);
        ExtendedProblem prob;
        prob.num_states = S;
        prob.num_actions = A;
        prob.horizon = H;
        prob.initial_state = m.initial_state;
        prob.p_hat = p_hat;
        prob.beta = bonus.beta;
        prob.objective = m.objective_cost;
        prob.budget_cost = m.constraint_cost;
        prob.budget = m.budget;
        const ExtendedSolution eng = warm.solve(prob);
        const LinearProgram full =
            build_extended_lp(p_hat, bonus.beta, m.objective_cost, m.constraint_cost,
                              m.budget, S, A, H, m.initial_state);
        const LpSolution ref = solve(full);
        REQUIRE(eng.status == ref.status);
        Policy next = uniform_policy(S, A, H);
        if (eng.status == LpStatus::Optimal) {
            CHECK(std::abs(eng.objective_value - ref.objective_value) < 1e-6);
            CHECK(lp_residual(full, eng.z) < 1e-6);
            next = extract_policy_model(extended_occupancy_from_values(eng.z, S, A, H))
                       .policy;
        }
        update(conf, sample_episode(m, next, rng));
    }
}

TEST_CASE("quick infeasibility bound fires without a solve") {
    const int S = 2, A = 2, H = 4;
    const TabularCmdp m = build_random(401, S, A, H, 0.5);
    ExtendedFixture fx(m, 0.1);
    ExtendedProblem prob = fx.problem(true);
    // Every pair costs at least 0.9 per step but the budget only allows 0.5*H.
    std::vector<double> expensive(static_cast<std::size_t>(S) * A, 0.9);
    prob.budget_cost = expensive;
    prob.budget = 2.0;
    ExtendedLpSolver solver(S, A, H, m.initial_state, true);
    CHECK(solver.solve(prob).status == LpStatus::Infeasible);
    CHECK(solver.total_pivots() == 0);
}
