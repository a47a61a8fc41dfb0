#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "opsrl/lp.hpp"

namespace opsrl {

/// Inputs of one extended-LP solve: empirical model, per-transition radii,
/// objective cost, and optionally a budget row. Costs are (S,A) tables; the
/// objective coefficient of z^h(s,a,s') is objective(s,a).
struct ExtendedProblem {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    int initial_state = 0;
    std::span<const double> p_hat;       // S*A*S
    std::span<const double> beta;        // S*A*S
    std::span<const double> objective;   // S*A
    std::span<const double> budget_cost; // S*A, empty => no budget row
    double budget = 0.0;
};

struct ExtendedSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> z; // H*S*A*S, populated when Optimal
    double objective_value = 0.0;
    double budget_value = 0.0; // budget row value at the optimum (0 if no row)
};

/// Revised-simplex engine for the extended occupancy LP. Confidence-box rows
/// are activated lazily when violated, the basis factorization exploits the
/// bordered block structure of the constraint matrix (box rows touch only
/// one (h,s,a) block; flow and budget rows couple blocks), and the basis is
/// kept across calls so successive solves with slowly drifting confidence
/// sets start from the previous optimum. All pivoting rules are
/// deterministic; a stall detector switches to Bland's rule.
///
/// The feasible set and optimum match the LP produced by build_extended_lp;
/// tests cross-check both paths.
class ExtendedLpSolver {
public:
    ExtendedLpSolver(int num_states, int num_actions, int horizon, int initial_state,
                     bool with_budget);
    ~ExtendedLpSolver();
    ExtendedLpSolver(ExtendedLpSolver&&) noexcept;
    ExtendedLpSolver& operator=(ExtendedLpSolver&&) noexcept;

    /// Solves one instance, warm-starting from the previous call when
    /// possible. The problem dimensions must match the constructor's.
    ExtendedSolution solve(const ExtendedProblem& problem);

    /// Cumulative pivot count, for diagnostics and performance tests.
    long long total_pivots() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience single-shot entry point (fresh solver per call).
ExtendedSolution solve_extended(const ExtendedProblem& problem);

} // namespace opsrl
