#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace opsrl {

enum class Relation { LessEqual, Equal };

struct LpConstraint {
    std::vector<std::pair<int, double>> coeffs; // sparse (variable, weight)
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

/// Minimization LP over nonnegative variables. Constraints reference
/// variables by index; every variable has an implicit lower bound of 0.
struct LinearProgram {
    int num_vars = 0;
    std::vector<double> objective;
    std::vector<LpConstraint> constraints;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> values;
    double objective_value = 0.0;
};

/// Solves the LP with a dense two-phase simplex using Bland's rule, so the
/// pivot sequence (and therefore the returned vertex) is deterministic for
/// identical input. Infeasibility is declared when the phase-1 residual
/// exceeds 1e-7. Statuses are reported in the solution, never thrown.
LpSolution solve(const LinearProgram& lp);

/// Maximum constraint violation of `values` against the program, including
/// nonnegativity. Used by tests and internal post-solve checks.
double lp_residual(const LinearProgram& lp, const std::vector<double>& values);

/// Plain-text dump, one constraint per line in "coeff*var + ... <= rhs" form,
/// preceded by the objective. `namer` maps variable indices to names; the
/// default is x<i>.
std::string lp_to_text(const LinearProgram& lp,
                       const std::function<std::string(int)>& namer = {});

} // namespace opsrl
