#include "opsrl/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace opsrl {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;

// Dense two-phase tableau simplex. Row layout: m constraint rows, then the
// phase-2 cost row, then the phase-1 cost row. Column layout: structural
// variables, slack/surplus variables, artificial variables, rhs.
class DenseSimplex {
public:
    explicit DenseSimplex(const LinearProgram& lp) : lp_(lp) { build(); }

    LpSolution run() {
        if (!phase1()) return {LpStatus::Infeasible, {}, 0.0};
        if (!phase2()) return {LpStatus::Unbounded, {}, 0.0};
        LpSolution sol;
        sol.status = LpStatus::Optimal;
        sol.values.assign(lp_.num_vars, 0.0);
        for (int i = 0; i < m_; ++i) {
            if (row_dropped_[i]) continue;
            if (basis_[i] < lp_.num_vars) sol.values[basis_[i]] = rhs(i);
        }
        double obj = 0.0;
        for (int j = 0; j < lp_.num_vars; ++j) obj += lp_.objective[j] * sol.values[j];
        sol.objective_value = obj;
        return sol;
    }

private:
    const LinearProgram& lp_;
    int m_ = 0;
    int total_cols_ = 0; // excluding rhs
    int art_begin_ = 0;  // first artificial column
    std::vector<double> tab_;
    std::vector<int> basis_;
    std::vector<char> row_dropped_;
    std::vector<double> cost2_; // phase-2 reduced cost row
    std::vector<double> cost1_; // phase-1 reduced cost row

    double& at(int i, int j) { return tab_[static_cast<std::size_t>(i) * (total_cols_ + 1) + j]; }
    double& rhs(int i) { return tab_[static_cast<std::size_t>(i) * (total_cols_ + 1) + total_cols_]; }

    void build() {
        m_ = static_cast<int>(lp_.constraints.size());
        int n_slack = 0;
        for (const auto& con : lp_.constraints)
            if (con.relation == Relation::LessEqual) ++n_slack;
        // Worst case every row also needs an artificial.
        const int slack_begin = lp_.num_vars;
        art_begin_ = slack_begin + n_slack;
        total_cols_ = art_begin_ + m_;
        tab_.assign(static_cast<std::size_t>(m_) * (total_cols_ + 1), 0.0);
        basis_.assign(m_, -1);
        row_dropped_.assign(m_, 0);
        cost1_.assign(total_cols_ + 1, 0.0);
        cost2_.assign(total_cols_ + 1, 0.0);

        int slack_idx = slack_begin;
        int art_idx = art_begin_;
        for (int i = 0; i < m_; ++i) {
            const auto& con = lp_.constraints[i];
            const double sign = con.rhs < 0.0 ? -1.0 : 1.0;
            for (const auto& [var, weight] : con.coeffs) at(i, var) += sign * weight;
            rhs(i) = sign * con.rhs;
            bool has_basic = false;
            if (con.relation == Relation::LessEqual) {
                at(i, slack_idx) = sign; // surplus when the row was flipped
                if (sign > 0.0) {
                    basis_[i] = slack_idx;
                    has_basic = true;
                }
                ++slack_idx;
            }
            if (!has_basic) {
                at(i, art_idx) = 1.0;
                basis_[i] = art_idx;
                cost1_[art_idx] = 1.0;
                ++art_idx;
            }
        }
        for (int j = 0; j < lp_.num_vars; ++j) cost2_[j] = lp_.objective[j];
        // Price out the initial basis from both cost rows.
        for (int i = 0; i < m_; ++i) price_out(i);
    }

    void price_out(int i) {
        const int b = basis_[i];
        for (auto* cost : {&cost1_, &cost2_}) {
            const double cb = (*cost)[b];
            if (cb == 0.0) continue;
            for (int j = 0; j <= total_cols_; ++j) (*cost)[j] -= cb * at(i, j);
        }
    }

    void pivot(int row, int col) {
        const double inv = 1.0 / at(row, col);
        for (int j = 0; j <= total_cols_; ++j) at(row, j) *= inv;
        at(row, col) = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == row || row_dropped_[i]) continue;
            const double factor = at(i, col);
            if (factor == 0.0) continue;
            for (int j = 0; j <= total_cols_; ++j) at(i, j) -= factor * at(row, j);
            at(i, col) = 0.0;
        }
        for (auto* cost : {&cost1_, &cost2_}) {
            const double factor = (*cost)[col];
            if (factor == 0.0) continue;
            for (int j = 0; j <= total_cols_; ++j) (*cost)[j] -= factor * at(row, j);
            (*cost)[col] = 0.0;
        }
        basis_[row] = col;
    }

    // Bland's rule: entering column is the lowest index with a negative
    // reduced cost; the leaving row breaks ratio ties by the lowest basic
    // variable index. Guarantees termination under degeneracy.
    bool iterate(const std::vector<double>& cost, int col_limit) {
        while (true) {
            int entering = -1;
            for (int j = 0; j < col_limit; ++j) {
                if (cost[j] < -kPivotTol) {
                    entering = j;
                    break;
                }
            }
            if (entering < 0) return true; // optimal for this phase
            int leaving = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m_; ++i) {
                if (row_dropped_[i]) continue;
                const double a = at(i, entering);
                if (a <= kPivotTol) continue;
                const double ratio = rhs(i) / a;
                if (ratio < best_ratio - kPivotTol) {
                    best_ratio = ratio;
                    leaving = i;
                } else if (ratio < best_ratio + kPivotTol &&
                           (leaving < 0 || basis_[i] < basis_[leaving])) {
                    best_ratio = std::min(best_ratio, ratio);
                    leaving = i;
                }
            }
            if (leaving < 0) return false; // unbounded direction
            pivot(leaving, entering);
        }
    }

    bool phase1() {
        bool any_artificial = false;
        for (int i = 0; i < m_; ++i) any_artificial |= basis_[i] >= art_begin_;
        if (any_artificial) {
            iterate(cost1_, total_cols_);
            if (-cost1_[total_cols_] > kFeasTol) return false;
            // Drive zero-level artificials out of the basis; rows with no
            // eligible pivot are redundant and get dropped.
            for (int i = 0; i < m_; ++i) {
                if (row_dropped_[i] || basis_[i] < art_begin_) continue;
                int col = -1;
                for (int j = 0; j < art_begin_; ++j) {
                    if (std::abs(at(i, j)) > kPivotTol) {
                        col = j;
                        break;
                    }
                }
                if (col >= 0) {
                    pivot(i, col);
                } else {
                    row_dropped_[i] = 1;
                }
            }
        }
        return true;
    }

    bool phase2() { return iterate(cost2_, art_begin_); }
};

} // namespace

LpSolution solve(const LinearProgram& lp) {
    DenseSimplex simplex(lp);
    return simplex.run();
}

double lp_residual(const LinearProgram& lp, const std::vector<double>& values) {
    double residual = 0.0;
    for (double v : values) residual = std::max(residual, -v);
    for (const auto& con : lp.constraints) {
        double lhs = 0.0;
        for (const auto& [var, weight] : con.coeffs) lhs += weight * values[var];
        if (con.relation == Relation::Equal)
            residual = std::max(residual, std::abs(lhs - con.rhs));
        else
            residual = std::max(residual, lhs - con.rhs);
    }
    return residual;
}

std::string lp_to_text(const LinearProgram& lp,
                       const std::function<std::string(int)>& namer) {
    const auto name = [&](int j) { return namer ? namer(j) : "x" + std::to_string(j); };
    std::ostringstream out;
    out << "min:";
    bool first_term = true;
    for (int j = 0; j < lp.num_vars; ++j) {
        if (lp.objective[j] == 0.0) continue;
        out << (first_term ? " " : " + ") << lp.objective[j] << '*' << name(j);
        first_term = false;
    }
    if (first_term) out << " 0";
    out << "\n";
    for (const auto& con : lp.constraints) {
        bool first = true;
        for (const auto& [var, weight] : con.coeffs) {
            if (!first) out << " + ";
            out << weight << '*' << name(var);
            first = false;
        }
        if (first) out << "0";
        out << (con.relation == Relation::Equal ? " = " : " <= ") << con.rhs << "\n";
    }
    return out.str();
}

} // namespace opsrl
