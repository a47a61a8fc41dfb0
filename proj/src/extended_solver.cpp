#include "opsrl/extended_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

namespace opsrl {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr double kLocalPivotTol = 1e-10;
constexpr double kRepairTrigger = 1e-9;

// Dense LU with partial pivoting (LAPACK-style ipiv swaps), sized for the
// small local blocks and the border Schur complement.
struct DenseLu {
    int n = 0;
    std::vector<double> a; // factored in place, row-major
    std::vector<int> ipiv;

    bool factor(std::vector<double> m, int dim) {
        n = dim;
        a = std::move(m);
        ipiv.assign(n, 0);
        for (int k = 0; k < n; ++k) {
            int piv = k;
            double best = std::abs(a[static_cast<std::size_t>(k) * n + k]);
            for (int i = k + 1; i < n; ++i) {
                const double v = std::abs(a[static_cast<std::size_t>(i) * n + k]);
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            if (best < kLocalPivotTol) return false;
            ipiv[k] = piv;
            if (piv != k)
                for (int j = 0; j < n; ++j)
                    std::swap(a[static_cast<std::size_t>(k) * n + j],
                              a[static_cast<std::size_t>(piv) * n + j]);
            const double inv = 1.0 / a[static_cast<std::size_t>(k) * n + k];
            for (int i = k + 1; i < n; ++i) {
                double& factor = a[static_cast<std::size_t>(i) * n + k];
                factor *= inv;
                if (factor == 0.0) continue;
                const double* row_k = a.data() + static_cast<std::size_t>(k) * n;
                double* row_i = a.data() + static_cast<std::size_t>(i) * n;
                for (int j = k + 1; j < n; ++j) row_i[j] -= factor * row_k[j];
            }
        }
        return true;
    }

    void solve(double* x) const {
        for (int k = 0; k < n; ++k)
            if (ipiv[k] != k) std::swap(x[k], x[ipiv[k]]);
        for (int i = 1; i < n; ++i) {
            const double* row = a.data() + static_cast<std::size_t>(i) * n;
            double acc = x[i];
            for (int j = 0; j < i; ++j) acc -= row[j] * x[j];
            x[i] = acc;
        }
        for (int i = n - 1; i >= 0; --i) {
            const double* row = a.data() + static_cast<std::size_t>(i) * n;
            double acc = x[i];
            for (int j = i + 1; j < n; ++j) acc -= row[j] * x[j];
            x[i] = acc / row[i];
        }
    }

    void solve_transposed(double* x) const {
        // A^T x = b with P A = L U: solve U^T z = b, L^T v = z, x = P^T v.
        for (int i = 0; i < n; ++i) {
            double acc = x[i];
            for (int j = 0; j < i; ++j) acc -= a[static_cast<std::size_t>(j) * n + i] * x[j];
            x[i] = acc / a[static_cast<std::size_t>(i) * n + i];
        }
        for (int i = n - 1; i >= 0; --i) {
            double acc = x[i];
            for (int j = i + 1; j < n; ++j)
                acc -= a[static_cast<std::size_t>(j) * n + i] * x[j];
            x[i] = acc;
        }
        for (int k = n - 1; k >= 0; --k)
            if (ipiv[k] != k) std::swap(x[k], x[ipiv[k]]);
    }
};

struct SparseEntry {
    int row;
    double value;
};

} // namespace

struct ExtendedLpSolver::Impl {
    // --- static dimensions ---
    int S, A, H, s1;
    bool with_budget;
    int n_blocks; // H*S*A
    int n_z;      // n_blocks*S
    int n_coupling;
    int coupling_base; // 1 if budget row present, else 0

    // --- per-solve problem data ---
    std::vector<double> ub, lb; // S*A*S clipped bounds (shared across h)
    std::vector<double> obj_sa, bcost_sa;
    double budget = 0.0;

    // --- lazily activated box rows (grow-only) ---
    struct BoxRow {
        int block; // (h*S + s)*A + a
        int t;
        bool upper;
    };
    std::vector<BoxRow> box_rows;
    std::vector<int> up_row_of, lo_row_of; // n_blocks*S -> box row index or -1

    // --- basis ---
    // Column ids: [0, n_z) z columns; n_z budget slack; slack_base + i box
    // slacks; negative ids -1-r are artificials for coupling row r.
    int budget_slack_col = -1;
    int slack_base = 0;
    std::vector<int> basis; // per active row slot
    std::vector<int> z_slot;            // n_z, -1 when nonbasic
    std::vector<int> slack_slot;        // per box row
    std::vector<int> art_slot;          // per coupling row
    int budget_slack_slot = -1;

    // --- factorization ---
    struct BlockFactor {
        std::vector<int> rows;       // global row ids (all box rows of block)
        std::vector<int> piv_rows, piv_cols;
        std::vector<int> spill_rows, spill_cols;
        DenseLu lu;                 // of A[piv_rows, piv_cols]
        std::vector<double> w;      // rank x |spill_cols| = D^{-1} E
        bool dirty = true;
    };
    std::vector<BlockFactor> blocks;
    std::vector<int> rows_of_block_dirty; // scratch

    std::vector<int> border_rows, border_cols;
    std::vector<int> row_border_idx; // per global row, -1 if interior
    DenseLu schur;
    bool factor_valid = false;

    // scratch
    std::vector<double> x_basic; // per slot
    std::vector<double> scratch_slots, scratch_rows, scratch_border;
    long long pivot_count = 0;
    bool have_basis = false;

    Impl(int S_, int A_, int H_, int s1_, bool with_budget_)
        : S(S_), A(A_), H(H_), s1(s1_), with_budget(with_budget_) {
        n_blocks = H * S * A;
        n_z = n_blocks * S;
        coupling_base = with_budget ? 1 : 0;
        n_coupling = coupling_base + H * S;
        budget_slack_col = n_z;
        slack_base = n_z + 1;
        ub.assign(static_cast<std::size_t>(S) * A * S, 1.0);
        lb.assign(static_cast<std::size_t>(S) * A * S, 0.0);
        up_row_of.assign(static_cast<std::size_t>(n_blocks) * S, -1);
        lo_row_of.assign(static_cast<std::size_t>(n_blocks) * S, -1);
        z_slot.assign(n_z, -1);
        art_slot.assign(n_coupling, -1);
        blocks.resize(n_blocks);
    }

    // ---- index helpers ----
    int coupling_row(int h, int s) const { return coupling_base + h * S + s; }
    int n_rows() const { return n_coupling + static_cast<int>(box_rows.size()); }
    int block_of_z(int j) const { return j / S; }
    void decode_block(int b, int& h, int& s, int& a) const {
        h = b / (S * A);
        const int rem = b % (S * A);
        s = rem / A;
        a = rem % A;
    }
    std::size_t sa_of_block(int b) const {
        const int rem = b % (S * A);
        return static_cast<std::size_t>(rem);
    }
    std::size_t sat(int b, int t) const { return sa_of_block(b) * S + t; }

    double rhs_of_row(int r) const {
        if (with_budget && r == 0) return budget;
        if (r >= coupling_base && r < n_coupling) {
            const int idx = r - coupling_base;
            const int h = idx / S, s = idx % S;
            return (h == 0 && s == s1) ? 1.0 : 0.0;
        }
        return 0.0;
    }

    bool col_is_local(int col, int& block) const {
        if (col >= 0 && col < n_z) {
            block = block_of_z(col);
            return true;
        }
        if (col >= slack_base) {
            block = box_rows[col - slack_base].block;
            return true;
        }
        return false;
    }

    // Sparse column of the current constraint matrix.
    void col_coeffs(int col, std::vector<SparseEntry>& out) const {
        out.clear();
        if (col < 0) { // artificial
            out.push_back({-1 - col, 1.0});
            return;
        }
        if (col == budget_slack_col) {
            out.push_back({0, 1.0});
            return;
        }
        if (col >= slack_base) {
            out.push_back({n_coupling + (col - slack_base), 1.0});
            return;
        }
        const int b = block_of_z(col);
        const int t = col % S;
        int h, s, a;
        decode_block(b, h, s, a);
        out.push_back({coupling_row(h, s), 1.0});
        if (h + 1 < H) out.push_back({coupling_row(h + 1, t), -1.0});
        if (with_budget) {
            const double c = bcost_sa[static_cast<std::size_t>(s) * A + a];
            if (c != 0.0) out.push_back({0, c});
        }
        const std::size_t base = static_cast<std::size_t>(b) * S;
        for (int tau = 0; tau < S; ++tau) {
            const int upr = up_row_of[base + tau];
            if (upr >= 0) {
                const double coeff = (tau == t ? 1.0 : 0.0) - ub[sat(b, tau)];
                if (coeff != 0.0) out.push_back({n_coupling + upr, coeff});
            }
            const int lor = lo_row_of[base + tau];
            if (lor >= 0) {
                const double coeff = lb[sat(b, tau)] - (tau == t ? 1.0 : 0.0);
                if (coeff != 0.0) out.push_back({n_coupling + lor, coeff});
            }
        }
    }

    // ---- basis bookkeeping ----
    int slot_of_col(int col) const {
        if (col < 0) return art_slot[-1 - col];
        if (col < n_z) return z_slot[col];
        if (col == budget_slack_col) return budget_slack_slot;
        return slack_slot[col - slack_base];
    }
    void set_slot(int col, int slot) {
        if (col < 0)
            art_slot[-1 - col] = slot;
        else if (col < n_z)
            z_slot[col] = slot;
        else if (col == budget_slack_col)
            budget_slack_slot = slot;
        else
            slack_slot[col - slack_base] = slot;
    }

    void cold_basis() {
        basis.assign(n_rows(), 0);
        std::fill(z_slot.begin(), z_slot.end(), -1);
        std::fill(art_slot.begin(), art_slot.end(), -1);
        slack_slot.assign(box_rows.size(), -1);
        budget_slack_slot = -1;
        int slot = 0;
        for (int r = 0; r < n_coupling; ++r, ++slot) {
            if (with_budget && r == 0) {
                basis[slot] = budget_slack_col;
            } else {
                basis[slot] = -1 - r;
            }
            set_slot(basis[slot], slot);
        }
        for (std::size_t i = 0; i < box_rows.size(); ++i, ++slot) {
            basis[slot] = slack_base + static_cast<int>(i);
            set_slot(basis[slot], slot);
        }
        for (auto& blk : blocks) blk.dirty = true;
        have_basis = true;
    }

    // ---- factorization ----
    void refactor_block(int b) {
        BlockFactor& blk = blocks[b];
        blk.piv_rows.clear();
        blk.piv_cols.clear();
        blk.spill_rows.clear();
        blk.spill_cols.clear();
        blk.w.clear();
        blk.dirty = false;

        // Local basic columns: z columns of this block plus slacks of its rows.
        std::vector<int> cols;
        for (int t = 0; t < S; ++t) {
            const int col = b * S + t;
            if (z_slot[col] >= 0) cols.push_back(col);
        }
        for (int rid : blk.rows) {
            const int slack_col = slack_base + (rid - n_coupling);
            if (slack_slot[rid - n_coupling] >= 0) cols.push_back(slack_col);
        }
        const int nr = static_cast<int>(blk.rows.size());
        const int nc = static_cast<int>(cols.size());
        if (nr == 0 || nc == 0) {
            blk.spill_rows = blk.rows;
            blk.spill_cols = std::move(cols);
            blk.lu.n = 0;
            return;
        }
        // Dense local matrix, rows are this block's box rows.
        std::vector<double> m(static_cast<std::size_t>(nr) * nc, 0.0);
        std::vector<SparseEntry> entries;
        std::vector<int> row_pos(n_rows(), -1);
        for (int i = 0; i < nr; ++i) row_pos[blk.rows[i]] = i;
        for (int j = 0; j < nc; ++j) {
            col_coeffs(cols[j], entries);
            for (const auto& e : entries) {
                const int p = row_pos[e.row];
                if (p >= 0) m[static_cast<std::size_t>(p) * nc + j] = e.value;
            }
        }
        // Full-pivot elimination on a copy to select an invertible square
        // subproblem; leftovers spill to the border.
        std::vector<double> work = m;
        std::vector<char> row_used(nr, 0), col_used(nc, 0);
        std::vector<int> sel_rows, sel_cols;
        while (true) {
            int best_i = -1, best_j = -1;
            double best = kLocalPivotTol;
            for (int i = 0; i < nr; ++i) {
                if (row_used[i]) continue;
                for (int j = 0; j < nc; ++j) {
                    if (col_used[j]) continue;
                    const double v = std::abs(work[static_cast<std::size_t>(i) * nc + j]);
                    if (v > best) {
                        best = v;
                        best_i = i;
                        best_j = j;
                    }
                }
            }
            if (best_i < 0) break;
            row_used[best_i] = 1;
            col_used[best_j] = 1;
            sel_rows.push_back(best_i);
            sel_cols.push_back(best_j);
            const double inv = 1.0 / work[static_cast<std::size_t>(best_i) * nc + best_j];
            for (int i = 0; i < nr; ++i) {
                if (row_used[i]) continue;
                const double factor =
                    work[static_cast<std::size_t>(i) * nc + best_j] * inv;
                if (factor == 0.0) continue;
                for (int j = 0; j < nc; ++j)
                    if (!col_used[j])
                        work[static_cast<std::size_t>(i) * nc + j] -=
                            factor * work[static_cast<std::size_t>(best_i) * nc + j];
            }
        }
        const int rank = static_cast<int>(sel_rows.size());
        for (int i = 0; i < nr; ++i)
            (row_used[i] ? blk.piv_rows : blk.spill_rows).push_back(blk.rows[i]);
        for (int j = 0; j < nc; ++j)
            (col_used[j] ? blk.piv_cols : blk.spill_cols).push_back(cols[j]);
        // Order pivot rows/cols consistently with blk.rows/cols scan order.
        if (rank > 0) {
            std::vector<double> d(static_cast<std::size_t>(rank) * rank, 0.0);
            std::vector<int> row_sel_pos(nr, -1), col_sel_pos(nc, -1);
            int ri = 0, ci = 0;
            for (int i = 0; i < nr; ++i)
                if (row_used[i]) row_sel_pos[i] = ri++;
            for (int j = 0; j < nc; ++j)
                if (col_used[j]) col_sel_pos[j] = ci++;
            for (int i = 0; i < nr; ++i) {
                if (!row_used[i]) continue;
                for (int j = 0; j < nc; ++j)
                    if (col_used[j])
                        d[static_cast<std::size_t>(row_sel_pos[i]) * rank + col_sel_pos[j]] =
                            m[static_cast<std::size_t>(i) * nc + j];
            }
            if (!blk.lu.factor(std::move(d), rank))
                throw std::runtime_error("extended solver: local block factor failed");
            // W = D^{-1} E for the block's spilled columns.
            const int nspill = static_cast<int>(blk.spill_cols.size());
            blk.w.assign(static_cast<std::size_t>(rank) * nspill, 0.0);
            std::vector<double> colbuf(rank);
            std::vector<int> spill_pos(nc, -1);
            int sp = 0;
            for (int j = 0; j < nc; ++j)
                if (!col_used[j]) spill_pos[j] = sp++;
            for (int j = 0; j < nc; ++j) {
                if (col_used[j]) continue;
                int rr = 0;
                for (int i = 0; i < nr; ++i)
                    if (row_used[i]) colbuf[rr++] = m[static_cast<std::size_t>(i) * nc + j];
                blk.lu.solve(colbuf.data());
                for (int i = 0; i < rank; ++i)
                    blk.w[static_cast<std::size_t>(i) * nspill + spill_pos[j]] = colbuf[i];
            }
        }
        for (int i = 0; i < nr; ++i) row_pos[blk.rows[i]] = -1;
    }

    // Entries of column `col` restricted to border rows, accumulated into a
    // dense border-sized vector with the given scale.
    void add_border_column(int col, double scale, std::vector<double>& dense,
                           std::vector<SparseEntry>& entries) const {
        col_coeffs(col, entries);
        for (const auto& e : entries) {
            const int bi = row_border_idx[e.row];
            if (bi >= 0) dense[bi] += scale * e.value;
        }
    }

    bool rebuild_border() {
        border_rows.clear();
        border_cols.clear();
        row_border_idx.assign(n_rows(), -1);
        for (int r = 0; r < n_coupling; ++r) border_rows.push_back(r);
        for (int b = 0; b < n_blocks; ++b)
            for (int r : blocks[b].spill_rows) border_rows.push_back(r);
        for (int i = 0; i < static_cast<int>(border_rows.size()); ++i)
            row_border_idx[border_rows[i]] = i;

        for (int r = 0; r < n_coupling; ++r)
            if (art_slot[r] >= 0) border_cols.push_back(-1 - r);
        if (with_budget && budget_slack_slot >= 0) border_cols.push_back(budget_slack_col);
        for (int b = 0; b < n_blocks; ++b)
            for (int c : blocks[b].spill_cols) border_cols.push_back(c);
        if (border_rows.size() != border_cols.size()) return false;

        const int dim = static_cast<int>(border_rows.size());
        std::vector<double> sc(static_cast<std::size_t>(dim) * dim, 0.0);
        std::vector<double> dense(dim, 0.0);
        std::vector<SparseEntry> entries;
        std::vector<double> wcol;
        for (int j = 0; j < dim; ++j) {
            std::fill(dense.begin(), dense.end(), 0.0);
            const int col = border_cols[j];
            add_border_column(col, 1.0, dense, entries);
            // Subtract F D^{-1} E for the owning block when the column is a
            // spilled local column.
            int blk_id;
            if (col_is_local(col, blk_id)) {
                const BlockFactor& blk = blocks[blk_id];
                const int rank = static_cast<int>(blk.piv_rows.size());
                const int nspill = static_cast<int>(blk.spill_cols.size());
                if (rank > 0 && nspill > 0) {
                    int spill_idx = -1;
                    for (int k = 0; k < nspill; ++k)
                        if (blk.spill_cols[k] == col) {
                            spill_idx = k;
                            break;
                        }
                    if (spill_idx >= 0) {
                        wcol.assign(rank, 0.0);
                        for (int i = 0; i < rank; ++i)
                            wcol[i] = blk.w[static_cast<std::size_t>(i) * nspill + spill_idx];
                        for (int p = 0; p < rank; ++p) {
                            if (wcol[p] == 0.0) continue;
                            add_border_column(blk.piv_cols[p], -wcol[p], dense, entries);
                        }
                    }
                }
            }
            for (int i = 0; i < dim; ++i) sc[static_cast<std::size_t>(i) * dim + j] = dense[i];
        }
        if (dim > 0 && !schur.factor(std::move(sc), dim)) return false;
        if (dim == 0) schur.n = 0;
        return true;
    }

    bool refactor_all(bool force) {
        for (int b = 0; b < n_blocks; ++b)
            if (force || blocks[b].dirty) refactor_block(b);
        factor_valid = rebuild_border();
        return factor_valid;
    }

    // ---- FTRAN / BTRAN ----
    // Solves B x = col (sparse), result dense over basis slots.
    void ftran(const std::vector<SparseEntry>& col, std::vector<double>& x) {
        const int dim = static_cast<int>(border_rows.size());
        x.assign(basis.size(), 0.0);
        scratch_border.assign(dim, 0.0);
        // Split the column into interior (pivot rows of one block) and border.
        int hit_block = -1;
        static thread_local std::vector<double> r1;
        for (const auto& e : col) {
            const int bi = row_border_idx[e.row];
            if (bi >= 0) {
                scratch_border[bi] += e.value;
            } else {
                const int owning = box_rows[e.row - n_coupling].block;
                if (hit_block < 0) {
                    hit_block = owning;
                    r1.assign(blocks[owning].piv_rows.size(), 0.0);
                }
                const auto& pr = blocks[owning].piv_rows;
                for (std::size_t i = 0; i < pr.size(); ++i)
                    if (pr[i] == e.row) {
                        r1[i] += e.value;
                        break;
                    }
            }
        }
        static thread_local std::vector<SparseEntry> entries;
        static thread_local std::vector<double> u;
        u.clear();
        if (hit_block >= 0) {
            const BlockFactor& blk = blocks[hit_block];
            u = r1;
            blk.lu.solve(u.data());
            for (std::size_t p = 0; p < blk.piv_cols.size(); ++p) {
                if (u[p] == 0.0) continue;
                add_border_column(blk.piv_cols[p], -u[p], scratch_border, entries);
            }
        }
        if (dim > 0) schur.solve(scratch_border.data());
        // Border columns take the Schur solution directly.
        for (int j = 0; j < dim; ++j) {
            const int slot = slot_of_col(border_cols[j]);
            x[slot] = scratch_border[j];
        }
        // Interior: x1 = D^{-1} r1 - W x2_spill (per block).
        for (int b = 0; b < n_blocks; ++b) {
            const BlockFactor& blk = blocks[b];
            const int rank = static_cast<int>(blk.piv_rows.size());
            if (rank == 0) continue;
            const int nspill = static_cast<int>(blk.spill_cols.size());
            const bool is_hit = (b == hit_block);
            if (!is_hit && nspill == 0) continue;
            static thread_local std::vector<double> x1;
            x1.assign(rank, 0.0);
            if (is_hit)
                for (int i = 0; i < rank; ++i) x1[i] = u[i];
            if (nspill > 0) {
                bool any = false;
                // x2 of this block's spill columns.
                for (int k = 0; k < nspill; ++k) {
                    const double xv = x[slot_of_col(blk.spill_cols[k])];
                    if (xv == 0.0) continue;
                    any = true;
                    for (int i = 0; i < rank; ++i)
                        x1[i] -= blk.w[static_cast<std::size_t>(i) * nspill + k] * xv;
                }
                if (!any && !is_hit) continue;
            }
            for (int i = 0; i < rank; ++i) x[slot_of_col(blk.piv_cols[i])] = x1[i];
        }
    }

    // Solves y^T B = c^T (c dense over slots), result dense over rows.
    void btran(const std::vector<double>& c, std::vector<double>& y) {
        const int dim = static_cast<int>(border_rows.size());
        y.assign(n_rows(), 0.0);
        scratch_border.assign(dim, 0.0);
        for (int j = 0; j < dim; ++j)
            scratch_border[j] = c[slot_of_col(border_cols[j])];
        // rhs2 = c2 - W^T c1 per block.
        static thread_local std::vector<double> c1;
        for (int b = 0; b < n_blocks; ++b) {
            const BlockFactor& blk = blocks[b];
            const int rank = static_cast<int>(blk.piv_rows.size());
            const int nspill = static_cast<int>(blk.spill_cols.size());
            if (rank == 0 || nspill == 0) continue;
            c1.assign(rank, 0.0);
            bool any = false;
            for (int i = 0; i < rank; ++i) {
                c1[i] = c[slot_of_col(blk.piv_cols[i])];
                any |= c1[i] != 0.0;
            }
            if (!any) continue;
            for (int k = 0; k < nspill; ++k) {
                double acc = 0.0;
                for (int i = 0; i < rank; ++i)
                    acc += blk.w[static_cast<std::size_t>(i) * nspill + k] * c1[i];
                if (acc != 0.0) {
                    const int bi = border_col_index_[slot_of_col(blk.spill_cols[k])];
                    scratch_border[bi] -= acc;
                }
            }
        }
        if (dim > 0) schur.solve_transposed(scratch_border.data());
        for (int j = 0; j < dim; ++j) y[border_rows[j]] = scratch_border[j];
        // v1 = D^{-T} (c1 - F^T v2) per block.
        static thread_local std::vector<SparseEntry> entries;
        static thread_local std::vector<double> v1;
        for (int b = 0; b < n_blocks; ++b) {
            const BlockFactor& blk = blocks[b];
            const int rank = static_cast<int>(blk.piv_rows.size());
            if (rank == 0) continue;
            v1.assign(rank, 0.0);
            bool any = false;
            for (int i = 0; i < rank; ++i) {
                v1[i] = c[slot_of_col(blk.piv_cols[i])];
                any |= v1[i] != 0.0;
            }
            for (int p = 0; p < rank; ++p) {
                col_coeffs(blk.piv_cols[p], entries);
                double acc = 0.0;
                for (const auto& e : entries) {
                    const int bi = row_border_idx[e.row];
                    if (bi >= 0) acc += e.value * scratch_border[bi];
                }
                if (acc != 0.0) {
                    v1[p] -= acc;
                    any = true;
                }
            }
            if (!any) continue;
            blk.lu.solve_transposed(v1.data());
            for (int i = 0; i < rank; ++i) y[blk.piv_rows[i]] = v1[i];
        }
    }

    // border_col_index_: slot -> index within border_cols (for btran).
    std::vector<int> border_col_index_;
    void rebuild_border_col_index() {
        border_col_index_.assign(basis.size(), -1);
        for (int j = 0; j < static_cast<int>(border_cols.size()); ++j)
            border_col_index_[slot_of_col(border_cols[j])] = j;
    }

    void compute_x_basic() {
        std::vector<SparseEntry> rhs;
        if (with_budget) rhs.push_back({0, budget});
        rhs.push_back({coupling_row(0, s1), 1.0});
        ftran(rhs, x_basic);
    }

    // ---- simplex driver pieces ----

    // Reduced costs for all candidate columns given the dual vector y and a
    // per-column cost functor. Picks the most negative reduced cost with
    // lowest-id tie-breaking, or the first eligible column in id order when
    // `bland` is set. Artificial columns never re-enter. Returns false when
    // no column prices out.
    template <typename CostFn>
    bool price(const std::vector<double>& y, CostFn cost_of, bool bland,
               int& entering) const {
        entering = 0;
        bool found = false;
        double best_val = 0.0;
        const auto consider = [&](int col, double d) -> bool {
            if (d >= -kPivotTol) return false;
            if (!found || d < best_val - 1e-15) {
                best_val = d;
                entering = col;
                found = true;
            }
            return bland; // first eligible wins under Bland
        };
        // z columns, block by block with shared box-row terms.
        for (int b = 0; b < n_blocks; ++b) {
            int h, s, a;
            decode_block(b, h, s, a);
            const std::size_t sa = static_cast<std::size_t>(s) * A + a;
            double block_const = 0.0;
            const std::size_t base = static_cast<std::size_t>(b) * S;
            for (int tau = 0; tau < S; ++tau) {
                const int upr = up_row_of[base + tau];
                if (upr >= 0) block_const -= ub[sat(b, tau)] * y[n_coupling + upr];
                const int lor = lo_row_of[base + tau];
                if (lor >= 0) block_const += lb[sat(b, tau)] * y[n_coupling + lor];
            }
            block_const += y[coupling_row(h, s)];
            if (with_budget && bcost_sa[sa] != 0.0) block_const += bcost_sa[sa] * y[0];
            for (int t = 0; t < S; ++t) {
                const int col = b * S + t;
                if (z_slot[col] >= 0) continue;
                double dot = block_const;
                if (h + 1 < H) dot -= y[coupling_row(h + 1, t)];
                const int upr = up_row_of[base + t];
                if (upr >= 0) dot += y[n_coupling + upr];
                const int lor = lo_row_of[base + t];
                if (lor >= 0) dot -= y[n_coupling + lor];
                if (consider(col, cost_of(col) - dot)) return true;
            }
        }
        if (with_budget && budget_slack_slot < 0) {
            if (consider(budget_slack_col, cost_of(budget_slack_col) - y[0])) return true;
        }
        for (int i = 0; i < static_cast<int>(box_rows.size()); ++i) {
            if (slack_slot[i] >= 0) continue;
            if (consider(slack_base + i, cost_of(slack_base + i) - y[n_coupling + i]))
                return true;
        }
        return found;
    }

    // Applies a basis change and refreshes the factorization incrementally.
    bool apply_pivot(int entering, int leaving_slot) {
        const int leaving = basis[leaving_slot];
        set_slot(leaving, -1);
        basis[leaving_slot] = entering;
        set_slot(entering, leaving_slot);
        int blk;
        if (col_is_local(entering, blk)) blocks[blk].dirty = true;
        if (col_is_local(leaving, blk)) blocks[blk].dirty = true;
        ++pivot_count;
        for (int b = 0; b < n_blocks; ++b)
            if (blocks[b].dirty) refactor_block(b);
        if (!rebuild_border()) return false;
        rebuild_border_col_index();
        compute_x_basic();
        return true;
    }

    struct RatioResult {
        int slot = -1;
        double theta = std::numeric_limits<double>::infinity();
    };

    // Standard primal ratio test with Bland tie-breaking on the leaving
    // column id (artificials have negative ids, so ties kick them out
    // first). Basic artificials are pinned at zero: any movement on their
    // slot blocks at theta = 0 and they leave the basis.
    RatioResult ratio_test(const std::vector<double>& w) const {
        RatioResult res;
        for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
            const double wi = w[i];
            double cand;
            if (basis[i] < 0) {
                if (std::abs(wi) <= kPivotTol) continue;
                cand = 0.0;
            } else {
                if (wi <= kPivotTol) continue;
                cand = std::max(0.0, x_basic[i]) / wi;
            }
            if (cand < res.theta - kPivotTol ||
                (cand < res.theta + kPivotTol &&
                 (res.slot < 0 || basis[i] < basis[res.slot]))) {
                res.theta = res.slot < 0 ? cand : std::min(res.theta, cand);
                res.slot = i;
            }
        }
        return res;
    }

    // Minimizes the given cost over the current feasible basis. Returns false
    // on an unbounded direction. Assumes x_basic >= 0.
    template <typename CostFn>
    bool minimize(CostFn cost_of, long long max_pivots) {
        std::vector<double> cb(basis.size());
        std::vector<double> y, w;
        std::vector<SparseEntry> colbuf;
        long long stall = 0;
        bool bland = false;
        double last_obj = std::numeric_limits<double>::infinity();
        for (long long iter = 0; iter < max_pivots; ++iter) {
            for (std::size_t i = 0; i < basis.size(); ++i) cb[i] = cost_of(basis[i]);
            btran(cb, y);
            int entering = 0;
            if (!price(y, cost_of, bland, entering)) return true;
            col_coeffs(entering, colbuf);
            ftran(colbuf, w);
            const RatioResult rr = ratio_test(w);
            if (rr.slot < 0) return false; // unbounded
            if (!apply_pivot(entering, rr.slot))
                throw std::runtime_error("extended solver: singular basis after pivot");
            double obj = 0.0;
            for (std::size_t i = 0; i < basis.size(); ++i)
                obj += cost_of(basis[i]) * x_basic[i];
            if (obj < last_obj - 1e-12) {
                stall = 0;
                bland = false;
            } else if (++stall > 60) {
                bland = true;
            }
            last_obj = obj;
        }
        throw std::runtime_error("extended solver: pivot limit exceeded");
    }

    // Drives negative basic values to zero (sum-of-infeasibilities phase).
    // Returns false when the working LP is infeasible.
    bool repair_feasibility(long long max_pivots) {
        std::vector<double> cb(basis.size());
        std::vector<double> y, w;
        std::vector<SparseEntry> colbuf;
        long long stall = 0;
        bool bland = false;
        double last_phi = std::numeric_limits<double>::infinity();
        for (long long iter = 0; iter < max_pivots; ++iter) {
            // phi = sum of infeasibilities; its basic cost vector is -1 on
            // infeasible slots.
            double phi = 0.0;
            bool any = false;
            for (std::size_t i = 0; i < basis.size(); ++i) {
                if (x_basic[i] < -kRepairTrigger) {
                    cb[i] = -1.0;
                    phi -= x_basic[i];
                    any = true;
                } else {
                    cb[i] = 0.0;
                }
            }
            if (!any) return true;
            btran(cb, y);
            const auto zero_cost = [](int) { return 0.0; };
            int entering = 0;
            if (!price(y, zero_cost, bland, entering)) return phi <= kFeasTol;
            col_coeffs(entering, colbuf);
            ftran(colbuf, w);
            // Composite ratio test: feasible basics block as usual, infeasible
            // basics block where they reach zero, artificials stay pinned.
            int slot = -1;
            double theta = std::numeric_limits<double>::infinity();
            for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
                const double wi = w[i];
                double cand;
                if (basis[i] < 0) {
                    if (std::abs(wi) <= kPivotTol) continue;
                    cand = 0.0;
                } else if (x_basic[i] >= -kRepairTrigger) {
                    if (wi <= kPivotTol) continue;
                    cand = std::max(0.0, x_basic[i]) / wi;
                } else {
                    if (wi >= -kPivotTol) continue;
                    cand = x_basic[i] / wi;
                }
                if (cand < theta - kPivotTol ||
                    (cand < theta + kPivotTol &&
                     (slot < 0 || basis[i] < basis[slot]))) {
                    theta = slot < 0 ? cand : std::min(theta, cand);
                    slot = i;
                }
            }
            if (slot < 0)
                throw std::runtime_error("extended solver: unbounded infeasibility descent");
            if (!apply_pivot(entering, slot))
                throw std::runtime_error("extended solver: singular basis after pivot");
            if (phi < last_phi - 1e-12) {
                stall = 0;
                bland = false;
            } else if (++stall > 60) {
                bland = true;
            }
            last_phi = phi;
        }
        throw std::runtime_error("extended solver: repair pivot limit exceeded");
    }

    // ---- lazily activated rows ----
    void current_z(std::vector<double>& z) const {
        z.assign(n_z, 0.0);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const int col = basis[i];
            if (col >= 0 && col < n_z) z[col] = std::max(0.0, x_basic[i]);
        }
    }

    // Activates box rows violated by z. Returns the number added. The new
    // rows' slacks join the basis at their (negative) slack value, to be
    // repaired next.
    int activate_violated(const std::vector<double>& z) {
        int added = 0;
        for (int b = 0; b < n_blocks; ++b) {
            const std::size_t zb = static_cast<std::size_t>(b) * S;
            double mass = 0.0;
            for (int t = 0; t < S; ++t) mass += z[zb + t];
            if (mass <= 0.0) continue;
            const double tol = 1e-9 * std::max(1.0, mass);
            const std::size_t base = static_cast<std::size_t>(b) * S;
            for (int t = 0; t < S; ++t) {
                const double zt = z[zb + t];
                const double up = ub[sat(b, t)];
                if (up < 1.0 && zt - up * mass > tol && up_row_of[base + t] < 0) {
                    up_row_of[base + t] = static_cast<int>(box_rows.size());
                    box_rows.push_back({b, t, true});
                    ++added;
                }
                const double lo = lb[sat(b, t)];
                if (lo > 0.0 && lo * mass - zt > tol && lo_row_of[base + t] < 0) {
                    lo_row_of[base + t] = static_cast<int>(box_rows.size());
                    box_rows.push_back({b, t, false});
                    ++added;
                }
            }
        }
        if (added > 0) {
            const int old_rows = static_cast<int>(basis.size());
            slack_slot.resize(box_rows.size(), -1);
            basis.resize(n_rows());
            for (int i = old_rows; i < n_rows(); ++i) {
                const int row_idx = i - n_coupling;
                basis[i] = slack_base + row_idx;
                set_slot(basis[i], i);
                blocks[box_rows[row_idx].block].rows.push_back(i);
                blocks[box_rows[row_idx].block].dirty = true;
            }
        }
        return added;
    }

    double max_violation(const std::vector<double>& z) const {
        double worst = 0.0;
        for (int b = 0; b < n_blocks; ++b) {
            const std::size_t zb = static_cast<std::size_t>(b) * S;
            double mass = 0.0;
            for (int t = 0; t < S; ++t) mass += z[zb + t];
            for (int t = 0; t < S; ++t) {
                const double zt = z[zb + t];
                worst = std::max(worst, zt - std::min(1.0, ub[sat(b, t)]) * mass);
                worst = std::max(worst, std::max(0.0, lb[sat(b, t)]) * mass - zt);
            }
        }
        return worst;
    }
};

ExtendedLpSolver::ExtendedLpSolver(int num_states, int num_actions, int horizon,
                                   int initial_state, bool with_budget)
    : impl_(std::make_unique<Impl>(num_states, num_actions, horizon, initial_state,
                                   with_budget)) {}

ExtendedLpSolver::~ExtendedLpSolver() = default;
ExtendedLpSolver::ExtendedLpSolver(ExtendedLpSolver&&) noexcept = default;
ExtendedLpSolver& ExtendedLpSolver::operator=(ExtendedLpSolver&&) noexcept = default;

long long ExtendedLpSolver::total_pivots() const { return impl_->pivot_count; }

ExtendedSolution ExtendedLpSolver::solve(const ExtendedProblem& problem) {
    Impl& im = *impl_;
    if (problem.num_states != im.S || problem.num_actions != im.A ||
        problem.horizon != im.H || problem.initial_state != im.s1)
        throw std::invalid_argument("extended solver: dimensions changed between calls");
    if (im.with_budget != !problem.budget_cost.empty())
        throw std::invalid_argument("extended solver: budget presence changed between calls");

    // Refresh bounds and costs.
    const std::size_t n_sat = static_cast<std::size_t>(im.S) * im.A * im.S;
    for (std::size_t i = 0; i < n_sat; ++i) {
        im.ub[i] = std::min(1.0, problem.p_hat[i] + problem.beta[i]);
        im.lb[i] = std::max(0.0, problem.p_hat[i] - problem.beta[i]);
    }
    im.obj_sa.assign(problem.objective.begin(), problem.objective.end());
    if (im.with_budget) {
        im.bcost_sa.assign(problem.budget_cost.begin(), problem.budget_cost.end());
        im.budget = problem.budget;
        // Every step costs at least min c; H * min c > budget proves
        // infeasibility without touching the LP.
        double min_cost = im.bcost_sa[0];
        for (double c : im.bcost_sa) min_cost = std::min(min_cost, c);
        if (im.H * min_cost > im.budget + kFeasTol) {
            return {LpStatus::Infeasible, {}, 0.0, 0.0};
        }
    }

    const auto cost_of = [&im](int col) -> double {
        if (col >= 0 && col < im.n_z) {
            const int b = col / im.S;
            return im.obj_sa[im.sa_of_block(b)];
        }
        return 0.0;
    };

    const long long max_pivots = 200000;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (!im.have_basis || attempt > 0) im.cold_basis();
        // Bounds and costs changed, so every block factor is stale.
        if (!im.refactor_all(true)) {
            if (attempt > 0)
                throw std::runtime_error("extended solver: basis factorization failed");
            im.have_basis = false;
            continue;
        }
        im.rebuild_border_col_index();
        im.compute_x_basic();
        try {
            bool feasible = im.repair_feasibility(max_pivots);
            // Cold starts carry positive artificials; minimize them out.
            bool any_art_positive = false;
            for (std::size_t i = 0; i < im.basis.size(); ++i)
                if (im.basis[i] < 0 && im.x_basic[i] > kFeasTol) any_art_positive = true;
            if (feasible && any_art_positive) {
                const auto art_cost = [](int col) { return col < 0 ? 1.0 : 0.0; };
                if (!im.minimize(art_cost, max_pivots))
                    throw std::runtime_error("extended solver: phase one unbounded");
                double art_sum = 0.0;
                for (std::size_t i = 0; i < im.basis.size(); ++i)
                    if (im.basis[i] < 0) art_sum += std::max(0.0, im.x_basic[i]);
                feasible = art_sum <= kFeasTol;
            }
            if (!feasible) return {LpStatus::Infeasible, {}, 0.0, 0.0};

            std::vector<double> z;
            for (int round = 0; round < 4096; ++round) {
                if (!im.minimize(cost_of, max_pivots))
                    return {LpStatus::Unbounded, {}, 0.0, 0.0};
                im.current_z(z);
                if (im.activate_violated(z) == 0) break;
                im.refactor_all(false);
                im.rebuild_border_col_index();
                im.compute_x_basic();
                if (!im.repair_feasibility(max_pivots))
                    return {LpStatus::Infeasible, {}, 0.0, 0.0};
            }
            im.current_z(z);
            if (im.max_violation(z) > 1e-6)
                throw std::runtime_error("extended solver: box residual too large");
            ExtendedSolution sol;
            sol.status = LpStatus::Optimal;
            sol.objective_value = 0.0;
            sol.budget_value = 0.0;
            for (int j = 0; j < im.n_z; ++j) {
                if (z[j] == 0.0) continue;
                const std::size_t sa = im.sa_of_block(j / im.S);
                sol.objective_value += im.obj_sa[sa] * z[j];
                if (im.with_budget) sol.budget_value += im.bcost_sa[sa] * z[j];
            }
            sol.z = std::move(z);
            im.have_basis = true;
            return sol;
        } catch (const std::runtime_error&) {
            if (attempt > 0) throw;
            im.have_basis = false; // retry cold
        }
    }
    throw std::runtime_error("extended solver: failed after cold restart");
}

ExtendedSolution solve_extended(const ExtendedProblem& problem) {
    ExtendedLpSolver solver(problem.num_states, problem.num_actions, problem.horizon,
                            problem.initial_state, !problem.budget_cost.empty());
    return solver.solve(problem);
}

} // namespace opsrl
