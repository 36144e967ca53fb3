#include "trackcast/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trackcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest augmenting path assignment on an n x m matrix with n <= m.
// Returns col index per row. Every row ends up assigned; gated entries carry
// a sentinel cost large enough that the solver uses as few of them as
// possible, which makes match count dominate total cost.
std::vector<int> jv_solve(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(a.cols());
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> match_col(m + 1, 0);  // row matched to col j (1-based)
    std::vector<int> way(m + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match_col[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match_col[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            const int j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (match_col[j] > 0) row_to_col[match_col[j] - 1] = j - 1;
    }
    return row_to_col;
}

AssignmentResult finalize(const Eigen::MatrixXd& cost, double gate,
                          const std::vector<std::pair<int, int>>& raw) {
    AssignmentResult res;
    std::vector<char> row_used(cost.rows(), 0), col_used(cost.cols(), 0);
    for (const auto& [r, c] : raw) {
        if (cost(r, c) < gate) {
            res.matches.emplace_back(r, c);
            row_used[r] = 1;
            col_used[c] = 1;
        }
    }
    std::sort(res.matches.begin(), res.matches.end());
    for (int r = 0; r < cost.rows(); ++r) {
        if (!row_used[r]) res.unmatched_rows.push_back(r);
    }
    for (int c = 0; c < cost.cols(); ++c) {
        if (!col_used[c]) res.unmatched_cols.push_back(c);
    }
    return res;
}

}  // namespace

double AssignmentResult::total_cost(const Eigen::MatrixXd& cost) const {
    double t = 0.0;
    for (const auto& [r, c] : matches) t += cost(r, c);
    return t;
}

AssignmentResult solve_assignment(const Eigen::MatrixXd& cost, double gate) {
    const int rows = static_cast<int>(cost.rows());
    const int cols = static_cast<int>(cost.cols());
    if (rows == 0 || cols == 0) {
        return finalize(cost, gate, {});
    }
    if (cost.hasNaN()) {
        throw std::invalid_argument("solve_assignment: NaN in cost matrix");
    }

    const bool transposed = rows > cols;
    const Eigen::MatrixXd oriented = transposed ? cost.transpose() : cost;

    // Shift feasible entries to be non-negative, then pick a sentinel so large
    // that one gated edge outweighs any all-feasible assignment.
    double lo = kInf, hi = -kInf;
    for (Eigen::Index i = 0; i < oriented.rows(); ++i) {
        for (Eigen::Index j = 0; j < oriented.cols(); ++j) {
            const double c = oriented(i, j);
            if (c < gate) {
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
        }
    }
    Eigen::MatrixXd work = oriented;
    if (lo > hi) {
        // nothing feasible at all
        return finalize(cost, gate, {});
    }
    const double shift = lo < 0.0 ? -lo : 0.0;
    const double big =
        (static_cast<double>(std::min(rows, cols)) + 1.0) * (hi + shift + 1.0) + 1.0;
    for (Eigen::Index i = 0; i < work.rows(); ++i) {
        for (Eigen::Index j = 0; j < work.cols(); ++j) {
            work(i, j) = work(i, j) < gate ? work(i, j) + shift : big;
        }
    }

    const std::vector<int> row_to_col = jv_solve(work);
    std::vector<std::pair<int, int>> raw;
    for (int r = 0; r < static_cast<int>(row_to_col.size()); ++r) {
        if (row_to_col[r] < 0) continue;
        if (transposed) {
            raw.emplace_back(row_to_col[r], r);
        } else {
            raw.emplace_back(r, row_to_col[r]);
        }
    }
    return finalize(cost, gate, raw);
}

AssignmentResult solve_assignment_bruteforce(const Eigen::MatrixXd& cost,
                                             double gate) {
    const int rows = static_cast<int>(cost.rows());
    const int cols = static_cast<int>(cost.cols());
    if (std::min(rows, cols) > 8) {
        throw std::invalid_argument(
            "solve_assignment_bruteforce: min(rows, cols) above oracle limit 8");
    }
    if (rows == 0 || cols == 0) {
        return finalize(cost, gate, {});
    }
    if (cost.hasNaN()) {
        throw std::invalid_argument("solve_assignment_bruteforce: NaN in cost matrix");
    }

    const bool transposed = rows > cols;
    const Eigen::MatrixXd a = transposed ? cost.transpose() : cost;
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(a.cols());

    std::vector<int> current(n, -1);
    std::vector<char> col_used(m, 0);
    std::vector<int> best;
    int best_count = -1;
    double best_total = kInf;

    // Depth-first over rows, columns ascending before "skip", so that the
    // first solution found among ties is the lexicographically smallest
    // match set.
    auto recurse = [&](auto&& self, int row, int count, double total) -> void {
        if (row == n) {
            if (count > best_count ||
                (count == best_count && total < best_total)) {
                best_count = count;
                best_total = total;
                best = current;
            }
            return;
        }
        if (count + (n - row) < best_count) return;  // cannot reach best count
        for (int c = 0; c < m; ++c) {
            if (col_used[c] || !(a(row, c) < gate)) continue;
            col_used[c] = 1;
            current[row] = c;
            self(self, row + 1, count + 1, total + a(row, c));
            current[row] = -1;
            col_used[c] = 0;
        }
        self(self, row + 1, count, total);
    };
    recurse(recurse, 0, 0, 0.0);

    std::vector<std::pair<int, int>> raw;
    for (int r = 0; r < n; ++r) {
        if (best[r] < 0) continue;
        if (transposed) {
            raw.emplace_back(best[r], r);
        } else {
            raw.emplace_back(r, best[r]);
        }
    }
    return finalize(cost, gate, raw);
}

}  // namespace trackcast
