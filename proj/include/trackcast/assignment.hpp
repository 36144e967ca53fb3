#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace trackcast {

// Gated linear assignment outcome. Matched pairs always have cost strictly
// below the gate; every row/col shows up either in matches or in the
// unmatched lists.
struct AssignmentResult {
    std::vector<std::pair<int, int>> matches;  // sorted by row index
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;

    double total_cost(const Eigen::MatrixXd& cost) const;
};

// Minimum-cost assignment over entries strictly below `gate`, maximizing the
// number of matches first and total cost second. Shortest-augmenting-path
// Hungarian, O(n^3). Throws std::invalid_argument on NaN entries.
AssignmentResult solve_assignment(const Eigen::MatrixXd& cost, double gate);

// Exhaustive oracle with the same contract (max matches, then min total cost,
// ties broken by lexicographically smallest match set). Requires
// min(rows, cols) <= 8.
AssignmentResult solve_assignment_bruteforce(const Eigen::MatrixXd& cost,
                                             double gate);

}  // namespace trackcast
