#include <doctest.h>

#include <cmath>
#include <limits>

#include "trackcast/assignment.hpp"
#include "trackcast/rng.hpp"

using namespace trackcast;

namespace {

Eigen::MatrixXd random_cost(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform();
    }
    return m;
}

}  // namespace

TEST_SUITE("assignment") {

TEST_CASE("diagonal zeros match through the gate") {
    Eigen::MatrixXd cost(2, 2);
    cost << 0, 9, 9, 0;
    const auto res = solve_assignment(cost, 1.0);
    REQUIRE(res.matches.size() == 2);
    CHECK(res.matches[0] == std::pair<int, int>{0, 0});
    CHECK(res.matches[1] == std::pair<int, int>{1, 1});
    CHECK(res.unmatched_rows.empty());
    CHECK(res.unmatched_cols.empty());
}

TEST_CASE("optimal total beats the greedy diagonal") {
    Eigen::MatrixXd cost(2, 2);
    cost << 4, 1, 2, 3;
    const auto res = solve_assignment(cost, 10.0);
    REQUIRE(res.matches.size() == 2);
    CHECK(res.matches[0] == std::pair<int, int>{0, 1});
    CHECK(res.matches[1] == std::pair<int, int>{1, 0});
    CHECK(res.total_cost(cost) == doctest::Approx(3.0));
}

TEST_CASE("gate excludes all entries") {
    Eigen::MatrixXd cost(1, 1);
    cost << 0.9;
    const auto res = solve_assignment(cost, 0.5);
    CHECK(res.matches.empty());
    CHECK(res.unmatched_rows == std::vector<int>{0});
    CHECK(res.unmatched_cols == std::vector<int>{0});
}

TEST_CASE("NaN is rejected") {
    Eigen::MatrixXd cost(1, 1);
    cost << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_assignment(cost, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_assignment_bruteforce(cost, 1.0), std::invalid_argument);
}

TEST_CASE("brute force oracle basics") {
    const auto empty = solve_assignment_bruteforce(Eigen::MatrixXd(0, 0), 1.0);
    CHECK(empty.matches.empty());

    Eigen::MatrixXd cost(2, 2);
    cost << 1, 2, 3, 4;
    const auto res = solve_assignment_bruteforce(cost, 10.0);
    // two optimal assignments with total 5; ties take the lexicographically
    // smallest match set
    CHECK(res.total_cost(cost) == doctest::Approx(5.0));
    CHECK(res.matches[0] == std::pair<int, int>{0, 0});

    Eigen::MatrixXd too_big = Eigen::MatrixXd::Zero(9, 9);
    CHECK_THROWS_AS(solve_assignment_bruteforce(too_big, 1.0),
                    std::invalid_argument);
}

TEST_CASE("solver agrees with the oracle on random instances") {
    Rng rng(2024);
    const double gates[3] = {0.3, 0.7,
                             std::numeric_limits<double>::infinity()};
    for (int trial = 0; trial < 300; ++trial) {
        const int rows = 1 + static_cast<int>(rng.uniform_int(7));
        const int cols = 1 + static_cast<int>(rng.uniform_int(7));
        const Eigen::MatrixXd cost = random_cost(rng, rows, cols);
        for (const double gate : gates) {
            const auto fast = solve_assignment(cost, gate);
            const auto slow = solve_assignment_bruteforce(cost, gate);
            CHECK(fast.matches.size() == slow.matches.size());
            CHECK(fast.total_cost(cost) ==
                  doctest::Approx(slow.total_cost(cost)).epsilon(1e-9));
        }
    }
}

TEST_CASE("constant shift keeps the chosen matches") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(4));
        const Eigen::MatrixXd cost = random_cost(rng, n, n);
        const auto base = solve_assignment(
            cost, std::numeric_limits<double>::infinity());
        const Eigen::MatrixXd shifted =
            cost.array() + 3.25;  // fully feasible, no ties among randoms
        const auto moved = solve_assignment(
            shifted, std::numeric_limits<double>::infinity());
        CHECK(base.matches == moved.matches);
    }
}

TEST_CASE("rectangular inputs cap the match count") {
    Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const int rows = 1 + static_cast<int>(rng.uniform_int(6));
        const int cols = 1 + static_cast<int>(rng.uniform_int(6));
        const Eigen::MatrixXd cost = random_cost(rng, rows, cols);
        const auto res = solve_assignment(cost, 0.8);
        CHECK(static_cast<int>(res.matches.size()) <= std::min(rows, cols));
        // coverage: every row/col accounted for exactly once
        CHECK(res.matches.size() + res.unmatched_rows.size() ==
              static_cast<size_t>(rows));
        CHECK(res.matches.size() + res.unmatched_cols.size() ==
              static_cast<size_t>(cols));
        for (const auto& [r, c] : res.matches) {
            CHECK(cost(r, c) < 0.8);
        }
    }
}

}  // TEST_SUITE
