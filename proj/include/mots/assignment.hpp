#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace mots {

/// Sentinel cost encoding a forbidden pairing; kept large but finite so
/// arithmetic stays total. Any assignment touching an entry above
/// kFeasibleCostLimit is reported infeasible.
inline constexpr double kForbiddenCost = 1e30;
inline constexpr double kFeasibleCostLimit = 1e29;

/// Rectangular cost matrix (rows <= columns) with opaque row/column labels
/// and an additive bookkeeping offset for callers that interpret total
/// costs externally.
struct CostMatrix {
    Eigen::MatrixXd costs;
    std::vector<int> row_labels;
    std::vector<int> col_labels;
    double cost_offset = 0.0;
};

/// One-to-one assignment of every row to a distinct column.
struct Assignment {
    std::vector<int> row_to_col;
    double total_cost = 0.0;
};

/// Minimum-cost assignment, or nullopt if no assignment avoids forbidden
/// entries. Requires rows <= columns.
std::optional<Assignment> try_solve_lap(const Eigen::MatrixXd& costs);

/// As try_solve_lap but throws std::runtime_error when infeasible.
Assignment solve_lap(const CostMatrix& cost);

/// The m lowest-cost distinct assignments in nondecreasing cost order
/// (ties broken by lexicographic row-to-column order); fewer if fewer
/// feasible assignments exist; empty if infeasible.
std::vector<Assignment> murty_kbest(const CostMatrix& cost, std::size_t m);

}  // namespace mots
