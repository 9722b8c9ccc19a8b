#include "mots/assignment.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

namespace mots {

namespace {

double recompute_cost(const Eigen::MatrixXd& costs, const std::vector<int>& row_to_col) {
    double total = 0.0;
    for (std::size_t r = 0; r < row_to_col.size(); ++r) {
        total += costs(static_cast<Eigen::Index>(r), row_to_col[r]);
    }
    return total;
}

bool touches_forbidden(const Eigen::MatrixXd& costs, const std::vector<int>& row_to_col) {
    for (std::size_t r = 0; r < row_to_col.size(); ++r) {
        if (costs(static_cast<Eigen::Index>(r), row_to_col[r]) >= kFeasibleCostLimit) return true;
    }
    return false;
}

// (cost, lexicographic row-to-column) ordering shared by the k-best queue.
bool assignment_less(const Assignment& a, const Assignment& b) {
    if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
    return a.row_to_col < b.row_to_col;
}

}  // namespace

std::optional<Assignment> try_solve_lap(const Eigen::MatrixXd& costs) {
    const int rows = static_cast<int>(costs.rows());
    const int cols = static_cast<int>(costs.cols());
    if (rows > cols) throw std::invalid_argument("solve_lap: more rows than columns");
    if (rows == 0) return Assignment{{}, 0.0};

    // Shortest augmenting path with dual potentials, 1-based with a
    // virtual column 0 holding the row currently being inserted.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(rows) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(cols) + 1, 0.0);
    std::vector<int> matched_row(static_cast<std::size_t>(cols) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(cols) + 1, 0);

    for (int i = 1; i <= rows; ++i) {
        matched_row[0] = i;
        int j0 = 0;
        std::vector<double> min_reduced(static_cast<std::size_t>(cols) + 1, inf);
        std::vector<bool> used(static_cast<std::size_t>(cols) + 1, false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const int i0 = matched_row[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= cols; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double reduced = costs(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                       v[static_cast<std::size_t>(j)];
                if (reduced < min_reduced[static_cast<std::size_t>(j)]) {
                    min_reduced[static_cast<std::size_t>(j)] = reduced;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (min_reduced[static_cast<std::size_t>(j)] < delta) {
                    delta = min_reduced[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= cols; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(matched_row[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    min_reduced[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (matched_row[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            matched_row[static_cast<std::size_t>(j0)] = matched_row[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment result;
    result.row_to_col.assign(static_cast<std::size_t>(rows), -1);
    for (int j = 1; j <= cols; ++j) {
        if (matched_row[static_cast<std::size_t>(j)] > 0) {
            result.row_to_col[static_cast<std::size_t>(matched_row[static_cast<std::size_t>(j)] - 1)] =
                j - 1;
        }
    }
    if (touches_forbidden(costs, result.row_to_col)) return std::nullopt;
    result.total_cost = recompute_cost(costs, result.row_to_col);
    return result;
}

Assignment solve_lap(const CostMatrix& cost) {
    auto result = try_solve_lap(cost.costs);
    if (!result) throw std::runtime_error("solve_lap: infeasible cost matrix");
    return *result;
}

std::vector<Assignment> murty_kbest(const CostMatrix& cost, std::size_t m) {
    if (m < 1) throw std::invalid_argument("murty_kbest: m must be >= 1");
    const Eigen::MatrixXd& base = cost.costs;
    const int rows = static_cast<int>(base.rows());

    struct Node {
        Eigen::MatrixXd costs;   // base with this node's bans/forcings applied
        int forced_rows = 0;     // rows [0, forced_rows) are fixed to the solution's columns
        Assignment solution;
    };
    auto node_greater = [](const Node& a, const Node& b) {
        return assignment_less(b.solution, a.solution);
    };
    std::priority_queue<Node, std::vector<Node>, decltype(node_greater)> queue(node_greater);

    auto push_if_feasible = [&](Eigen::MatrixXd&& costs, int forced_rows) {
        auto solution = try_solve_lap(costs);
        if (!solution) return;
        solution->total_cost = recompute_cost(base, solution->row_to_col);
        queue.push(Node{std::move(costs), forced_rows, std::move(*solution)});
    };

    push_if_feasible(Eigen::MatrixXd(base), 0);

    // Partition the remaining solution space around an emitted optimum.
    auto expand = [&](const Node& node) {
        for (int r = node.forced_rows; r < rows; ++r) {
            Eigen::MatrixXd child = node.costs;
            for (int fixed = node.forced_rows; fixed < r; ++fixed) {
                const int c = node.solution.row_to_col[static_cast<std::size_t>(fixed)];
                for (int j = 0; j < child.cols(); ++j) {
                    if (j != c) child(fixed, j) = kForbiddenCost;
                }
            }
            child(r, node.solution.row_to_col[static_cast<std::size_t>(r)]) = kForbiddenCost;
            push_if_feasible(std::move(child), r);
        }
    };

    std::vector<Assignment> out;
    while (!queue.empty() && out.size() < m) {
        // Drain the whole tie frontier before emitting: expanding one tied
        // node can surface further assignments of identical cost, and ties
        // must come out in lexicographic order.
        const double cost = queue.top().solution.total_cost;
        std::vector<Assignment> tied;
        while (!queue.empty() && queue.top().solution.total_cost == cost) {
            Node node = queue.top();
            queue.pop();
            tied.push_back(node.solution);
            expand(node);
        }
        std::sort(tied.begin(), tied.end(), assignment_less);
        for (auto& solution : tied) {
            if (out.size() >= m) break;
            out.push_back(std::move(solution));
        }
    }
    return out;
}

}  // namespace mots
