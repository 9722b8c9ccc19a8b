#include "mots/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mots/assignment.hpp"

namespace mots {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const std::vector<int>& dims) {
    if (dims.empty()) return x;
    Eigen::VectorXd out(static_cast<Eigen::Index>(dims.size()));
    for (std::size_t i = 0; i < dims.size(); ++i) out(static_cast<Eigen::Index>(i)) = x(dims[i]);
    return out;
}

}  // namespace

GospaResult gospa(const std::vector<Eigen::VectorXd>& estimate,
                  const std::vector<Eigen::VectorXd>& truth, const GospaParams& params) {
    if (params.alpha != 2.0 || params.order != 1.0) {
        throw std::invalid_argument("gospa: only alpha = 2, p = 1 is implemented");
    }
    if (!(params.cutoff > 0.0)) throw std::invalid_argument("gospa: cutoff must be positive");

    const int n = static_cast<int>(estimate.size());
    const int m = static_cast<int>(truth.size());
    const double half_cutoff = 0.5 * params.cutoff;

    GospaResult result;
    if (n == 0 || m == 0) {
        result.missed = half_cutoff * m;
        result.false_detection = half_cutoff * n;
        result.total = result.missed + result.false_detection;
        return result;
    }

    // Rows = estimates; columns = truths plus one free dummy per row.
    // Matching pair (i, j) changes the total by d - c relative to leaving
    // both unmatched, so entries carry that (negative) gain and the
    // constant (c/2)(n + m) is added back afterwards.
    Eigen::MatrixXd costs = Eigen::MatrixXd::Constant(n, m + n, kForbiddenCost);
    Eigen::MatrixXd distance = Eigen::MatrixXd::Zero(n, m);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = project(estimate[static_cast<std::size_t>(i)], params.position_dims);
        for (int j = 0; j < m; ++j) {
            const double d =
                (xi - project(truth[static_cast<std::size_t>(j)], params.position_dims)).norm();
            distance(i, j) = d;
            if (d < params.cutoff) costs(i, j) = d - params.cutoff;
        }
        costs(i, m + i) = 0.0;
    }

    const Assignment assignment = solve_lap(CostMatrix{costs, {}, {}, 0.0});
    int matched = 0;
    for (int i = 0; i < n; ++i) {
        const int j = assignment.row_to_col[static_cast<std::size_t>(i)];
        if (j < m) {
            result.localization += distance(i, j);
            ++matched;
        } else {
            result.false_detection += half_cutoff;
        }
    }
    result.missed = half_cutoff * (m - matched);
    result.false_detection = half_cutoff * (n - matched);
    result.total = result.localization + result.missed + result.false_detection;
    return result;
}

namespace {

// A matching assigns each estimate index a truth index or -1.
using Matching = std::vector<int>;

struct StepData {
    std::vector<bool> est_alive;
    std::vector<bool> truth_alive;
    std::vector<Eigen::VectorXd> est_pos;
    std::vector<Eigen::VectorXd> truth_pos;
};

struct StepCost {
    double localization = 0.0;
    double missed = 0.0;
    double false_detection = 0.0;
    [[nodiscard]] double total() const { return localization + missed + false_detection; }
};

StepCost step_cost(const Matching& pi, const StepData& s, double cutoff) {
    const double half = 0.5 * cutoff;
    StepCost cost;
    std::vector<bool> truth_covered(s.truth_alive.size(), false);
    for (std::size_t i = 0; i < pi.size(); ++i) {
        const int j = pi[i];
        if (j >= 0 && s.est_alive[i] && s.truth_alive[static_cast<std::size_t>(j)]) {
            truth_covered[static_cast<std::size_t>(j)] = true;
            cost.localization +=
                std::min((s.est_pos[i] - s.truth_pos[static_cast<std::size_t>(j)]).norm(), cutoff);
        } else if (s.est_alive[i]) {
            cost.false_detection += half;  // alive estimate without an alive partner
        }
        // A dead estimate contributes nothing, matched or not.
    }
    for (std::size_t j = 0; j < s.truth_alive.size(); ++j) {
        if (s.truth_alive[j] && !truth_covered[j]) cost.missed += half;
    }
    return cost;
}

// Half the symmetric difference of the two matchings' pair sets.
double switch_count(const Matching& a, const Matching& b) {
    int delta = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) {
            if (a[i] >= 0) ++delta;
            if (b[i] >= 0) ++delta;
        }
    }
    return 0.5 * delta;
}

void enumerate_matchings(const std::vector<std::vector<int>>& allowed, std::size_t i,
                         Matching& current, std::vector<bool>& truth_used,
                         std::vector<Matching>& out) {
    if (i == allowed.size()) {
        out.push_back(current);
        return;
    }
    current[i] = -1;
    enumerate_matchings(allowed, i + 1, current, truth_used, out);
    for (int j : allowed[i]) {
        if (truth_used[static_cast<std::size_t>(j)]) continue;
        truth_used[static_cast<std::size_t>(j)] = true;
        current[i] = j;
        enumerate_matchings(allowed, i + 1, current, truth_used, out);
        current[i] = -1;
        truth_used[static_cast<std::size_t>(j)] = false;
    }
}

}  // namespace

TgospaResult tgospa(const std::vector<Trajectory>& estimate, const std::vector<Trajectory>& truth,
                    const TgospaParams& params, int steps) {
    if (params.order != 1.0) throw std::invalid_argument("tgospa: only p = 1 is implemented");
    if (!(params.cutoff > 0.0)) throw std::invalid_argument("tgospa: cutoff must be positive");
    if (!(params.switch_cost > 0.0)) throw std::invalid_argument("tgospa: gamma must be positive");
    if (steps < 1) throw std::invalid_argument("tgospa: steps must be >= 1");
    const int n = static_cast<int>(estimate.size());
    const int m = static_cast<int>(truth.size());
    const double gamma = params.switch_cost;

    std::vector<StepData> data(static_cast<std::size_t>(steps));
    for (int k = 1; k <= steps; ++k) {
        auto& s = data[static_cast<std::size_t>(k - 1)];
        s.est_alive.resize(static_cast<std::size_t>(n));
        s.est_pos.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto& t = estimate[static_cast<std::size_t>(i)];
            if (t.end() > steps || t.start < 1) throw std::invalid_argument("tgospa: trajectory outside 1..steps");
            s.est_alive[static_cast<std::size_t>(i)] = t.alive_at(k);
            if (t.alive_at(k)) {
                s.est_pos[static_cast<std::size_t>(i)] = project(t.state_at(k), params.position_dims);
            }
        }
        s.truth_alive.resize(static_cast<std::size_t>(m));
        s.truth_pos.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            const auto& t = truth[static_cast<std::size_t>(j)];
            if (t.end() > steps || t.start < 1) throw std::invalid_argument("tgospa: trajectory outside 1..steps");
            s.truth_alive[static_cast<std::size_t>(j)] = t.alive_at(k);
            if (t.alive_at(k)) {
                s.truth_pos[static_cast<std::size_t>(j)] = project(t.state_at(k), params.position_dims);
            }
        }
    }

    // Candidate pairs: ever simultaneously alive and within the cutoff.
    // Pairings that are never that close are dominated by leaving both
    // sides unmatched, so dropping them preserves exactness.
    std::vector<std::vector<int>> allowed(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            bool candidate = false;
            for (int k = 0; k < steps && !candidate; ++k) {
                const auto& s = data[static_cast<std::size_t>(k)];
                candidate = s.est_alive[static_cast<std::size_t>(i)] &&
                            s.truth_alive[static_cast<std::size_t>(j)] &&
                            (s.est_pos[static_cast<std::size_t>(i)] -
                             s.truth_pos[static_cast<std::size_t>(j)])
                                    .norm() < params.cutoff;
            }
            if (candidate) allowed[static_cast<std::size_t>(i)].push_back(j);
        }
    }

    std::vector<Matching> matchings;
    {
        Matching current(static_cast<std::size_t>(n), -1);
        std::vector<bool> truth_used(static_cast<std::size_t>(m), false);
        enumerate_matchings(allowed, 0, current, truth_used, matchings);
    }

    struct State {
        double value = 0.0;
        TgospaResult parts;
    };
    std::vector<State> dp(matchings.size());
    std::vector<State> next(matchings.size());

    for (std::size_t s = 0; s < matchings.size(); ++s) {
        const StepCost c = step_cost(matchings[s], data[0], params.cutoff);
        dp[s].value = c.total();
        dp[s].parts = {c.total(), c.localization, c.missed, c.false_detection, 0.0};
    }

    // Any continuation can switch from one matching to another for at most
    // gamma * min(n, m), so states further above the incumbent are dead.
    const double prune_margin = gamma * std::min(n, m) + 1e-9;
    std::vector<std::size_t> live(matchings.size());
    for (std::size_t s = 0; s < matchings.size(); ++s) live[s] = s;

    for (int k = 2; k <= steps; ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s : live) best = std::min(best, dp[s].value);
        std::vector<std::size_t> survivors;
        for (std::size_t s : live) {
            if (dp[s].value <= best + prune_margin) survivors.push_back(s);
        }

        const auto& sd = data[static_cast<std::size_t>(k - 1)];
        std::vector<std::size_t> next_live;
        for (std::size_t s = 0; s < matchings.size(); ++s) {
            double best_value = std::numeric_limits<double>::infinity();
            std::size_t best_prev = 0;
            double best_switch = 0.0;
            for (std::size_t p : survivors) {
                const double sw = gamma * switch_count(matchings[p], matchings[s]);
                const double value = dp[p].value + sw;
                if (value < best_value) {
                    best_value = value;
                    best_prev = p;
                    best_switch = sw;
                }
            }
            if (!std::isfinite(best_value)) continue;
            const StepCost c = step_cost(matchings[s], sd, params.cutoff);
            next[s].value = best_value + c.total();
            next[s].parts.localization = dp[best_prev].parts.localization + c.localization;
            next[s].parts.missed = dp[best_prev].parts.missed + c.missed;
            next[s].parts.false_detection =
                dp[best_prev].parts.false_detection + c.false_detection;
            next[s].parts.track_switch = dp[best_prev].parts.track_switch + best_switch;
            next[s].parts.total = next[s].value;
            next_live.push_back(s);
        }
        std::swap(dp, next);
        live = std::move(next_live);
    }

    TgospaResult best;
    best.total = std::numeric_limits<double>::infinity();
    for (std::size_t s : live) {
        if (dp[s].value < best.total) best = dp[s].parts;
    }
    return best;
}

}  // namespace mots
