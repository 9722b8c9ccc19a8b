#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace mots {

/// A trajectory is a start time step (1-based) plus a gap-free sequence of
/// states, one per step in [start, start + length - 1].
struct Trajectory {
    int start = 1;
    std::vector<Eigen::VectorXd> states;

    [[nodiscard]] int length() const { return static_cast<int>(states.size()); }
    [[nodiscard]] int end() const { return start + length() - 1; }
    [[nodiscard]] bool alive_at(int k) const { return start <= k && k <= end(); }

    [[nodiscard]] const Eigen::VectorXd& state_at(int k) const {
        if (!alive_at(k)) throw std::out_of_range("trajectory not alive at requested step");
        return states[static_cast<std::size_t>(k - start)];
    }
};

/// States of the trajectories alive at step k (the tau^k projection).
inline std::vector<Eigen::VectorXd> trajectories_states_at(const std::vector<Trajectory>& set,
                                                           int k) {
    std::vector<Eigen::VectorXd> out;
    for (const auto& t : set) {
        if (t.alive_at(k)) out.push_back(t.state_at(k));
    }
    return out;
}

}  // namespace mots
