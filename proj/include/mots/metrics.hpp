#pragma once

#include <Eigen/Dense>

#include <vector>

#include "mots/trajectory.hpp"

namespace mots {

/// GOSPA parameters. Only the alpha = 2 closed form with order p = 1 is
/// implemented (the decomposable case). position_dims selects the state
/// entries compared (empty = all).
struct GospaParams {
    double cutoff = 10.0;
    double order = 1.0;
    double alpha = 2.0;
    std::vector<int> position_dims;
};

struct GospaResult {
    double total = 0.0;
    double localization = 0.0;
    double missed = 0.0;
    double false_detection = 0.0;
};

/// GOSPA distance between two sets of states with full decomposition.
/// Solved exactly as a linear assignment over pairs closer than the cutoff;
/// each unmatched existing object on either side costs cutoff / 2.
GospaResult gospa(const std::vector<Eigen::VectorXd>& estimate,
                  const std::vector<Eigen::VectorXd>& truth, const GospaParams& params);

/// Trajectory-GOSPA parameters; order p = 1 only.
struct TgospaParams {
    double cutoff = 10.0;
    double order = 1.0;
    double switch_cost = 1.0;  // gamma
    std::vector<int> position_dims;
};

struct TgospaResult {
    double total = 0.0;
    double localization = 0.0;
    double missed = 0.0;
    double false_detection = 0.0;
    double track_switch = 0.0;
};

/// Trajectory GOSPA over the window 1..steps: minimizes over per-step
/// partial matchings the sum of step costs (localization for matched pairs
/// both alive, cutoff/2 per step for each unmatched or mismatched existing
/// object) plus gamma/2 per association created or destroyed between
/// consecutive steps. Exact via dynamic programming over matchings;
/// intended for the small cardinalities of this scenario family.
TgospaResult tgospa(const std::vector<Trajectory>& estimate, const std::vector<Trajectory>& truth,
                    const TgospaParams& params, int steps);

}  // namespace mots
