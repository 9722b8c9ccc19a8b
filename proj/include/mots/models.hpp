#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

#include "mots/gaussian.hpp"
#include "mots/random.hpp"
#include "mots/trajectory.hpp"

namespace mots {

struct MotionModel {
    LinearGaussian transition;    // F, Q
    double survival_probability;  // p^S in [0, 1]
};

struct MeasurementModel {
    LinearGaussian observation;    // H, R
    double detection_probability;  // p^D in [0, 1]
};

struct BirthModel {
    GaussianMixture intensity;  // lambda^B
};

/// Axis-aligned box in measurement space (meters).
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    [[nodiscard]] double volume() const;
    [[nodiscard]] bool contains(const Eigen::VectorXd& z) const;
    [[nodiscard]] Eigen::VectorXd sample(RandomStream& rng) const;
};

struct ClutterModel {
    double rate = 0.0;  // gamma^C, expected clutter count per scan
    Box region;

    /// Uniform clutter intensity gamma^C / volume.
    [[nodiscard]] double intensity() const { return rate > 0.0 ? rate / region.volume() : 0.0; }
};

/// Nearly-constant-velocity transition on state [px, vx, py, vy].
LinearGaussian ncv_transition(double sampling_period, double sigma_q);

/// Position-only observation [px, py] with isotropic noise sigma_r^2 I.
LinearGaussian position_observation(double sigma_r);

/// One ground-truth object: alive on [birth, death], initial state drawn
/// from the given birth mixture component.
struct ObjectSpec {
    int birth = 1;
    int death = 1;
    int birth_component = 0;
};

struct ScenarioConfig {
    int steps = 100;
    double sampling_period = 0.5;
    double sigma_q = 1.8;
    double survival_probability = 0.99;
    double sigma_r = 2.0;
    double detection_probability = 0.9;
    double clutter_rate = 50.0;
    Box region;
    GaussianMixture birth_intensity;
    std::vector<ObjectSpec> objects;

    /// The two-dimensional four-object scenario with the nominal parameter
    /// values (staggered births at steps 1, 1, 11, 21; deaths 100, 70, 90, 100).
    static ScenarioConfig nominal();

    [[nodiscard]] MotionModel motion() const;
    [[nodiscard]] MeasurementModel measurement() const;
    [[nodiscard]] BirthModel birth() const;
    [[nodiscard]] ClutterModel clutter() const;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

struct GroundTruth {
    int steps = 0;
    std::vector<Trajectory> trajectories;
};

/// Samples ground-truth trajectories: initial states from the configured
/// birth components, then noisy NCV propagation. Deterministic given rng.
GroundTruth build_nominal_scenario(const ScenarioConfig& config, RandomStream& rng);

/// Per-step measurement sets: each alive object detected with probability
/// p^D producing z ~ N(Hx, R), plus Poisson clutter uniform on the region.
std::vector<std::vector<Eigen::VectorXd>> simulate_measurements(const GroundTruth& truth,
                                                                const MeasurementModel& meas,
                                                                const ClutterModel& clutter,
                                                                RandomStream& rng);

/// States of ground-truth objects alive at step k (1 <= k <= steps).
std::vector<Eigen::VectorXd> truth_states_at(const GroundTruth& truth, int k);

/// JSON-lines export, one trajectory per line:
/// {"id": n, "start": t, "states": [[px, vx, py, vy], ...]}.
void write_trajectories_jsonl(std::ostream& os, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories_jsonl(std::istream& is);

}  // namespace mots
