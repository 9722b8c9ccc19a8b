#include "mots/models.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mots {

double Box::volume() const {
    double v = 1.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) v *= hi(i) - lo(i);
    return v;
}

bool Box::contains(const Eigen::VectorXd& z) const {
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (z(i) < lo(i) || z(i) > hi(i)) return false;
    }
    return true;
}

Eigen::VectorXd Box::sample(RandomStream& rng) const {
    Eigen::VectorXd z(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        z(i) = lo(i) + rng.uniform() * (hi(i) - lo(i));
    }
    return z;
}

LinearGaussian ncv_transition(double sampling_period, double sigma_q) {
    const double ts = sampling_period;
    Eigen::Matrix2d f_block;
    f_block << 1.0, ts, 0.0, 1.0;
    Eigen::Matrix2d q_block;
    q_block << ts * ts * ts / 3.0, ts * ts / 2.0, ts * ts / 2.0, ts;
    q_block *= sigma_q * sigma_q;

    LinearGaussian model;
    model.matrix = Eigen::MatrixXd::Zero(4, 4);
    model.noise = Eigen::MatrixXd::Zero(4, 4);
    model.matrix.block<2, 2>(0, 0) = f_block;
    model.matrix.block<2, 2>(2, 2) = f_block;
    model.noise.block<2, 2>(0, 0) = q_block;
    model.noise.block<2, 2>(2, 2) = q_block;
    return model;
}

LinearGaussian position_observation(double sigma_r) {
    LinearGaussian model;
    model.matrix = Eigen::MatrixXd::Zero(2, 4);
    model.matrix(0, 0) = 1.0;
    model.matrix(1, 2) = 1.0;
    model.noise = sigma_r * sigma_r * Eigen::MatrixXd::Identity(2, 2);
    return model;
}

ScenarioConfig ScenarioConfig::nominal() {
    ScenarioConfig c;
    c.region.lo = Eigen::Vector2d(0.0, 0.0);
    c.region.hi = Eigen::Vector2d(2000.0, 2000.0);

    const Eigen::Vector4d cov_diag(225.0, 100.0, 225.0, 100.0);
    const std::vector<Eigen::Vector4d> means = {
        {85.0, 0.0, 140.0, 0.0}, {-5.0, 0.0, 220.0, 0.0}, {7.0, 0.0, 50.0, 0.0}};
    for (const auto& m : means) {
        c.birth_intensity.components.push_back(
            GaussianComponent{0.1, m, cov_diag.asDiagonal()});
    }
    c.objects = {{1, 100, 0}, {1, 70, 1}, {11, 90, 2}, {21, 100, 0}};
    return c;
}

MotionModel ScenarioConfig::motion() const {
    return MotionModel{ncv_transition(sampling_period, sigma_q), survival_probability};
}

MeasurementModel ScenarioConfig::measurement() const {
    return MeasurementModel{position_observation(sigma_r), detection_probability};
}

BirthModel ScenarioConfig::birth() const { return BirthModel{birth_intensity}; }

ClutterModel ScenarioConfig::clutter() const { return ClutterModel{clutter_rate, region}; }

void ScenarioConfig::validate() const {
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (steps < 1) throw std::invalid_argument("scenario: steps must be >= 1");
    if (sampling_period <= 0.0) throw std::invalid_argument("scenario: sampling period must be > 0");
    if (sigma_q < 0.0 || sigma_r < 0.0) throw std::invalid_argument("scenario: negative noise std");
    if (!in_unit(survival_probability) || !in_unit(detection_probability)) {
        throw std::invalid_argument("scenario: probabilities must lie in [0, 1]");
    }
    if (clutter_rate < 0.0) throw std::invalid_argument("scenario: clutter rate must be >= 0");
    if (region.lo.size() != region.hi.size() || region.lo.size() == 0 ||
        ((region.hi - region.lo).array() <= 0.0).any()) {
        throw std::invalid_argument("scenario: region must be a nonempty box");
    }
    for (const auto& obj : objects) {
        if (obj.birth < 1 || obj.death > steps || obj.death < obj.birth) {
            throw std::invalid_argument("scenario: object death before birth or outside 1..K");
        }
        if (obj.birth_component < 0 ||
            obj.birth_component >= static_cast<int>(birth_intensity.size())) {
            throw std::invalid_argument("scenario: birth component index out of range");
        }
    }
}

GroundTruth build_nominal_scenario(const ScenarioConfig& config, RandomStream& rng) {
    config.validate();
    const MotionModel motion = config.motion();
    GroundTruth truth;
    truth.steps = config.steps;
    for (const auto& obj : config.objects) {
        const auto& comp = config.birth_intensity.components[obj.birth_component];
        Trajectory t;
        t.start = obj.birth;
        t.states.push_back(sample_gaussian(comp, rng));
        for (int k = obj.birth + 1; k <= obj.death; ++k) {
            GaussianComponent noise{1.0, motion.transition.matrix * t.states.back(),
                                    motion.transition.noise};
            t.states.push_back(sample_gaussian(noise, rng));
        }
        truth.trajectories.push_back(std::move(t));
    }
    return truth;
}

std::vector<std::vector<Eigen::VectorXd>> simulate_measurements(const GroundTruth& truth,
                                                                const MeasurementModel& meas,
                                                                const ClutterModel& clutter,
                                                                RandomStream& rng) {
    std::vector<std::vector<Eigen::VectorXd>> out(static_cast<std::size_t>(truth.steps));
    for (int k = 1; k <= truth.steps; ++k) {
        auto& scan = out[static_cast<std::size_t>(k - 1)];
        for (const auto& t : truth.trajectories) {
            if (!t.alive_at(k)) continue;
            if (rng.uniform() < meas.detection_probability) {
                GaussianComponent z{1.0, meas.observation.matrix * t.state_at(k),
                                    meas.observation.noise};
                scan.push_back(sample_gaussian(z, rng));
            }
        }
        const int clutter_count = rng.poisson(clutter.rate);
        for (int i = 0; i < clutter_count; ++i) scan.push_back(clutter.region.sample(rng));
    }
    return out;
}

std::vector<Eigen::VectorXd> truth_states_at(const GroundTruth& truth, int k) {
    if (k < 1 || k > truth.steps) throw std::invalid_argument("truth_states_at: step out of range");
    return trajectories_states_at(truth.trajectories, k);
}

void write_trajectories_jsonl(std::ostream& os, const std::vector<Trajectory>& trajectories) {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        nlohmann::json line;
        line["id"] = i;
        line["start"] = trajectories[i].start;
        auto& states = line["states"] = nlohmann::json::array();
        for (const auto& x : trajectories[i].states) {
            states.push_back(std::vector<double>(x.data(), x.data() + x.size()));
        }
        os << line.dump() << '\n';
    }
}

std::vector<Trajectory> read_trajectories_jsonl(std::istream& is) {
    std::vector<Trajectory> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Trajectory t;
        t.start = j.at("start").get<int>();
        for (const auto& s : j.at("states")) {
            const auto values = s.get<std::vector<double>>();
            t.states.push_back(
                Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace mots
