#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <vector>

#include "mots/gaussian.hpp"
#include "mots/models.hpp"

namespace mots {

/// Poisson intensity; total mass is the expected object count.
struct PoissonIntensity {
    GaussianMixture mixture;

    [[nodiscard]] double mass() const { return mixture.total_mass(); }
};

/// A possibly-existing object created by one measurement: existence
/// probability and unit-mass state density. The density is empty only in
/// the degenerate r = 0 case of an empty predicted intensity.
struct BernoulliComponent {
    double existence = 0.0;
    GaussianMixture density;
    int origin_measurement = -1;
};

/// The PMB filtering posterior extracted after the update, before the
/// Poisson approximation: undetected-object PPP plus one Bernoulli per
/// measurement.
struct PmbDensity {
    PoissonIntensity ppp;
    std::vector<BernoulliComponent> bernoullis;
};

struct FilterParams {
    double prune_threshold = 1e-4;
    double merge_threshold = 4.0;
    std::size_t max_components = 30;
    /// Gate probability; the chi-squared threshold is derived per
    /// measurement dimension. >= 1 disables gating.
    double gate_probability = 0.9999;
};

/// Everything stored per forward step k.
struct ForwardStep {
    PoissonIntensity predicted;                 // lambda_{k|k-1}
    PmbDensity pmb;                             // post-reduction posterior at k
    PoissonIntensity updated;                   // lambda_{k|k}
    std::vector<Eigen::VectorXd> estimates;
    std::vector<Eigen::VectorXd> measurements;
};

struct ForwardRecord {
    std::vector<ForwardStep> steps;

    [[nodiscard]] int horizon() const { return static_cast<int>(steps.size()); }
    [[nodiscard]] const ForwardStep& at_step(int k) const {
        return steps.at(static_cast<std::size_t>(k - 1));
    }
};

/// Prediction: birth components plus each prior component propagated
/// through the motion model with weight scaled by p^S.
PoissonIntensity phd_predict(const PoissonIntensity& prior, const MotionModel& motion,
                             const BirthModel& birth);

/// Update of the predicted intensity by a measurement set into a PMB: the
/// PPP keeps (1 - p^D) of the predicted intensity; each measurement z^i
/// creates a Bernoulli with
///   r^i = s / (lambda^C(z^i) + s),  s = <lambda, l(z^i|.) p^D>,
/// and density the normalized Kalman-updated mixture over components
/// passing the ellipsoidal gate (all components if none pass).
PmbDensity phd_update_to_pmb(const PoissonIntensity& predicted,
                             const std::vector<Eigen::VectorXd>& measurements,
                             const MeasurementModel& meas, const ClutterModel& clutter,
                             double gate_threshold);

/// Moment-matches every Bernoulli density to a single unit-mass Gaussian
/// and reduces the PPP mixture with the configured thresholds.
PmbDensity reduce_pmb(const PmbDensity& pmb, const FilterParams& params);

/// Best-fitting PPP: union of the PPP components and every Bernoulli
/// density scaled by its existence probability.
PoissonIntensity pmb_to_ppp(const PmbDensity& pmb);

/// Cardinality estimate n = mode of Poisson(mass) (ties toward the larger
/// value, i.e. floor(mass)), states are the n highest-weight means.
std::vector<Eigen::VectorXd> estimate_states(const PoissonIntensity& intensity);

/// Full forward recursion from an empty prior: predict, update to PMB,
/// reduce, store, approximate to PPP, estimate, for every scan.
ForwardRecord run_forward(const std::vector<std::vector<Eigen::VectorXd>>& measurements,
                          const MotionModel& motion, const MeasurementModel& meas,
                          const BirthModel& birth, const ClutterModel& clutter,
                          const FilterParams& params);

nlohmann::json forward_record_to_json(const ForwardRecord& record);
ForwardRecord forward_record_from_json(const nlohmann::json& j);

}  // namespace mots
