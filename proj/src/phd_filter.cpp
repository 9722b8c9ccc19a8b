#include "mots/phd_filter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace mots {

PoissonIntensity phd_predict(const PoissonIntensity& prior, const MotionModel& motion,
                             const BirthModel& birth) {
    PoissonIntensity out;
    out.mixture.components.reserve(birth.intensity.size() + prior.mixture.size());
    for (const auto& c : birth.intensity.components) out.mixture.components.push_back(c);
    for (const auto& c : prior.mixture.components) {
        GaussianComponent predicted = gaussian_predict(c, motion.transition);
        predicted.weight *= motion.survival_probability;
        out.mixture.components.push_back(std::move(predicted));
    }
    return out;
}

PmbDensity phd_update_to_pmb(const PoissonIntensity& predicted,
                             const std::vector<Eigen::VectorXd>& measurements,
                             const MeasurementModel& meas, const ClutterModel& clutter,
                             double gate_threshold) {
    const double pd = meas.detection_probability;
    const double log_pd = pd > 0.0 ? std::log(pd) : -std::numeric_limits<double>::infinity();
    const double clutter_intensity = clutter.intensity();

    PmbDensity out;
    out.ppp.mixture.components.reserve(predicted.mixture.size());
    for (const auto& c : predicted.mixture.components) {
        GaussianComponent scaled = c;
        scaled.weight *= 1.0 - pd;
        out.ppp.mixture.components.push_back(std::move(scaled));
    }

    out.bernoullis.reserve(measurements.size());
    for (std::size_t zi = 0; zi < measurements.size(); ++zi) {
        const Eigen::VectorXd& z = measurements[zi];
        if (!clutter.region.contains(z)) {
            static std::atomic<bool> warned{false};
            if (!warned.exchange(true)) {
                std::cerr << "warning: measurement outside clutter region; uniform clutter "
                             "intensity used anyway (further warnings suppressed)\n";
            }
        }

        BernoulliComponent bern;
        bern.origin_measurement = static_cast<int>(zi);

        std::vector<std::size_t> gated;
        gated.reserve(predicted.mixture.size());
        for (std::size_t j = 0; j < predicted.mixture.size(); ++j) {
            if (std::isinf(gate_threshold) ||
                ellipsoidal_gate(predicted.mixture.components[j], meas.observation, z,
                                 gate_threshold)) {
                gated.push_back(j);
            }
        }
        // A measurement gated out of every component still yields a
        // Bernoulli; its density falls back to the full mixture and its
        // existence probability comes out negligible.
        if (gated.empty()) {
            gated.resize(predicted.mixture.size());
            for (std::size_t j = 0; j < gated.size(); ++j) gated[j] = j;
        }

        std::vector<double> log_terms;
        log_terms.reserve(gated.size());
        std::vector<GaussianComponent> posteriors;
        posteriors.reserve(gated.size());
        for (std::size_t j : gated) {
            const auto& c = predicted.mixture.components[j];
            if (c.weight <= 0.0 || pd <= 0.0) continue;
            KalmanResult kr = kalman_update(c, meas.observation, z);
            log_terms.push_back(std::log(c.weight) + log_pd + kr.log_likelihood);
            posteriors.push_back(std::move(kr.posterior));
        }

        const double log_s = log_sum_exp(log_terms);
        if (std::isfinite(log_s)) {
            // r = s / (kappa + s) evaluated stably via the log ratio.
            if (clutter_intensity <= 0.0) {
                bern.existence = 1.0;
            } else {
                const double t = std::log(clutter_intensity) - log_s;
                bern.existence = 1.0 / (1.0 + std::exp(t));
            }
            const auto normalized = normalized_from_log(log_terms);
            for (std::size_t j = 0; j < posteriors.size(); ++j) {
                posteriors[j].weight = normalized[j];
                bern.density.components.push_back(std::move(posteriors[j]));
            }
        } else {
            bern.existence = 0.0;
        }
        out.bernoullis.push_back(std::move(bern));
    }
    return out;
}

PmbDensity reduce_pmb(const PmbDensity& pmb, const FilterParams& params) {
    PmbDensity out;
    out.ppp.mixture = reduce_mixture(pmb.ppp.mixture, params.prune_threshold,
                                     params.merge_threshold, params.max_components);
    out.bernoullis.reserve(pmb.bernoullis.size());
    for (const auto& bern : pmb.bernoullis) {
        BernoulliComponent reduced;
        reduced.existence = bern.existence;
        reduced.origin_measurement = bern.origin_measurement;
        if (!bern.density.empty()) {
            GaussianComponent matched = moment_match(bern.density);
            matched.weight = 1.0;
            reduced.density.components.push_back(std::move(matched));
        }
        out.bernoullis.push_back(std::move(reduced));
    }
    return out;
}

PoissonIntensity pmb_to_ppp(const PmbDensity& pmb) {
    PoissonIntensity out;
    out.mixture.components.reserve(pmb.ppp.mixture.size() + pmb.bernoullis.size());
    for (const auto& c : pmb.ppp.mixture.components) out.mixture.components.push_back(c);
    for (const auto& bern : pmb.bernoullis) {
        for (const auto& c : bern.density.components) {
            GaussianComponent scaled = c;
            scaled.weight *= bern.existence;
            out.mixture.components.push_back(std::move(scaled));
        }
    }
    return out;
}

std::vector<Eigen::VectorXd> estimate_states(const PoissonIntensity& intensity) {
    const double mass = intensity.mass();
    const std::size_t cardinality =
        mass > 0.0 ? static_cast<std::size_t>(std::floor(mass)) : 0;
    std::vector<const GaussianComponent*> ranked;
    ranked.reserve(intensity.mixture.size());
    for (const auto& c : intensity.mixture.components) ranked.push_back(&c);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto* a, const auto* b) { return a->weight > b->weight; });

    std::vector<Eigen::VectorXd> out;
    for (std::size_t i = 0; i < ranked.size() && i < cardinality; ++i) {
        out.push_back(ranked[i]->mean);
    }
    return out;
}

ForwardRecord run_forward(const std::vector<std::vector<Eigen::VectorXd>>& measurements,
                          const MotionModel& motion, const MeasurementModel& meas,
                          const BirthModel& birth, const ClutterModel& clutter,
                          const FilterParams& params) {
    const double gate_threshold =
        params.gate_probability >= 1.0
            ? std::numeric_limits<double>::infinity()
            : chi2_quantile(params.gate_probability,
                            static_cast<int>(meas.observation.matrix.rows()));

    ForwardRecord record;
    record.steps.reserve(measurements.size());
    PoissonIntensity prior;
    for (const auto& scan : measurements) {
        ForwardStep step;
        step.measurements = scan;
        step.predicted = phd_predict(prior, motion, birth);
        const PmbDensity raw = phd_update_to_pmb(step.predicted, scan, meas, clutter,
                                                 gate_threshold);
        step.pmb = reduce_pmb(raw, params);
        step.updated = pmb_to_ppp(step.pmb);
        step.estimates = estimate_states(step.updated);
        prior = step.updated;
        record.steps.push_back(std::move(step));
    }
    return record;
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                             static_cast<Eigen::Index>(values.size()));
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows.front().size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    return m;
}

nlohmann::json mixture_to_json(const GaussianMixture& gm) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : gm.components) {
        out.push_back({{"weight", c.weight},
                       {"mean", vector_to_json(c.mean)},
                       {"covariance", matrix_to_json(c.covariance)}});
    }
    return out;
}

GaussianMixture mixture_from_json(const nlohmann::json& j) {
    GaussianMixture gm;
    for (const auto& cj : j) {
        gm.components.push_back(GaussianComponent{cj.at("weight").get<double>(),
                                                  vector_from_json(cj.at("mean")),
                                                  matrix_from_json(cj.at("covariance"))});
    }
    return gm;
}

}  // namespace

nlohmann::json forward_record_to_json(const ForwardRecord& record) {
    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t i = 0; i < record.steps.size(); ++i) {
        const auto& step = record.steps[i];
        nlohmann::json bernoullis = nlohmann::json::array();
        for (const auto& bern : step.pmb.bernoullis) {
            bernoullis.push_back({{"existence", bern.existence},
                                  {"origin_measurement", bern.origin_measurement},
                                  {"density", mixture_to_json(bern.density)}});
        }
        nlohmann::json measurements = nlohmann::json::array();
        for (const auto& z : step.measurements) measurements.push_back(vector_to_json(z));
        nlohmann::json estimates = nlohmann::json::array();
        for (const auto& x : step.estimates) estimates.push_back(vector_to_json(x));
        steps.push_back({{"step", i + 1},
                         {"predicted", mixture_to_json(step.predicted.mixture)},
                         {"ppp", mixture_to_json(step.pmb.ppp.mixture)},
                         {"bernoullis", std::move(bernoullis)},
                         {"updated", mixture_to_json(step.updated.mixture)},
                         {"estimates", std::move(estimates)},
                         {"measurements", std::move(measurements)}});
    }
    return nlohmann::json{{"steps", std::move(steps)}};
}

ForwardRecord forward_record_from_json(const nlohmann::json& j) {
    ForwardRecord record;
    for (const auto& sj : j.at("steps")) {
        ForwardStep step;
        step.predicted.mixture = mixture_from_json(sj.at("predicted"));
        step.pmb.ppp.mixture = mixture_from_json(sj.at("ppp"));
        for (const auto& bj : sj.at("bernoullis")) {
            BernoulliComponent bern;
            bern.existence = bj.at("existence").get<double>();
            bern.origin_measurement = bj.at("origin_measurement").get<int>();
            bern.density = mixture_from_json(bj.at("density"));
            step.pmb.bernoullis.push_back(std::move(bern));
        }
        step.updated.mixture = mixture_from_json(sj.at("updated"));
        for (const auto& xj : sj.at("estimates")) step.estimates.push_back(vector_from_json(xj));
        for (const auto& zj : sj.at("measurements")) {
            step.measurements.push_back(vector_from_json(zj));
        }
        record.steps.push_back(std::move(step));
    }
    return record;
}

}  // namespace mots
