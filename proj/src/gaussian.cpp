#include "mots/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mots {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

void require_dims(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("dimension mismatch in ") + what);
}

std::string condition_report(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    std::ostringstream os;
    os << "eigenvalues [" << es.eigenvalues().transpose() << "]";
    return os.str();
}

Eigen::LLT<Eigen::MatrixXd> cholesky_or_throw(const Eigen::MatrixXd& m, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error(std::string(what) + ": matrix not positive definite, " +
                                 condition_report(m));
    }
    return llt;
}

double log_pdf_with_llt(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& innovation) {
    const Eigen::MatrixXd& l = llt.matrixLLT();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
    log_det *= 2.0;
    const Eigen::VectorXd whitened = llt.matrixL().solve(innovation);
    return -0.5 * (static_cast<double>(innovation.size()) * kLog2Pi + log_det +
                   whitened.squaredNorm());
}

}  // namespace

double GaussianMixture::total_mass() const {
    return std::accumulate(components.begin(), components.end(), 0.0,
                           [](double acc, const GaussianComponent& c) { return acc + c.weight; });
}

Eigen::MatrixXd make_spd(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.eigenvalues().minCoeff() >= kCovarianceFloor) return sym;
    Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(kCovarianceFloor);
    return es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
}

void validate_component(const GaussianComponent& c) {
    if (!(c.weight >= 0.0)) throw std::invalid_argument("component weight must be >= 0");
    if (c.covariance.rows() != c.dim() || c.covariance.cols() != c.dim()) {
        throw std::invalid_argument("covariance shape does not match mean dimension");
    }
    const double scale = std::max(1.0, c.covariance.cwiseAbs().maxCoeff());
    if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw std::invalid_argument("covariance not symmetric within tolerance");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.covariance);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw std::invalid_argument("covariance not positive definite: " +
                                    condition_report(c.covariance));
    }
}

double log_gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Eigen::MatrixXd& cov) {
    require_dims(x.size() == mean.size() && cov.rows() == mean.size(), "log_gaussian_pdf");
    return log_pdf_with_llt(cholesky_or_throw(cov, "log_gaussian_pdf"), x - mean);
}

double log_intensity(const GaussianMixture& gm, const Eigen::VectorXd& x) {
    std::vector<double> terms;
    terms.reserve(gm.size());
    for (const auto& c : gm.components) {
        if (c.weight <= 0.0) continue;
        terms.push_back(std::log(c.weight) + log_gaussian_pdf(x, c.mean, c.covariance));
    }
    return log_sum_exp(terms);
}

GaussianComponent gaussian_predict(const GaussianComponent& c, const LinearGaussian& model) {
    require_dims(model.matrix.cols() == c.dim() && model.matrix.rows() == model.noise.rows(),
                 "gaussian_predict");
    GaussianComponent out;
    out.weight = c.weight;
    out.mean = model.matrix * c.mean;
    out.covariance = model.matrix * c.covariance * model.matrix.transpose() + model.noise;
    return out;
}

KalmanResult kalman_update(const GaussianComponent& c, const LinearGaussian& model,
                           const Eigen::VectorXd& z) {
    require_dims(model.matrix.cols() == c.dim() && z.size() == model.matrix.rows(),
                 "kalman_update");
    const Eigen::VectorXd predicted = model.matrix * c.mean;
    const Eigen::MatrixXd cross = c.covariance * model.matrix.transpose();  // P H^T
    const Eigen::MatrixXd s = model.matrix * cross + model.noise;
    const auto llt = cholesky_or_throw(s, "kalman_update innovation covariance");
    const Eigen::VectorXd innovation = z - predicted;

    KalmanResult result;
    result.log_likelihood = log_pdf_with_llt(llt, innovation);
    const Eigen::MatrixXd gain = llt.solve(cross.transpose()).transpose();  // P H^T S^-1
    result.posterior.weight = c.weight * std::exp(result.log_likelihood);
    result.posterior.mean = c.mean + gain * innovation;
    result.posterior.covariance = make_spd(c.covariance - gain * s * gain.transpose());
    return result;
}

BackwardConditional backward_condition(const GaussianComponent& c, const LinearGaussian& model,
                                       const Eigen::VectorXd& y) {
    require_dims(model.matrix.cols() == c.dim() && y.size() == model.matrix.rows(),
                 "backward_condition");
    const Eigen::VectorXd predicted = model.matrix * c.mean;
    const Eigen::MatrixXd cross = c.covariance * model.matrix.transpose();  // P F^T
    const Eigen::MatrixXd s = model.matrix * cross + model.noise;
    const auto llt = cholesky_or_throw(s, "backward_condition transition covariance");
    const Eigen::VectorXd innovation = y - predicted;

    BackwardConditional result;
    result.log_likelihood = log_pdf_with_llt(llt, innovation);
    const Eigen::MatrixXd gain = llt.solve(cross.transpose()).transpose();  // P F^T S^-1
    result.conditional.weight = 1.0;
    result.conditional.mean = c.mean + gain * innovation;
    result.conditional.covariance = make_spd(c.covariance - gain * s * gain.transpose());
    return result;
}

GaussianComponent moment_match(const GaussianMixture& gm) {
    const double mass = gm.total_mass();
    if (gm.empty() || mass <= 0.0) {
        throw std::invalid_argument("moment_match: empty mixture or zero mass");
    }
    const Eigen::Index n = gm.components.front().dim();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto& c : gm.components) {
        require_dims(c.dim() == n, "moment_match");
        mean += (c.weight / mass) * c.mean;
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& c : gm.components) {
        const Eigen::VectorXd d = c.mean - mean;
        cov += (c.weight / mass) * (c.covariance + d * d.transpose());
    }
    return GaussianComponent{mass, std::move(mean), 0.5 * (cov + cov.transpose())};
}

GaussianMixture reduce_mixture(const GaussianMixture& gm, double prune_threshold,
                               double merge_threshold, std::size_t max_components) {
    if (prune_threshold < 0.0 || merge_threshold < 0.0 || max_components < 1) {
        throw std::invalid_argument("reduce_mixture: invalid thresholds");
    }
    std::vector<GaussianComponent> pool;
    pool.reserve(gm.size());
    for (const auto& c : gm.components) {
        if (c.weight >= prune_threshold) pool.push_back(c);
    }

    std::vector<GaussianComponent> merged;
    std::vector<bool> used(pool.size(), false);
    std::size_t remaining = pool.size();
    while (remaining > 0) {
        std::size_t best = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (!used[i] && (best == pool.size() || pool[i].weight > pool[best].weight)) best = i;
        }
        const Eigen::LLT<Eigen::MatrixXd> llt(pool[best].covariance);
        GaussianMixture group;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            bool close = (i == best);
            if (!close && llt.info() == Eigen::Success) {
                const Eigen::VectorXd w = llt.matrixL().solve(pool[i].mean - pool[best].mean);
                close = w.squaredNorm() <= merge_threshold;
            }
            if (close) {
                group.components.push_back(pool[i]);
                used[i] = true;
                --remaining;
            }
        }
        merged.push_back(group.size() == 1 ? group.components.front() : moment_match(group));
    }

    std::stable_sort(merged.begin(), merged.end(),
                     [](const auto& a, const auto& b) { return a.weight > b.weight; });
    if (merged.size() > max_components) merged.resize(max_components);
    return GaussianMixture{std::move(merged)};
}

bool ellipsoidal_gate(const GaussianComponent& c, const LinearGaussian& model,
                      const Eigen::VectorXd& z, double gate_threshold) {
    if (!(gate_threshold > 0.0)) throw std::invalid_argument("gate threshold must be > 0");
    const Eigen::MatrixXd s =
        model.matrix * c.covariance * model.matrix.transpose() + model.noise;
    const auto llt = cholesky_or_throw(s, "ellipsoidal_gate innovation covariance");
    const Eigen::VectorXd w = llt.matrixL().solve(z - model.matrix * c.mean);
    return w.squaredNorm() <= gate_threshold;
}

Eigen::VectorXd sample_gaussian(const GaussianComponent& c, RandomStream& rng) {
    const auto llt = cholesky_or_throw(make_spd(c.covariance), "sample_gaussian");
    return c.mean + llt.matrixL() * rng.gaussian_vector(c.dim());
}

}  // namespace mots
