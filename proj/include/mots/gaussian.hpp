#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "mots/random.hpp"

namespace mots {

/// Eigenvalue floor applied after covariance subtractions.
inline constexpr double kCovarianceFloor = 1e-12;

/// Weighted Gaussian in state (or measurement) space.
struct GaussianComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;

    [[nodiscard]] Eigen::Index dim() const { return mean.size(); }
};

/// Ordered list of weighted Gaussians; represents every intensity and
/// single-object density in the pipeline. Total mass is the expected
/// cardinality when used as an intensity.
struct GaussianMixture {
    std::vector<GaussianComponent> components;

    [[nodiscard]] bool empty() const { return components.empty(); }
    [[nodiscard]] std::size_t size() const { return components.size(); }
    [[nodiscard]] double total_mass() const;
};

/// Linear-Gaussian map x -> N(matrix * x, noise). Used as motion (F, Q)
/// and observation (H, R) models.
struct LinearGaussian {
    Eigen::MatrixXd matrix;
    Eigen::MatrixXd noise;
};

/// Symmetrizes and clamps eigenvalues below kCovarianceFloor.
Eigen::MatrixXd make_spd(const Eigen::MatrixXd& m);

/// Checks weight >= 0, symmetry (1e-9 relative) and positive eigenvalues.
/// Throws std::invalid_argument on violation.
void validate_component(const GaussianComponent& c);

/// log N(x; mean, cov). Throws std::runtime_error if cov is not positive
/// definite (reports the matrix condition).
double log_gaussian_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                        const Eigen::MatrixXd& cov);

/// log of the mixture intensity value sum_i w_i N(x; m_i, P_i).
double log_intensity(const GaussianMixture& gm, const Eigen::VectorXd& x);

/// Propagates a component through the motion model: mean' = F m,
/// P' = F P F^T + Q, weight unchanged.
GaussianComponent gaussian_predict(const GaussianComponent& c, const LinearGaussian& model);

struct KalmanResult {
    GaussianComponent posterior;  // weight = prior weight * predictive likelihood
    double log_likelihood = 0.0;  // log N(z; H m, H P H^T + R)
};

/// Standard Kalman update of a single component by measurement z.
KalmanResult kalman_update(const GaussianComponent& c, const LinearGaussian& model,
                           const Eigen::VectorXd& z);

struct BackwardConditional {
    GaussianComponent conditional;  // density of x given the later state y
    double log_likelihood = 0.0;    // log N(y; F m, F P F^T + Q)
};

/// One-step backward conditioning of a component on the successor state y:
/// with S = F P F^T + Q and G = P F^T S^-1, the conditional is
/// N(m + G (y - F m), P - G S G^T).
BackwardConditional backward_condition(const GaussianComponent& c, const LinearGaussian& model,
                                       const Eigen::VectorXd& y);

/// Single Gaussian matching the mixture's mass, mean and covariance.
GaussianComponent moment_match(const GaussianMixture& gm);

/// Prunes components below prune_threshold, merges components within
/// squared Mahalanobis distance merge_threshold of the strongest survivor
/// (measured in the strongest component's metric), and keeps at most
/// max_components by weight. Merging preserves mass; pruning and capping
/// do not renormalize.
GaussianMixture reduce_mixture(const GaussianMixture& gm, double prune_threshold,
                               double merge_threshold, std::size_t max_components);

/// True iff the squared Mahalanobis distance of z under the predictive
/// density N(H m, H P H^T + R) is within gate_threshold.
bool ellipsoidal_gate(const GaussianComponent& c, const LinearGaussian& model,
                      const Eigen::VectorXd& z, double gate_threshold);

/// Draw from N(mean, covariance). Deterministic given the stream state.
Eigen::VectorXd sample_gaussian(const GaussianComponent& c, RandomStream& rng);

}  // namespace mots
