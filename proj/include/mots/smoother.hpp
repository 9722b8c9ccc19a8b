#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

#include "mots/assignment.hpp"
#include "mots/gaussian.hpp"
#include "mots/models.hpp"
#include "mots/phd_filter.hpp"
#include "mots/random.hpp"
#include "mots/trajectory.hpp"

namespace mots {

/// Stand-in for log(0) when a hypothesis weight is exactly zero; keeps the
/// assignment costs finite while making the hypothesis negligible.
inline constexpr double kLogZeroWeight = -700.0;

struct SmootherConfig {
    std::size_t particle_count = 1000;
    std::size_t max_hypotheses = 100;  // Murty truncation per particle per step
    double gate_probability = 0.9999;  // backward gate, chi-squared in state dimension
    bool sample_undetected_ppp = false;
    double estimator_radius = 3.0;     // see estimate_trajectories
};

/// One draw from the multi-trajectory posterior. Particles are equally
/// weighted; log_weight accumulates the log probability of the sampled
/// global hypotheses as bookkeeping for the estimator's tie-break.
struct TrajectoryParticle {
    std::vector<Trajectory> trajectories;
    double log_weight = 0.0;
};

enum class HypothesisKind {
    EndedAtStep,              // forward Bernoulli not matched beyond k
    ExtendsLiveTrajectory,    // forward Bernoulli prepends a state to a trajectory
    NewTrajectoryNonexistent, // trajectory-created Bernoulli, absent
    NewTrajectoryDetected,    // trajectory-created Bernoulli, present
    DeterministicPast,        // trajectory born after k+1, carried unchanged
};

/// One way a single backward-kernel Bernoulli relates to the trajectory
/// evidence. The matched trajectory set has at most one element
/// (trajectory_index, or -1 for the empty set).
struct LocalHypothesis {
    HypothesisKind kind = HypothesisKind::EndedAtStep;
    double log_weight = 0.0;
    double existence = 0.0;
    int trajectory_index = -1;

    /// EndedAtStep: the Bernoulli density frozen as a length-1 trajectory
    /// at k. ExtendsLiveTrajectory: the backward conditional of the
    /// Bernoulli density on the trajectory's earliest state.
    GaussianComponent conditional;

    /// NewTrajectoryDetected only: probability the trajectory was born at
    /// k+1 (kept as-is) versus extended backward through the PPP.
    double keep_probability = 0.0;
    /// NewTrajectoryDetected only: per-PPP-component log responsibilities
    /// for the backward extension draw.
    std::vector<double> extension_log_responsibilities;
};

/// Per-step precomputation shared by every particle: predicted moments,
/// Cholesky factors, backward gains and conditional covariances for each
/// Bernoulli and PPP component of the stored PMB, plus the birth intensity
/// evaluation cache and the Eq.-28 kernel PPP.
class BackwardKernelContext {
public:
    BackwardKernelContext(const PmbDensity& pmb, const MotionModel& motion,
                          const BirthModel& birth, double gate_threshold);

    struct PredictedGaussian {
        Eigen::VectorXd mean;            // component mean
        Eigen::MatrixXd covariance;      // component covariance
        Eigen::VectorXd predicted_mean;  // F m
        Eigen::MatrixXd chol_lower;      // L with L L^T = F P F^T + Q
        double log_norm = 0.0;           // log normalizer of N(.; F m, S)
        Eigen::MatrixXd gain;            // P F^T S^-1
        Eigen::MatrixXd conditional_cov; // P - G S G^T, floored
    };

    struct BernoulliCache {
        double existence = 0.0;
        bool usable = false;  // false when the forward density is empty (r = 0)
        PredictedGaussian predicted;
        double log_weight_ended = kLogZeroWeight;  // log(1 - r p^S)
        double existence_ended = 0.0;              // r (1 - p^S) / (1 - r p^S)
    };

    [[nodiscard]] const std::vector<BernoulliCache>& bernoullis() const { return bernoullis_; }
    [[nodiscard]] std::size_t ppp_size() const { return ppp_.size(); }
    [[nodiscard]] double gate_threshold() const { return gate_threshold_; }
    [[nodiscard]] double log_survival() const { return log_survival_; }
    [[nodiscard]] const GaussianMixture& kernel_ppp() const { return kernel_ppp_; }

    /// Squared Mahalanobis distance of y under N(F m, S) for Bernoulli i.
    [[nodiscard]] double bernoulli_gate_distance(std::size_t i, const Eigen::VectorXd& y) const;
    [[nodiscard]] double bernoulli_log_transition(std::size_t i, double gate_distance) const;
    [[nodiscard]] GaussianComponent bernoulli_conditional(std::size_t i,
                                                          const Eigen::VectorXd& y) const;

    /// log lambda^B(y).
    [[nodiscard]] double log_birth_intensity(const Eigen::VectorXd& y) const;
    /// Per-PPP-component log(p^S w_r N(y; F m_r, S_r)).
    [[nodiscard]] std::vector<double> ppp_log_responsibilities(const Eigen::VectorXd& y) const;
    [[nodiscard]] GaussianComponent ppp_conditional(std::size_t r, const Eigen::VectorXd& y) const;

private:
    std::vector<BernoulliCache> bernoullis_;
    std::vector<PredictedGaussian> ppp_;
    std::vector<double> ppp_log_survival_weight_;
    GaussianMixture birth_;
    std::vector<Eigen::MatrixXd> birth_chol_;
    std::vector<double> birth_log_norm_;
    GaussianMixture kernel_ppp_;
    double gate_threshold_ = 0.0;
    double survival_ = 1.0;
    double log_survival_ = 0.0;
};

/// The backward kernel at step k conditioned on the trajectory set over
/// k+1..K: per-Bernoulli local hypothesis lists. Bernoulli order: the m_k
/// forward Bernoullis, then one Bernoulli per trajectory alive at k+1
/// (start == k+1), then one per trajectory born after k+1.
struct LocalHypothesisTable {
    int step = 0;  // k
    std::size_t measurement_bernoullis = 0;  // m_k
    std::vector<int> live;   // indices into Y with start == k+1
    std::vector<int> later;  // indices into Y with start > k+1
    std::vector<std::vector<LocalHypothesis>> hypotheses;
    /// Per live position: (bernoulli index, index within its hypothesis
    /// list) of each gated extend hypothesis.
    std::vector<std::vector<std::pair<int, int>>> extend_lookup;
    GaussianMixture kernel_ppp;
};

LocalHypothesisTable build_local_hypotheses(const BackwardKernelContext& ctx,
                                            const std::vector<Trajectory>& y, int k);

/// Convenience overload building the per-step context internally.
LocalHypothesisTable build_local_hypotheses(const PmbDensity& pmb,
                                            const std::vector<Trajectory>& y, int k,
                                            const MotionModel& motion, const BirthModel& birth,
                                            double gate_threshold);

/// Association problem over the table: rows are the live trajectories,
/// columns the assignable forward Bernoullis plus one dedicated
/// new-trajectory column per row. cost_offset is set so that
/// total_cost + cost_offset = -log(unnormalized global hypothesis weight).
/// Column labels are Bernoulli indices (the new column of live position j
/// carries label m_k + j); row labels are Y indices.
CostMatrix build_cost_matrix(const LocalHypothesisTable& table);

struct SampledHypothesis {
    Assignment assignment;
    std::vector<int> row_to_bernoulli;  // decoded column labels per live position
    double log_probability = 0.0;       // of this draw among the ranked hypotheses
};

/// Ranked assignment (Murty, truncated at max_hypotheses) followed by a
/// categorical draw with max-shift normalized weights.
SampledHypothesis sample_global_hypothesis(const CostMatrix& cost, std::size_t max_hypotheses,
                                           RandomStream& rng);

/// Applies one sampled global hypothesis: extends assigned trajectories
/// backward, resolves new-trajectory Bernoullis (keep as born at k+1 or
/// extend through the PPP), spawns ended Bernoullis with probability
/// existence_ended, carries later-born trajectories, and optionally adds
/// a Poisson draw from the kernel PPP. Never mutates previously sampled
/// states; backward extension only prepends.
TrajectoryParticle sample_backward_step(const TrajectoryParticle& particle,
                                        const BackwardKernelContext& ctx,
                                        const LocalHypothesisTable& table,
                                        const SampledHypothesis& sampled,
                                        const SmootherConfig& config, RandomStream& rng);

/// Terminal-step initialization: every Bernoulli of the final PMB sampled
/// to exist with its probability, contributing a length-1 trajectory at
/// the final step; optionally a Poisson draw from the final PPP.
TrajectoryParticle init_particle(const PmbDensity& pmb_final, int final_step,
                                 const SmootherConfig& config, RandomStream& rng);
std::vector<TrajectoryParticle> init_particles(const PmbDensity& pmb_final, int final_step,
                                               const SmootherConfig& config, RandomStream& rng);

/// Full backward simulation: init at K, then one sampled backward step per
/// particle for k = K-1 down to 1. Particle p consumes the derived stream
/// rng.child(p), so results do not depend on processing order.
std::vector<TrajectoryParticle> backward_simulate(const ForwardRecord& record,
                                                  const MotionModel& motion,
                                                  const BirthModel& birth,
                                                  const SmootherConfig& config,
                                                  RandomStream& rng);

/// Modal trajectory-set cardinality across particles (ties toward the
/// smaller count); among those, the particle with the highest log_weight
/// (ties toward the lowest index). The selected particle's states are then
/// refined toward the posterior mean by averaging, per time step, the
/// nearest state within refine_radius from every particle; a radius <= 0
/// returns the raw particle.
std::vector<Trajectory> estimate_trajectories(const std::vector<TrajectoryParticle>& particles,
                                              double refine_radius = 3.0);

}  // namespace mots
