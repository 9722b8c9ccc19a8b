#include "mots/smoother.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace mots {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double safe_log(double v) { return v > 0.0 ? std::log(v) : kLogZeroWeight; }

BackwardKernelContext::PredictedGaussian make_predicted(const Eigen::VectorXd& mean,
                                                        const Eigen::MatrixXd& cov,
                                                        const LinearGaussian& transition) {
    BackwardKernelContext::PredictedGaussian out;
    out.mean = mean;
    out.covariance = cov;
    out.predicted_mean = transition.matrix * mean;
    const Eigen::MatrixXd cross = cov * transition.matrix.transpose();  // P F^T
    const Eigen::MatrixXd s = transition.matrix * cross + transition.noise;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("backward kernel: predicted covariance not positive definite");
    }
    out.chol_lower = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < out.chol_lower.rows(); ++i) {
        log_det += std::log(out.chol_lower(i, i));
    }
    out.log_norm = -0.5 * static_cast<double>(s.rows()) * kLog2Pi - log_det;
    out.gain = llt.solve(cross.transpose()).transpose();  // P F^T S^-1
    out.conditional_cov = make_spd(cov - out.gain * s * out.gain.transpose());
    return out;
}

double gate_distance(const BackwardKernelContext::PredictedGaussian& pg,
                     const Eigen::VectorXd& y) {
    return pg.chol_lower.triangularView<Eigen::Lower>()
        .solve(y - pg.predicted_mean)
        .squaredNorm();
}

GaussianComponent condition_on(const BackwardKernelContext::PredictedGaussian& pg,
                               const Eigen::VectorXd& y) {
    return GaussianComponent{1.0, pg.mean + pg.gain * (y - pg.predicted_mean),
                             pg.conditional_cov};
}

}  // namespace

BackwardKernelContext::BackwardKernelContext(const PmbDensity& pmb, const MotionModel& motion,
                                             const BirthModel& birth, double gate_threshold)
    : gate_threshold_(gate_threshold),
      survival_(motion.survival_probability),
      log_survival_(safe_log(motion.survival_probability)) {
    bernoullis_.reserve(pmb.bernoullis.size());
    for (const auto& bern : pmb.bernoullis) {
        BernoulliCache cache;
        cache.existence = bern.existence;
        const double ended = 1.0 - bern.existence * survival_;
        cache.log_weight_ended = safe_log(ended);
        cache.existence_ended =
            ended > 0.0 ? bern.existence * (1.0 - survival_) / ended : 0.0;
        if (!bern.density.empty()) {
            cache.usable = true;
            const GaussianComponent single = bern.density.size() == 1
                                                 ? bern.density.components.front()
                                                 : moment_match(bern.density);
            cache.predicted = make_predicted(single.mean, single.covariance, motion.transition);
        }
        bernoullis_.push_back(std::move(cache));
    }

    for (const auto& c : pmb.ppp.mixture.components) {
        if (c.weight <= 0.0 || survival_ <= 0.0) continue;
        ppp_.push_back(make_predicted(c.mean, c.covariance, motion.transition));
        ppp_log_survival_weight_.push_back(log_survival_ + std::log(c.weight));
    }

    birth_ = birth.intensity;
    for (const auto& c : birth_.components) {
        Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("backward kernel: birth covariance not positive definite");
        }
        Eigen::MatrixXd l = llt.matrixL();
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
        birth_log_norm_.push_back(-0.5 * static_cast<double>(l.rows()) * kLog2Pi - log_det);
        birth_chol_.push_back(std::move(l));
    }

    for (const auto& c : pmb.ppp.mixture.components) {
        GaussianComponent scaled = c;
        scaled.weight *= 1.0 - survival_;
        if (scaled.weight > 0.0) kernel_ppp_.components.push_back(std::move(scaled));
    }
}

double BackwardKernelContext::bernoulli_gate_distance(std::size_t i,
                                                      const Eigen::VectorXd& y) const {
    return gate_distance(bernoullis_[i].predicted, y);
}

double BackwardKernelContext::bernoulli_log_transition(std::size_t i,
                                                       double gate_distance) const {
    return bernoullis_[i].predicted.log_norm - 0.5 * gate_distance;
}

GaussianComponent BackwardKernelContext::bernoulli_conditional(std::size_t i,
                                                               const Eigen::VectorXd& y) const {
    return condition_on(bernoullis_[i].predicted, y);
}

double BackwardKernelContext::log_birth_intensity(const Eigen::VectorXd& y) const {
    std::vector<double> terms;
    terms.reserve(birth_.size());
    for (std::size_t b = 0; b < birth_.size(); ++b) {
        const auto& c = birth_.components[b];
        if (c.weight <= 0.0) continue;
        const double d2 =
            birth_chol_[b].triangularView<Eigen::Lower>().solve(y - c.mean).squaredNorm();
        terms.push_back(std::log(c.weight) + birth_log_norm_[b] - 0.5 * d2);
    }
    return log_sum_exp(terms);
}

std::vector<double> BackwardKernelContext::ppp_log_responsibilities(
    const Eigen::VectorXd& y) const {
    std::vector<double> out;
    out.reserve(ppp_.size());
    for (std::size_t r = 0; r < ppp_.size(); ++r) {
        out.push_back(ppp_log_survival_weight_[r] + ppp_[r].log_norm -
                      0.5 * gate_distance(ppp_[r], y));
    }
    return out;
}

GaussianComponent BackwardKernelContext::ppp_conditional(std::size_t r,
                                                         const Eigen::VectorXd& y) const {
    return condition_on(ppp_[r], y);
}

LocalHypothesisTable build_local_hypotheses(const BackwardKernelContext& ctx,
                                            const std::vector<Trajectory>& y, int k) {
    LocalHypothesisTable table;
    table.step = k;
    table.measurement_bernoullis = ctx.bernoullis().size();
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (y[j].start == k + 1) {
            table.live.push_back(static_cast<int>(j));
        } else if (y[j].start > k + 1) {
            table.later.push_back(static_cast<int>(j));
        } else {
            throw std::invalid_argument(
                "build_local_hypotheses: trajectory starts at or before the current step");
        }
    }
    const std::size_t m_k = table.measurement_bernoullis;
    table.hypotheses.resize(m_k + table.live.size() + table.later.size());
    table.extend_lookup.resize(table.live.size());

    // Forward Bernoullis: ended-at-k plus one extend hypothesis per gated
    // live trajectory.
    for (std::size_t i = 0; i < m_k; ++i) {
        const auto& cache = ctx.bernoullis()[i];
        LocalHypothesis ended;
        ended.kind = HypothesisKind::EndedAtStep;
        ended.log_weight = cache.log_weight_ended;
        ended.existence = cache.existence_ended;
        if (cache.usable) {
            ended.conditional =
                GaussianComponent{1.0, cache.predicted.mean, cache.predicted.covariance};
        }
        table.hypotheses[i].push_back(std::move(ended));

        if (!cache.usable || cache.existence <= 0.0) continue;
        const double log_r = std::log(cache.existence);
        for (std::size_t jj = 0; jj < table.live.size(); ++jj) {
            const auto& traj = y[static_cast<std::size_t>(table.live[jj])];
            const Eigen::VectorXd& y1 = traj.states.front();
            const double d2 = ctx.bernoulli_gate_distance(i, y1);
            if (d2 > ctx.gate_threshold()) continue;
            LocalHypothesis extend;
            extend.kind = HypothesisKind::ExtendsLiveTrajectory;
            extend.log_weight = log_r + ctx.log_survival() + ctx.bernoulli_log_transition(i, d2);
            extend.existence = 1.0;
            extend.trajectory_index = table.live[jj];
            extend.conditional = ctx.bernoulli_conditional(i, y1);
            table.extend_lookup[jj].emplace_back(static_cast<int>(i),
                                                 static_cast<int>(table.hypotheses[i].size()));
            table.hypotheses[i].push_back(std::move(extend));
        }
    }

    // Bernoullis created by trajectories present at k+1: nonexistent, or
    // detected as born-at-k+1 / extended backward through the PPP.
    for (std::size_t jj = 0; jj < table.live.size(); ++jj) {
        const std::size_t i = m_k + jj;
        LocalHypothesis none;
        none.kind = HypothesisKind::NewTrajectoryNonexistent;
        table.hypotheses[i].push_back(std::move(none));

        const auto& traj = y[static_cast<std::size_t>(table.live[jj])];
        const Eigen::VectorXd& y1 = traj.states.front();
        LocalHypothesis detected;
        detected.kind = HypothesisKind::NewTrajectoryDetected;
        detected.existence = 1.0;
        detected.trajectory_index = table.live[jj];
        const double log_birth = ctx.log_birth_intensity(y1);
        detected.extension_log_responsibilities = ctx.ppp_log_responsibilities(y1);
        const double log_ppp = log_sum_exp(detected.extension_log_responsibilities);
        const double log_w = log_sum_exp(std::array{log_birth, log_ppp});
        if (std::isfinite(log_w)) {
            detected.log_weight = log_w;
            detected.keep_probability = std::exp(log_birth - log_w);
        } else {
            detected.log_weight = kLogZeroWeight;
            detected.keep_probability = 1.0;
        }
        table.hypotheses[i].push_back(std::move(detected));
    }

    // Trajectories born after k+1 carry over deterministically.
    for (std::size_t jj = 0; jj < table.later.size(); ++jj) {
        LocalHypothesis past;
        past.kind = HypothesisKind::DeterministicPast;
        past.existence = 1.0;
        past.trajectory_index = table.later[jj];
        table.hypotheses[m_k + table.live.size() + jj].push_back(std::move(past));
    }

    table.kernel_ppp = ctx.kernel_ppp();
    return table;
}

LocalHypothesisTable build_local_hypotheses(const PmbDensity& pmb,
                                            const std::vector<Trajectory>& y, int k,
                                            const MotionModel& motion, const BirthModel& birth,
                                            double gate_threshold) {
    const BackwardKernelContext ctx(pmb, motion, birth, gate_threshold);
    return build_local_hypotheses(ctx, y, k);
}

CostMatrix build_cost_matrix(const LocalHypothesisTable& table) {
    const std::size_t m_k = table.measurement_bernoullis;
    const std::size_t rows = table.live.size();

    // Columns: forward Bernoullis reachable by at least one extend
    // hypothesis, then the dedicated new-trajectory column of each row.
    std::vector<int> col_of_bernoulli(m_k, -1);
    CostMatrix out;
    for (std::size_t jj = 0; jj < rows; ++jj) {
        for (const auto& [i, hyp_index] : table.extend_lookup[jj]) {
            if (col_of_bernoulli[static_cast<std::size_t>(i)] < 0) {
                col_of_bernoulli[static_cast<std::size_t>(i)] =
                    static_cast<int>(out.col_labels.size());
                out.col_labels.push_back(i);
            }
        }
    }
    const std::size_t shared_cols = out.col_labels.size();
    for (std::size_t jj = 0; jj < rows; ++jj) {
        out.col_labels.push_back(static_cast<int>(m_k + jj));
    }

    out.costs = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(rows),
                                          static_cast<Eigen::Index>(shared_cols + rows),
                                          kForbiddenCost);
    for (std::size_t jj = 0; jj < rows; ++jj) {
        out.row_labels.push_back(table.live[jj]);
        for (const auto& [i, hyp_index] : table.extend_lookup[jj]) {
            const auto& extend =
                table.hypotheses[static_cast<std::size_t>(i)][static_cast<std::size_t>(hyp_index)];
            const auto& ended = table.hypotheses[static_cast<std::size_t>(i)].front();
            out.costs(static_cast<Eigen::Index>(jj),
                      col_of_bernoulli[static_cast<std::size_t>(i)]) =
                -(extend.log_weight - ended.log_weight);
        }
        const auto& detected = table.hypotheses[m_k + jj][1];
        out.costs(static_cast<Eigen::Index>(jj), static_cast<Eigen::Index>(shared_cols + jj)) =
            -detected.log_weight;
    }

    double offset = 0.0;
    for (std::size_t i = 0; i < m_k; ++i) offset += table.hypotheses[i].front().log_weight;
    out.cost_offset = -offset;
    return out;
}

SampledHypothesis sample_global_hypothesis(const CostMatrix& cost, std::size_t max_hypotheses,
                                           RandomStream& rng) {
    const std::vector<Assignment> ranked = murty_kbest(cost, max_hypotheses);
    if (ranked.empty()) {
        throw std::runtime_error("sample_global_hypothesis: no feasible global hypothesis");
    }
    std::vector<double> log_weights;
    log_weights.reserve(ranked.size());
    for (const auto& a : ranked) log_weights.push_back(-a.total_cost);
    const std::vector<double> weights = normalized_from_log(log_weights);
    const std::size_t pick = rng.categorical(weights);

    SampledHypothesis out;
    out.assignment = ranked[pick];
    out.log_probability = std::log(weights[pick]);
    out.row_to_bernoulli.reserve(out.assignment.row_to_col.size());
    for (int col : out.assignment.row_to_col) {
        out.row_to_bernoulli.push_back(cost.col_labels[static_cast<std::size_t>(col)]);
    }
    return out;
}

TrajectoryParticle sample_backward_step(const TrajectoryParticle& particle,
                                        const BackwardKernelContext& ctx,
                                        const LocalHypothesisTable& table,
                                        const SampledHypothesis& sampled,
                                        const SmootherConfig& config, RandomStream& rng) {
    const int k = table.step;
    const std::size_t m_k = table.measurement_bernoullis;
    TrajectoryParticle out;
    out.log_weight = particle.log_weight + sampled.log_probability;

    std::vector<bool> bernoulli_matched(m_k, false);
    for (std::size_t jj = 0; jj < table.live.size(); ++jj) {
        const auto& source =
            particle.trajectories[static_cast<std::size_t>(table.live[jj])];
        const int label = sampled.row_to_bernoulli[jj];
        Trajectory extended;
        if (label < static_cast<int>(m_k)) {
            bernoulli_matched[static_cast<std::size_t>(label)] = true;
            const LocalHypothesis* extend = nullptr;
            for (const auto& [i, hyp_index] : table.extend_lookup[jj]) {
                if (i == label) {
                    extend = &table.hypotheses[static_cast<std::size_t>(i)]
                                              [static_cast<std::size_t>(hyp_index)];
                    break;
                }
            }
            if (extend == nullptr) {
                throw std::logic_error("sample_backward_step: assignment outside the gate");
            }
            extended.start = k;
            extended.states.reserve(source.states.size() + 1);
            extended.states.push_back(sample_gaussian(extend->conditional, rng));
            extended.states.insert(extended.states.end(), source.states.begin(),
                                   source.states.end());
        } else {
            const auto& detected = table.hypotheses[static_cast<std::size_t>(label)][1];
            if (rng.uniform() < detected.keep_probability) {
                extended = source;  // born at k+1
            } else {
                const std::vector<double> weights =
                    normalized_from_log(detected.extension_log_responsibilities);
                const std::size_t r = rng.categorical(weights);
                const GaussianComponent conditional =
                    ctx.ppp_conditional(r, source.states.front());
                extended.start = k;
                extended.states.reserve(source.states.size() + 1);
                extended.states.push_back(sample_gaussian(conditional, rng));
                extended.states.insert(extended.states.end(), source.states.begin(),
                                       source.states.end());
            }
        }
        out.trajectories.push_back(std::move(extended));
    }

    // Unmatched forward Bernoullis may materialize as trajectories that
    // ended at k.
    for (std::size_t i = 0; i < m_k; ++i) {
        if (bernoulli_matched[i]) continue;
        const auto& ended = table.hypotheses[i].front();
        if (ended.existence > 0.0 && rng.uniform() < ended.existence) {
            Trajectory dead;
            dead.start = k;
            dead.states.push_back(sample_gaussian(ended.conditional, rng));
            out.trajectories.push_back(std::move(dead));
        }
    }

    for (int idx : table.later) {
        out.trajectories.push_back(particle.trajectories[static_cast<std::size_t>(idx)]);
    }

    if (config.sample_undetected_ppp && !table.kernel_ppp.empty()) {
        std::vector<double> weights;
        weights.reserve(table.kernel_ppp.size());
        for (const auto& c : table.kernel_ppp.components) weights.push_back(c.weight);
        const int count = rng.poisson(table.kernel_ppp.total_mass());
        for (int n = 0; n < count; ++n) {
            const std::size_t c = rng.categorical(weights);
            Trajectory undetected;
            undetected.start = k;
            undetected.states.push_back(
                sample_gaussian(table.kernel_ppp.components[c], rng));
            out.trajectories.push_back(std::move(undetected));
        }
    }
    return out;
}

TrajectoryParticle init_particle(const PmbDensity& pmb_final, int final_step,
                                 const SmootherConfig& config, RandomStream& rng) {
    TrajectoryParticle particle;
    for (const auto& bern : pmb_final.bernoullis) {
        if (bern.existence <= 0.0 || bern.density.empty()) continue;
        if (rng.uniform() < bern.existence) {
            std::vector<double> weights;
            weights.reserve(bern.density.size());
            for (const auto& c : bern.density.components) weights.push_back(c.weight);
            const std::size_t c = bern.density.size() == 1 ? 0 : rng.categorical(weights);
            Trajectory t;
            t.start = final_step;
            t.states.push_back(sample_gaussian(bern.density.components[c], rng));
            particle.trajectories.push_back(std::move(t));
        }
    }
    if (config.sample_undetected_ppp && !pmb_final.ppp.mixture.empty()) {
        std::vector<double> weights;
        weights.reserve(pmb_final.ppp.mixture.size());
        for (const auto& c : pmb_final.ppp.mixture.components) weights.push_back(c.weight);
        const int count = rng.poisson(pmb_final.ppp.mass());
        for (int n = 0; n < count; ++n) {
            const std::size_t c = rng.categorical(weights);
            Trajectory t;
            t.start = final_step;
            t.states.push_back(sample_gaussian(pmb_final.ppp.mixture.components[c], rng));
            particle.trajectories.push_back(std::move(t));
        }
    }
    return particle;
}

std::vector<TrajectoryParticle> init_particles(const PmbDensity& pmb_final, int final_step,
                                               const SmootherConfig& config, RandomStream& rng) {
    std::vector<TrajectoryParticle> out;
    out.reserve(config.particle_count);
    for (std::size_t p = 0; p < config.particle_count; ++p) {
        RandomStream stream = rng.child(p);
        out.push_back(init_particle(pmb_final, final_step, config, stream));
    }
    return out;
}

std::vector<TrajectoryParticle> backward_simulate(const ForwardRecord& record,
                                                  const MotionModel& motion,
                                                  const BirthModel& birth,
                                                  const SmootherConfig& config,
                                                  RandomStream& rng) {
    const int horizon = record.horizon();
    if (horizon < 1) throw std::invalid_argument("backward_simulate: empty forward record");
    const int state_dim = static_cast<int>(motion.transition.matrix.rows());
    const double gate_threshold = config.gate_probability >= 1.0
                                      ? std::numeric_limits<double>::infinity()
                                      : chi2_quantile(config.gate_probability, state_dim);

    std::vector<BackwardKernelContext> contexts;
    contexts.reserve(static_cast<std::size_t>(horizon > 1 ? horizon - 1 : 0));
    for (int k = 1; k < horizon; ++k) {
        contexts.emplace_back(record.at_step(k).pmb, motion, birth, gate_threshold);
    }

    std::vector<TrajectoryParticle> particles;
    particles.reserve(config.particle_count);
    for (std::size_t p = 0; p < config.particle_count; ++p) {
        RandomStream stream = rng.child(p);
        TrajectoryParticle particle =
            init_particle(record.at_step(horizon).pmb, horizon, config, stream);
        for (int k = horizon - 1; k >= 1; --k) {
            const auto& ctx = contexts[static_cast<std::size_t>(k - 1)];
            const LocalHypothesisTable table =
                build_local_hypotheses(ctx, particle.trajectories, k);
            const CostMatrix cost = build_cost_matrix(table);
            const SampledHypothesis sampled =
                sample_global_hypothesis(cost, config.max_hypotheses, stream);
            particle = sample_backward_step(particle, ctx, table, sampled, config, stream);
        }
        particles.push_back(std::move(particle));
    }
    return particles;
}

std::vector<Trajectory> estimate_trajectories(const std::vector<TrajectoryParticle>& particles,
                                               double refine_radius) {
    if (particles.empty()) {
        throw std::invalid_argument("estimate_trajectories: empty particle list");
    }
    std::map<std::size_t, std::size_t> counts;
    for (const auto& p : particles) ++counts[p.trajectories.size()];
    std::size_t mode = 0;
    std::size_t mode_count = 0;
    for (const auto& [cardinality, count] : counts) {
        if (count > mode_count) {  // ties resolve toward the smaller cardinality
            mode = cardinality;
            mode_count = count;
        }
    }
    const TrajectoryParticle* best = nullptr;
    for (const auto& p : particles) {
        if (p.trajectories.size() != mode) continue;
        if (best == nullptr || p.log_weight > best->log_weight) best = &p;
    }
    std::vector<Trajectory> estimate = best->trajectories;
    if (refine_radius <= 0.0) return estimate;

    // Particle states are draws from the smoothing posterior; averaging the
    // nearest state per particle estimates the posterior mean and removes
    // the sampling spread from the reported trajectory.
    for (auto& trajectory : estimate) {
        for (int k = trajectory.start; k <= trajectory.end(); ++k) {
            const Eigen::VectorXd& reference = trajectory.state_at(k);
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(reference.size());
            std::size_t hits = 0;
            for (const auto& p : particles) {
                const Eigen::VectorXd* nearest = nullptr;
                double nearest_distance = refine_radius;
                for (const auto& other : p.trajectories) {
                    if (!other.alive_at(k)) continue;
                    const double d = (other.state_at(k) - reference).norm();
                    if (d <= nearest_distance) {
                        nearest_distance = d;
                        nearest = &other.state_at(k);
                    }
                }
                if (nearest != nullptr) {
                    sum += *nearest;
                    ++hits;
                }
            }
            if (hits > 0) {
                trajectory.states[static_cast<std::size_t>(k - trajectory.start)] =
                    sum / static_cast<double>(hits);
            }
        }
    }
    return estimate;
}

}  // namespace mots
