#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mots {

/// Mixes a seed with an index into a new seed (splitmix64 finalizer).
/// Pure function; the basis of all stream derivation in the toolkit.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

/// Seeded random stream. Streams derived via child() depend only on the
/// root seed and the child index, never on how much the parent has been
/// consumed, so derivation commutes with draw order.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    /// Independent stream with root mix_seed(root_seed(), index).
    [[nodiscard]] RandomStream child(std::uint64_t index) const;

    [[nodiscard]] std::uint64_t root_seed() const { return root_; }

    /// Uniform draw in [0, 1).
    double uniform();

    /// Standard normal draw (Box-Muller, one value per call).
    double gaussian();

    /// Vector of independent standard normal draws.
    Eigen::VectorXd gaussian_vector(Eigen::Index n);

    /// Poisson-distributed count. rate must be >= 0; rate 0 gives 0.
    int poisson(double rate);

    /// Index drawn proportional to the given nonnegative weights.
    /// Throws std::invalid_argument if the weights are empty, negative,
    /// or sum to zero.
    std::size_t categorical(std::span<const double> weights);

private:
    std::uint64_t root_;
    std::mt19937_64 engine_;
};

/// Quantile of the chi-squared distribution with `dof` degrees of freedom.
/// prob in (0, 1); prob >= 1 returns +infinity.
double chi2_quantile(double prob, int dof);

/// log(sum(exp(v))) with max-shift; -inf for an empty span.
double log_sum_exp(std::span<const double> log_values);

/// Normalized linear weights from log weights via max-shift.
std::vector<double> normalized_from_log(std::span<const double> log_weights);

}  // namespace mots
