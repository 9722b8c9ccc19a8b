#include "mots/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mots {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer applied to the combined word.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : root_(seed), engine_(seed) {}

RandomStream RandomStream::child(std::uint64_t index) const {
    return RandomStream(mix_seed(root_, index));
}

double RandomStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::gaussian() {
    // Box-Muller; u1 shifted into (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd RandomStream::gaussian_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = gaussian();
    return v;
}

int RandomStream::poisson(double rate) {
    if (rate < 0.0) throw std::invalid_argument("poisson: negative rate");
    int total = 0;
    // Knuth's product method; split large rates so exp stays in range.
    while (rate > 500.0) {
        rate -= 500.0;
        const double chunk_limit = std::exp(-500.0);
        double p = 1.0;
        int k = -1;
        do {
            ++k;
            p *= 1.0 - uniform();
        } while (p > chunk_limit);
        total += k;
    }
    const double limit = std::exp(-rate);
    double p = 1.0;
    int k = -1;
    do {
        ++k;
        p *= 1.0 - uniform();
    } while (p > limit);
    return total + k;
}

std::size_t RandomStream::categorical(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("categorical: empty weights");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw std::invalid_argument("categorical: weights must be finite and nonnegative");
        }
        sum += w;
    }
    if (sum <= 0.0) throw std::invalid_argument("categorical: weights sum to zero");
    const double u = uniform() * sum;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // Round-off fallthrough: last index with positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
}

namespace {

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double log_gamma_a = std::lgamma(a);
    if (x < a + 1.0) {
        // Series representation.
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - log_gamma_a);
    }
    // Continued fraction for Q(a, x) = 1 - P(a, x).
    const double tiny = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    const double q = h * std::exp(-x + a * std::log(x) - log_gamma_a);
    return 1.0 - q;
}

}  // namespace

double chi2_quantile(double prob, int dof) {
    if (dof < 1) throw std::invalid_argument("chi2_quantile: dof must be >= 1");
    if (prob <= 0.0) return 0.0;
    if (prob >= 1.0) return std::numeric_limits<double>::infinity();
    const double a = 0.5 * dof;
    double lo = 0.0;
    double hi = std::max(4.0 * dof, 64.0);
    while (gamma_p(a, 0.5 * hi) < prob) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (gamma_p(a, 0.5 * mid) < prob) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double log_sum_exp(std::span<const double> log_values) {
    if (log_values.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(log_values.begin(), log_values.end());
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (double v : log_values) sum += std::exp(v - m);
    return m + std::log(sum);
}

std::vector<double> normalized_from_log(std::span<const double> log_weights) {
    std::vector<double> out(log_weights.size(), 0.0);
    if (log_weights.empty()) return out;
    const double m = *std::max_element(log_weights.begin(), log_weights.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        out[i] = std::exp(log_weights[i] - m);
        sum += out[i];
    }
    for (double& w : out) w /= sum;
    return out;
}

}  // namespace mots
