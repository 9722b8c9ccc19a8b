#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "mots/gaussian.hpp"

using namespace mots;

namespace {

GaussianComponent scalar(double w, double m, double v) {
    return GaussianComponent{w, Eigen::VectorXd::Constant(1, m),
                             Eigen::MatrixXd::Constant(1, 1, v)};
}

LinearGaussian scalar_model(double f, double q) {
    return LinearGaussian{Eigen::MatrixXd::Constant(1, 1, f), Eigen::MatrixXd::Constant(1, 1, q)};
}

double normal_pdf(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) /
           std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace

TEST_CASE("gaussian_predict") {
    SUBCASE("identity transition adds noise") {
        const auto out = gaussian_predict(scalar(1.0, 0.0, 1.0), scalar_model(1.0, 1.0));
        CHECK(out.weight == 1.0);
        CHECK(out.mean(0) == 0.0);
        CHECK(out.covariance(0, 0) == 2.0);
    }
    SUBCASE("deterministic scaling") {
        const auto out = gaussian_predict(scalar(0.5, 2.0, 1.0), scalar_model(2.0, 0.0));
        CHECK(out.weight == 0.5);
        CHECK(out.mean(0) == 4.0);
        CHECK(out.covariance(0, 0) == 4.0);
    }
    SUBCASE("2D constant-velocity block against direct matrix arithmetic") {
        const double ts = 0.5;
        const double sq = 1.8;
        Eigen::MatrixXd f(2, 2);
        f << 1.0, ts, 0.0, 1.0;
        Eigen::MatrixXd q(2, 2);
        q << ts * ts * ts / 3.0, ts * ts / 2.0, ts * ts / 2.0, ts;
        q *= sq * sq;
        GaussianComponent c{1.0, Eigen::Vector2d(1.0, 1.0), Eigen::Matrix2d::Identity()};
        const auto out = gaussian_predict(c, LinearGaussian{f, q});
        CHECK(out.mean(0) == doctest::Approx(1.5).epsilon(1e-15));
        CHECK(out.mean(1) == doctest::Approx(1.0).epsilon(1e-15));
        const Eigen::MatrixXd expected = f * c.covariance * f.transpose() + q;
        CHECK((out.covariance - expected).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(out.covariance(0, 0) == doctest::Approx(1.385).epsilon(1e-12));
        CHECK(out.covariance(0, 1) == doctest::Approx(0.905).epsilon(1e-12));
        CHECK(out.covariance(1, 1) == doctest::Approx(2.62).epsilon(1e-12));
    }
    SUBCASE("dimension mismatch is a contract violation") {
        GaussianComponent c{1.0, Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()};
        CHECK_THROWS_AS((void)gaussian_predict(c, scalar_model(1.0, 1.0)), std::invalid_argument);
    }
}

TEST_CASE("kalman_update") {
    SUBCASE("scalar Kalman algebra") {
        const auto result = kalman_update(scalar(1.0, 0.0, 1.0), scalar_model(1.0, 1.0),
                                          Eigen::VectorXd::Zero(1));
        CHECK(result.posterior.mean(0) == doctest::Approx(0.0));
        CHECK(result.posterior.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::exp(result.log_likelihood) ==
              doctest::Approx(0.28209479177387814).epsilon(1e-12));
        CHECK(result.posterior.weight == doctest::Approx(0.28209479177387814).epsilon(1e-12));
    }
    SUBCASE("zero innovation keeps the mean") {
        GaussianComponent c{1.0, Eigen::Vector2d(3.0, -1.0), Eigen::Matrix2d::Identity() * 2.0};
        LinearGaussian h{Eigen::MatrixXd::Identity(2, 2), Eigen::Matrix2d::Identity()};
        const auto result = kalman_update(c, h, Eigen::Vector2d(3.0, -1.0));
        CHECK((result.posterior.mean - c.mean).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("uninformative measurement keeps the prior") {
        const auto result = kalman_update(scalar(1.0, 2.0, 3.0), scalar_model(1.0, 1e12),
                                          Eigen::VectorXd::Constant(1, 100.0));
        CHECK(result.posterior.mean(0) == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(result.posterior.covariance(0, 0) == doctest::Approx(3.0).epsilon(1e-6));
    }
    SUBCASE("singular innovation covariance is a numerical error") {
        GaussianComponent degenerate{1.0, Eigen::VectorXd::Zero(1),
                                     Eigen::MatrixXd::Zero(1, 1)};
        CHECK_THROWS_AS((void)kalman_update(degenerate, scalar_model(1.0, 0.0),
                                            Eigen::VectorXd::Zero(1)),
                        std::runtime_error);
    }
}

TEST_CASE("backward_condition") {
    SUBCASE("scalar conditioning algebra") {
        const auto result = backward_condition(scalar(1.0, 0.0, 1.0), scalar_model(1.0, 1.0),
                                               Eigen::VectorXd::Constant(1, 2.0));
        CHECK(result.conditional.mean(0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(result.conditional.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::exp(result.log_likelihood) ==
              doctest::Approx(normal_pdf(2.0, 0.0, 2.0)).epsilon(1e-12));
    }
    SUBCASE("deterministic inverse collapses to the mean with floored covariance") {
        GaussianComponent c{1.0, Eigen::Vector2d(1.0, 2.0), Eigen::Matrix2d::Identity()};
        LinearGaussian identity{Eigen::MatrixXd::Identity(2, 2),
                                Eigen::Matrix2d::Identity() * kCovarianceFloor};
        const auto result = backward_condition(c, identity, Eigen::Vector2d(1.0, 2.0));
        CHECK((result.conditional.mean - c.mean).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(result.conditional.covariance(0, 0) <= 2e-9);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(result.conditional.covariance);
        CHECK(es.eigenvalues().minCoeff() >= kCovarianceFloor * 0.99);
    }
    SUBCASE("4D case matches joint-Gaussian Schur conditioning") {
        Eigen::MatrixXd f(4, 4);
        f << 1, 0.5, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0.5, 0, 0, 0, 1;
        Eigen::MatrixXd q = Eigen::MatrixXd::Identity(4, 4) * 0.3;
        q(0, 1) = q(1, 0) = 0.1;
        Eigen::MatrixXd p = Eigen::MatrixXd::Identity(4, 4) * 2.0;
        p(2, 3) = p(3, 2) = 0.5;
        Eigen::VectorXd m(4);
        m << 1, -1, 2, 0.5;
        Eigen::VectorXd y(4);
        y << 2, -0.5, 2.5, 0.4;

        const auto result = backward_condition(GaussianComponent{1.0, m, p}, LinearGaussian{f, q}, y);

        // Independent oracle: condition the joint normal of (x, y) directly.
        const Eigen::MatrixXd s = f * p * f.transpose() + q;
        const Eigen::MatrixXd cross = p * f.transpose();
        const Eigen::VectorXd cond_mean = m + cross * s.inverse() * (y - f * m);
        const Eigen::MatrixXd cond_cov = p - cross * s.inverse() * cross.transpose();
        CHECK((result.conditional.mean - cond_mean).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((result.conditional.covariance - cond_cov).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("scalar Monte Carlo histogram conditioning") {
        // Sample (x, y) from the forward joint, keep x where y lands near
        // the conditioning point, compare with the analytic conditional.
        RandomStream rng(77);
        const double y_star = 1.2;
        const double window = 0.05;
        double sum = 0.0;
        double sum_sq = 0.0;
        int kept = 0;
        for (int i = 0; i < 500000; ++i) {
            const double x = rng.gaussian();               // prior N(0, 1)
            const double y = x + rng.gaussian();           // y = x + N(0, 1)
            if (std::abs(y - y_star) < window) {
                sum += x;
                sum_sq += x * x;
                ++kept;
            }
        }
        REQUIRE(kept > 1000);
        const double mc_mean = sum / kept;
        const double mc_var = sum_sq / kept - mc_mean * mc_mean;
        const auto result = backward_condition(scalar(1.0, 0.0, 1.0), scalar_model(1.0, 1.0),
                                               Eigen::VectorXd::Constant(1, y_star));
        CHECK(std::abs(mc_mean - result.conditional.mean(0)) < 0.02);
        CHECK(std::abs(mc_var - result.conditional.covariance(0, 0)) < 0.03);
    }
}

TEST_CASE("moment_match") {
    SUBCASE("single component is the identity") {
        GaussianMixture gm{{scalar(0.7, 1.5, 2.0)}};
        const auto out = moment_match(gm);
        CHECK(out.weight == doctest::Approx(0.7));
        CHECK(out.mean(0) == doctest::Approx(1.5));
        CHECK(out.covariance(0, 0) == doctest::Approx(2.0));
    }
    SUBCASE("two equal components with spread term") {
        GaussianMixture gm{{scalar(0.5, 0.0, 1.0), scalar(0.5, 2.0, 1.0)}};
        const auto out = moment_match(gm);
        CHECK(out.weight == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(out.mean(0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(out.covariance(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
    }
    SUBCASE("identical components merge to tripled weight") {
        GaussianMixture gm{{scalar(0.2, 3.0, 1.5), scalar(0.2, 3.0, 1.5), scalar(0.2, 3.0, 1.5)}};
        const auto out = moment_match(gm);
        CHECK(out.weight == doctest::Approx(0.6).epsilon(1e-13));
        CHECK(out.mean(0) == doctest::Approx(3.0));
        CHECK(out.covariance(0, 0) == doctest::Approx(1.5).epsilon(1e-13));
    }
    SUBCASE("empty or zero mass is a contract violation") {
        CHECK_THROWS_AS((void)moment_match(GaussianMixture{}), std::invalid_argument);
        CHECK_THROWS_AS((void)moment_match(GaussianMixture{{scalar(0.0, 0.0, 1.0)}}),
                        std::invalid_argument);
    }
    SUBCASE("mass preserved and spread term PSD on random mixtures") {
        RandomStream rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            GaussianMixture gm;
            const int n = 1 + static_cast<int>(rng.uniform() * 5);
            for (int i = 0; i < n; ++i) {
                Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(
                    2, 2, [&](Eigen::Index, Eigen::Index) { return rng.gaussian(); });
                gm.components.push_back(GaussianComponent{
                    0.1 + rng.uniform(), Eigen::Vector2d(rng.gaussian(), rng.gaussian()),
                    a * a.transpose() + 0.1 * Eigen::Matrix2d::Identity()});
            }
            const auto out = moment_match(gm);
            CHECK(out.weight == doctest::Approx(gm.total_mass()).epsilon(1e-12));
            Eigen::MatrixXd weighted_cov = Eigen::MatrixXd::Zero(2, 2);
            for (const auto& c : gm.components) {
                weighted_cov += (c.weight / out.weight) * c.covariance;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.covariance - weighted_cov);
            CHECK(es.eigenvalues().minCoeff() >= -1e-12);
        }
    }
}

TEST_CASE("reduce_mixture") {
    SUBCASE("all weights below threshold gives the empty mixture") {
        GaussianMixture gm{{scalar(1e-6, 0.0, 1.0), scalar(5e-5, 2.0, 1.0)}};
        CHECK(reduce_mixture(gm, 1e-4, 4.0, 100).empty());
    }
    SUBCASE("identical components merge with summed weight") {
        GaussianMixture gm{{scalar(0.3, 1.0, 1.0), scalar(0.3, 1.0, 1.0)}};
        const auto out = reduce_mixture(gm, 0.0, 4.0, 100);
        REQUIRE(out.size() == 1);
        CHECK(out.components[0].weight == doctest::Approx(0.6).epsilon(1e-13));
        CHECK(out.components[0].mean(0) == doctest::Approx(1.0));
    }
    SUBCASE("cap keeps the largest weights") {
        GaussianMixture gm;
        for (int i = 0; i < 5; ++i) gm.components.push_back(scalar(0.1 * (i + 1), 100.0 * i, 1.0));
        const auto out = reduce_mixture(gm, 0.0, 4.0, 3);
        REQUIRE(out.size() == 3);
        CHECK(out.components[0].weight == doctest::Approx(0.5));
        CHECK(out.components[1].weight == doctest::Approx(0.4));
        CHECK(out.components[2].weight == doctest::Approx(0.3));
    }
    SUBCASE("no-op parameters give the identity on distinct components") {
        GaussianMixture gm{{scalar(0.5, 0.0, 1.0), scalar(0.2, 50.0, 2.0), scalar(0.9, -30.0, 0.5)}};
        const auto out = reduce_mixture(gm, 0.0, 0.0, 1000);
        REQUIRE(out.size() == 3);
        CHECK(out.components[0].weight == doctest::Approx(0.9));  // sorted by weight
        CHECK(out.components[1].weight == doctest::Approx(0.5));
        CHECK(out.components[2].weight == doctest::Approx(0.2));
        CHECK(gm.total_mass() == doctest::Approx(out.total_mass()).epsilon(1e-13));
    }
    SUBCASE("merging preserves mass") {
        RandomStream rng(3);
        GaussianMixture gm;
        for (int i = 0; i < 20; ++i) gm.components.push_back(scalar(0.1 + rng.uniform(), rng.gaussian() * 3.0, 0.5));
        const auto out = reduce_mixture(gm, 0.0, 4.0, 1000);
        CHECK(out.total_mass() == doctest::Approx(gm.total_mass()).epsilon(1e-12));
    }
}

TEST_CASE("ellipsoidal_gate") {
    const auto c = scalar(1.0, 0.0, 0.5);
    SUBCASE("zero distance always passes") {
        CHECK(ellipsoidal_gate(c, scalar_model(1.0, 0.5), Eigen::VectorXd::Zero(1), 1e-6));
    }
    SUBCASE("scalar distances") {
        // S = 1: offset 3 has squared distance 9.
        CHECK_FALSE(ellipsoidal_gate(c, scalar_model(1.0, 0.5),
                                     Eigen::VectorXd::Constant(1, 3.0), 4.0));
        // S = 4: offset 3 has squared distance 2.25.
        const auto wide = scalar(1.0, 0.0, 2.0);
        CHECK(ellipsoidal_gate(wide, scalar_model(1.0, 2.0),
                               Eigen::VectorXd::Constant(1, 3.0), 4.0));
    }
    SUBCASE("nonpositive threshold is a contract violation") {
        CHECK_THROWS_AS((void)ellipsoidal_gate(c, scalar_model(1.0, 0.5),
                                               Eigen::VectorXd::Zero(1), 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("sample_gaussian") {
    SUBCASE("floored zero covariance collapses to the mean") {
        RandomStream rng(1);
        GaussianComponent c{1.0, Eigen::Vector2d(5.0, -2.0), Eigen::Matrix2d::Zero()};
        const auto x = sample_gaussian(c, rng);
        CHECK((x - c.mean).norm() < 1e-4);
    }
    SUBCASE("law of large numbers for a standard normal") {
        RandomStream rng(2);
        const auto c = scalar(1.0, 0.0, 1.0);
        double sum = 0.0;
        double sum_sq = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const double x = sample_gaussian(c, rng)(0);
            sum += x;
            sum_sq += x * x;
        }
        CHECK(std::abs(sum / n) < 0.02);
        CHECK(std::abs(sum_sq / n - 1.0) < 0.05);
    }
    SUBCASE("identical stream state gives identical samples") {
        const auto c = scalar(1.0, 0.0, 1.0);
        RandomStream a(99);
        RandomStream b(99);
        for (int i = 0; i < 10; ++i) {
            CHECK(sample_gaussian(c, a)(0) == sample_gaussian(c, b)(0));
        }
    }
}

TEST_CASE("covariance outputs stay symmetric positive definite") {
    RandomStream rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(
            3, 3, [&](Eigen::Index, Eigen::Index) { return rng.gaussian(); });
        GaussianComponent c{1.0, rng.gaussian_vector(3),
                            a * a.transpose() + 0.05 * Eigen::Matrix3d::Identity()};
        Eigen::MatrixXd h = Eigen::MatrixXd::NullaryExpr(
            2, 3, [&](Eigen::Index, Eigen::Index) { return rng.gaussian(); });
        LinearGaussian model{h, Eigen::Matrix2d::Identity() * (0.01 + rng.uniform())};
        const auto kr = kalman_update(c, model, rng.gaussian_vector(2));
        validate_component(kr.posterior);

        Eigen::MatrixXd f = Eigen::MatrixXd::NullaryExpr(
            3, 3, [&](Eigen::Index, Eigen::Index) { return rng.gaussian(); });
        LinearGaussian motion{f, 0.5 * Eigen::Matrix3d::Identity()};
        const auto bc = backward_condition(c, motion, rng.gaussian_vector(3));
        validate_component(bc.conditional);
    }
}
