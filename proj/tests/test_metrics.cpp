#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "mots/metrics.hpp"
#include "mots/random.hpp"
#include "oracles.hpp"

using namespace mots;

namespace {

Eigen::VectorXd pt(double x, double y) { return Eigen::Vector2d(x, y); }

std::vector<Eigen::VectorXd> random_set(RandomStream& rng, int max_card, double spread) {
    const int n = static_cast<int>(rng.uniform() * (max_card + 1));
    std::vector<Eigen::VectorXd> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(pt(rng.gaussian() * spread, rng.gaussian() * spread));
    }
    return out;
}

Trajectory scalar_trajectory(int start, std::initializer_list<double> positions) {
    Trajectory t;
    t.start = start;
    for (double p : positions) t.states.push_back(Eigen::VectorXd::Constant(1, p));
    return t;
}

}  // namespace

TEST_CASE("gospa examples") {
    const GospaParams params;
    SUBCASE("identical singletons") {
        const auto r = gospa({pt(0, 0)}, {pt(0, 0)}, params);
        CHECK(r.total == 0.0);
    }
    SUBCASE("single pair below cutoff is pure localization") {
        const auto r = gospa({pt(0, 0)}, {pt(3, 0)}, params);
        CHECK(r.total == doctest::Approx(3.0));
        CHECK(r.localization == doctest::Approx(3.0));
        CHECK(r.missed == 0.0);
        CHECK(r.false_detection == 0.0);
    }
    SUBCASE("far estimate is a false detection at half cutoff") {
        const auto r = gospa({pt(0, 0), pt(20, 0)}, {pt(0, 0)}, params);
        CHECK(r.total == doctest::Approx(5.0));
        CHECK(r.false_detection == doctest::Approx(5.0));
        CHECK(r.localization == 0.0);
        CHECK(r.missed == 0.0);
    }
    SUBCASE("empty versus nonempty") {
        const auto r = gospa({}, {pt(0, 0), pt(1, 1)}, params);
        CHECK(r.total == doctest::Approx(10.0));
        CHECK(r.missed == doctest::Approx(10.0));
    }
    SUBCASE("position projection ignores velocity components") {
        GospaParams projected;
        projected.position_dims = {0, 2};
        Eigen::VectorXd a(4), b(4);
        a << 1, 99, 2, -99;
        b << 4, 0, 6, 0;
        const auto r = gospa({a}, {b}, projected);
        CHECK(r.total == doctest::Approx(5.0));  // 3-4-5 triangle on positions
    }
}

TEST_CASE("gospa identity, symmetry and triangle inequality") {
    const GospaParams params;
    RandomStream rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = random_set(rng, 4, 6.0);
        const auto y = random_set(rng, 4, 6.0);
        const auto z = random_set(rng, 4, 6.0);
        CHECK(gospa(x, x, params).total == doctest::Approx(0.0).epsilon(1e-12));
        const auto xy = gospa(x, y, params);
        const auto yx = gospa(y, x, params);
        CHECK(xy.total == doctest::Approx(yx.total).epsilon(1e-10));
        CHECK(xy.missed == doctest::Approx(yx.false_detection).epsilon(1e-10));
        CHECK(xy.false_detection == doctest::Approx(yx.missed).epsilon(1e-10));
        const auto xz = gospa(x, z, params);
        const auto zy = gospa(z, y, params);
        CHECK(xy.total <= xz.total + zy.total + 1e-9);
    }
}

TEST_CASE("gospa equals brute-force partial assignment minimization") {
    const GospaParams params;
    RandomStream rng(43);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = random_set(rng, 4, 5.0);
        const auto y = random_set(rng, 4, 5.0);
        const auto fast = gospa(x, y, params);
        const auto brute = oracles::brute_gospa(x, y, params.cutoff);
        CHECK(fast.total == doctest::Approx(brute.total).epsilon(1e-10));
        CHECK(fast.localization + fast.missed + fast.false_detection ==
              doctest::Approx(fast.total).epsilon(1e-12));
    }
}

TEST_CASE("tgospa hand cases") {
    const TgospaParams params;
    SUBCASE("identical sets cost nothing") {
        const std::vector<Trajectory> set{scalar_trajectory(1, {0.0, 1.0, 2.0}),
                                          scalar_trajectory(2, {5.0, 6.0})};
        const auto r = tgospa(set, set, params, 4);
        CHECK(r.total == doctest::Approx(0.0));
    }
    SUBCASE("missing a length-5 trajectory costs five half-cutoffs") {
        const std::vector<Trajectory> truth{scalar_trajectory(1, {0, 1, 2, 3, 4})};
        const auto r = tgospa({}, truth, params, 5);
        CHECK(r.total == doctest::Approx(25.0));
        CHECK(r.missed == doctest::Approx(25.0));
        CHECK(r.localization == 0.0);
        CHECK(r.track_switch == 0.0);
    }
    SUBCASE("identity swap after a crossing costs gamma per swapped track") {
        const std::vector<Trajectory> truth{scalar_trajectory(1, {0, 1, 2, 3}),
                                            scalar_trajectory(1, {3, 2, 1, 0})};
        const std::vector<Trajectory> estimate{scalar_trajectory(1, {0, 1, 1, 0}),
                                               scalar_trajectory(1, {3, 2, 2, 3})};
        const auto r = tgospa(estimate, truth, params, 4);
        CHECK(r.total == doctest::Approx(2.0));
        CHECK(r.track_switch == doctest::Approx(2.0));
        CHECK(r.localization == doctest::Approx(0.0));
    }
    SUBCASE("late estimate birth: the association parks while the estimate is dead") {
        const std::vector<Trajectory> truth{scalar_trajectory(1, {0, 0, 0, 0})};
        const std::vector<Trajectory> estimate{scalar_trajectory(3, {0, 0})};
        const auto r = tgospa(estimate, truth, params, 4);
        CHECK(r.missed == doctest::Approx(10.0));  // truth alone at steps 1-2
        CHECK(r.track_switch == doctest::Approx(0.0));
        CHECK(r.total == doctest::Approx(10.0));
    }
}

TEST_CASE("tgospa equals brute-force assignment-sequence minimization") {
    const TgospaParams params;
    RandomStream rng(47);
    for (int trial = 0; trial < 60; ++trial) {
        const int steps = 2 + static_cast<int>(rng.uniform() * 3);
        auto random_trajectories = [&](int max_card) {
            const int n = static_cast<int>(rng.uniform() * (max_card + 1));
            std::vector<Trajectory> out;
            for (int i = 0; i < n; ++i) {
                const int start = 1 + static_cast<int>(rng.uniform() * steps);
                const int len = 1 + static_cast<int>(rng.uniform() * (steps - start + 1));
                Trajectory t;
                t.start = start;
                for (int k = 0; k < len; ++k) {
                    t.states.push_back(Eigen::VectorXd::Constant(1, rng.gaussian() * 6.0));
                }
                out.push_back(std::move(t));
            }
            return out;
        };
        const auto estimate = random_trajectories(2);
        const auto truth = random_trajectories(2);
        const auto fast = tgospa(estimate, truth, params, steps);
        const double brute = oracles::brute_tgospa_total(estimate, truth, params.cutoff,
                                                         params.switch_cost, steps);
        CHECK(fast.total == doctest::Approx(brute).epsilon(1e-10));
        CHECK(fast.localization + fast.missed + fast.false_detection + fast.track_switch ==
              doctest::Approx(fast.total).epsilon(1e-12));
    }
}
