#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "wp/dist.hpp"
#include "wp/errors.hpp"
#include "wp/poisson.hpp"
#include "wp/rng.hpp"

using namespace wp;

TEST_CASE("tv distance basics") {
    const Dist p({0.5, 0.5});
    CHECK(tv_distance(p, p) == doctest::Approx(0.0));
    CHECK(tv_distance(Dist::delta(2, 0), Dist::delta(2, 1)) == doctest::Approx(1.0));
    CHECK(tv_distance(Dist({0.5, 0.5}), Dist({0.8, 0.2})) == doctest::Approx(0.3));
    CHECK_THROWS_AS(tv_distance(p, Dist::uniform(3)), input_error);
}

TEST_CASE("dist validation") {
    CHECK_THROWS_AS(Dist({0.5, 0.6}), input_error);
    CHECK_THROWS_AS(Dist({-0.1, 1.1}), input_error);
    CHECK_THROWS_AS(Dist(std::vector<double>{}), input_error);
}

TEST_CASE("poissonized update closed forms") {
    // constant rule: image is always the point mass
    const UpdateRule c = UpdateRule::constant(Alphabet({"a", "b"}), "a");
    const Dist img = poissonized_update(c, 3.7, Dist({0.25, 0.75}));
    CHECK(img[0] == doctest::Approx(1.0));

    // kcore(2), d=2, p=delta_1: weight on "1" is Pr(Po(2) >= 1) = 1 - e^-2
    const UpdateRule k2 = UpdateRule::kcore(2);
    const Dist r2 = poissonized_update(k2, 2.0, Dist::delta(2, 1));
    CHECK(r2[1] == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));

    // kcore(3), d=4, p=delta_1: Pr(Po(4) >= 2) = 1 - e^-4 (1 + 4)
    const UpdateRule k3 = UpdateRule::kcore(3);
    const Dist r3 = poissonized_update(k3, 4.0, Dist::delta(2, 1));
    CHECK(r3[1] == doctest::Approx(1.0 - std::exp(-4.0) * 5.0).epsilon(1e-12));
}

TEST_CASE("poissonized update returns a valid distribution") {
    const UpdateRule k3 = UpdateRule::kcore(3);
    Dist p({0.3, 0.7});
    for (int i = 0; i < 20; ++i) {
        p = poissonized_update(k3, 3.3, p);
        double sum = 0.0;
        for (int j = 0; j < p.size(); ++j) {
            CHECK(p[j] >= 0.0);
            sum += p[j];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("monte carlo agreement with the exact operator") {
    const UpdateRule k3 = UpdateRule::kcore(3);
    const double d = 4.0;
    const Dist p({0.2, 0.8});
    const Dist exact = poissonized_update(k3, d, p);

    const std::int64_t samples = 100000;
    Rng rng(11);
    std::vector<std::int64_t> hits(2, 0);
    std::vector<std::int64_t> counts(2);
    for (std::int64_t i = 0; i < samples; ++i) {
        counts[0] = rng.poisson(d * p[0]);
        counts[1] = rng.poisson(d * p[1]);
        ++hits[static_cast<std::size_t>(k3.eval_counts(counts))];
    }
    double tv = 0.0;
    for (int j = 0; j < 2; ++j)
        tv += std::abs(static_cast<double>(hits[static_cast<std::size_t>(j)]) /
                           static_cast<double>(samples) -
                       exact[j]);
    CHECK(0.5 * tv < 4.0 / std::sqrt(static_cast<double>(samples)));
}

TEST_CASE("fixed point iteration against the bisection oracle") {
    const UpdateRule k2 = UpdateRule::kcore(2);
    const FixedPointReport rep =
        iterate_to_fixed_point(k2, 2.0, Dist::delta(2, 1), 1e-12, 100000);
    CHECK(rep.converged);
    // oracle: root of p = 1 - e^{-2p}
    const double root = oracle::bisect([](double p) { return 1.0 - std::exp(-2.0 * p) - p; },
                                       0.5, 1.0);
    CHECK(root == doctest::Approx(0.796812).epsilon(1e-4));
    CHECK(rep.limit[1] == doctest::Approx(root).epsilon(1e-9));

    // residual invariant: TV(Phi(limit), limit) <= 2 tol
    const Dist image = poissonized_update(k2, 2.0, rep.limit);
    CHECK(tv_distance(image, rep.limit) <= 2e-12);
}

TEST_CASE("fixed point trivial cases") {
    const UpdateRule c = UpdateRule::constant(Alphabet({"a", "b"}), "a");
    const FixedPointReport rep = iterate_to_fixed_point(c, 1.5, Dist({0.4, 0.6}), 1e-12, 10);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 2);
    CHECK(rep.limit[0] == doctest::Approx(1.0));

    // kcore(2) below d=1: only the zero fixed point
    const FixedPointReport sub =
        iterate_to_fixed_point(UpdateRule::kcore(2), 0.5, Dist::delta(2, 1), 1e-12, 100000);
    CHECK(sub.converged);
    CHECK(sub.limit[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("monotone decrease of the one-weight for kcore from delta_1") {
    const UpdateRule k3 = UpdateRule::kcore(3);
    Dist p = Dist::delta(2, 1);
    double prev = 1.0;
    for (int i = 0; i < 60; ++i) {
        p = poissonized_update(k3, 4.0, p);
        CHECK(p[1] <= prev + 1e-14);
        prev = p[1];
    }
}

TEST_CASE("stability estimates") {
    const UpdateRule c = UpdateRule::constant(Alphabet({"a", "b"}), "a");
    CHECK(stability_estimate(c, 2.0, Dist({0.5, 0.5})) == doctest::Approx(0.0));

    const UpdateRule k3 = UpdateRule::kcore(3);
    const Dist limit = iterate_to_fixed_point(k3, 4.0, Dist::delta(2, 1), 1e-13, 100000).limit;
    const double factor = stability_estimate(k3, 4.0, limit);
    CHECK(factor < 1.0);
    CHECK(factor > 0.1);

    // at the threshold the nontrivial fixed point is marginally stable
    const double d_star = oracle::kcore_threshold(3);
    const Dist critical =
        iterate_to_fixed_point(k3, d_star + 1e-4, Dist::delta(2, 1), 1e-13, 2000000).limit;
    CHECK(stability_estimate(k3, d_star + 1e-4, critical) == doctest::Approx(1.0).epsilon(0.05));

    CHECK_THROWS_AS(stability_estimate(UpdateRule::constant(Alphabet({"a"}), "a"), 1.0,
                                       Dist::delta(1, 0)),
                    input_error);
}

TEST_CASE("threshold scan: discontinuous 3-core emergence") {
    const UpdateRule k3 = UpdateRule::kcore(3);
    const ThresholdResult r =
        threshold_scan(k3, 2.0, 5.0, Dist::delta(2, 1), 1e-3, 0.1, 1e-12, 2000000);
    REQUIRE(r.found);
    const double d_star = oracle::kcore_threshold(3);
    CHECK(d_star == doctest::Approx(3.3509).epsilon(2e-4));
    CHECK(r.d_star == doctest::Approx(d_star).epsilon(0.002 / d_star));
    CHECK(r.discontinuous);
}

TEST_CASE("threshold scan: continuous 2-core onset") {
    const UpdateRule k2 = UpdateRule::kcore(2);
    const ThresholdResult r =
        threshold_scan(k2, 0.5, 3.0, Dist::delta(2, 1), 1e-3, 0.1, 1e-12, 2000000);
    REQUIRE(r.found);
    // crossing point where the limit weight reaches 0.1: 0.1 = 1 - e^{-0.1 d}
    const double expect = -std::log(0.9) / 0.1;
    CHECK(r.d_star == doctest::Approx(expect).epsilon(0.01));
    CHECK_FALSE(r.discontinuous);
}

TEST_CASE("threshold scan: constant rule has none") {
    const UpdateRule c = UpdateRule::constant(Alphabet({"a", "b"}), "a");
    const ThresholdResult r = threshold_scan(c, 0.5, 5.0, Dist({0.5, 0.5}), 1e-3, 0.1);
    CHECK_FALSE(r.found);
}
