#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include <sdelimit/rng.hpp>
#include <sdelimit/stats.hpp>

using namespace sdelimit;
using Catch::Matchers::WithinAbs;

TEST_CASE("ecdf is right-continuous", "[stats]") {
    const std::vector<double> v{3.0, 1.0, 2.0, 2.0};
    const Ecdf F(v);
    CHECK(F(0.5) == 0.0);
    CHECK(F(1.0) == 0.25);
    CHECK(F(1.5) == 0.25);
    CHECK(F(2.0) == 0.75);
    CHECK(F(3.0) == 1.0);
    CHECK(F(10.0) == 1.0);
    CHECK_THROWS_AS(Ecdf(std::vector<double>{}), DomainError);
}

TEST_CASE("two-sample KS on small examples", "[stats]") {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{4, 5, 6};
    CHECK(ks_two_sample(a, b).statistic == 1.0);
    CHECK(ks_two_sample(a, a).statistic == 0.0);
    CHECK(ks_two_sample(a, a).p_value == 1.0);

    const std::vector<double> c{1, 2, 3, 4};
    const std::vector<double> d{2, 3, 4, 5};
    CHECK_THAT(ks_two_sample(c, d).statistic, WithinAbs(0.25, 1e-15));

    // ties across samples must not count as a jump
    const std::vector<double> e{1, 1, 2, 2};
    const std::vector<double> f{1, 2};
    CHECK(ks_two_sample(e, f).statistic == 0.0);
}

TEST_CASE("two-sample KS is symmetric", "[stats]") {
    RngStream rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a(37 + rep), b(53);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = 0.3 + rng.normal();
        const auto ab = ks_two_sample(a, b);
        const auto ba = ks_two_sample(b, a);
        CHECK(ab.statistic == ba.statistic);
        CHECK(ab.p_value == ba.p_value);
    }
}

TEST_CASE("one-sample KS against the exact CDF", "[stats]") {
    const std::vector<double> v{0.5};
    const auto r = ks_one_sample(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK_THAT(r.statistic, WithinAbs(0.5, 1e-15));
    CHECK_FALSE(r.n2.has_value());

    const std::vector<double> grid{0.125, 0.375, 0.625, 0.875};
    CHECK_THAT(ks_one_sample(grid, [](double x) { return x; }).statistic, WithinAbs(0.125, 1e-15));
}

TEST_CASE("Kolmogorov survival function", "[stats]") {
    // scipy.special.kolmogorov
    CHECK_THAT(kolmogorov_survival(0.5), WithinAbs(0.9639452436648751, 1e-12));
    CHECK_THAT(kolmogorov_survival(1.0), WithinAbs(0.26999967167735456, 1e-12));
    CHECK_THAT(kolmogorov_survival(1.36), WithinAbs(0.049485876755377876, 1e-12));
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK(kolmogorov_survival(10.0) < 1e-80);
}

TEST_CASE("KS p-values are roughly uniform under the null", "[stats][property]") {
    RngStream rng(11);
    const boost::math::normal N01;
    int below_05 = 0, below_50 = 0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> x(10000);
        for (auto& v : x) v = rng.normal();
        const double p = ks_one_sample(x, [&](double u) { return boost::math::cdf(N01, u); }).p_value;
        below_05 += p < 0.05;
        below_50 += p < 0.5;
    }
    // Binomial(100, 0.05) exceeds 14 with probability < 1e-3; Binomial(100, 0.5) leaves [30, 70] with < 1e-4.
    CHECK(below_05 <= 14);
    CHECK(below_50 >= 30);
    CHECK(below_50 <= 70);
}

TEST_CASE("Wilson interval", "[stats]") {
    // statsmodels proportion_confint(40, 100, alpha=0.05, method="wilson")
    const auto [lo, hi] = wilson_ci(40, 100, 0.95);
    CHECK_THAT(lo, WithinAbs(0.30940128643245896, 1e-12));
    CHECK_THAT(hi, WithinAbs(0.49799741320893826, 1e-12));

    const auto [z0, z1] = wilson_ci(0, 50, 0.99);
    CHECK(z0 == 0.0);
    CHECK(z1 > 0.0);
    CHECK(z1 < 0.2);
    const auto [f0, f1] = wilson_ci(50, 50, 0.99);
    CHECK(f1 == 1.0);
    CHECK(f0 > 0.8);

    CHECK_THROWS_AS(wilson_ci(1, 0, 0.9), DomainError);
    CHECK_THROWS_AS(wilson_ci(3, 2, 0.9), DomainError);
    CHECK_THROWS_AS(wilson_ci(1, 2, 1.0), DomainError);
}

TEST_CASE("Wilson interval contains the estimate and shrinks with n", "[stats][property]") {
    for (std::size_t trials : {10u, 100u, 1000u, 10000u}) {
        for (std::size_t k = 0; k <= trials; k += trials / 10) {
            const auto [lo, hi] = wilson_ci(k, trials, 0.99);
            const double p = static_cast<double>(k) / trials;
            CHECK(lo <= p);
            CHECK(p <= hi);
        }
    }
    const auto a = wilson_ci(50, 100, 0.99);
    const auto b = wilson_ci(500, 1000, 0.99);
    CHECK(b.second - b.first < a.second - a.first);
}
