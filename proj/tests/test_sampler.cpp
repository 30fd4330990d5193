#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include <sdelimit/analytic.hpp>
#include <sdelimit/sampler.hpp>
#include <sdelimit/stats.hpp>

using namespace sdelimit;
using Catch::Matchers::WithinAbs;

namespace {

Model make(double x0, double cm, double cp, PerturbationSpec p = {}) { return Model(std::move(p), cm, cp, x0); }

struct Moments {
    double mean, var, se_mean, se_var;
};

Moments moments(const std::vector<double>& v) {
    const double N = static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v) m += x;
    m /= N;
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    m2 /= N;
    m4 /= N;
    return {m, m2, std::sqrt(m2 / N), std::sqrt(std::max(m4 - m2 * m2, 0.0) / N)};
}

bool in_wilson(const std::vector<double>& v, double p, double confidence) {
    const auto k = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; }));
    const auto [lo, hi] = wilson_ci(k, v.size(), confidence);
    return lo <= p && p <= hi;
}

} // namespace

TEST_CASE("BESQ transition moments", "[sampler][besq]") {
    RngStream rng(101);
    for (double delta : {0.5, 1.0, 3.0}) {
        for (double z : {0.0, 1.0}) {
            for (double t : {0.5, 1.0}) {
                std::vector<double> v(20000);
                for (auto& x : v) x = sample_besq_transition(delta, z, t, rng);
                const auto m = moments(v);
                INFO("delta=" << delta << " z=" << z << " t=" << t);
                CHECK(std::fabs(m.mean - (z + delta * t)) <= 4.0 * m.se_mean);
                CHECK(std::fabs(m.var - (2.0 * delta * t * t + 4.0 * z * t)) <= 4.0 * m.se_var);
                CHECK(*std::min_element(v.begin(), v.end()) >= 0.0);
            }
        }
    }
}

TEST_CASE("BESQ from zero is Gamma(delta/2, 2t)", "[sampler][besq]") {
    RngStream rng(7);
    for (double delta : {0.5, 2.0, 5.0}) {
        const double t = 0.7;
        std::vector<double> v(100000);
        for (auto& x : v) x = sample_besq_transition(delta, 0.0, t, rng);
        const auto ks = ks_one_sample(v, [&](double x) { return x <= 0 ? 0.0 : boost::math::gamma_p(0.5 * delta, x / (2.0 * t)); });
        INFO("delta=" << delta);
        CHECK(ks.statistic < 0.01);
    }
}

TEST_CASE("BESQ transition rejects bad arguments", "[sampler][besq]") {
    RngStream rng(1);
    CHECK_THROWS_AS(sample_besq_transition(0.0, 1.0, 1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_besq_transition(-1.0, 1.0, 1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_besq_transition(1.0, -1.0, 1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_besq_transition(1.0, 1.0, 0.0, rng), DomainError);
    CHECK(besq_dimension(0.0) == 1.0);
    CHECK(besq_dimension(1.0) == 3.0);
}

TEST_CASE("simulate_bessel marginals", "[sampler][bessel]") {
    RngStream rng(2024);
    const std::size_t N = 50000;

    // c = 0 from 1: reflected Brownian motion
    std::vector<double> a(N);
    for (auto& x : a) x = simulate_bessel(0.0, 1.0, 1, 1.0, 0.25, rng).values.back();
    const auto ks_a = ks_one_sample(a, [](double y) {
        return y <= 0 ? 0.0 : standard_normal_cdf(y - 1.0) - standard_normal_cdf(-y - 1.0);
    });
    CHECK(ks_a.statistic < 0.01);

    // c = 1/2 from 0: X^2 is exponential with mean 2t
    const double t = 0.5;
    std::vector<double> b(N);
    for (auto& x : b) {
        const double r = simulate_bessel(0.5, 0.0, 1, t, t, rng).values.back();
        x = r * r;
    }
    CHECK(ks_one_sample(b, [&](double y) { return y <= 0 ? 0.0 : -std::expm1(-y / (2.0 * t)); }).statistic < 0.01);
}

TEST_CASE("simulate_bessel paths", "[sampler][bessel]") {
    RngStream rng(3);
    const Path up = simulate_bessel(-0.3, 0.4, 1, 1.0, 0.01, rng);
    REQUIRE(up.values.size() == 101);
    CHECK(up.values.front() == 0.4);
    CHECK(*std::min_element(up.values.begin(), up.values.end()) >= 0.0);
    const Path down = simulate_bessel(0.7, -0.4, -1, 1.0, 0.01, rng);
    CHECK(down.values.front() == -0.4);
    CHECK(*std::max_element(down.values.begin(), down.values.end()) <= 0.0);
    CHECK_THROWS_AS(simulate_bessel(0.5, 1.0, -1, 1.0, 0.1, rng), DomainError);
    CHECK_THROWS_AS(simulate_bessel(-0.5, 1.0, 1, 1.0, 0.1, rng), DomainError);
}

TEST_CASE("prelimit paths without drift are Brownian", "[sampler][prelimit]") {
    const ScaledModel s(make(0.0, 0.0, 0.0), 50.0);
    RngStream rng(17);
    const double dt = 1e-3;
    std::vector<double> inc;
    for (int p = 0; p < 100; ++p) {
        const Path path = simulate_prelimit(s, 1.0, dt, rng);
        REQUIRE(path.values.size() == 1001);
        CHECK(path.values.front() == 0.0);
        for (std::size_t k = 1; k < path.values.size(); ++k) inc.push_back(path.values[k] - path.values[k - 1]);
    }
    const double sd = std::sqrt(dt);
    CHECK(ks_one_sample(inc, [&](double u) { return standard_normal_cdf(u / sd); }).p_value > 1e-3);

    const auto ms = monte_carlo_marginal(s, 1.0, 20000, RngPolicy{5});
    CHECK(std::fabs(moments(ms.values).mean) <= 4.0 / std::sqrt(20000.0));
}

TEST_CASE("prelimit second moment for c = 1 on both sides", "[sampler][prelimit]") {
    const ScaledModel s(make(0.0, 1.0, 1.0), 200.0);
    const auto ms = monte_carlo_marginal(s, 1.0, 20000, RngPolicy{99});
    std::vector<double> sq(ms.values.size());
    std::transform(ms.values.begin(), ms.values.end(), sq.begin(), [](double x) { return x * x; });
    const auto m = moments(sq);
    CHECK(std::fabs(m.mean - 3.0) <= 3.0 * m.se_mean);
}

TEST_CASE("prelimit arguments are validated", "[sampler][prelimit]") {
    const ScaledModel s(make(0.0, 0.0, 0.0), 10.0);
    RngStream rng(1);
    CHECK_THROWS_AS(simulate_prelimit(s, 0.0, 1e-3, rng), DomainError);
    CHECK_THROWS_AS(simulate_prelimit(s, 1.0, -1e-3, rng), DomainError);
    CHECK_THROWS_AS(simulate_prelimit(s, 1.0, 0.3, rng), DomainError);
    CHECK_THROWS_AS(monte_carlo_marginal(s, 1.0, 0, RngPolicy{1}), DomainError);
}

TEST_CASE("sampling is reproducible", "[sampler][determinism]") {
    const Model m = make(-0.5, -0.2, 0.3, PerturbationSpec::constant_on(-1.0, 1.0, 0.3));
    const ScaledModel s(m, 100.0);
    const RngPolicy policy{314};

    SECTION("same seed, same path") {
        RngStream r1 = policy.stream(StreamTag::prelimit, 3);
        RngStream r2 = policy.stream(StreamTag::prelimit, 3);
        CHECK(simulate_prelimit(s, 0.5, 1e-3, r1).values == simulate_prelimit(s, 0.5, 1e-3, r2).values);
    }
    SECTION("worker count does not matter") {
        const auto a = monte_carlo_marginal(s, 1.0, 300, policy, {}, 1);
        CHECK(a.values == monte_carlo_marginal(s, 1.0, 300, policy, {}, 4).values);
        CHECK(a.values == monte_carlo_marginal(s, 1.0, 300, policy, {}, 8).values);
        const LimitLaw law = classify(m);
        const auto b = monte_carlo_marginal(law, 1.0, 1000, policy, {}, 1);
        CHECK(b.values == monte_carlo_marginal(law, 1.0, 1000, policy, {}, 8).values);
        const auto e1 = monte_carlo_exit(s, 1.0, 200, policy, {}, 1);
        const auto e8 = monte_carlo_exit(s, 1.0, 200, policy, {}, 8);
        CHECK(e1.fraction_plus == e8.fraction_plus);
    }
    SECTION("N = 1 is one simulation on stream 0") {
        const auto one = monte_carlo_marginal(s, 1.0, 1, policy);
        RngStream r = policy.stream(StreamTag::prelimit, 0);
        CHECK(one.values.front() == simulate_prelimit(s, 1.0, 1e-4, r, {}, 0).values.back());

        const LimitLaw law = classify(m);
        const auto lone = monte_carlo_marginal(law, 1.0, 1, policy);
        RngStream rl = policy.stream(StreamTag::limit, 0);
        CHECK(lone.values.front() == simulate_limit(law, 1.0, 1.0, rl).values.back());
    }
    SECTION("distinct streams differ") {
        CHECK(policy.stream_seed(StreamTag::prelimit, 0) != policy.stream_seed(StreamTag::prelimit, 1));
        CHECK(policy.stream_seed(StreamTag::prelimit, 0) != policy.stream_seed(StreamTag::limit, 0));
        CHECK(policy.stream_seed(StreamTag::prelimit, 0) != RngPolicy{315}.stream_seed(StreamTag::prelimit, 0));
    }
}

TEST_CASE("recorded grid matches the requested stride", "[sampler][prelimit]") {
    const ScaledModel s(make(0.2, 0.3, 0.1), 20.0);
    RngStream rng(8);
    const Path p = simulate_prelimit(s, 1.0, 1e-3, rng, {}, 10);
    CHECK(p.values.size() == 101);
    CHECK_THAT(p.dt, WithinAbs(1e-2, 1e-15));
    CHECK(p.values.front() == 0.2);
    CHECK_THROWS_AS(simulate_prelimit(s, 1.0, 1e-3, rng, {}, 7), DomainError);
}

TEST_CASE("mixture limit picks the positive branch with probability p", "[sampler][limit]") {
    const LimitLaw law = classify(make(0.0, 1.0, 1.5));
    REQUIRE(law.label == CaseLabel::A6);
    const auto ms = monte_carlo_marginal(law, 1.0, 100000, RngPolicy{42});
    CHECK(in_wilson(ms.values, 4.0 / 7.0, 0.99));
}

TEST_CASE("skew Bessel limit", "[sampler][limit]") {
    const double c = 0.2;
    const double gamma = std::tanh(0.6);
    const LimitLaw law{CaseLabel::A5, c, c, 0.0, gamma, std::nullopt};
    const std::size_t N = 100000;
    const auto ms = monte_carlo_marginal(law, 1.0, N, RngPolicy{77});

    CHECK(in_wilson(ms.values, 0.5 * (1.0 + gamma), 0.99));

    std::vector<double> abs_x(N), bes(N);
    std::transform(ms.values.begin(), ms.values.end(), abs_x.begin(), [](double x) { return std::fabs(x); });
    RngStream rng(78);
    for (auto& x : bes) x = simulate_bessel(c, 0.0, 1, 1.0, 1.0, rng).values.back();
    CHECK(ks_two_sample(abs_x, bes).statistic <= 0.01);

    // against the CDF obtained by integrating the transition density
    const Ecdf F(ms.values);
    const double neg_mass = 0.5 * (1.0 - gamma);
    double worst = 0.0;
    for (double y = -3.0; y <= 3.0; y += 0.25) {
        if (y == 0.0) continue;
        const auto part = detail::integrate_halfline(
            [&](double u) { return density_skew(c, gamma, 1.0, 0.0, y < 0 ? -u : u); }, c, std::fabs(y), 1e-10);
        const double cdf = y < 0 ? neg_mass - part.value : neg_mass + part.value;
        worst = std::max(worst, std::fabs(F(y) - cdf));
    }
    CHECK(worst < 0.01);

    // a path started on one side keeps that sign until it first reaches 0
    const LimitLaw shifted{CaseLabel::A5, c, c, 0.8, gamma, std::nullopt};
    RngStream r2(5);
    CHECK(simulate_limit(shifted, 1e-3, 1e-3, r2).values.back() > 0.0);
}

TEST_CASE("A3 limit switches to the positive Bessel after hitting 0", "[sampler][limit]") {
    const LimitLaw law = classify(make(-0.5, -0.2, 0.3, PerturbationSpec::constant_on(-1.0, 1.0, 0.3)));
    REQUIRE(law.label == CaseLabel::A3);
    RngStream rng(9);
    std::vector<double> scaled;
    std::size_t hits = 0, total = 60000;
    bool signs_ok = true;
    for (std::size_t i = 0; i < total; ++i) {
        const auto tr = simulate_limit_detailed(law, 1.0, 1.0, rng);
        const double x = tr.path.values.back();
        if (tr.hit_time) {
            ++hits;
            signs_ok = signs_ok && x >= 0.0 && *tr.hit_time < 1.0;
            scaled.push_back(x / std::sqrt(1.0 - *tr.hit_time));
        } else {
            signs_ok = signs_ok && x < 0.0;
        }
    }
    CHECK(signs_ok);
    // P(hit before 1) for the killed Bessel(c_minus) from 0.5: Q(1/2 - c, x^2 / 2)
    const double p_hit = boost::math::gamma_q(0.5 + 0.2, 0.125);
    const double se = std::sqrt(p_hit * (1 - p_hit) / total);
    CHECK(std::fabs(static_cast<double>(hits) / total - p_hit) <= 4.0 * se);
    CHECK(ks_one_sample(scaled, [&](double y) { return bessel_cdf(0.3, 1.0, 0.0, y); }).statistic <= 0.015);
}

TEST_CASE("limit paths on a grid agree with one-step marginals", "[sampler][limit]") {
    const LimitLaw law = classify(make(-0.5, -0.2, 0.3, PerturbationSpec::constant_on(-1.0, 1.0, 0.3)));
    RngStream rng(10);
    std::vector<double> gridded(20000);
    for (auto& x : gridded) x = simulate_limit(law, 1.0, 0.05, rng).values.back();
    const auto one = monte_carlo_marginal(law, 1.0, 20000, RngPolicy{10});
    CHECK(ks_two_sample(gridded, one.values).p_value > 1e-3);
}

TEST_CASE("exit probabilities", "[sampler][exit]") {
    SECTION("driftless from the centre") {
        const auto e = monte_carlo_exit(ScaledModel(make(0.0, 0.0, 0.0), 10.0), 1.0, 10000, RngPolicy{1});
        CHECK(std::fabs(e.fraction_plus - 0.5) <= 3.0 * e.std_err);
    }
    SECTION("prelimit with c = 1 on both sides") {
        const ScaledModel s(make(0.25, 1.0, 1.0), 1000.0);
        const auto e = monte_carlo_exit(s, 1.0, 10000, RngPolicy{2});
        CHECK(std::fabs(e.fraction_plus - prelimit_exit_prob(s, 0.25, 1.0)) <= 3.0 * e.std_err);
    }
    SECTION("skew limit from 0") {
        const double gamma = 0.4;
        const LimitLaw law{CaseLabel::A5, 0.1, 0.1, 0.0, gamma, std::nullopt};
        const auto e = monte_carlo_exit(law, 1.0, 10000, RngPolicy{3});
        CHECK(std::fabs(e.fraction_plus - 0.5 * (1.0 + gamma)) <= 3.0 * e.std_err);
        CHECK_THAT(limit_exit_prob(law, 0.0, 1.0), WithinAbs(0.5 * (1.0 + gamma), 1e-14));
    }
    SECTION("A3 limit from inside") {
        const LimitLaw law = classify(make(-0.5, -0.2, 0.3, PerturbationSpec::constant_on(-1.0, 1.0, 0.3)));
        const auto e = monte_carlo_exit(law, 1.0, 10000, RngPolicy{4});
        CHECK(std::fabs(e.fraction_plus - limit_exit_prob(law, -0.5, 1.0)) <= 3.0 * e.std_err);
    }
    CHECK_THROWS_AS(monte_carlo_exit(ScaledModel(make(1.5, 0.0, 0.0), 10.0), 1.0, 10, RngPolicy{}), DomainError);
}

TEST_CASE("occupation of driftless motion", "[sampler][occupation]") {
    const ScaledModel s(make(0.0, 0.0, 0.0), 10.0);
    const auto whole = monte_carlo_occupation(s, 1.0, 10000, RngPolicy{6});
    CHECK(std::fabs(whole.mean - 1.0) <= 3.0 * whole.std_err);
    const auto narrow = monte_carlo_occupation(s, 0.1, 10000, RngPolicy{6});
    CHECK(std::fabs(narrow.mean - 0.19) <= std::max(3.0 * narrow.std_err, 2e-4));
    const auto mid = monte_carlo_occupation(s, 0.3, 10000, RngPolicy{6});
    const auto combined = [](const OccupationEstimate& a, const OccupationEstimate& b) {
        return std::hypot(a.std_err, b.std_err);
    };
    CHECK(narrow.mean <= mid.mean + 3.0 * combined(narrow, mid));
    CHECK(mid.mean <= whole.mean + 3.0 * combined(mid, whole));
    CHECK_THROWS_AS(monte_carlo_occupation(s, 0.0, 10, RngPolicy{}), DomainError);
    CHECK_THROWS_AS(monte_carlo_occupation(s, 1.5, 10, RngPolicy{}), DomainError);
}
