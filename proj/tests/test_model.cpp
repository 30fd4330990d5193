#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <sdelimit/model.hpp>

using namespace sdelimit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Model skew_bm_model() { return Model(PerturbationSpec::constant_on(0.0, 1.0, std::numbers::ln2), 0.0, 0.0, 0.0); }

// atilde = 0.5 on [-2, 3) overlaps both singular regions, so several pieces are integrated numerically.
Model overlapping_model() { return Model(PerturbationSpec::constant_on(-2.0, 3.0, 0.5), 0.2, 0.8, 0.0); }

} // namespace

TEST_CASE("perturbation validation", "[model]") {
    CHECK_THROWS_AS(PerturbationSpec({0.0, 1.0}, {}), DomainError);
    CHECK_THROWS_AS(PerturbationSpec({1.0, 0.0}, {2.0}), DomainError);
    CHECK_THROWS_AS(PerturbationSpec({0.0, INFINITY}, {2.0}), DomainError);
    CHECK_THROWS_AS(Model({}, -0.5, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(Model({}, 0.0, -0.7, 0.0), DomainError);
    CHECK_THROWS_AS(ScaledModel(Model{}, 0.5), DomainError);
    CHECK_NOTHROW(PerturbationSpec{});
}

TEST_CASE("perturbation integrals", "[model]") {
    const PerturbationSpec p({-1.0, 0.5, 2.0}, {1.0, -2.0});
    CHECK(p(-1.0) == 1.0);
    CHECK(p(0.5) == -2.0);
    CHECK(p(2.0) == 0.0);
    CHECK_THAT(p.total_integral(), WithinAbs(1.5 - 3.0, 1e-15));
    CHECK_THAT(p.l1_norm(), WithinAbs(4.5, 1e-15));
    CHECK_THAT(p.integral_from_zero(1.0), WithinAbs(0.5 - 1.0, 1e-15));
    CHECK_THAT(p.integral_from_zero(-INFINITY), WithinAbs(-1.0, 1e-15));
    CHECK(p.support_radius() == 2.0);
}

TEST_CASE("drift and A", "[model]") {
    const Model m(PerturbationSpec::constant_on(0.0, 1.0, 0.25), -0.2, 0.3, 0.0);
    CHECK_THAT(drift_eval(m, 0.5), WithinAbs(0.25, 1e-15));
    CHECK_THAT(drift_eval(m, 2.0), WithinAbs(0.15, 1e-15));
    CHECK_THAT(drift_eval(m, -4.0), WithinAbs(0.05, 1e-15));
    const ScaledModel s(m, 10.0);
    CHECK_THAT(scaled_drift_eval(s, 0.05), WithinAbs(2.5, 1e-14));
    CHECK_THAT(A_eval(m, 2.0), WithinAbs(std::exp(-0.5), 1e-15));
    CHECK_THAT(A_eval(m, -2.0), WithinAbs(1.0, 1e-15));
}

TEST_CASE("scale function closed forms", "[model]") {
    SECTION("skew Brownian model") {
        const ScaleFunction phi(skew_bm_model());
        const double ln4 = std::log(4.0);
        CHECK_THAT(phi(2.0), WithinAbs(0.75 / ln4 + 0.25, 1e-14));
        CHECK_THAT(phi(-3.0), WithinAbs(-3.0, 1e-14));
        CHECK(std::isinf(phi.upper_limit()));
        CHECK(phi.value(-INFINITY).divergent);
    }
    SECTION("power tails") {
        const Model m({}, 1.0, 1.5, 0.0);
        const ScaleFunction phi(m);
        CHECK_THAT(phi.upper_limit(), WithinAbs(1.5, 1e-15));
        CHECK_THAT(phi.lower_limit(), WithinAbs(-2.0, 1e-15));
        CHECK_THAT(phi(2.0), WithinAbs(1.0 + 0.5 * (1.0 - 0.25), 1e-15));
        const ScaledModel s(Model({}, 0.0, 1.0, 0.0), 10.0);
        CHECK_THAT(phi_n_eval(s, 1.0).value, WithinAbs(0.19, 1e-15));
        CHECK_THAT(phi_eval(s.model, INFINITY).value, WithinAbs(2.0, 1e-15));
    }
    SECTION("logarithmic tail") {
        const ScaleFunction phi(Model({}, 0.0, 0.5, 0.0));
        CHECK_THAT(phi(std::exp(2.0)), WithinAbs(3.0, 1e-14));
        CHECK(std::isinf(phi.upper_limit()));
    }
}

// Reference values: mpmath quad of A(u) (|u| v 1)^{-2c} at 30 digits.
TEST_CASE("scale function on pieces with both perturbation and singular part", "[model]") {
    const ScaleFunction phi(overlapping_model());
    CHECK_THAT(phi(5.0), WithinRel(0.808947055542032823293830199021, 1e-11));
    CHECK_THAT(phi(-4.0), WithinRel(-15.2705565605908037138055913889, 1e-11));
    CHECK_THAT(phi(0.5), WithinRel(0.393469340287366576396200465009, 1e-12));
    CHECK_THAT(phi(-1.5), WithinRel(-3.32642985784594152118710593545, 1e-11));
    CHECK_THAT(phi(2.5), WithinRel(0.79110023438132342704919570078, 1e-11));
    CHECK_THAT(phi.upper_limit(), WithinRel(0.840539505140566453774355175523, 1e-11));
    CHECK(phi.lower_limit() == -INFINITY);
}

TEST_CASE("phi is increasing, phi' matches differences, and the inverse round-trips", "[model][property]") {
    const Model models[] = {skew_bm_model(), overlapping_model(), Model({}, 1.0, 1.5, 0.0),
                            Model(PerturbationSpec({-3.0, -0.5, 0.2, 4.0}, {0.7, -1.1, 0.4}), -0.3, 0.45, 0.0),
                            Model(PerturbationSpec::constant_on(-0.5, 0.5, -2.0), 0.5, 0.5, 0.0)};
    for (const auto& m : models) {
        for (bool singular : {true, false}) {
            const ScaleFunction phi(m, singular);
            double prev = -INFINITY;
            for (double y = -20.0; y <= 20.0; y += 0.173) {
                const double v = phi(y);
                CHECK(v > prev);
                prev = v;
                const double h = 1e-5;
                CHECK_THAT((phi(y + h) - phi(y - h)) / (2 * h), WithinRel(phi.derivative(y), 1e-6));
                CHECK_THAT(phi.inverse(v), WithinAbs(y, 1e-9 * (1.0 + std::fabs(y))));
            }
            CHECK(phi(0.0) == 0.0);
        }
    }
}

TEST_CASE("non-singular transform equals the integral of A(n y)", "[model]") {
    const ScaledModel s(skew_bm_model(), 4.0);
    // A(4y) = 4^{-4y} on [0, 1/4), 1/4 beyond
    const double expect = (1.0 - 0.25) / (4.0 * std::log(4.0)) + 0.25 * (1.0 - 0.25);
    CHECK_THAT(phi_transform(s, 1.0), WithinAbs(expect, 1e-14));
}
