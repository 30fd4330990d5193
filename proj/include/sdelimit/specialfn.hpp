#pragma once

// Modified Bessel functions of the first kind, log-gamma, and the elementary
// samplers behind the exact squared-Bessel transition.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include <boost/random/poisson_distribution.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace sdelimit {

/// Order of a modified Bessel function; valid for nu > -1.
struct RealOrder {
    double nu;

    explicit RealOrder(double v) : nu(v) {
        detail::require_domain(v > -1.0 && std::isfinite(v), "bessel order must satisfy nu > -1");
    }
};

inline double log_gamma(double x) {
    detail::require_domain(x > 0.0, "log_gamma: argument must be positive");
    return std::lgamma(x);
}

namespace detail {

// Below this argument (or nu^2) the ascending series is used; above it the
// large-argument Hankel expansion is accurate to machine precision.
inline constexpr double bessel_series_limit = 30.0;

// e^{-x} I_nu(x) by the ascending series; terms are all positive.
inline double bessel_i_scaled_series(double nu, double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 1000; ++k) {
        term *= q / (k * (k + nu));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    const double log_prefactor = nu * std::log(0.5 * x) - x - std::lgamma(nu + 1.0);
    return std::exp(log_prefactor) * sum;
}

// e^{-x} I_nu(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(nu) / x^k
inline double bessel_i_scaled_asymptotic(double nu, double x) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (k * 8.0 * x);
        const double mag = std::fabs(term);
        if (mag > prev) break; // series started to diverge
        sum += term;
        prev = mag;
        if (mag < 1e-17 * std::fabs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

} // namespace detail

/// e^{-x} I_nu(x). Finite for every x >= 0 except x = 0 with nu < 0 (returns +inf).
inline double bessel_i_scaled(RealOrder order, double x) {
    const double nu = order.nu;
    detail::require_domain(x >= 0.0, "bessel_i: argument must be nonnegative");
    if (x == 0.0) {
        if (nu == 0.0) return 1.0;
        if (nu > 0.0) return 0.0;
        return std::numeric_limits<double>::infinity();
    }
    if (x <= detail::bessel_series_limit || x <= nu * nu) {
        return detail::bessel_i_scaled_series(nu, x);
    }
    return detail::bessel_i_scaled_asymptotic(nu, x);
}

/// I_nu(x). Overflows to +inf beyond x ~ 709; use bessel_i_scaled there.
inline double bessel_i(RealOrder order, double x) {
    const double s = bessel_i_scaled(order, x);
    if (x == 0.0) return s;
    return s * std::exp(x);
}

/// I_{|nu|}(x) / I_{-|nu|}(x) for 0 < |nu| < 1: the probability that a Bessel
/// bridge of dimension in (0,2) with endpoint product x*dt stays off zero.
inline double bessel_i_reflection_ratio(double abs_nu, double x) {
    if (x > 25.0) return 1.0; // 1 - ratio ~ e^{-2x}
    if (x <= 0.0) return 0.0;
    return bessel_i_scaled(RealOrder(abs_nu), x) / bessel_i_scaled(RealOrder(-abs_nu), x);
}

/// Poisson draw; boost's sampler inverts for small means and uses PTRD otherwise.
inline std::int64_t sample_poisson(double mean, RngStream& rng) {
    detail::require_domain(mean >= 0.0 && std::isfinite(mean), "poisson mean must be finite and nonnegative");
    if (mean == 0.0) return 0;
    boost::random::poisson_distribution<std::int64_t, double> dist(mean);
    return dist(rng.engine());
}

inline double sample_gamma(double shape, double scale, RngStream& rng) {
    detail::require_domain(shape > 0.0 && scale > 0.0, "gamma shape and scale must be positive");
    std::gamma_distribution<double> dist(shape, scale);
    return dist(rng.engine());
}

/// Noncentral chi-squared with `delta` degrees of freedom and noncentrality `lambda`,
/// drawn as Gamma(delta/2 + Poisson(lambda/2), scale 2).
inline double sample_noncentral_chisq(double delta, double lambda, RngStream& rng) {
    detail::require_domain(delta > 0.0, "noncentral chi-squared: degrees of freedom must be positive");
    detail::require_domain(lambda >= 0.0, "noncentral chi-squared: noncentrality must be nonnegative");
    const auto k = sample_poisson(0.5 * lambda, rng);
    return sample_gamma(0.5 * delta + static_cast<double>(k), 2.0, rng);
}

} // namespace sdelimit
