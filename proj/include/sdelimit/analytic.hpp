#pragma once

// Case classification of the weak limit, scale functions, exit probabilities,
// mixture weight, skewness, transition densities and the occupation functional.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "model.hpp"
#include "quadrature.hpp"
#include "specialfn.hpp"

namespace sdelimit {

enum class CaseLabel { A1a, A1b, A1c, A2a, A2b, A2c, A3, A4, A5, A6 };

inline constexpr std::array<CaseLabel, 10> all_cases{CaseLabel::A1a, CaseLabel::A1b, CaseLabel::A1c,
                                                     CaseLabel::A2a, CaseLabel::A2b, CaseLabel::A2c,
                                                     CaseLabel::A3,  CaseLabel::A4,  CaseLabel::A5,
                                                     CaseLabel::A6};

inline std::string_view to_string(CaseLabel c) noexcept {
    switch (c) {
    case CaseLabel::A1a: return "A1a";
    case CaseLabel::A1b: return "A1b";
    case CaseLabel::A1c: return "A1c";
    case CaseLabel::A2a: return "A2a";
    case CaseLabel::A2b: return "A2b";
    case CaseLabel::A2c: return "A2c";
    case CaseLabel::A3: return "A3";
    case CaseLabel::A4: return "A4";
    case CaseLabel::A5: return "A5";
    case CaseLabel::A6: return "A6";
    }
    return "?";
}

/// Whether (x0, c_minus, c_plus) satisfies the hypotheses of one case of the limit theorem.
inline bool case_matches(CaseLabel label, double x0, double cm, double cp) noexcept {
    constexpr double h = 0.5;
    switch (label) {
    case CaseLabel::A1a: return x0 > 0 && cp >= h;
    case CaseLabel::A1b: return x0 >= 0 && cm < cp && cp < h;
    case CaseLabel::A1c: return x0 == 0 && cm < h && h <= cp;
    case CaseLabel::A2a: return x0 < 0 && cm >= h;
    case CaseLabel::A2b: return x0 <= 0 && cp < cm && cm < h;
    case CaseLabel::A2c: return x0 == 0 && cp < h && h <= cm;
    case CaseLabel::A3: return x0 < 0 && cm < h && cm < cp;
    case CaseLabel::A4: return x0 > 0 && cp < h && cp < cm;
    case CaseLabel::A5: return cp == cm && cp < h;
    case CaseLabel::A6: return x0 == 0 && cp >= h && cm >= h;
    }
    return false;
}

/// The weak limit: which case, and the parameters of the limit process.
struct LimitLaw {
    CaseLabel label{};
    double c_minus = 0.0;
    double c_plus = 0.0;
    double x0 = 0.0;
    std::optional<double> gamma; // skewness, case A5
    std::optional<double> p;     // weight of the positive branch, case A6
};

/// Named scalar with quadrature error estimate.
struct AnalyticReport {
    std::string quantity;
    double value = 0.0;
    double quadrature_error_estimate = 0.0;
};

/// tanh(int atilde).
inline double gamma_param(const Model& m) {
    return std::tanh(m.perturbation.total_integral());
}

/// Weight p of the positive Bessel branch for c_minus, c_plus >= 1/2.
inline AnalyticReport mixture_weight(const Model& m) {
    if (!(m.c_minus >= 0.5 && m.c_plus >= 0.5)) {
        throw DomainError("mixture_weight requires c_minus >= 1/2 and c_plus >= 1/2");
    }
    const bool log_minus = m.c_minus == 0.5;
    const bool log_plus = m.c_plus == 0.5;
    if (log_minus && log_plus) {
        // both integrals grow like A(+-inf) ln y; the truncated ratio converges to this
        const double am = A_eval(m, -std::numeric_limits<double>::infinity());
        const double ap = A_eval(m, std::numeric_limits<double>::infinity());
        return {"p", am / (am + ap), 0.0};
    }
    if (log_minus) return {"p", 1.0, 0.0};
    if (log_plus) return {"p", 0.0, 0.0};
    const ScaleFunction phi(m);
    const double neg = -phi.lower_limit();
    const double pos = phi.upper_limit();
    return {"p", neg / (neg + pos), 1e-15};
}

/// Fill in the limit process for a model.
inline LimitLaw classify(const Model& m) {
    if (!(m.c_minus > -0.5)) throw DomainError("c_minus must be > -1/2");
    if (!(m.c_plus > -0.5)) throw DomainError("c_plus must be > -1/2");
    std::optional<CaseLabel> found;
    for (CaseLabel c : all_cases) {
        if (case_matches(c, m.x0, m.c_minus, m.c_plus)) {
            found = c;
            break;
        }
    }
    if (!found) throw DomainError("no limit case matches the model"); // unreachable for valid c
    LimitLaw law{*found, m.c_minus, m.c_plus, m.x0, std::nullopt, std::nullopt};
    if (law.label == CaseLabel::A5) law.gamma = gamma_param(m);
    if (law.label == CaseLabel::A6) law.p = mixture_weight(m).value;
    return law;
}

/// Scale function of the Bessel process with parameter c.
inline double scale_bessel(double c, double x) {
    detail::require_domain(x > 0.0, "scale_bessel: x must be positive");
    if (c > 0.5) return -std::pow(x, 1.0 - 2.0 * c);
    if (c == 0.5) return std::log(x);
    return std::pow(x, 1.0 - 2.0 * c);
}

/// Scale function of the skew Bessel process.
inline double scale_skew(double c, double gamma, double x) {
    detail::require_domain(c < 0.5, "scale_skew: requires c < 1/2");
    detail::require_domain(std::fabs(gamma) <= 1.0, "scale_skew: requires |gamma| <= 1");
    const double p = 0.5 * (1.0 + gamma);
    const double q = 0.5 * (1.0 - gamma);
    if (x == 0.0) return 0.0;
    const double w = std::pow(std::fabs(x), 1.0 - 2.0 * c);
    return x > 0 ? q * w : -p * w;
}

/// Probability that the limit process started at x reaches +alpha before -alpha.
///
/// The process from x is the limit for the same (c_minus, c_plus, atilde) started at x:
/// on the side of x it is a Bessel process until it hits 0 (only possible when that
/// side's c < 1/2); from 0 it continues on the side with the larger c, or it is the skew
/// Bessel process (c_minus = c_plus < 1/2), or the A6 mixture (both >= 1/2).
inline double limit_exit_prob(const LimitLaw& law, double x, double alpha) {
    detail::require_domain(alpha > 0.0, "limit_exit_prob: alpha must be positive");
    detail::require_domain(std::fabs(x) < alpha, "limit_exit_prob: requires |x| < alpha");
    const double cm = law.c_minus;
    const double cp = law.c_plus;
    if (cm == cp && cp < 0.5) {
        const double gamma = law.gamma.value_or(0.0);
        if (!law.gamma) throw DomainError("limit_exit_prob: skew law without gamma");
        const double p = 0.5 * (1.0 + gamma);
        const double q = 0.5 * (1.0 - gamma);
        if (x == 0.0) return p;
        const double ratio = scale_bessel(cp, std::fabs(x)) / scale_bessel(cp, alpha);
        return ratio * (x >= 0 ? q : -p) + p;
    }
    if (x > 0.0) {
        if (cp >= 0.5 || cm < cp) return 1.0;
        return scale_bessel(cp, x) / scale_bessel(cp, alpha);
    }
    if (x < 0.0) {
        if (cm >= 0.5 || cp < cm) return 0.0;
        return 1.0 - scale_bessel(cm, -x) / scale_bessel(cm, alpha);
    }
    if (cm >= 0.5 && cp >= 0.5) {
        if (!law.p) throw DomainError("limit_exit_prob: mixture law without p");
        return *law.p;
    }
    return cm < cp ? 1.0 : 0.0;
}

/// (phi_n(x) - phi_n(-alpha)) / (phi_n(alpha) - phi_n(-alpha)).
inline double prelimit_exit_prob(const ScaledModel& s, double x, double alpha) {
    detail::require_domain(alpha > 0.0, "prelimit_exit_prob: alpha must be positive");
    detail::require_domain(std::fabs(x) <= alpha, "prelimit_exit_prob: requires |x| <= alpha");
    const ScaleFunction phi(s.model);
    const double lo = phi(-s.n * alpha);
    const double hi = phi(s.n * alpha);
    return (phi(s.n * x) - lo) / (hi - lo);
}

// ---------------------------------------------------------------------------
// Transition densities

/// Index of the Bessel function for parameter c.
inline double bessel_index(double c) noexcept { return c - 0.5; }

/// Transition density of the nonnegative Bessel process with parameter c.
inline double density_bessel(double c, double t, double x, double y) {
    detail::require_domain(c > -0.5, "density_bessel: c must be > -1/2");
    detail::require_domain(t > 0.0, "density_bessel: t must be positive");
    detail::require_domain(x >= 0.0, "density_bessel: x must be nonnegative");
    detail::require_domain(y > 0.0, "density_bessel: y must be positive");
    const double nu = bessel_index(c);
    if (x == 0.0) {
        const double lp = -nu * std::numbers::ln2 - (nu + 1.0) * std::log(t) + (2.0 * nu + 1.0) * std::log(y) -
                          0.5 * y * y / t - std::lgamma(nu + 1.0);
        return std::exp(lp);
    }
    const double z = x * y / t;
    const double gauss = std::exp(-0.5 * (x - y) * (x - y) / t);
    return std::pow(y / x, nu) * (y / t) * gauss * bessel_i_scaled(RealOrder(nu), z);
}

/// Transition subdensity of the Bessel process killed at 0, for -1/2 < c < 1/2.
inline double density_bessel_killed(double c, double t, double x, double y) {
    detail::require_domain(c > -0.5 && c < 0.5, "density_bessel_killed: requires -1/2 < c < 1/2");
    detail::require_domain(t > 0.0, "density_bessel_killed: t must be positive");
    detail::require_domain(x > 0.0 && y > 0.0, "density_bessel_killed: x and y must be positive");
    const double nu = bessel_index(c);
    const double z = x * y / t;
    const double gauss = std::exp(-0.5 * (x - y) * (x - y) / t);
    return std::pow(y / x, nu) * (y / t) * gauss * bessel_i_scaled(RealOrder(-nu), z);
}

/// Transition density of the skew Bessel process.
inline double density_skew(double c, double gamma, double t, double x, double y) {
    detail::require_domain(c > -0.5 && c < 0.5, "density_skew: requires -1/2 < c < 1/2");
    detail::require_domain(std::fabs(gamma) <= 1.0, "density_skew: requires |gamma| <= 1");
    detail::require_domain(y != 0.0, "density_skew: y must be nonzero");
    const double ax = std::fabs(x);
    const double ay = std::fabs(y);
    const double full = density_bessel(c, t, ax, ay);
    const double killed = ax > 0.0 ? density_bessel_killed(c, t, ax, ay) : 0.0;
    const double sgn = y > 0 ? 1.0 : -1.0;
    const double same_side = (x * y > 0.0) ? killed : 0.0;
    return same_side + 0.5 * (1.0 + gamma * sgn) * (full - killed);
}

/// Skew Brownian motion density phi_t(x - y) + gamma sign(y) phi_t(|x| + |y|).
inline double skew_bm_density(double gamma, double t, double x, double y) {
    const auto phi = [t](double u) { return std::exp(-0.5 * u * u / t) / std::sqrt(2.0 * std::numbers::pi * t); };
    const double sgn = y > 0 ? 1.0 : (y < 0 ? -1.0 : 0.0);
    return phi(x - y) + gamma * sgn * phi(std::fabs(x) + std::fabs(y));
}

inline double standard_normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

/// P(W_gamma(t) <= y | W_gamma(0) = x), closed form.
inline double skew_bm_cdf(double gamma, double t, double x, double y) {
    const double s = std::sqrt(t);
    const double ax = std::fabs(x);
    if (y < 0.0) return standard_normal_cdf((y - x) / s) - gamma * standard_normal_cdf((y - ax) / s);
    const double at_zero = standard_normal_cdf(-x / s) - gamma * standard_normal_cdf(-ax / s);
    return at_zero + standard_normal_cdf((y - x) / s) - standard_normal_cdf(-x / s) +
           gamma * (standard_normal_cdf((ax + y) / s) - standard_normal_cdf(ax / s));
}

/// P(B_c(t) <= y | B_c(0) = x) through the (noncentral) chi-squared law of B^2 / t.
inline double bessel_cdf(double c, double t, double x, double y) {
    detail::require_domain(c > -0.5 && t > 0.0 && x >= 0.0, "bessel_cdf: bad parameters");
    if (y <= 0.0) return 0.0;
    const double delta = 2.0 * c + 1.0;
    if (x == 0.0) return boost::math::gamma_p(0.5 * delta, 0.5 * y * y / t);
    boost::math::non_central_chi_squared dist(delta, x * x / t);
    return boost::math::cdf(dist, y * y / t);
}

namespace detail {

// int_0^upper f(y) dy for integrands that may behave like y^{2c} at 0 (c > -1/2):
// substitute y = u^m so the transformed integrand is bounded.
template <class F>
Integral integrate_halfline(const F& f, double c, double upper, double tol) {
    const int m = c >= 0.0 ? 1 : static_cast<int>(std::ceil(1.0 / (2.0 * c + 1.0))) + 1;
    if (m == 1) {
        return adaptive_simpson([&](double y) { return y > 0.0 ? f(y) : 0.0; }, 0.0, upper, tol);
    }
    const double umax = std::pow(upper, 1.0 / m);
    auto g = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double y = std::pow(u, m);
        return f(y) * m * std::pow(u, m - 1);
    };
    return adaptive_simpson(g, 0.0, umax, tol);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Occupation functional

/// Expected time in [-eps, eps] before leaving (-1, 1), started at x: the solution of
/// u''/2 + a_n u' = -1{|x| <= eps}, u(+-1) = 0, via the scale/speed Green representation
///   u(x) = int G(x, y) 1{|y| <= eps} 2 dy / s'(y),  s = phi_n.
inline AnalyticReport occupation_bvp(const ScaledModel& s, double epsilon, double x) {
    detail::require_domain(epsilon > 0.0 && epsilon <= 1.0, "occupation_bvp: epsilon must be in (0, 1]");
    detail::require_domain(x >= -1.0 && x <= 1.0, "occupation_bvp: x must be in [-1, 1]");
    const double n = s.n;
    const ScaleFunction phi(s.model);
    const auto scale = [&](double y) { return phi(n * y) / n; };
    const auto speed = [&](double y) { return 2.0 / phi.derivative(n * y); };
    const double s_lo = scale(-1.0);
    const double s_hi = scale(1.0);
    const double sx = scale(x);

    std::vector<double> breaks{0.0, -1.0 / n, 1.0 / n, x, -epsilon, epsilon};
    for (double b : s.model.perturbation.breakpoints()) breaks.push_back(b / n);

    constexpr double tol = 1e-11;
    Integral left;
    const double l_lo = -epsilon;
    const double l_hi = std::min(x, epsilon);
    if (l_hi > l_lo) {
        left = integrate_piecewise([&](double y) { return (scale(y) - s_lo) * speed(y); }, l_lo, l_hi, breaks, tol);
    }
    Integral right;
    const double r_lo = std::max(x, -epsilon);
    const double r_hi = epsilon;
    if (r_hi > r_lo) {
        right = integrate_piecewise([&](double y) { return (s_hi - scale(y)) * speed(y); }, r_lo, r_hi, breaks, tol);
    }
    const double span = s_hi - s_lo;
    const double value = ((s_hi - sx) * left.value + (sx - s_lo) * right.value) / span;
    const double err = ((s_hi - sx) * left.error + (sx - s_lo) * right.error) / span;
    return {"occupation", value, err};
}

} // namespace sdelimit
