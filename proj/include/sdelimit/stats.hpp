#pragma once

// Empirical CDFs, Kolmogorov-Smirnov distances and Wilson intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "errors.hpp"

namespace sdelimit {

struct KSReport {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n1 = 0;
    std::optional<std::size_t> n2;
};

/// Right-continuous empirical CDF.
class Ecdf {
public:
    explicit Ecdf(std::span<const double> values) : sorted_(values.begin(), values.end()) {
        if (sorted_.empty()) throw DomainError("ecdf of an empty sample");
        std::sort(sorted_.begin(), sorted_.end());
    }

    double operator()(double x) const noexcept {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

    std::span<const double> sorted() const noexcept { return sorted_; }
    std::size_t size() const noexcept { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

inline Ecdf ecdf(std::span<const double> values) { return Ecdf(values); }

/// P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0; // series below is 1 to double precision here
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Stephens' small-sample correction of the asymptotic argument.
inline double kolmogorov_p_value(double d, double effective_n) {
    const double s = std::sqrt(effective_n);
    return kolmogorov_survival((s + 0.12 + 0.11 / s) * d);
}

inline KSReport ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size());
    const double nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::fabs(i / na - j / nb));
    }
    KSReport r;
    r.statistic = d;
    r.n1 = x.size();
    r.n2 = y.size();
    r.p_value = kolmogorov_p_value(d, na * nb / (na + nb));
    return r;
}

inline KSReport ks_one_sample(std::span<const double> values, const std::function<double(double)>& cdf) {
    if (values.empty()) throw DomainError("ks_one_sample: empty sample");
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    KSReport r;
    r.statistic = d;
    r.n1 = x.size();
    r.p_value = kolmogorov_p_value(d, n);
    return r;
}

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_ci(std::size_t successes, std::size_t trials, double confidence) {
    if (trials == 0) throw DomainError("wilson_ci: trials must be positive");
    if (successes > trials) throw DomainError("wilson_ci: successes exceed trials");
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("wilson_ci: confidence must be in (0, 1)");
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    double lo = std::max(0.0, centre - half);
    double hi = std::min(1.0, centre + half);
    if (successes == 0) lo = 0.0;
    if (successes == trials) hi = 1.0;
    return {lo, hi};
}

} // namespace sdelimit
