#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace sdelimit {

/// A quadrature value with its estimated absolute error.
struct Integral {
    double value = 0.0;
    double error = 0.0;

    Integral& operator+=(const Integral& o) {
        value += o.value;
        error += o.error;
        return *this;
    }
};

namespace detail {

template <class F>
Integral simpson_recurse(const F& f, double a, double fa, double b, double fb, double m, double fm,
                         double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol || (b - a) < 1e-15 * (1.0 + std::fabs(a))) {
        return {left + right + delta / 15.0, std::fabs(delta) / 15.0};
    }
    Integral l = simpson_recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1);
    const Integral r = simpson_recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
    l += r;
    return l;
}

} // namespace detail

/// Adaptive Simpson on [a, b] with Richardson correction.
template <class F>
Integral adaptive_simpson(const F& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
    if (a == b) return {};
    if (b < a) {
        Integral r = adaptive_simpson(f, b, a, tol, max_depth);
        r.value = -r.value;
        return r;
    }
    // Seed with a few panels so that narrow features are not skipped by the first estimate.
    constexpr int seeds = 4;
    Integral total;
    double lo = a;
    double flo = f(a);
    for (int i = 0; i < seeds; ++i) {
        const double hi = (i + 1 == seeds) ? b : a + (b - a) * (i + 1) / seeds;
        const double mid = 0.5 * (lo + hi);
        const double fhi = f(hi);
        const double fmid = f(mid);
        const double est = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += detail::simpson_recurse(f, lo, flo, hi, fhi, mid, fmid, est, tol / seeds, max_depth);
        lo = hi;
        flo = fhi;
    }
    return total;
}

/// Adaptive Simpson over [a, b] split at every interior breakpoint (kinks, jumps).
template <class F>
Integral integrate_piecewise(const F& f, double a, double b, std::span<const double> breaks,
                             double tol = 1e-10) {
    if (a == b) return {};
    const double sign = b < a ? -1.0 : 1.0;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    std::vector<double> pts{lo};
    for (double p : breaks) {
        if (p > lo && p < hi) pts.push_back(p);
    }
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    Integral total;
    const double per_panel = tol / static_cast<double>(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        total += adaptive_simpson(f, pts[i], pts[i + 1], per_panel);
    }
    total.value *= sign;
    return total;
}

} // namespace sdelimit
