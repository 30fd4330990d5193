#pragma once

// Drift a(x) = atilde(x) + cbar(x)/x with cbar(x) = c_plus 1{x>1} + c_minus 1{x<-1},
// its rescaling a_n(x) = n a(n x), and the integrals built from it:
//   A(y)   = exp(-2 int_0^y atilde)
//   phi(x) = int_0^x exp(-2 int_0^y a)    (scale function of dX = a dt + dW)
//   Phi_n(x) = int_0^x A(n y) dy

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"

namespace sdelimit {

/// Piecewise-constant, compactly supported perturbation atilde:
/// values[i] on [breakpoints[i], breakpoints[i+1]), zero outside.
class PerturbationSpec {
public:
    PerturbationSpec() = default;

    PerturbationSpec(std::vector<double> breakpoints, std::vector<double> values)
        : breaks_(std::move(breakpoints)), values_(std::move(values)) {
        if (breaks_.empty() && values_.empty()) return;
        if (breaks_.size() < 2 || values_.size() + 1 != breaks_.size()) {
            throw DomainError("perturbation needs k+1 breakpoints for k values");
        }
        for (std::size_t i = 0; i < breaks_.size(); ++i) {
            if (!std::isfinite(breaks_[i])) throw DomainError("perturbation breakpoints must be finite");
            if (i > 0 && !(breaks_[i] > breaks_[i - 1])) {
                throw DomainError("perturbation breakpoints must be strictly increasing");
            }
        }
        for (double v : values_) {
            if (!std::isfinite(v)) throw DomainError("perturbation values must be finite");
        }
        cumulative_.assign(breaks_.size(), 0.0);
        for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
            cumulative_[i + 1] = cumulative_[i] + values_[i] * (breaks_[i + 1] - breaks_[i]);
        }
    }

    /// Constant `value` on [lo, hi).
    static PerturbationSpec constant_on(double lo, double hi, double value) {
        return PerturbationSpec({lo, hi}, {value});
    }

    bool is_zero() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    }

    std::span<const double> breakpoints() const noexcept { return breaks_; }
    std::span<const double> values() const noexcept { return values_; }

    double operator()(double y) const noexcept {
        if (breaks_.empty() || y < breaks_.front() || y >= breaks_.back()) return 0.0;
        const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), y);
        return values_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
    }

    /// int_{-inf}^{y} atilde, exact.
    double cumulative(double y) const noexcept {
        if (breaks_.empty() || y <= breaks_.front()) return 0.0;
        if (y >= breaks_.back()) return cumulative_.back();
        const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), y);
        const auto i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
        return cumulative_[i] + values_[i] * (y - breaks_[i]);
    }

    /// int_0^y atilde (y may be +-inf).
    double integral_from_zero(double y) const noexcept {
        if (std::isinf(y)) y = y > 0 ? std::numeric_limits<double>::max() : std::numeric_limits<double>::lowest();
        return cumulative(y) - cumulative(0.0);
    }

    double total_integral() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

    double l1_norm() const noexcept {
        double s = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) s += std::fabs(values_[i]) * (breaks_[i + 1] - breaks_[i]);
        return s;
    }

    /// Smallest r with supp(atilde) inside [-r, r].
    double support_radius() const noexcept {
        if (breaks_.empty()) return 0.0;
        return std::max(std::fabs(breaks_.front()), std::fabs(breaks_.back()));
    }

private:
    std::vector<double> breaks_;
    std::vector<double> values_;
    std::vector<double> cumulative_;
};

/// Drift specification and start point. Requires c_minus, c_plus > -1/2.
struct Model {
    PerturbationSpec perturbation;
    double c_minus = 0.0;
    double c_plus = 0.0;
    double x0 = 0.0;

    Model() = default;
    Model(PerturbationSpec p, double cm, double cp, double start)
        : perturbation(std::move(p)), c_minus(cm), c_plus(cp), x0(start) {
        validate();
    }

    void validate() const {
        if (!(c_minus > -0.5) || !std::isfinite(c_minus)) throw DomainError("c_minus must be finite and > -1/2");
        if (!(c_plus > -0.5) || !std::isfinite(c_plus)) throw DomainError("c_plus must be finite and > -1/2");
        if (!std::isfinite(x0)) throw DomainError("x0 must be finite");
    }

    /// Radius outside of which a(y) = c_pm / y exactly.
    double core_radius() const noexcept { return std::max(1.0, perturbation.support_radius()); }
};

/// Model with scaling index n: drift a_n(x) = n a(n x).
struct ScaledModel {
    Model model;
    double n = 1.0;

    ScaledModel() = default;
    ScaledModel(Model m, double scale) : model(std::move(m)), n(scale) {
        if (!(n >= 1.0) || !std::isfinite(n)) throw DomainError("scaling index n must satisfy n >= 1");
    }
};

inline double cbar(const Model& m, double x) noexcept {
    if (x > 1.0) return m.c_plus;
    if (x < -1.0) return m.c_minus;
    return 0.0;
}

inline double drift_eval(const Model& m, double x) noexcept {
    return m.perturbation(x) + cbar(m, x) / x;
}

inline double scaled_drift_eval(const ScaledModel& s, double x) noexcept {
    return s.n * drift_eval(s.model, s.n * x);
}

/// A(y) = exp(-2 int_0^y atilde); y may be +-inf.
inline double A_eval(const Model& m, double y) noexcept {
    return std::exp(-2.0 * m.perturbation.integral_from_zero(y));
}

/// A scale-type integral at a point, possibly divergent at +-inf.
struct ScaleValue {
    double value = 0.0;
    double error = 0.0;
    bool divergent = false;
};

/// phi(y) = int_0^y f(u) du with f(u) = A(u) (|u| v 1)^{-2 c_side}, or f = A when the
/// singular part is switched off (that variant gives n Phi_n(y/n)).
///
/// The real line is cut at the perturbation breakpoints, 0 and +-1. Each piece is one of
///   exponential  f = A_a e^{-2v(u-a)}          (no singular factor)
///   power        f = A_a |u|^{-2c}             (v = 0, |u| >= 1)
///   mixed        f = A_a e^{-2v(u-a)} |u|^{-2c} (integrated numerically)
/// so values and inverses are closed form except on mixed pieces.
class ScaleFunction {
public:
    explicit ScaleFunction(const Model& m, bool singular = true) : model_(m), singular_(singular) {
        std::vector<double> nodes(m.perturbation.breakpoints().begin(), m.perturbation.breakpoints().end());
        nodes.push_back(0.0);
        if (singular_) {
            nodes.push_back(-1.0);
            nodes.push_back(1.0);
        }
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

        constexpr double inf = std::numeric_limits<double>::infinity();
        pieces_.push_back(make_piece(-inf, nodes.front(), nodes.front()));
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            pieces_.push_back(make_piece(nodes[i], nodes[i + 1], nodes[i]));
        }
        pieces_.push_back(make_piece(nodes.back(), inf, nodes.back()));

        // Anchor values: phi(0) = 0, accumulate outward.
        const auto zero_piece = static_cast<std::size_t>(
            std::find_if(pieces_.begin(), pieces_.end(), [](const Piece& p) { return p.lo == 0.0; }) -
            pieces_.begin());
        pieces_[zero_piece].phi_anchor = 0.0;
        for (std::size_t i = zero_piece + 1; i < pieces_.size(); ++i) {
            const Piece& prev = pieces_[i - 1];
            pieces_[i].phi_anchor = prev.phi_anchor + piece_integral(prev, prev.hi).value;
        }
        for (std::size_t i = zero_piece; i-- > 0;) {
            // piece i ends where piece i+1 begins; anchors of interior pieces sit at their left end
            Piece& p = pieces_[i];
            const Piece& next = pieces_[i + 1];
            if (p.anchor == p.lo) {
                p.phi_anchor = next.phi_anchor - piece_integral(p, p.hi).value;
            } else {
                p.phi_anchor = next.phi_anchor; // left tail anchored at its right end
            }
        }
        for (auto& p : pieces_) {
            p.phi_lo = std::isinf(p.lo) ? limit_value(p, p.lo) : p.phi_anchor + piece_integral(p, p.lo).value;
            p.phi_hi = std::isinf(p.hi) ? limit_value(p, p.hi) : p.phi_anchor + piece_integral(p, p.hi).value;
        }
    }

    const Model& model() const noexcept { return model_; }
    bool singular() const noexcept { return singular_; }

    /// phi'(y).
    double derivative(double y) const noexcept {
        const Piece& p = locate(y);
        return density(p, y);
    }

    /// phi(y) for finite y, or the limit at +-inf (flagged divergent when infinite).
    ScaleValue value(double y) const {
        if (std::isinf(y)) {
            const double v = y > 0 ? pieces_.back().phi_hi : pieces_.front().phi_lo;
            return {v, 0.0, std::isinf(v)};
        }
        const Piece& p = locate(y);
        const Integral part = piece_integral(p, y);
        return {p.phi_anchor + part.value, part.error, false};
    }

    double operator()(double y) const { return value(y).value; }

    double lower_limit() const noexcept { return pieces_.front().phi_lo; }
    double upper_limit() const noexcept { return pieces_.back().phi_hi; }

    /// phi^{-1}(z); returns +-inf outside (lower_limit, upper_limit).
    double inverse(double z) const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        if (z >= upper_limit()) return inf;
        if (z <= lower_limit()) return -inf;
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), z,
                                   [](double v, const Piece& p) { return v < p.phi_lo; });
        const Piece& p = *(it - 1);
        return invert_piece(p, z);
    }

private:
    enum class Kind { exponential, power, mixed };

    struct Piece {
        double lo, hi;      // support
        double anchor;      // finite point where phi_anchor is given
        double v;           // atilde on the piece
        double c;           // singular exponent (0 inside [-1, 1] or when switched off)
        double side;        // +1 for u >= 1, -1 for u <= -1 (power pieces)
        double A_anchor;    // A(anchor)
        Kind kind;
        double phi_anchor = 0.0;
        double phi_lo = 0.0, phi_hi = 0.0;
    };

    Piece make_piece(double lo, double hi, double anchor) const {
        const double mid = std::isinf(lo) ? hi - 1.0 : (std::isinf(hi) ? lo + 1.0 : 0.5 * (lo + hi));
        Piece p{};
        p.lo = lo;
        p.hi = hi;
        p.anchor = anchor;
        p.v = model_.perturbation(mid);
        p.c = 0.0;
        p.side = mid > 0 ? 1.0 : -1.0;
        if (singular_) {
            if (mid > 1.0) p.c = model_.c_plus;
            else if (mid < -1.0) p.c = model_.c_minus;
        }
        p.A_anchor = A_eval(model_, anchor);
        if (p.c == 0.0) p.kind = Kind::exponential;
        else if (p.v == 0.0) p.kind = Kind::power;
        else p.kind = Kind::mixed;
        return p;
    }

    const Piece& locate(double y) const noexcept {
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), y,
                                   [](double v, const Piece& p) { return v < p.lo; });
        return *(it - 1);
    }

    static double H(double w, double c) noexcept {
        if (c == 0.5) return std::log(w);
        return std::pow(w, 1.0 - 2.0 * c) / (1.0 - 2.0 * c);
    }

    static double H_inverse(double h, double c) noexcept {
        if (c == 0.5) return std::exp(h);
        const double base = (1.0 - 2.0 * c) * h;
        if (!(base > 0.0)) return std::numeric_limits<double>::infinity();
        return std::pow(base, 1.0 / (1.0 - 2.0 * c));
    }

    static double density(const Piece& p, double u) noexcept {
        double f = p.A_anchor;
        if (p.v != 0.0) f *= std::exp(-2.0 * p.v * (u - p.anchor));
        if (p.c != 0.0) f *= std::pow(std::fabs(u), -2.0 * p.c);
        return f;
    }

    // int_{anchor}^{y} f over a single piece
    Integral piece_integral(const Piece& p, double y) const {
        const double s = y - p.anchor;
        switch (p.kind) {
        case Kind::exponential: {
            if (p.v == 0.0) return {p.A_anchor * s, 0.0};
            return {p.A_anchor * (-std::expm1(-2.0 * p.v * s)) / (2.0 * p.v), 0.0};
        }
        case Kind::power:
            return {p.A_anchor * p.side * (H(std::fabs(y), p.c) - H(std::fabs(p.anchor), p.c)), 0.0};
        case Kind::mixed:
        default:
            return adaptive_simpson([&](double u) { return density(p, u); }, p.anchor, y, 1e-13);
        }
    }

    // value at an infinite end of a tail piece
    double limit_value(const Piece& p, double end) const noexcept {
        constexpr double inf = std::numeric_limits<double>::infinity();
        const double dir = end > 0 ? 1.0 : -1.0;
        // tails carry v = 0: exponential with v = 0 grows linearly, power converges iff c > 1/2
        if (p.kind == Kind::power && p.c > 0.5) {
            const double tail = p.A_anchor * std::pow(std::fabs(p.anchor), 1.0 - 2.0 * p.c) / (2.0 * p.c - 1.0);
            return p.phi_anchor + dir * tail;
        }
        return dir * inf;
    }

    double invert_piece(const Piece& p, double z) const {
        const double F = z - p.phi_anchor;
        switch (p.kind) {
        case Kind::exponential: {
            if (p.v == 0.0) return p.anchor + F / p.A_anchor;
            const double arg = 1.0 - 2.0 * p.v * F / p.A_anchor;
            return p.anchor - std::log(arg) / (2.0 * p.v);
        }
        case Kind::power: {
            const double h = H(std::fabs(p.anchor), p.c) + p.side * F / p.A_anchor;
            return p.side * H_inverse(h, p.c);
        }
        case Kind::mixed:
        default: {
            double lo = p.lo, hi = p.hi;
            double y = 0.5 * (lo + hi);
            for (int it = 0; it < 100; ++it) {
                const double g = p.phi_anchor + piece_integral(p, y).value - z;
                if (g > 0) hi = y;
                else lo = y;
                double next = y - g / density(p, y);
                if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
                if (std::fabs(next - y) <= 1e-15 * (1.0 + std::fabs(y))) return next;
                y = next;
            }
            return y;
        }
        }
    }

    Model model_;
    bool singular_;
    std::vector<Piece> pieces_;
};

/// phi(x); at x = +-inf the finite limit when c_pm > 1/2, otherwise a divergence signal.
inline ScaleValue phi_eval(const Model& m, double x) {
    return ScaleFunction(m).value(x);
}

/// phi_n(x) = phi(n x) / n.
inline ScaleValue phi_n_eval(const ScaledModel& s, double x) {
    ScaleValue v = ScaleFunction(s.model).value(s.n * x);
    v.value /= s.n;
    v.error /= s.n;
    return v;
}

/// Phi_n(x) = int_0^x A(n y) dy.
inline double phi_transform(const ScaledModel& s, double x) {
    return ScaleFunction(s.model, false).value(s.n * x).value / s.n;
}

} // namespace sdelimit
