#pragma once

// Path simulation for the prelimit diffusion dX = n a(n X) dt + dW and for the
// limit processes (Bessel, concatenated Bessel, skew Bessel, Bessel mixture).

#include <cmath>
#include <cstdint>
#include <limits>
#include <new>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "specialfn.hpp"

namespace sdelimit {

enum class SampleKind { prelimit, limit };

/// scale_euler: exact Bessel moves away from the core, Euler in natural scale near it.
/// tamed_euler: the plain tamed scheme with substeps inside |x| < taming_layer / n.
enum class PrelimitMethod { scale_euler, tamed_euler };

inline std::string_view to_string(SampleKind k) noexcept { return k == SampleKind::prelimit ? "prelimit" : "limit"; }
inline std::string_view to_string(PrelimitMethod m) noexcept {
    return m == PrelimitMethod::scale_euler ? "scale_euler" : "tamed_euler";
}

/// Uniformly gridded trajectory: values[k] is the position at time k * dt.
struct Path {
    double dt = 0.0;
    std::vector<double> values;
};

struct PrelimitOptions {
    PrelimitMethod method = PrelimitMethod::scale_euler;
    /// Near the core, steps are dt / m with m the smallest integer making n sqrt(dt / m) <= layer_resolution, capped.
    double layer_resolution = 0.25;
    int max_substeps = 4096;
    /// Near a watched level away from the core, steps are dt / level_substeps.
    int level_substeps = 4;
    /// An exact Bessel move of length H is taken when the core and every watched level are K sqrt(H) away.
    double far_field_margin = 5.0;
    /// Natural-scale steps move at most this fraction of the distance to a finite end of the scale.
    double boundary_fraction = 0.2;
    int taming_substeps = 16;
    double taming_layer = 10.0;
};

struct LimitOptions {
    /// Near watched levels the limit samplers take steps of dt / fine_substeps.
    int fine_substeps = 16;
    double far_field_margin = 5.0;
};

/// Everything besides the seed that determines a sample.
struct Scheme {
    SampleKind kind = SampleKind::prelimit;
    double dt = 1e-4;
    PrelimitOptions prelimit{};
    LimitOptions limit{};
};

/// Values at a fixed time, in path-index order.
struct SampleSet {
    double time = 0.0;
    std::vector<double> values;
    std::uint64_t master_seed = 0;
    Scheme scheme{};
    double n = 0.0; // scaling index; 0 for limit samples
};

/// BESQ dimension for Bessel parameter c.
constexpr double besq_dimension(double c) noexcept { return 2.0 * c + 1.0; }

/// Exact draw of Z(dt) for dZ = delta dt + 2 sqrt(Z) dW, Z(0) = z.
inline double sample_besq_transition(double delta, double z, double dt, RngStream& rng) {
    detail::require_domain(delta > 0.0, "sample_besq_transition: delta must be positive");
    detail::require_domain(z >= 0.0, "sample_besq_transition: z must be nonnegative");
    detail::require_domain(dt > 0.0, "sample_besq_transition: dt must be positive");
    return dt * sample_noncentral_chisq(delta, z / dt, rng);
}

/// Exact Bessel(c) move of |x| over time h.
inline double bessel_step(double c, double r, double h, RngStream& rng) {
    return std::sqrt(sample_besq_transition(besq_dimension(c), r * r, h, rng));
}

namespace detail {

inline std::size_t grid_steps(double T, double dt) {
    require_domain(T > 0.0 && std::isfinite(T), "T must be positive");
    require_domain(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    const double k = std::round(T / dt);
    require_domain(k >= 1.0 && std::fabs(k * dt - T) <= 1e-9 * T, "T must be a multiple of dt");
    if (k > 1e9) throw ResourceError("too many grid steps");
    return static_cast<std::size_t>(k);
}

template <class T>
std::vector<T> allocate(std::size_t count) {
    try {
        return std::vector<T>(count);
    } catch (const std::bad_alloc&) {
        throw ResourceError("cannot allocate " + std::to_string(count) + " values");
    }
}

// Levels a path must not jump over, and what to do after every move.
struct NoObserver {
    std::span<const double> levels() const noexcept { return {}; }
    bool on_step(double, double, double, RngStream&) noexcept { return false; }
};

// Probability that a Brownian bridge from a to b over time h touches level l (a, b on the same side).
inline double bridge_cross_probability(double a, double b, double l, double h) noexcept {
    const double da = l - a;
    const double db = l - b;
    if (da * db <= 0.0) return 1.0;
    return std::exp(-2.0 * da * db / h);
}

// Stops when the path leaves (-alpha, alpha); crossings between grid points are detected by
// the Brownian-bridge crossing probability.
struct ExitObserver {
    double alpha;
    double bounds[2];
    int side = 0;

    explicit ExitObserver(double a) : alpha(a), bounds{-a, a} {}
    std::span<const double> levels() const noexcept { return bounds; }
    bool on_step(double x0, double x1, double h, RngStream& rng) {
        if (x1 >= alpha) side = 1;
        else if (x1 <= -alpha) side = -1;
        else {
            const double up = bridge_cross_probability(x0, x1, alpha, h);
            const double down = bridge_cross_probability(x0, x1, -alpha, h);
            if (up > 1e-300 || down > 1e-300) {
                const double u = rng.uniform();
                if (u < up) side = 1;
                else if (u < up + down) side = -1;
            }
        }
        return side != 0;
    }
};

// Time spent in [-eps, eps] (left Riemann sum) until leaving (-1, 1).
struct OccupationObserver {
    double eps;
    double marks[4];
    double occupation = 0.0;
    ExitObserver exit{1.0};

    explicit OccupationObserver(double e) : eps(e), marks{-1.0, -e, e, 1.0} {}
    std::span<const double> levels() const noexcept { return marks; }
    bool on_step(double x0, double x1, double h, RngStream& rng) {
        if (std::fabs(x0) <= eps) occupation += h;
        return exit.on_step(x0, x1, h, rng);
    }
};

struct Advance {
    double x;
    double elapsed;
    bool stopped;
};

inline constexpr double max_advance_time = 1e4;

} // namespace detail

/// Transition kernel of the prelimit diffusion.
class PrelimitEngine {
public:
    PrelimitEngine(const ScaledModel& s, double dt, const PrelimitOptions& opt = {})
        : scaled_(s), phi_(s.model), n_(s.n), dt_(dt), opt_(opt) {
        detail::require_domain(dt > 0.0 && std::isfinite(dt), "dt must be positive");
        detail::require_domain(opt.max_substeps >= 1 && opt.taming_substeps >= 1 && opt.level_substeps >= 1,
                               "substep counts must be >= 1");
        detail::require_domain(opt.far_field_margin > 0.0 && opt.boundary_fraction > 0.0, "margins must be positive");
        const double ratio = n_ * std::sqrt(dt) / opt.layer_resolution;
        substeps_ = std::clamp(static_cast<int>(std::ceil(ratio * ratio)), 1, opt.max_substeps);
        fine_ = dt / substeps_;
        level_step_ = dt / opt.level_substeps;
        core_ = s.model.core_radius() / n_;
        lower_ = phi_.lower_limit();
        upper_ = phi_.upper_limit();
    }

    int substeps() const noexcept { return substeps_; }
    double fine_step() const noexcept { return fine_; }

    /// Moves from x for time tau (may be +inf) or until the observer stops the path.
    template <class Obs>
    detail::Advance advance(double x, double tau, RngStream& rng, Obs& obs) const {
        double remaining = tau;
        double elapsed = 0.0;
        const double eps_time = 1e-9 * fine_;
        while (remaining > eps_time) {
            double h = 0.0;
            double x1 = x;
            if (opt_.method == PrelimitMethod::tamed_euler) {
                h = std::fabs(x) < opt_.taming_layer / n_ ? dt_ / opt_.taming_substeps : dt_;
                h = std::min(h, remaining);
                const double b = scaled_drift_eval(scaled_, x);
                x1 = x + b * h / (1.0 + h * std::fabs(b)) + std::sqrt(h) * rng.normal();
            } else {
                // the step may reach K sqrt(h) from x; near the core it is fine_, near a level level_step_
                const double K2 = opt_.far_field_margin * opt_.far_field_margin;
                const double dc = std::fabs(x) - core_;
                double dl = std::numeric_limits<double>::infinity();
                for (double l : obs.levels()) dl = std::min(dl, std::fabs(x - l));
                const double far_core = dc > 0.0 ? dc * dc / K2 : 0.0;
                const double far_level = dl * dl / K2;
                const double far = std::min(far_core, far_level);
                const double euler = std::min({std::max(fine_, far_core), std::max(level_step_, far_level), dt_});
                if (far >= std::min(remaining, euler)) {
                    h = std::min(far, remaining);
                    const double c = x > 0 ? scaled_.model.c_plus : scaled_.model.c_minus;
                    x1 = std::copysign(bessel_step(c, std::fabs(x), h, rng), x);
                } else {
                    h = std::min(euler, remaining);
                    x1 = natural_step(x, h, rng);
                }
            }
            if (h >= remaining) remaining = 0.0;
            else remaining -= h;
            elapsed += h;
            const bool stop = obs.on_step(x, x1, h, rng);
            x = x1;
            if (stop) return {x, elapsed, true};
            if (elapsed > detail::max_advance_time) throw ResourceError("path did not finish within the time budget");
        }
        return {x, elapsed, false};
    }

private:
    // One Euler step of Z = phi(n x), a driftless martingale dZ = n phi'(n x) dW.
    // Shortens h near a finite end of the scale; splits the Brownian increment on overshoot.
    double natural_step(double x, double& h, RngStream& rng) const {
        const double y = n_ * x;
        const double z = phi_(y);
        const double slope = n_ * phi_.derivative(y);
        const double room = std::min(upper_ - z, z - lower_);
        if (std::isfinite(room)) {
            const double hb = std::pow(opt_.boundary_fraction * room / slope, 2);
            h = std::min(h, std::max(hb, 1e-6 * fine_));
        }
        const double w = std::sqrt(h) * rng.normal();
        return move(y, z, slope, h, w, rng, 0) / n_;
    }

    double move(double y, double z, double slope, double h, double w, RngStream& rng, int depth) const {
        const double z1 = z + slope * w;
        if (z1 < upper_ && z1 > lower_) return phi_.inverse(z1);
        if (depth < 16) {
            // Brownian bridge midpoint, then the two halves
            const double w1 = 0.5 * w + 0.5 * std::sqrt(h) * rng.normal();
            const double y1 = move(y, z, slope, 0.5 * h, w1, rng, depth + 1);
            const double zm = phi_(y1);
            return move(y1, zm, n_ * phi_.derivative(y1), 0.5 * h, w - w1, rng, depth + 1);
        }
        const double lim = z1 >= upper_ ? upper_ : lower_;
        double zr = 2.0 * lim - z1;
        if (!(zr < upper_ && zr > lower_)) zr = 0.5 * (z + lim);
        return phi_.inverse(zr);
    }

    ScaledModel scaled_;
    ScaleFunction phi_;
    double n_;
    double dt_;
    PrelimitOptions opt_;
    int substeps_ = 1;
    double fine_ = 0.0;
    double level_step_ = 0.0;
    double core_ = 0.0;
    double lower_ = 0.0;
    double upper_ = 0.0;
};

/// Prelimit path on the grid 0, record_dt, 2 record_dt, ..., T with record_dt = stride * dt;
/// stride 0 records only the endpoints.
inline Path simulate_prelimit(const ScaledModel& scaled, double T, double dt, RngStream& rng,
                              const PrelimitOptions& opt = {}, std::size_t stride = 1) {
    const std::size_t steps = detail::grid_steps(T, dt);
    const PrelimitEngine engine(scaled, dt, opt);
    detail::NoObserver none;
    Path p;
    double x = scaled.model.x0;
    if (stride == 0) {
        p.dt = T;
        p.values = {x, engine.advance(x, T, rng, none).x};
        return p;
    }
    detail::require_domain(steps % stride == 0, "record stride must divide the number of steps");
    const std::size_t records = steps / stride;
    p.dt = dt * static_cast<double>(stride);
    p.values = detail::allocate<double>(records + 1);
    p.values[0] = x;
    for (std::size_t k = 1; k <= records; ++k) {
        x = engine.advance(x, p.dt, rng, none).x;
        p.values[k] = x;
    }
    return p;
}

/// sign * sqrt(BESQ(2c + 1)) started at x0^2, exact on the grid.
inline Path simulate_bessel(double c, double x0, int sign, double T, double dt, RngStream& rng) {
    detail::require_domain(c > -0.5, "simulate_bessel: c must be > -1/2");
    detail::require_domain(sign == 1 || sign == -1, "simulate_bessel: sign must be +1 or -1");
    detail::require_domain(sign * x0 >= 0.0, "simulate_bessel: x0 inconsistent with sign");
    const std::size_t steps = detail::grid_steps(T, dt);
    Path p;
    p.dt = dt;
    p.values = detail::allocate<double>(steps + 1);
    double z = x0 * x0;
    const double delta = besq_dimension(c);
    p.values[0] = x0;
    for (std::size_t k = 1; k <= steps; ++k) {
        z = sample_besq_transition(delta, z, dt, rng);
        p.values[k] = sign * std::sqrt(z);
    }
    return p;
}

/// Transition kernel of a limit process; exact on any grid.
class LimitEngine {
public:
    enum class Phase { single, before_hit, skew };

    struct State {
        double r = 0.0; // |X|
        int sign = 1;
        Phase phase = Phase::single;
        double time = 0.0;
        std::optional<double> hit_time; // switch time of the concatenated cases

        double x() const noexcept { return sign * r; }
    };

    LimitEngine(const LimitLaw& law, double dt, const LimitOptions& opt = {}) : law_(law), dt_(dt), opt_(opt) {
        detail::require_domain(dt > 0.0 && std::isfinite(dt), "dt must be positive");
        detail::require_domain(opt.fine_substeps >= 1 && opt.far_field_margin > 0.0, "bad limit sampler options");
        fine_ = dt / opt.fine_substeps;
        if (law.label == CaseLabel::A5 && !law.gamma) throw DomainError("skew law without gamma");
        if (law.label == CaseLabel::A6 && !law.p) throw DomainError("mixture law without p");
    }

    State initial(RngStream& rng) const {
        State s;
        const double x0 = law_.x0;
        s.r = std::fabs(x0);
        switch (law_.label) {
        case CaseLabel::A1a:
        case CaseLabel::A1b:
        case CaseLabel::A1c: s.sign = 1; break;
        case CaseLabel::A2a:
        case CaseLabel::A2b:
        case CaseLabel::A2c: s.sign = -1; break;
        case CaseLabel::A3:
            s.sign = -1;
            s.phase = Phase::before_hit;
            break;
        case CaseLabel::A4:
            s.sign = 1;
            s.phase = Phase::before_hit;
            break;
        case CaseLabel::A5:
            s.phase = Phase::skew;
            s.sign = x0 > 0 ? 1 : (x0 < 0 ? -1 : skew_sign(rng));
            break;
        case CaseLabel::A6: s.sign = rng.bernoulli(*law_.p) ? 1 : -1; break;
        }
        return s;
    }

    /// Moves the state for time h exactly.
    void step(State& s, double h, RngStream& rng) const {
        const double c = side_c(s.sign);
        switch (s.phase) {
        case Phase::single: s.r = bessel_step(c, s.r, h, rng); break;
        case Phase::skew: {
            const double r1 = bessel_step(c, s.r, h, rng);
            if (!rng.bernoulli(bessel_i_reflection_ratio(0.5 - c, s.r * r1 / h))) s.sign = skew_sign(rng);
            s.r = r1;
            break;
        }
        case Phase::before_hit: {
            // hitting time of 0 from r is r^2 / (2 G), G ~ Gamma(1/2 - c)
            const double hit = s.r > 0.0 ? s.r * s.r / (2.0 * sample_gamma(0.5 - c, 1.0, rng)) : 0.0;
            if (hit >= h) {
                // endpoint given no hit: Bessel endpoint accepted with the bridge no-hit probability
                for (int tries = 0;; ++tries) {
                    if (tries > 1000000) throw ResourceError("rejection sampler for the killed Bessel stalled");
                    const double r1 = bessel_step(c, s.r, h, rng);
                    if (rng.bernoulli(bessel_i_reflection_ratio(0.5 - c, s.r * r1 / h))) {
                        s.r = r1;
                        break;
                    }
                }
            } else {
                s.hit_time = s.time + hit;
                s.sign = -s.sign;
                s.phase = Phase::single;
                s.r = bessel_step(side_c(s.sign), 0.0, h - hit, rng);
            }
            break;
        }
        }
        s.time += h;
    }

    /// Moves for time tau (may be +inf) or until the observer stops the path.
    template <class Obs>
    detail::Advance advance(State& s, double tau, RngStream& rng, Obs& obs) const {
        double remaining = tau;
        double elapsed = 0.0;
        const double eps_time = 1e-9 * fine_;
        const bool watching = !obs.levels().empty();
        while (remaining > eps_time) {
            double h = remaining;
            if (watching) {
                // to reach a level on the other side the path must first reach 0 and then the level
                double d = std::numeric_limits<double>::infinity();
                for (double l : obs.levels()) {
                    const double dl = (l * s.sign >= 0.0) ? std::fabs(s.x() - l) : s.r + std::fabs(l);
                    d = std::min(d, dl);
                }
                const double far = (d / opt_.far_field_margin) * (d / opt_.far_field_margin);
                h = std::min(remaining, std::max(far, fine_));
            }
            const double x0 = s.x();
            step(s, h, rng);
            if (h >= remaining) remaining = 0.0;
            else remaining -= h;
            elapsed += h;
            if (obs.on_step(x0, s.x(), h, rng)) return {s.x(), elapsed, true};
            if (elapsed > detail::max_advance_time) throw ResourceError("path did not finish within the time budget");
        }
        return {s.x(), elapsed, false};
    }

    const LimitLaw& law() const noexcept { return law_; }

private:
    double side_c(int sign) const noexcept { return sign > 0 ? law_.c_plus : law_.c_minus; }
    int skew_sign(RngStream& rng) const { return rng.bernoulli(0.5 * (1.0 + *law_.gamma)) ? 1 : -1; }

    LimitLaw law_;
    double dt_;
    LimitOptions opt_;
    double fine_ = 0.0;
};

/// Limit path together with the switch time of the concatenated cases.
struct LimitTrajectory {
    Path path;
    std::optional<double> hit_time;
};

inline LimitTrajectory simulate_limit_detailed(const LimitLaw& law, double T, double dt, RngStream& rng,
                                               const LimitOptions& opt = {}) {
    const std::size_t steps = detail::grid_steps(T, dt);
    const LimitEngine engine(law, dt, opt);
    LimitEngine::State s = engine.initial(rng);
    LimitTrajectory out;
    out.path.dt = dt;
    out.path.values = detail::allocate<double>(steps + 1);
    out.path.values[0] = law.x0;
    for (std::size_t k = 1; k <= steps; ++k) {
        engine.step(s, dt, rng);
        out.path.values[k] = s.x();
    }
    out.hit_time = s.hit_time;
    return out;
}

/// Limit path on the grid 0, dt, ..., T.
inline Path simulate_limit(const LimitLaw& law, double T, double dt, RngStream& rng, const LimitOptions& opt = {}) {
    return simulate_limit_detailed(law, T, dt, rng, opt).path;
}

// ---------------------------------------------------------------------------
// Monte Carlo drivers

/// X_n(t) for N paths; path i uses stream (prelimit, i).
inline SampleSet monte_carlo_marginal(const ScaledModel& scaled, double t, std::size_t N, const RngPolicy& policy,
                                      const Scheme& scheme = {}, int workers = 1) {
    detail::require_domain(N >= 1, "monte_carlo_marginal: N must be >= 1");
    detail::require_domain(t > 0.0, "monte_carlo_marginal: t must be positive");
    SampleSet out{t, detail::allocate<double>(N), policy.master_seed, scheme, scaled.n};
    out.scheme.kind = SampleKind::prelimit;
    const PrelimitEngine engine(scaled, scheme.dt, scheme.prelimit);
    parallel_for(N, workers, [&](std::size_t i) {
        RngStream rng = policy.stream(StreamTag::prelimit, i);
        detail::NoObserver none;
        out.values[i] = engine.advance(scaled.model.x0, t, rng, none).x;
    });
    return out;
}

/// X(t) of the limit process for N paths; path i uses stream (limit, i).
inline SampleSet monte_carlo_marginal(const LimitLaw& law, double t, std::size_t N, const RngPolicy& policy,
                                      const Scheme& scheme = {}, int workers = 1) {
    detail::require_domain(N >= 1, "monte_carlo_marginal: N must be >= 1");
    detail::require_domain(t > 0.0, "monte_carlo_marginal: t must be positive");
    SampleSet out{t, detail::allocate<double>(N), policy.master_seed, scheme, 0.0};
    out.scheme.kind = SampleKind::limit;
    const LimitEngine engine(law, scheme.dt, scheme.limit);
    parallel_for(N, workers, [&](std::size_t i) {
        RngStream rng = policy.stream(StreamTag::limit, i);
        LimitEngine::State s = engine.initial(rng);
        engine.step(s, t, rng);
        out.values[i] = s.x();
    });
    return out;
}

struct ExitEstimate {
    double fraction_plus = 0.0;
    double std_err = 0.0;
};

struct OccupationEstimate {
    double mean = 0.0;
    double std_err = 0.0;
};

namespace detail {

inline ExitEstimate summarize_exit(const std::vector<unsigned char>& plus) {
    double k = 0.0;
    for (unsigned char v : plus) k += v;
    const double N = static_cast<double>(plus.size());
    const double f = k / N;
    return {f, std::sqrt(std::max(f * (1.0 - f), 0.0) / N)};
}

inline constexpr std::uint64_t limit_exit_offset = 1ULL << 62;

} // namespace detail

/// Fraction of prelimit paths from x0 leaving (-alpha, alpha) at +alpha.
inline ExitEstimate monte_carlo_exit(const ScaledModel& scaled, double alpha, std::size_t N, const RngPolicy& policy,
                                     const Scheme& scheme = {}, int workers = 1) {
    detail::require_domain(alpha > 0.0, "monte_carlo_exit: alpha must be positive");
    detail::require_domain(std::fabs(scaled.model.x0) < alpha, "monte_carlo_exit: requires |x0| < alpha");
    detail::require_domain(N >= 1, "monte_carlo_exit: N must be >= 1");
    const PrelimitEngine engine(scaled, scheme.dt, scheme.prelimit);
    auto plus = detail::allocate<unsigned char>(N);
    parallel_for(N, workers, [&](std::size_t i) {
        RngStream rng = policy.stream(StreamTag::exit, i);
        detail::ExitObserver obs(alpha);
        engine.advance(scaled.model.x0, std::numeric_limits<double>::infinity(), rng, obs);
        plus[i] = obs.side > 0 ? 1 : 0;
    });
    return detail::summarize_exit(plus);
}

/// Fraction of limit-process paths from x0 leaving (-alpha, alpha) at +alpha.
inline ExitEstimate monte_carlo_exit(const LimitLaw& law, double alpha, std::size_t N, const RngPolicy& policy,
                                     const Scheme& scheme = {}, int workers = 1) {
    detail::require_domain(alpha > 0.0, "monte_carlo_exit: alpha must be positive");
    detail::require_domain(std::fabs(law.x0) < alpha, "monte_carlo_exit: requires |x0| < alpha");
    detail::require_domain(N >= 1, "monte_carlo_exit: N must be >= 1");
    const LimitEngine engine(law, scheme.dt, scheme.limit);
    auto plus = detail::allocate<unsigned char>(N);
    parallel_for(N, workers, [&](std::size_t i) {
        RngStream rng = policy.stream(StreamTag::exit, detail::limit_exit_offset + i);
        detail::ExitObserver obs(alpha);
        LimitEngine::State s = engine.initial(rng);
        engine.advance(s, std::numeric_limits<double>::infinity(), rng, obs);
        plus[i] = obs.side > 0 ? 1 : 0;
    });
    return detail::summarize_exit(plus);
}

/// Mean time the prelimit path spends in [-eps, eps] before leaving (-1, 1).
inline OccupationEstimate monte_carlo_occupation(const ScaledModel& scaled, double epsilon, std::size_t N,
                                                 const RngPolicy& policy, const Scheme& scheme = {}, int workers = 1) {
    detail::require_domain(epsilon > 0.0 && epsilon <= 1.0, "monte_carlo_occupation: epsilon must be in (0, 1]");
    detail::require_domain(std::fabs(scaled.model.x0) < 1.0, "monte_carlo_occupation: requires |x0| < 1");
    detail::require_domain(N >= 2, "monte_carlo_occupation: N must be >= 2");
    const PrelimitEngine engine(scaled, scheme.dt, scheme.prelimit);
    auto occ = detail::allocate<double>(N);
    parallel_for(N, workers, [&](std::size_t i) {
        RngStream rng = policy.stream(StreamTag::occupation, i);
        detail::OccupationObserver obs(epsilon);
        engine.advance(scaled.model.x0, std::numeric_limits<double>::infinity(), rng, obs);
        occ[i] = obs.occupation;
    });
    double s = 0.0;
    for (double v : occ) s += v;
    const double mean = s / static_cast<double>(N);
    double ss = 0.0;
    for (double v : occ) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(N - 1);
    return {mean, std::sqrt(var / static_cast<double>(N))};
}

} // namespace sdelimit
