#pragma once

// Experiment configuration: an INI file with [model], [sim] and [compare] sections.
//
//   [model]
//   atilde.breakpoints = [0, 1]
//   atilde.values = [0.6931471805599453]
//   c_minus = 0
//   c_plus = 0
//   x0 = 0
//
// Arrays are written as bracketed, comma-separated numbers.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "errors.hpp"
#include "model.hpp"
#include "sampler.hpp"

namespace sdelimit {

struct SimConfig {
    std::vector<double> n_list{20, 100, 500};
    double T = 1.0;
    double dt = 1e-4;
    std::size_t paths = 100000;
    std::size_t limit_paths = 100000;
    std::uint64_t master_seed = 1;
    int workers = 1;
    PrelimitOptions prelimit{};
    LimitOptions limit{};
};

struct Tolerances {
    double ks = 0.02;              // KS statistic at the largest n
    double exit_se = 3.0;          // |MC - analytic| in standard errors
    double exit_gap = 0.01;        // |prelimit - limit| at the largest n of exit_n_list
    double occupation_rel = 0.05;  // relative band for MC vs BVP
    double occupation_se = 3.0;    // standard-error band for MC vs BVP
};

struct CompareConfig {
    double time = 1.0;
    double alpha = 1.0;
    std::vector<double> exit_n_list{10, 100, 1000, 10000};
    std::vector<double> exit_mc_n_list{100};
    std::size_t exit_paths = 50000;
    std::vector<double> occupation_n_list{10, 100, 1000};
    std::vector<double> epsilon_list{0.1, 0.3, 1.0};
    std::size_t occupation_paths = 10000;
    Tolerances tol{};
};

struct ExperimentConfig {
    Model model;
    SimConfig sim;
    CompareConfig compare;
    /// Every entry as written, section.key -> raw text, in file order.
    std::vector<std::pair<std::string, std::string>> echo;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline double parse_real(const std::string& key, const std::string& raw) {
    const std::string t = trim(raw);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(key, "expected a number, got '" + raw + "'");
    }
    if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
    return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
    const std::string t = trim(raw);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(key, "expected a nonnegative integer, got '" + raw + "'");
    }
    return v;
}

inline std::vector<double> parse_array(const std::string& key, const std::string& raw) {
    const std::string t = trim(raw);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
        throw ConfigError(key, "expected an array like [1, 2, 3]");
    }
    std::vector<double> out;
    const std::string body = trim(t.substr(1, t.size() - 2));
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(key, item));
    return out;
}

class Section {
public:
    Section(const boost::property_tree::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    std::optional<std::string> raw(const std::string& key) const {
        if (!tree_) return std::nullopt;
        const auto it = tree_->find(key);
        if (it == tree_->not_found()) return std::nullopt;
        used_.push_back(key);
        return it->second.data();
    }
    std::string path(const std::string& key) const { return name_ + "." + key; }

    double real(const std::string& key, std::optional<double> fallback = std::nullopt) const {
        if (auto r = raw(key)) return parse_real(path(key), *r);
        if (fallback) return *fallback;
        throw ConfigError(path(key), "missing required key");
    }
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
        if (auto r = raw(key)) return parse_u64(path(key), *r);
        return fallback;
    }
    std::vector<double> array(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) const {
        if (auto r = raw(key)) return parse_array(path(key), *r);
        if (fallback) return *fallback;
        throw ConfigError(path(key), "missing required key");
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        if (auto r = raw(key)) return trim(*r);
        return fallback;
    }

    void reject_unknown() const {
        if (!tree_) return;
        for (const auto& [k, v] : *tree_) {
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) throw ConfigError(path(k), "unknown key");
        }
    }

private:
    const boost::property_tree::ptree* tree_;
    std::string name_;
    mutable std::vector<std::string> used_;
};

inline void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

inline void check_n_list(const std::string& key, const std::vector<double>& v) {
    require(!v.empty(), key, "must be nonempty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(v[i] >= 1.0, key, "scaling indices must be >= 1");
        if (i > 0) require(v[i] > v[i - 1], key, "must be strictly ascending");
    }
}

inline std::size_t as_count(const std::string& key, std::uint64_t v) {
    require(v >= 1, key, "must be >= 1");
    return static_cast<std::size_t>(v);
}

} // namespace detail

/// Parses and validates a configuration. Errors name the offending key as section.key.
inline ExperimentConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config", std::string("syntax error: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    for (const auto& [name, sec] : tree) {
        if (name != "model" && name != "sim" && name != "compare") throw ConfigError(name, "unknown section");
    }
    const auto section = [&](const char* name) {
        const auto it = tree.find(name);
        return detail::Section(it == tree.not_found() ? nullptr : &it->second, name);
    };

    ExperimentConfig cfg;
    for (const auto& [name, sec] : tree) {
        for (const auto& [k, v] : sec) cfg.echo.emplace_back(name + "." + k, detail::trim(v.data()));
    }

    // [model]
    {
        const auto m = section("model");
        if (tree.find("model") == tree.not_found()) throw ConfigError("model", "missing section");
        const auto bps = m.array("atilde.breakpoints", std::vector<double>{});
        const auto vals = m.array("atilde.values", std::vector<double>{});
        PerturbationSpec p;
        try {
            p = PerturbationSpec(bps, vals);
        } catch (const DomainError& e) {
            throw ConfigError("model.atilde", e.what());
        }
        const double cm = m.real("c_minus");
        const double cp = m.real("c_plus");
        const double x0 = m.real("x0", 0.0);
        detail::require(cm > -0.5, "model.c_minus", "must be > -1/2");
        detail::require(cp > -0.5, "model.c_plus", "must be > -1/2");
        cfg.model = Model(std::move(p), cm, cp, x0);
        m.reject_unknown();
    }

    // [sim]
    {
        const auto s = section("sim");
        auto& sim = cfg.sim;
        sim.n_list = s.array("n_list", sim.n_list);
        detail::check_n_list("sim.n_list", sim.n_list);
        sim.T = s.real("T", sim.T);
        detail::require(sim.T > 0.0, "sim.T", "must be positive");
        sim.dt = s.real("dt", sim.dt);
        detail::require(sim.dt > 0.0 && sim.dt <= sim.T, "sim.dt", "must be in (0, T]");
        sim.paths = detail::as_count("sim.paths", s.u64("paths", sim.paths));
        sim.limit_paths = detail::as_count("sim.limit_paths", s.u64("limit_paths", sim.paths));
        sim.master_seed = s.u64("master_seed", sim.master_seed);
        const auto workers = s.u64("workers", 1);
        detail::require(workers <= 4096, "sim.workers", "too many workers");
        sim.workers = static_cast<int>(workers);
        const std::string scheme = s.text("scheme", "scale_euler");
        if (scheme == "scale_euler") sim.prelimit.method = PrelimitMethod::scale_euler;
        else if (scheme == "tamed_euler") sim.prelimit.method = PrelimitMethod::tamed_euler;
        else throw ConfigError("sim.scheme", "expected scale_euler or tamed_euler");
        sim.prelimit.layer_resolution = s.real("layer_resolution", sim.prelimit.layer_resolution);
        detail::require(sim.prelimit.layer_resolution > 0.0, "sim.layer_resolution", "must be positive");
        const auto sub = s.u64("max_substeps", static_cast<std::uint64_t>(sim.prelimit.max_substeps));
        detail::require(sub >= 1 && sub <= 4096, "sim.max_substeps", "must be in [1, 4096]");
        sim.prelimit.max_substeps = static_cast<int>(sub);
        const auto lsub = s.u64("level_substeps", static_cast<std::uint64_t>(sim.prelimit.level_substeps));
        detail::require(lsub >= 1 && lsub <= 4096, "sim.level_substeps", "must be in [1, 4096]");
        sim.prelimit.level_substeps = static_cast<int>(lsub);
        sim.prelimit.far_field_margin = s.real("far_field_margin", sim.prelimit.far_field_margin);
        detail::require(sim.prelimit.far_field_margin >= 1.0, "sim.far_field_margin", "must be >= 1");
        sim.limit.far_field_margin = sim.prelimit.far_field_margin;
        s.reject_unknown();
    }

    // [compare]
    {
        const auto c = section("compare");
        auto& cmp = cfg.compare;
        cmp.time = c.real("time", cfg.sim.T);
        detail::require(cmp.time > 0.0, "compare.time", "must be positive");
        cmp.alpha = c.real("alpha", cmp.alpha);
        detail::require(cmp.alpha > 0.0, "compare.alpha", "must be positive");
        detail::require(std::fabs(cfg.model.x0) < cmp.alpha, "compare.alpha", "must exceed |x0|");
        cmp.exit_n_list = c.array("exit_n_list", cmp.exit_n_list);
        detail::check_n_list("compare.exit_n_list", cmp.exit_n_list);
        cmp.exit_mc_n_list = c.array("exit_mc_n_list", cmp.exit_mc_n_list);
        if (!cmp.exit_mc_n_list.empty()) detail::check_n_list("compare.exit_mc_n_list", cmp.exit_mc_n_list);
        cmp.exit_paths = detail::as_count("compare.exit_paths", c.u64("exit_paths", cmp.exit_paths));
        cmp.occupation_n_list = c.array("occupation_n_list", cmp.occupation_n_list);
        if (!cmp.occupation_n_list.empty()) detail::check_n_list("compare.occupation_n_list", cmp.occupation_n_list);
        cmp.epsilon_list = c.array("epsilon_list", cmp.epsilon_list);
        std::sort(cmp.epsilon_list.begin(), cmp.epsilon_list.end());
        for (double e : cmp.epsilon_list) detail::require(e > 0.0 && e <= 1.0, "compare.epsilon_list", "entries must be in (0, 1]");
        if (!cmp.occupation_n_list.empty() && !cmp.epsilon_list.empty()) {
            detail::require(std::fabs(cfg.model.x0) < 1.0, "model.x0", "occupation requires |x0| < 1");
        }
        cmp.occupation_paths = detail::as_count("compare.occupation_paths", c.u64("occupation_paths", cmp.occupation_paths));
        detail::require(cmp.occupation_paths >= 2, "compare.occupation_paths", "must be >= 2");
        auto& tol = cmp.tol;
        tol.ks = c.real("tol.ks", tol.ks);
        tol.exit_se = c.real("tol.exit_se", tol.exit_se);
        tol.exit_gap = c.real("tol.exit_gap", tol.exit_gap);
        tol.occupation_rel = c.real("tol.occupation_rel", tol.occupation_rel);
        tol.occupation_se = c.real("tol.occupation_se", tol.occupation_se);
        for (const char* k : {"tol.ks", "tol.exit_se", "tol.exit_gap", "tol.occupation_rel", "tol.occupation_se"}) {
            const double v = c.real(k, 1.0);
            detail::require(v > 0.0, std::string("compare.") + k, "must be positive");
        }
        c.reject_unknown();
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse_config(in);
}

} // namespace sdelimit
