#pragma once

// Experiment pipeline behind the command-line tool: classification, sampling,
// prelimit-vs-limit comparison tables and the JSON report.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "analytic.hpp"
#include "config.hpp"
#include "io.hpp"
#include "sampler.hpp"
#include "stats.hpp"

namespace sdelimit {

using json = nlohmann::ordered_json;

struct KsRow {
    double n = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
};

struct ExitRow {
    double n = 0.0;
    std::optional<double> mc;
    std::optional<double> std_err;
    double analytic_prelimit = 0.0;
    double analytic_limit = 0.0;
};

struct OccupationRow {
    double n = 0.0;
    double epsilon = 0.0;
    double mc = 0.0;
    double bvp = 0.0;
    double std_err = 0.0;
};

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ComparisonReport {
    LimitLaw law;
    std::vector<KsRow> ks_by_n;
    std::vector<ExitRow> exit_probs;
    std::vector<OccupationRow> occupation;
    std::vector<Verdict> verdicts;

    bool passed() const {
        for (const auto& v : verdicts) {
            if (!v.pass) return false;
        }
        return true;
    }
};

/// Command-line overrides applied on top of a config.
struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::ostream* log = &std::clog;
};

inline ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opt) {
    if (opt.seed) cfg.sim.master_seed = *opt.seed;
    if (opt.workers) cfg.sim.workers = *opt.workers;
    return cfg;
}

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void note(const RunOptions& opt, const std::string& msg) {
    if (opt.log) *opt.log << msg << std::endl;
}

inline std::string fmt(double v) { return format_real(v); }

inline std::string n_tag(double n) {
    return n == std::floor(n) ? std::to_string(static_cast<long long>(n)) : format_real(n);
}

inline Scheme scheme_of(const SimConfig& sim, SampleKind kind) {
    Scheme s;
    s.kind = kind;
    s.dt = sim.dt;
    s.prelimit = sim.prelimit;
    s.limit = sim.limit;
    return s;
}

inline Metadata model_metadata(const ExperimentConfig& cfg) {
    Metadata m;
    for (const auto& [k, v] : cfg.echo) {
        if (k.rfind("model.", 0) == 0) m.emplace_back(k, v);
    }
    return m;
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ResourceError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

inline bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] < v[i - 1])) return false;
    }
    return true;
}

} // namespace detail

inline json law_json(const LimitLaw& law) {
    json j;
    j["case"] = std::string(to_string(law.label));
    j["c_minus"] = law.c_minus;
    j["c_plus"] = law.c_plus;
    j["x0"] = law.x0;
    if (law.gamma) j["gamma"] = *law.gamma;
    if (law.p) j["p"] = *law.p;
    return j;
}

inline json config_echo_json(const ExperimentConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.echo) j[k] = v;
    return j;
}

/// Prints the limit law and writes classify.json.
inline LimitLaw cmd_classify(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& out = std::cout) {
    const LimitLaw law = classify(cfg.model);
    const json j = law_json(law);
    out << j.dump(2) << '\n';
    detail::ensure_dir(opt.out_dir);
    auto f = open_output((opt.out_dir / "classify.json").string());
    f << j.dump(2) << '\n';
    return law;
}

inline std::string prelimit_sample_name(double n) { return "samples_prelimit_n" + detail::n_tag(n) + ".csv"; }
inline std::string limit_sample_name() { return "samples_limit.csv"; }

/// Writes one prelimit SampleSet per n, or the limit SampleSet, at time T.
inline std::vector<std::filesystem::path> cmd_simulate(const ExperimentConfig& cfg0, SampleKind kind,
                                                       const RunOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(cfg0, opt);
    detail::ensure_dir(opt.out_dir);
    const RngPolicy policy{cfg.sim.master_seed};
    std::vector<std::filesystem::path> written;
    const Metadata meta = detail::model_metadata(cfg);
    if (kind == SampleKind::limit) {
        const LimitLaw law = classify(cfg.model);
        const auto s = monte_carlo_marginal(law, cfg.sim.T, cfg.sim.limit_paths, policy,
                                            detail::scheme_of(cfg.sim, SampleKind::limit), cfg.sim.workers);
        written.push_back(opt.out_dir / limit_sample_name());
        Metadata m = meta;
        m.emplace_back("case", std::string(to_string(law.label)));
        write_sample_csv(written.back().string(), s, m);
        return written;
    }
    for (double n : cfg.sim.n_list) {
        detail::Stopwatch sw;
        const auto s = monte_carlo_marginal(ScaledModel(cfg.model, n), cfg.sim.T, cfg.sim.paths, policy,
                                            detail::scheme_of(cfg.sim, SampleKind::prelimit), cfg.sim.workers);
        written.push_back(opt.out_dir / prelimit_sample_name(n));
        write_sample_csv(written.back().string(), s, meta);
        detail::note(opt, "simulate prelimit n=" + detail::n_tag(n) + " (" + detail::fmt(sw.seconds()) + " s)");
    }
    return written;
}

/// Exit-probability table: analytic prelimit and limit values for every n in exit_n_list,
/// Monte Carlo for n in exit_mc_n_list.
inline std::vector<ExitRow> exit_table(const ExperimentConfig& cfg, const LimitLaw& law, const RunOptions& opt) {
    const auto& cmp = cfg.compare;
    std::vector<double> ns = cmp.exit_n_list;
    for (double n : cmp.exit_mc_n_list) {
        if (std::find(ns.begin(), ns.end(), n) == ns.end()) ns.push_back(n);
    }
    std::sort(ns.begin(), ns.end());
    const double lim = limit_exit_prob(law, cfg.model.x0, cmp.alpha);
    const RngPolicy policy{cfg.sim.master_seed};
    std::vector<ExitRow> rows;
    for (double n : ns) {
        ExitRow r;
        r.n = n;
        const ScaledModel s(cfg.model, n);
        r.analytic_prelimit = prelimit_exit_prob(s, cfg.model.x0, cmp.alpha);
        r.analytic_limit = lim;
        if (std::find(cmp.exit_mc_n_list.begin(), cmp.exit_mc_n_list.end(), n) != cmp.exit_mc_n_list.end()) {
            detail::Stopwatch sw;
            const auto e = monte_carlo_exit(s, cmp.alpha, cmp.exit_paths, policy,
                                            detail::scheme_of(cfg.sim, SampleKind::prelimit), cfg.sim.workers);
            r.mc = e.fraction_plus;
            r.std_err = e.std_err;
            detail::note(opt, "exit n=" + detail::n_tag(n) + " (" + detail::fmt(sw.seconds()) + " s)");
        }
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<OccupationRow> occupation_table(const ExperimentConfig& cfg, const RunOptions& opt) {
    const auto& cmp = cfg.compare;
    const RngPolicy policy{cfg.sim.master_seed};
    std::vector<OccupationRow> rows;
    for (double n : cmp.occupation_n_list) {
        const ScaledModel s(cfg.model, n);
        for (double eps : cmp.epsilon_list) {
            detail::Stopwatch sw;
            OccupationRow r;
            r.n = n;
            r.epsilon = eps;
            r.bvp = occupation_bvp(s, eps, cfg.model.x0).value;
            const auto e = monte_carlo_occupation(s, eps, cmp.occupation_paths, policy,
                                                  detail::scheme_of(cfg.sim, SampleKind::prelimit), cfg.sim.workers);
            r.mc = e.mean;
            r.std_err = e.std_err;
            rows.push_back(r);
            detail::note(opt, "occupation n=" + detail::n_tag(n) + " eps=" + detail::fmt(eps) + " (" +
                                  detail::fmt(sw.seconds()) + " s)");
        }
    }
    return rows;
}

inline void write_exit_csv(const std::filesystem::path& path, const std::vector<ExitRow>& rows) {
    CsvTable t({"n", "mc", "analytic_prelimit", "analytic_limit", "std_err"});
    for (const auto& r : rows) {
        t.add({detail::n_tag(r.n), r.mc ? detail::fmt(*r.mc) : "", detail::fmt(r.analytic_prelimit),
               detail::fmt(r.analytic_limit), r.std_err ? detail::fmt(*r.std_err) : ""});
    }
    t.write(path.string());
}

inline void write_occupation_csv(const std::filesystem::path& path, const std::vector<OccupationRow>& rows) {
    CsvTable t({"n", "epsilon", "mc", "bvp", "std_err"});
    for (const auto& r : rows) {
        t.add({detail::n_tag(r.n), detail::fmt(r.epsilon), detail::fmt(r.mc), detail::fmt(r.bvp),
               detail::fmt(r.std_err)});
    }
    t.write(path.string());
}

inline void write_ks_csv(const std::filesystem::path& path, const std::vector<KsRow>& rows) {
    CsvTable t({"n", "ks_statistic"});
    for (const auto& r : rows) t.add({detail::n_tag(r.n), detail::fmt(r.statistic)});
    t.write(path.string());
}

// Verdicts derive only from the tables and the tolerances.

inline std::vector<Verdict> ks_verdicts(const std::vector<KsRow>& rows, const Tolerances& tol) {
    std::vector<Verdict> out;
    if (rows.empty()) return out;
    std::vector<double> ks;
    for (const auto& r : rows) ks.push_back(r.statistic);
    std::string listing;
    for (const auto& r : rows) listing += (listing.empty() ? "" : ", ") + detail::n_tag(r.n) + ": " + detail::fmt(r.statistic);
    out.push_back({"ks_decreasing", detail::strictly_decreasing(ks), listing});
    out.push_back({"ks_final", ks.back() <= tol.ks,
                   "ks(n=" + detail::n_tag(rows.back().n) + ") = " + detail::fmt(ks.back()) + " <= " + detail::fmt(tol.ks)});
    return out;
}

inline std::vector<Verdict> exit_verdicts(const std::vector<ExitRow>& rows, const std::vector<double>& gap_ns,
                                          const Tolerances& tol) {
    std::vector<Verdict> out;
    for (const auto& r : rows) {
        if (!r.mc) continue;
        const double diff = std::fabs(*r.mc - r.analytic_prelimit);
        const double band = tol.exit_se * *r.std_err;
        out.push_back({"exit_mc_n" + detail::n_tag(r.n), diff <= band,
                       "|mc - prelimit| = " + detail::fmt(diff) + " <= " + detail::fmt(band)});
    }
    std::vector<double> gaps;
    for (const auto& r : rows) {
        if (std::find(gap_ns.begin(), gap_ns.end(), r.n) != gap_ns.end()) {
            gaps.push_back(std::fabs(r.analytic_prelimit - r.analytic_limit));
        }
    }
    if (!gaps.empty()) {
        bool monotone = true;
        for (std::size_t i = 1; i < gaps.size(); ++i) {
            if (!(gaps[i] < gaps[i - 1] || (gaps[i] == 0.0 && gaps[i - 1] == 0.0))) monotone = false;
        }
        std::string listing;
        for (double g : gaps) listing += (listing.empty() ? "" : ", ") + detail::fmt(g);
        out.push_back({"exit_gap_decreasing", monotone, listing});
        out.push_back({"exit_gap_final", gaps.back() < tol.exit_gap,
                       detail::fmt(gaps.back()) + " < " + detail::fmt(tol.exit_gap)});
    }
    return out;
}

inline std::vector<Verdict> occupation_verdicts(const std::vector<OccupationRow>& rows, const Tolerances& tol) {
    std::vector<Verdict> out;
    for (const auto& r : rows) {
        const double diff = std::fabs(r.mc - r.bvp);
        const double band = std::max(tol.occupation_se * r.std_err, tol.occupation_rel * r.bvp);
        out.push_back({"occupation_n" + detail::n_tag(r.n) + "_eps" + detail::fmt(r.epsilon), diff <= band,
                       "|mc - bvp| = " + detail::fmt(diff) + " <= " + detail::fmt(band)});
    }
    // bvp nondecreasing in epsilon for each n (rows are grouped by n, epsilon ascending)
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].n == rows[i - 1].n && rows[i].bvp < rows[i - 1].bvp) monotone = false;
    }
    if (!rows.empty()) out.push_back({"occupation_bvp_monotone", monotone, ""});
    return out;
}

inline json verdicts_json(const std::vector<Verdict>& vs) {
    json j = json::object();
    for (const auto& v : vs) j[v.name] = {{"pass", v.pass}, {"detail", v.detail}};
    return j;
}

inline json report_json(const ExperimentConfig& cfg, const ComparisonReport& rep) {
    json j;
    j["case"] = std::string(to_string(rep.law.label));
    json params = law_json(rep.law);
    params.erase("case");
    params["atilde_integral"] = cfg.model.perturbation.total_integral();
    params["time"] = cfg.compare.time;
    params["alpha"] = cfg.compare.alpha;
    params["dt"] = cfg.sim.dt;
    params["paths"] = cfg.sim.paths;
    params["limit_paths"] = cfg.sim.limit_paths;
    params["master_seed"] = cfg.sim.master_seed;
    params["scheme"] = std::string(to_string(cfg.sim.prelimit.method));
    j["params"] = params;
    j["ks_by_n"] = json::array();
    for (const auto& r : rep.ks_by_n) j["ks_by_n"].push_back({{"n", r.n}, {"ks_statistic", r.statistic}, {"p_value", r.p_value}});
    j["exit_probs"] = json::array();
    for (const auto& r : rep.exit_probs) {
        json e{{"n", r.n}};
        e["mc"] = r.mc ? json(*r.mc) : json(nullptr);
        e["analytic_prelimit"] = r.analytic_prelimit;
        e["analytic_limit"] = r.analytic_limit;
        e["std_err"] = r.std_err ? json(*r.std_err) : json(nullptr);
        j["exit_probs"].push_back(e);
    }
    j["occupation"] = json::array();
    for (const auto& r : rep.occupation) {
        j["occupation"].push_back(
            {{"n", r.n}, {"epsilon", r.epsilon}, {"mc", r.mc}, {"bvp", r.bvp}, {"std_err", r.std_err}});
    }
    j["verdicts"] = verdicts_json(rep.verdicts);
    j["config_echo"] = config_echo_json(cfg);
    return j;
}

/// Full pipeline: samples, KS by n, exit and occupation tables, verdicts, report.json.
inline ComparisonReport cmd_compare(const ExperimentConfig& cfg0, const RunOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(cfg0, opt);
    detail::ensure_dir(opt.out_dir);
    ComparisonReport rep;
    rep.law = classify(cfg.model);
    const RngPolicy policy{cfg.sim.master_seed};
    const double t = cfg.compare.time;
    const Metadata meta = detail::model_metadata(cfg);

    detail::Stopwatch sw;
    const auto limit = monte_carlo_marginal(rep.law, t, cfg.sim.limit_paths, policy,
                                            detail::scheme_of(cfg.sim, SampleKind::limit), cfg.sim.workers);
    {
        Metadata m = meta;
        m.emplace_back("case", std::string(to_string(rep.law.label)));
        write_sample_csv((opt.out_dir / limit_sample_name()).string(), limit, m);
    }
    detail::note(opt, "limit sample (" + detail::fmt(sw.seconds()) + " s)");

    for (double n : cfg.sim.n_list) {
        detail::Stopwatch swn;
        const auto pre = monte_carlo_marginal(ScaledModel(cfg.model, n), t, cfg.sim.paths, policy,
                                              detail::scheme_of(cfg.sim, SampleKind::prelimit), cfg.sim.workers);
        write_sample_csv((opt.out_dir / prelimit_sample_name(n)).string(), pre, meta);
        const KSReport ks = ks_two_sample(pre.values, limit.values);
        rep.ks_by_n.push_back({n, ks.statistic, ks.p_value});
        detail::note(opt, "prelimit n=" + detail::n_tag(n) + " ks=" + detail::fmt(ks.statistic) + " (" +
                              detail::fmt(swn.seconds()) + " s)");
    }
    write_ks_csv(opt.out_dir / "ks_by_n.csv", rep.ks_by_n);

    rep.exit_probs = exit_table(cfg, rep.law, opt);
    write_exit_csv(opt.out_dir / "exit_probs.csv", rep.exit_probs);

    rep.occupation = occupation_table(cfg, opt);
    write_occupation_csv(opt.out_dir / "occupation.csv", rep.occupation);

    for (auto& v : ks_verdicts(rep.ks_by_n, cfg.compare.tol)) rep.verdicts.push_back(std::move(v));
    for (auto& v : exit_verdicts(rep.exit_probs, cfg.compare.exit_n_list, cfg.compare.tol)) rep.verdicts.push_back(std::move(v));
    for (auto& v : occupation_verdicts(rep.occupation, cfg.compare.tol)) rep.verdicts.push_back(std::move(v));

    auto f = open_output((opt.out_dir / "report.json").string());
    f << report_json(cfg, rep).dump(2) << '\n';
    return rep;
}

/// Exit table only (exit_probs.csv); verdicts on the Monte Carlo rows and the analytic gap.
inline std::vector<Verdict> cmd_exitprob(const ExperimentConfig& cfg0, const RunOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(cfg0, opt);
    detail::ensure_dir(opt.out_dir);
    const auto rows = exit_table(cfg, classify(cfg.model), opt);
    write_exit_csv(opt.out_dir / "exit_probs.csv", rows);
    return exit_verdicts(rows, cfg.compare.exit_n_list, cfg.compare.tol);
}

/// Occupation table only (occupation.csv).
inline std::vector<Verdict> cmd_occupation(const ExperimentConfig& cfg0, const RunOptions& opt) {
    const ExperimentConfig cfg = apply_overrides(cfg0, opt);
    detail::ensure_dir(opt.out_dir);
    const auto rows = occupation_table(cfg, opt);
    write_occupation_csv(opt.out_dir / "occupation.csv", rows);
    return occupation_verdicts(rows, cfg.compare.tol);
}

} // namespace sdelimit
