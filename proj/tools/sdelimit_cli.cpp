// sdelimit: classify a drift, simulate prelimit and limit samples, compare them.
//
// Exit status: 0 when every verdict passes, 2 when a verdict fails, 1 on error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <sdelimit/experiment.hpp>

namespace {

using namespace sdelimit;

struct Common {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;

    RunOptions run() const {
        RunOptions o;
        o.out_dir = out;
        o.seed = seed;
        o.workers = workers;
        return o;
    }
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--seed", c.seed, "master seed override");
    cmd->add_option("--workers", c.workers, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
}

int report_verdicts(const std::vector<Verdict>& verdicts) {
    bool ok = true;
    for (const auto& v : verdicts) {
        std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << "  " << v.detail << '\n';
        ok = ok && v.pass;
    }
    return ok ? 0 : 2;
}

void write_trajectory(const ExperimentConfig& cfg, SampleKind kind, std::uint64_t index, const RunOptions& opt) {
    const RngPolicy policy{cfg.sim.master_seed};
    const std::string idx = std::to_string(index);
    if (kind == SampleKind::limit) {
        RngStream rng = policy.stream(StreamTag::limit, index);
        const Path p = simulate_limit(classify(cfg.model), cfg.sim.T, cfg.sim.dt, rng, cfg.sim.limit);
        write_path_csv((opt.out_dir / ("path_limit_i" + idx + ".csv")).string(), p,
                       {{"kind", "limit"}, {"dt", format_real(cfg.sim.dt)}, {"master_seed", std::to_string(cfg.sim.master_seed)}});
        return;
    }
    for (double n : cfg.sim.n_list) {
        RngStream rng = policy.stream(StreamTag::prelimit, index);
        const Path p = simulate_prelimit(ScaledModel(cfg.model, n), cfg.sim.T, cfg.sim.dt, rng, cfg.sim.prelimit);
        const std::string tag = n == std::floor(n) ? std::to_string(static_cast<long long>(n)) : format_real(n);
        write_path_csv((opt.out_dir / ("path_prelimit_n" + tag + "_i" + idx + ".csv")).string(), p,
                       {{"kind", "prelimit"}, {"n", tag}, {"dt", format_real(cfg.sim.dt)},
                        {"master_seed", std::to_string(cfg.sim.master_seed)}});
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak limits of diffusions with singular drift: classification, simulation, comparison"};
    app.require_subcommand(1);

    Common classify_opt, simulate_opt, compare_opt, exit_opt, occ_opt;
    std::string kind = "prelimit";
    std::optional<std::uint64_t> trajectory;

    auto* c_classify = app.add_subcommand("classify", "print the limit case and its parameters");
    add_common(c_classify, classify_opt);
    auto* c_simulate = app.add_subcommand("simulate", "write marginal samples at time T");
    add_common(c_simulate, simulate_opt);
    c_simulate->add_option("--kind", kind, "prelimit or limit")->check(CLI::IsMember({"prelimit", "limit"}));
    c_simulate->add_option("--trajectory", trajectory, "also write the full path of this path index");
    auto* c_compare = app.add_subcommand("compare", "prelimit vs limit: KS by n, exit and occupation tables");
    add_common(c_compare, compare_opt);
    auto* c_exit = app.add_subcommand("exitprob", "exit-probability table");
    add_common(c_exit, exit_opt);
    auto* c_occ = app.add_subcommand("occupation", "occupation-time table");
    add_common(c_occ, occ_opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_classify->parsed()) {
            const auto cfg = load_config(classify_opt.config);
            cmd_classify(cfg, classify_opt.run());
            return 0;
        }
        if (c_simulate->parsed()) {
            const auto opt = simulate_opt.run();
            const auto cfg = apply_overrides(load_config(simulate_opt.config), opt);
            const SampleKind k = kind == "limit" ? SampleKind::limit : SampleKind::prelimit;
            for (const auto& p : cmd_simulate(cfg, k, opt)) std::cout << p.string() << '\n';
            if (trajectory) write_trajectory(cfg, k, *trajectory, opt);
            return 0;
        }
        if (c_compare->parsed()) {
            const auto rep = cmd_compare(load_config(compare_opt.config), compare_opt.run());
            std::cout << "case " << to_string(rep.law.label) << '\n';
            return report_verdicts(rep.verdicts);
        }
        if (c_exit->parsed()) return report_verdicts(cmd_exitprob(load_config(exit_opt.config), exit_opt.run()));
        if (c_occ->parsed()) return report_verdicts(cmd_occupation(load_config(occ_opt.config), occ_opt.run()));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
