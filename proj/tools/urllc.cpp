// Command-line front end: gen, solve, sweep, probe, oracle.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "urllc/harness.hpp"
#include "urllc/model.hpp"
#include "urllc/oracle.hpp"
#include "urllc/sca.hpp"
#include "urllc/scenario.hpp"

namespace fs = std::filesystem;
using namespace urllc;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::string out;
    double tol = 1e-6;
    int max_iter = 200;
    std::string preset;
};

void add_common(CLI::App* app, Common& c, bool with_preset) {
    app->add_option("--seed", c.seed, "Base RNG seed (overrides the config)");
    app->add_option("--out", c.out, "Output file or directory");
    app->add_option("--tol", c.tol, "SCA stopping tolerance on the change in p_tot, W")->check(CLI::PositiveNumber);
    app->add_option("--max-iter", c.max_iter, "SCA iteration cap")->check(CLI::PositiveNumber);
    if (with_preset)
        app->add_option("--preset", c.preset, "Figure preset")->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "fig6"}));
}

sca::ScaOptions sca_options(const Common& c) {
    sca::ScaOptions o;
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    return o;
}

ScenarioConfig load_with_seed(const std::string& path, const Common& c) {
    ScenarioConfig cfg = path.empty() ? default_config() : load_config(path);
    if (c.seed) cfg.rng_seed = *c.seed;
    return cfg;
}

void print_sweep(const harness::SweepResult& r) { harness::write_sweep_csv(std::cout, r); }

int run_gen(const Common& c) {
    ScenarioConfig cfg = default_config();
    if (c.seed) cfg.rng_seed = *c.seed;
    const std::string text = config_to_json(cfg).dump(2) + "\n";
    if (c.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(c.out);
        if (!f) throw std::runtime_error("cannot open " + c.out);
        f << text;
    }
    return 0;
}

int run_solve(const std::string& config, const Common& c) {
    const ScenarioConfig cfg = load_with_seed(config, c);
    const ProblemInstance inst = generate_instance(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const sca::SolveOutcome out = sca::run(inst, sca_options(c));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const FeasibilityReport rep = check_feasible(inst, out.schedule);

    std::cout << "status " << sca::to_string(out.status) << "\n"
              << "p_tot_w " << format_double(out.p_tot) << "\n"
              << "iterations " << out.iterations << "\n"
              << "feasible " << (rep.feasible ? "yes" : "no") << "\n"
              << "seconds " << format_double(secs) << "\n";
    for (std::size_t k = 0; k < rep.per_user_rate.size(); ++k)
        std::cout << "user " << k + 1 << " rate_bits " << format_double(rep.per_user_rate[k]) << " payload_bits "
                  << format_double(inst.qos[k].payload_bits) << "\n";
    if (!c.out.empty()) save_schedule(out.schedule, c.out);
    return out.status == sca::Status::Converged ? 0 : 2;
}

harness::SweepSpec with_overrides(harness::SweepSpec spec, const Common& c, std::optional<int> trials) {
    if (c.seed) spec.base.rng_seed = *c.seed;
    spec.sca.tol = c.tol;
    spec.sca.max_iter = c.max_iter;
    if (trials) spec.trials = *trials;
    return spec;
}

int run_sweep(const std::string& spec_path, const Common& c, std::optional<int> trials, bool paper) {
    const fs::path out = c.out.empty() ? fs::path("sweep_out") : fs::path(c.out);
    if (!c.preset.empty()) {
        const harness::Preset pr = harness::make_preset(c.preset, paper ? harness::Scale::Paper : harness::Scale::Desk);
        if (pr.sweeps.empty()) throw std::invalid_argument("preset " + c.preset + " is a convergence probe; use `probe`");
        for (const auto& ls : pr.sweeps) {
            const auto spec = with_overrides(ls.spec, c, trials);
            const auto res = harness::run_sweep(spec);
            harness::emit(res, spec.parameter, out / ls.label);
            std::cout << "# " << ls.label << "\n";
            print_sweep(res);
        }
        return 0;
    }
    if (spec_path.empty()) throw std::invalid_argument("sweep needs a spec file or --preset");
    const auto spec = with_overrides(harness::load_spec(spec_path), c, trials);
    const auto res = harness::run_sweep(spec);
    harness::emit(res, spec.parameter, out);
    print_sweep(res);
    return 0;
}

int run_probe(const std::string& config, const Common& c, bool paper) {
    ScenarioConfig cfg;
    if (!c.preset.empty()) {
        const harness::Preset pr = harness::make_preset(c.preset, paper ? harness::Scale::Paper : harness::Scale::Desk);
        if (!pr.probe) throw std::invalid_argument("preset " + c.preset + " has no convergence probe");
        cfg = *pr.probe;
        if (c.seed) cfg.rng_seed = *c.seed;
    } else {
        cfg = load_with_seed(config, c);
    }
    const auto probe = harness::run_convergence_probe(cfg, sca_options(c));
    if (c.out.empty()) {
        harness::write_probe_csv(std::cout, probe);
    } else {
        std::ofstream f(c.out);
        if (!f) throw std::runtime_error("cannot open " + c.out);
        harness::write_probe_csv(f, probe);
    }
    std::cerr << "status " << sca::to_string(probe.status) << " iterations " << probe.iterations << " p_tot_w "
              << format_double(probe.p_tot) << "\n";
    return probe.status == sca::Status::Converged ? 0 : 2;
}

int run_oracle(const std::string& config, const Common& c, double limit) {
    const ScenarioConfig cfg = load_with_seed(config, c);
    const ProblemInstance inst = generate_instance(cfg);
    std::cout << "search_space " << format_double(oracle::search_space_size(inst)) << "\n";
    const oracle::OracleResult orc = oracle::exhaustive_solve(inst, limit);
    const sca::SolveOutcome out = sca::run(inst, sca_options(c));
    std::cout << "oracle_feasible " << (orc.feasible_found ? "yes" : "no") << "\n"
              << "oracle_p_tot_w " << format_double(orc.best_p_tot) << "\n"
              << "assignments_searched " << orc.assignments_searched << "\n"
              << "sca_status " << sca::to_string(out.status) << "\n"
              << "sca_p_tot_w " << format_double(out.p_tot) << "\n";
    if (orc.feasible_found && out.status == sca::Status::Converged)
        std::cout << "relative_gap " << format_double((out.p_tot - orc.best_p_tot) / orc.best_p_tot) << "\n";
    if (!c.out.empty() && orc.feasible_found) save_schedule(orc.best_schedule, c.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust URLLC scheduling and power allocation"};
    app.require_subcommand(1);

    Common gen_c, solve_c, sweep_c, probe_c, oracle_c;
    std::string solve_cfg, sweep_spec, probe_cfg, oracle_cfg;
    std::optional<int> trials;
    bool sweep_paper = false, probe_paper = false;
    double limit = oracle::kDefaultSearchLimit;

    auto* gen = app.add_subcommand("gen", "Write a scenario config template");
    add_common(gen, gen_c, false);

    auto* solve = app.add_subcommand("solve", "Solve one instance and write its schedule");
    solve->add_option("config", solve_cfg, "Scenario config (JSON); the default config if omitted");
    add_common(solve, solve_c, false);

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep to sweep.csv and sweep.gp");
    sweep->add_option("spec", sweep_spec, "Sweep spec (JSON)");
    sweep->add_option("--trials", trials, "Override the trial count")->check(CLI::PositiveNumber);
    sweep->add_flag("--paper-scale", sweep_paper, "Use the paper-scale preset (64 bins, 100 trials)");
    add_common(sweep, sweep_c, true);

    auto* probe = app.add_subcommand("probe", "Per-iteration convergence trace");
    probe->add_option("config", probe_cfg, "Scenario config (JSON)");
    probe->add_flag("--paper-scale", probe_paper, "Use the paper-scale preset");
    add_common(probe, probe_c, true);

    auto* orc = app.add_subcommand("oracle", "Exhaustive search against SCA on a tiny instance");
    orc->add_option("config", oracle_cfg, "Scenario config (JSON)")->required();
    orc->add_option("--limit", limit, "Refuse search spaces larger than this");
    add_common(orc, oracle_c, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return run_gen(gen_c);
        if (*solve) return run_solve(solve_cfg, solve_c);
        if (*sweep) return run_sweep(sweep_spec, sweep_c, trials, sweep_paper);
        if (*probe) return run_probe(probe_cfg, probe_c, probe_paper);
        if (*orc) return run_oracle(oracle_cfg, oracle_c, limit);
    } catch (const oracle::SearchSpaceTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
