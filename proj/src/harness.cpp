#include "urllc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "urllc/model.hpp"

namespace urllc::harness {

namespace {

struct ParameterName {
    Parameter p;
    const char* name;
};
constexpr ParameterName kNames[] = {
    {Parameter::PayloadB, "payload_B"},
    {Parameter::NumUsersK, "num_users_K"},
    {Parameter::DeadlineD1, "deadline_D1"},
    {Parameter::ErrorProb, "error_prob_eps"},
    {Parameter::ErrorBound, "error_bound_delta"},
};

std::size_t as_count(double v, const char* what) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e6)
        throw std::invalid_argument(std::string(what) + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

}  // namespace

const char* to_string(Parameter p) {
    for (const auto& n : kNames)
        if (n.p == p) return n.name;
    return "unknown";
}

Parameter parse_parameter(std::string_view name) {
    for (const auto& n : kNames)
        if (name == n.name) return n.p;
    throw std::invalid_argument("unknown swept parameter '" + std::string(name) + "'");
}

ScenarioConfig apply(const ScenarioConfig& base, Parameter p, double value) {
    ScenarioConfig cfg = base;
    switch (p) {
        case Parameter::PayloadB:
            for (auto& q : cfg.qos) q.payload_bits = value;
            break;
        case Parameter::ErrorProb:
            for (auto& q : cfg.qos) q.error_prob = value;
            break;
        case Parameter::ErrorBound:
            cfg.error_bound = value;
            break;
        case Parameter::DeadlineD1:
            if (cfg.qos.empty()) throw std::invalid_argument("deadline_D1 needs at least one user");
            cfg.qos[0].deadline_slots = as_count(value, "deadline_D1");
            break;
        case Parameter::NumUsersK: {
            const std::size_t k = as_count(value, "num_users_K");
            if (cfg.qos.empty() || cfg.user_distances_m.empty())
                throw std::invalid_argument("num_users_K needs a user to copy");
            cfg.qos.resize(k, cfg.qos.back());
            cfg.user_distances_m.resize(k, cfg.user_distances_m.back());
            cfg.num_users = k;
            break;
        }
    }
    return cfg;
}

void validate(const SweepSpec& spec) {
    if (spec.values.empty()) throw std::invalid_argument("sweep: no values");
    if (spec.trials < 1) throw std::invalid_argument("sweep: trials must be at least 1");
    for (double v : spec.values) {
        try {
            urllc::validate(apply(spec.base, spec.parameter, v));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string("sweep: ") + to_string(spec.parameter) + " = " +
                                        format_double(v) + ": " + e.what());
        }
    }
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
    return derive_seed(base_seed, static_cast<std::uint64_t>(trial));
}

bool TrialRecord::usable() const {
    return error.empty() && (status == sca::Status::Converged || status == sca::Status::IterationCap);
}

double pairwise_sum(const std::vector<double>& v) {
    auto rec = [&](auto&& self, std::size_t lo, std::size_t hi) -> double {
        if (hi - lo == 0) return 0.0;
        if (hi - lo == 1) return v[lo];
        const std::size_t mid = lo + (hi - lo) / 2;
        return self(self, lo, mid) + self(self, mid, hi);
    };
    return rec(rec, 0, v.size());
}

SweepRow summarize(double value, const std::vector<TrialRecord>& trials) {
    SweepRow row;
    row.value = value;
    std::vector<double> p, iters;
    for (const auto& t : trials) {
        if (!t.usable()) {
            ++row.infeasible;
            continue;
        }
        p.push_back(t.p_tot);
        iters.push_back(t.iterations);
    }
    if (p.empty()) {
        row.mean_p_tot = std::numeric_limits<double>::quiet_NaN();
        row.mean_iterations = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    const double n = static_cast<double>(p.size());
    row.mean_p_tot = pairwise_sum(p) / n;
    row.mean_iterations = pairwise_sum(iters) / n;
    if (p.size() > 1) {
        std::vector<double> sq(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) sq[i] = (p[i] - row.mean_p_tot) * (p[i] - row.mean_p_tot);
        row.std_p_tot = std::sqrt(pairwise_sum(sq) / (n - 1.0));
    }
    return row;
}

SweepResult run_sweep(const SweepSpec& spec) {
    validate(spec);
    const std::size_t trials = static_cast<std::size_t>(spec.trials);
    const std::size_t jobs = spec.values.size() * trials;

    SweepResult res;
    res.trials.resize(jobs);
    for (std::size_t j = 0; j < jobs; ++j) {
        TrialRecord& r = res.trials[j];
        r.value = spec.values[j / trials];
        r.trial = static_cast<int>(j % trials);
        r.seed = trial_seed(spec.base.rng_seed, r.trial);
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            TrialRecord& r = res.trials[j];
            try {
                ScenarioConfig cfg = apply(spec.base, spec.parameter, r.value);
                cfg.rng_seed = r.seed;
                sca::SolveOutcome out = sca::run(generate_instance(cfg), spec.sca);
                r.status = out.status;
                r.p_tot = out.p_tot;
                r.iterations = out.iterations;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
    };
    unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    for (std::size_t v = 0; v < spec.values.size(); ++v) {
        std::vector<TrialRecord> slice(res.trials.begin() + static_cast<std::ptrdiff_t>(v * trials),
                                       res.trials.begin() + static_cast<std::ptrdiff_t>((v + 1) * trials));
        res.rows.push_back(summarize(spec.values[v], slice));
    }
    return res;
}

ProbeResult run_convergence_probe(const ScenarioConfig& cfg, const sca::ScaOptions& opts) {
    sca::SolveOutcome out = sca::run(generate_instance(cfg), opts);
    ProbeResult probe;
    probe.rows = std::move(out.trace);
    probe.status = out.status;
    probe.p_tot = out.p_tot;
    probe.iterations = out.iterations;
    return probe;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "swept,mean_ptot_w,std,infeasible,iters\n";
    for (const auto& r : result.rows)
        out << format_double(r.value) << ',' << format_double(r.mean_p_tot) << ',' << format_double(r.std_p_tot)
            << ',' << r.infeasible << ',' << format_double(r.mean_iterations) << '\n';
}

void write_probe_csv(std::ostream& out, const ProbeResult& probe) {
    out << "iteration,p_tot,delta,max_fractionality\n";
    for (const auto& r : probe.rows)
        out << r.iteration << ',' << format_double(r.p_tot) << ',' << format_double(r.delta) << ','
            << format_double(r.max_fractionality) << '\n';
}

void emit(const SweepResult& result, Parameter p, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

    const auto csv = out_dir / "sweep.csv";
    {
        std::ofstream f(csv, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + csv.string() + " for writing");
        write_sweep_csv(f, result);
        if (!f) throw std::runtime_error("write failed: " + csv.string());
    }
    const auto gp = out_dir / "sweep.gp";
    std::ofstream f(gp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + gp.string() + " for writing");
    const bool log_x = p == Parameter::ErrorProb;
    f << "set datafile separator ','\n"
      << "set key off\n"
      << "set xlabel '" << to_string(p) << "'\n"
      << "set ylabel 'mean p_tot (W)'\n"
      << (log_x ? "set logscale x\n" : "") << "set terminal pngcairo size 800,600\n"
      << "set output 'sweep.png'\n"
      << "plot 'sweep.csv' using 1:2:3 skip 1 with yerrorlines\n";
    if (!f) throw std::runtime_error("write failed: " + gp.string());
}

nlohmann::json spec_to_json(const SweepSpec& spec) {
    return {{"base", config_to_json(spec.base)},
            {"parameter", to_string(spec.parameter)},
            {"values", spec.values},
            {"trials", spec.trials},
            {"tol", spec.sca.tol},
            {"max_iter", spec.sca.max_iter},
            {"threads", spec.threads}};
}

SweepSpec spec_from_json(const nlohmann::json& j) {
    static const std::set<std::string> keys = {"base", "parameter", "values", "trials", "tol", "max_iter", "threads"};
    if (!j.is_object()) throw std::invalid_argument("sweep spec: expected an object");
    for (const auto& item : j.items())
        if (!keys.contains(item.key())) throw std::invalid_argument("sweep spec: unknown key '" + item.key() + "'");
    for (const char* k : {"base", "parameter", "values"})
        if (!j.contains(k)) throw std::invalid_argument(std::string("sweep spec: missing '") + k + "'");
    SweepSpec spec;
    try {
        spec.base = config_from_json(j.at("base"));
        spec.parameter = parse_parameter(j.at("parameter").get<std::string>());
        spec.values = j.at("values").get<std::vector<double>>();
        if (j.contains("trials")) spec.trials = j.at("trials").get<int>();
        if (j.contains("tol")) spec.sca.tol = j.at("tol").get<double>();
        if (j.contains("max_iter")) spec.sca.max_iter = j.at("max_iter").get<int>();
        if (j.contains("threads")) spec.threads = j.at("threads").get<unsigned>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("sweep spec: ") + e.what());
    }
    if (!(spec.sca.tol > 0.0)) throw std::invalid_argument("sweep spec: tol must be positive");
    if (spec.sca.max_iter < 1) throw std::invalid_argument("sweep spec: max_iter must be at least 1");
    validate(spec);
    return spec;
}

SweepSpec load_spec(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return spec_from_json(j);
}

namespace {

ScenarioConfig figure_base(std::size_t bins, std::size_t slots, double p_max_dbm, double delta,
                           std::vector<std::size_t> deadlines, double payload) {
    ScenarioConfig cfg;
    cfg.num_freq_bins = bins;
    cfg.num_slots = slots;
    cfg.num_users = deadlines.size();
    cfg.p_max_dbm = p_max_dbm;
    cfg.error_bound = delta;
    cfg.user_distances_m.assign(deadlines.size(), cfg.cell_radius_m);
    for (std::size_t d : deadlines) cfg.qos.push_back({payload, d, 1e-6});
    return cfg;
}

LabeledSweep labeled(std::string label, ScenarioConfig base, Parameter p, std::vector<double> values, int trials) {
    SweepSpec s;
    s.base = std::move(base);
    s.parameter = p;
    s.values = std::move(values);
    s.trials = trials;
    return {std::move(label), std::move(s)};
}

}  // namespace

Preset make_preset(std::string_view name, Scale scale) {
    const bool paper = scale == Scale::Paper;
    const std::size_t bins = paper ? 64 : 8;
    const int trials = paper ? 100 : 20;
    Preset pr;
    pr.name = std::string(name);

    if (name == "fig2") {
        const std::vector<double> payloads =
            paper ? std::vector<double>{20, 60, 100, 140} : std::vector<double>{10, 20, 30, 40};
        for (double delta : {0.01, 0.05, 0.1}) {
            auto base = figure_base(bins, 6, 23.0, delta, {3, 4, 4, 6}, payloads.front());
            pr.sweeps.push_back(labeled("delta_" + format_double(delta), base, Parameter::PayloadB, payloads, trials));
        }
    } else if (name == "fig3") {
        const std::vector<double> payloads = paper ? std::vector<double>{20, 60} : std::vector<double>{20, 40};
        for (double payload : payloads) {
            auto base = figure_base(bins, 4, 38.0, 0.01, {2, 4}, payload);
            const std::vector<double> users =
                paper ? std::vector<double>{1, 2, 3, 4, 5, 6} : std::vector<double>{1, 2, 3, 4, 5};
            pr.sweeps.push_back(labeled("B_" + format_double(payload), base, Parameter::NumUsersK, users, trials));
        }
    } else if (name == "fig4") {
        // Frequency bins 64 (the caption's "N=64"), 4 slots, 9 users.
        auto cfg = paper ? figure_base(64, 4, 38.0, 0.01, std::vector<std::size_t>(9, 4), 60.0)
                         : figure_base(16, 4, 38.0, 0.01, std::vector<std::size_t>(4, 4), 60.0);
        pr.probe = cfg;
    } else if (name == "fig5") {
        const std::vector<double> payloads = paper ? std::vector<double>{60, 100} : std::vector<double>{10, 15};
        for (double payload : payloads) {
            auto base = figure_base(bins, 6, 23.0, 0.01, {1, 4, 4, 6}, payload);
            pr.sweeps.push_back(labeled("B_" + format_double(payload), base, Parameter::DeadlineD1,
                                        {1, 2, 3, 4, 5, 6}, trials));
        }
    } else if (name == "fig6") {
        const std::vector<double> payloads = paper ? std::vector<double>{60, 100} : std::vector<double>{30, 50};
        for (double payload : payloads) {
            auto base = figure_base(bins, 6, 32.0, 0.01, {3, 4, 4, 6}, payload);
            pr.sweeps.push_back(labeled("B_" + format_double(payload), base, Parameter::ErrorProb,
                                        {1e-7, 1e-6, 1e-5, 1e-4}, trials));
        }
    } else {
        throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
    }
    return pr;
}

}  // namespace urllc::harness
