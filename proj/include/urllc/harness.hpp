#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "urllc/sca.hpp"
#include "urllc/scenario.hpp"

namespace urllc::harness {

enum class Parameter { PayloadB, NumUsersK, DeadlineD1, ErrorProb, ErrorBound };

/// "payload_B", "num_users_K", "deadline_D1", "error_prob_eps", "error_bound_delta".
const char* to_string(Parameter p);
/// Inverse of to_string; throws std::invalid_argument on an unknown name.
Parameter parse_parameter(std::string_view name);

struct SweepSpec {
    ScenarioConfig base;
    Parameter parameter = Parameter::PayloadB;
    std::vector<double> values;
    int trials = 20;
    sca::ScaOptions sca{};
    unsigned threads = 0;  // 0: one per hardware thread
};

/// `base` with the swept parameter set to `value`. Payload and error
/// probability apply to every user; D1 to the first user only. Growing K
/// appends copies of the last user's QoS and distance; shrinking truncates.
ScenarioConfig apply(const ScenarioConfig& base, Parameter p, double value);

/// Throws std::invalid_argument if the spec is empty or any swept value
/// yields an invalid configuration.
void validate(const SweepSpec& spec);

/// Seed of trial `trial`. It does not depend on the swept value, so every
/// value sees the same channel draws and adding values changes nothing else.
std::uint64_t trial_seed(std::uint64_t base_seed, int trial);

struct TrialRecord {
    double value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    sca::Status status = sca::Status::Running;
    double p_tot = 0.0;
    int iterations = 0;
    std::string error;  // non-empty if the trial threw

    /// The trial produced a schedule that passes check_feasible.
    bool usable() const;
};

struct SweepRow {
    double value = 0.0;
    double mean_p_tot = 0.0;  // over usable trials; NaN if there are none
    double std_p_tot = 0.0;   // sample standard deviation, 0 for a single trial
    int infeasible = 0;       // trials without a usable schedule
    double mean_iterations = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<TrialRecord> trials;  // value-major, trial-minor
};

/// Runs every (value, trial) pair, concurrently when threads allow. Failures
/// are recorded per trial and never abort the sweep. Aggregates are
/// identical for any thread count.
SweepResult run_sweep(const SweepSpec& spec);

/// Summation by a fixed binary tree over the input order.
double pairwise_sum(const std::vector<double>& v);

/// Aggregates one swept value's trials.
SweepRow summarize(double value, const std::vector<TrialRecord>& trials);

struct ProbeResult {
    std::vector<sca::TraceRow> rows;
    sca::Status status = sca::Status::Running;
    double p_tot = 0.0;
    int iterations = 0;
};

/// One SCA solve on `cfg`, returning the per-iteration trace.
ProbeResult run_convergence_probe(const ScenarioConfig& cfg, const sca::ScaOptions& opts = {});

/// Header swept,mean_ptot_w,std,infeasible,iters; shortest round-trip numbers.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
/// Header iteration,p_tot,delta,max_fractionality.
void write_probe_csv(std::ostream& out, const ProbeResult& probe);

/// Writes sweep.csv and sweep.gp (a gnuplot script plotting mean p_tot
/// against the swept value) into `out_dir`, creating it if needed. Throws
/// std::runtime_error naming the path on I/O failure.
void emit(const SweepResult& result, Parameter p, const std::filesystem::path& out_dir);

nlohmann::json spec_to_json(const SweepSpec& spec);
/// Keys: base (config object), parameter, values, trials, and optionally
/// tol, max_iter, threads. Unknown keys are rejected.
SweepSpec spec_from_json(const nlohmann::json& j);
SweepSpec load_spec(const std::filesystem::path& path);

enum class Scale { Desk, Paper };

struct LabeledSweep {
    std::string label;  // output subdirectory
    SweepSpec spec;
};

struct Preset {
    std::string name;
    std::vector<LabeledSweep> sweeps;
    std::optional<ScenarioConfig> probe;  // fig4 only
};

/// fig2, fig3, fig4, fig5 or fig6. Paper scale uses 64 frequency bins and
/// 100 trials; desk scale shrinks the grid, the trial count and, where the
/// smaller grid cannot carry them, the payloads. Throws on an unknown name.
Preset make_preset(std::string_view name, Scale scale = Scale::Desk);

}  // namespace urllc::harness
