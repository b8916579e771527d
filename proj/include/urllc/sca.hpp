#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "urllc/model.hpp"
#include "urllc/scenario.hpp"
#include "urllc/subproblem.hpp"

namespace urllc::sca {

struct ScaOptions {
    double tol = 1e-6;          // on |p_tot^(i+1) - p_tot^(i)|, watts
    int max_iter = 200;
    double xi = 0.01;           // reweighting offset
    double binarize_threshold = 0.5;
    bool relative_delta = false;  // divide the change by the new p_tot
    subproblem::SolverOptions solver{};
};

enum class Status { Running, Converged, Infeasible, IterationCap, RoundingFailed };
const char* to_string(Status s);

struct TraceRow {
    int iteration = 0;
    double p_tot = 0.0;
    double delta = 0.0;
    double max_fractionality = 0.0;  // max over entries of min(I, 1 - I)
};

/// Iterate of the successive convex approximation.
struct ScaState {
    int iteration = 0;
    Tensor3<double> assign_frac;
    Tensor3<double> power;
    std::vector<double> anchors;  // x_k = sum of user k's relaxed assignments
    Tensor3<double> weights;      // 1 / (I + xi)
    std::vector<double> p_tot_trace;
    std::vector<TraceRow> trace;
    double delta = 1.0;
    double xi = 0.01;
    Status status = Status::Running;
    std::optional<subproblem::SubproblemSolution> last_solution;
};

struct SolveOutcome {
    Schedule schedule;
    double p_tot = 0.0;
    int iterations = 0;
    std::vector<TraceRow> trace;
    Tensor3<double> relaxed_assign;  // final fractional I before rounding
    Status status = Status::Running;
};

/// Unit weights and a greedy round-robin binary start: users in ascending
/// deadline order repeatedly take their best remaining eligible PRB until
/// each holds max(1, floor(M * D_k / K)) PRBs or runs out. Users with zero
/// payload receive nothing. Status is Infeasible when a user with positive
/// payload has no eligible PRB of positive gain.
ScaState initialize(const ProblemInstance& inst, double xi = 0.01);

/// Solves the subproblem at the state's anchors and weights, then refreshes
/// anchors, weights and the change in total power.
ScaState iterate(ScaState state, const ProblemInstance& inst, const ScaOptions& opts = {});

/// Per PRB, the largest relaxed entry (lowest user index on ties) becomes 1
/// if it reaches `threshold`; everything else becomes 0.
Tensor3<std::uint8_t> binarize(const Tensor3<double>& assign_frac, double threshold = 0.5);

/// Full algorithm: iterate to convergence, round, restore powers on the
/// rounded assignment and re-allocate them by per-user waterfilling.
SolveOutcome run(const ProblemInstance& inst, const ScaOptions& opts = {});

}  // namespace urllc::sca
