#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "urllc/scenario.hpp"
#include "urllc/tensor.hpp"

namespace urllc::subproblem {

/// One convexified scheduling problem: minimize total lifted power over
/// relaxed assignments I in [0,1] and lifted powers p = I * P, with each
/// user's dispersion penalty linearized around its Taylor anchor and the
/// per-PRB sparsity constraint reweighted.
struct ConvexSubproblem {
    Tensor3<double> gains;               // c, 1/W
    std::vector<double> payload_bits;    // B_k
    std::vector<double> q_factor;        // Q^-1(eps_k) / ln 2
    std::vector<double> taylor_anchor;   // x0_k > 0
    Tensor3<double> weights;             // W > 0
    double p_max = 0.0;                  // W
    Tensor3<std::uint8_t> eligible;      // 0 where the deadline forbids the PRB

    const GridDims& dims() const { return gains.dims(); }
};

/// Throws std::invalid_argument on a malformed subproblem.
void validate(const ConvexSubproblem& sp);

/// Subproblem for `inst` at the given anchors and weights.
ConvexSubproblem build(const ProblemInstance& inst, std::span<const double> anchors, const Tensor3<double>& weights);

enum class Status { Optimal, Infeasible, MaxIter };
const char* to_string(Status s);

struct SubproblemSolution {
    Tensor3<double> assign_frac;  // relaxed I in [0, 1]
    Tensor3<double> power;        // lifted p, W
    double objective = 0.0;       // sum of p, W
    double kkt_residual = 0.0;    // max(stationarity, complementarity), powers in units of p_max
    double complementarity = 0.0; // lambda_i * slack_i at the returned point (the same for all i)
    double phase1_slack = 0.0;    // lower bound on the optimal auxiliary slack when phase 1 proves infeasibility
    Status status = Status::MaxIter;
    int newton_steps = 0;
    int centering_steps = 0;
};

struct SolverOptions {
    double mu_initial = 1.0;
    double warm_mu_initial = 1e-5; // starting mu when a usable warm start is given
    double mu_factor = 10.0;
    double gap_target = 1e-9;      // stop once mu falls to this
    double kkt_tol = 1e-8;         // Optimal only if the returned point's kkt_residual is within this
    double newton_tol = 1e-10;     // lambda^2 / 2 per centering step
    double phase1_tol = 1e-7;      // infeasible if the auxiliary slack optimum exceeds this
    int max_newton_per_center = 80;
    int max_newton_total = 4000;
    std::ostream* trace = nullptr; // one CSV row per centering step
};

/// I * log2(1 + c p / I), extended by 0 at I = 0.
double perspective_rate(double assign, double power, double gain);

/// (x + x0) / (2 sqrt(x0)): tangent upper bound of sqrt at x0. Throws
/// std::domain_error for x0 <= 0.
double taylor_sqrt_bound(double x, double anchor);

/// Value of the linearized rate constraint for user k at (I, p):
/// sum of perspective rates - taylor bound * q_factor - B_k. Nonnegative when satisfied.
double rate_constraint_value(const ConvexSubproblem& sp, const Tensor3<double>& assign,
                             const Tensor3<double>& power, std::size_t k);

/// Log-barrier interior-point method with damped Newton steps. A warm start
/// that fails to reach Optimal is retried from a cold start. Masked entries
/// and users with zero payload are eliminated and returned as exact zeros.
SubproblemSolution solve(const ConvexSubproblem& sp, const SubproblemSolution* warm_start = nullptr,
                         const SolverOptions& opts = {});

}  // namespace urllc::subproblem
