#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "urllc/model.hpp"
#include "urllc/scenario.hpp"

namespace urllc::oracle {

struct PowerAllocation {
    std::vector<double> powers;  // W, aligned with the input gains
    double total = 0.0;
};

/// Minimum-power allocation reaching `target_bits` of Shannon rate over the
/// given PRBs with 0 <= p_j <= p_max. Waterfilling p_j = clamp(lambda - 1/c_j,
/// 0, p_max) with lambda found by bisection. Empty result if unattainable.
std::optional<PowerAllocation> waterfill(std::span<const double> gains, double target_bits, double p_max);

/// Fixed-assignment power minimization: the dispersion penalty
/// sqrt(count) * Q^-1(eps) / ln 2 is constant once the PRB set is fixed, so
/// the target is B + penalty and the problem reduces to waterfilling.
std::optional<PowerAllocation> min_power_fixed_assignment(std::span<const double> gains, double payload_bits,
                                                          double eps, double p_max);

/// Applies min_power_fixed_assignment to every user of a fixed binary
/// assignment. Empty result if any user is unattainable.
std::optional<Schedule> allocate_powers(const ProblemInstance& inst, const Tensor3<std::uint8_t>& assign);

struct OracleResult {
    Schedule best_schedule;
    double best_p_tot = 0.0;
    std::uint64_t assignments_searched = 0;
    bool feasible_found = false;
};

class SearchSpaceTooLarge : public std::length_error {
public:
    SearchSpaceTooLarge(double space, double limit);
    double space() const { return space_; }
    double limit() const { return limit_; }

private:
    double space_;
    double limit_;
};

inline constexpr double kDefaultSearchLimit = 1e7;

/// Number of assignments exhaustive_solve would enumerate: the product over
/// PRBs of (1 + number of users whose deadline admits that slot).
double search_space_size(const ProblemInstance& inst);

/// Enumerates every assignment of each PRB to {unused, eligible users} in
/// lexicographic order (first PRB most significant) and keeps the first
/// minimum-power feasible one. Throws SearchSpaceTooLarge above `limit`.
OracleResult exhaustive_solve(const ProblemInstance& inst, double limit = kDefaultSearchLimit);

}  // namespace urllc::oracle
