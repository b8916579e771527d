#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "urllc/scenario.hpp"
#include "urllc/tensor.hpp"

namespace urllc {

/// Binary PRB assignment plus per-PRB transmit power (watts).
struct Schedule {
    Tensor3<std::uint8_t> assign;
    Tensor3<double> power;

    Schedule() = default;
    explicit Schedule(GridDims dims) : assign(dims, 0), power(dims, 0.0) {}

    const GridDims& dims() const { return assign.dims(); }

    friend bool operator==(const Schedule&, const Schedule&) = default;
};

enum class Constraint {
    Payload,    // R_k >= B_k
    Binary,     // I in {0, 1}
    Exclusive,  // at most one user per PRB
    Deadline,   // no PRB after slot D_k
    PowerBound  // 0 <= P <= I * P_max
};

const char* to_string(Constraint c);

struct Violation {
    Constraint constraint;
    // user index for Payload; (m, n) with k unused for Exclusive; (m, n, k) otherwise
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t k = 0;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct FeasibilityReport {
    bool feasible = true;
    std::vector<double> per_user_rate;        // bits, dispersion taken as 1
    std::vector<double> per_user_rate_exact;  // bits, exact dispersion (diagnostic)
    std::vector<Violation> violated;
};

/// Relative slack absorbed at active payload constraints.
inline constexpr double kRateTolerance = 1e-9;

double total_power(const Schedule& s);

/// Throws std::invalid_argument on dimension mismatch.
FeasibilityReport check_feasible(const ProblemInstance& inst, const Schedule& s);

/// Keeps lifted powers on assigned PRBs and zeroes the rest. Throws
/// std::invalid_argument if the assignment is not binary.
Schedule recover_solution(const Tensor3<double>& assign, const Tensor3<double>& lifted_power);

/// Text format, indices 1-based:
///   schedule M N K
///   m n k power      (one line per assigned PRB, sorted)
void write_schedule(std::ostream& out, const Schedule& s);
Schedule read_schedule(std::istream& in);
void save_schedule(const Schedule& s, const std::filesystem::path& path);
Schedule load_schedule(const std::filesystem::path& path);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double v);

}  // namespace urllc
