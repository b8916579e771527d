#include "urllc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "urllc/fbl.hpp"

namespace urllc::oracle {

namespace {

double shannon_sum(std::span<const double> gains, double level, double p_max, std::vector<double>* powers) {
    double bits = 0.0;
    for (std::size_t j = 0; j < gains.size(); ++j) {
        double c = gains[j];
        double p = c > 0.0 ? std::clamp(level - 1.0 / c, 0.0, p_max) : 0.0;
        if (powers) (*powers)[j] = p;
        bits += std::log2(1.0 + c * p);
    }
    return bits;
}

std::string describe_space(double space, double limit) {
    std::ostringstream os;
    os << "exhaustive search space " << space << " exceeds limit " << limit;
    return os.str();
}

}  // namespace

std::optional<PowerAllocation> waterfill(std::span<const double> gains, double target_bits, double p_max) {
    PowerAllocation out;
    out.powers.assign(gains.size(), 0.0);
    if (target_bits <= 0.0) return out;

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double c : gains)
        if (c > 0.0) {
            lo = std::min(lo, 1.0 / c);
            hi = std::max(hi, 1.0 / c + p_max);
        }
    if (hi == 0.0) return std::nullopt;
    if (shannon_sum(gains, hi, p_max, nullptr) < target_bits) return std::nullopt;

    // rate(level) is continuous and nondecreasing; keep rate(hi) >= target
    for (int iter = 0; iter < 300 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (shannon_sum(gains, mid, p_max, nullptr) >= target_bits)
            hi = mid;
        else
            lo = mid;
    }
    shannon_sum(gains, hi, p_max, &out.powers);
    for (double p : out.powers) out.total += p;
    return out;
}

std::optional<PowerAllocation> min_power_fixed_assignment(std::span<const double> gains, double payload_bits,
                                                          double eps, double p_max) {
    double penalty = gains.empty() ? 0.0 : std::sqrt(static_cast<double>(gains.size())) * fbl::penalty_factor(eps);
    return waterfill(gains, payload_bits + penalty, p_max);
}

std::optional<Schedule> allocate_powers(const ProblemInstance& inst, const Tensor3<std::uint8_t>& assign) {
    const GridDims& d = inst.dims();
    Schedule s(d);
    s.assign = assign;
    std::vector<double> gains;
    std::vector<std::size_t> where;
    for (std::size_t k = 0; k < d.users; ++k) {
        gains.clear();
        where.clear();
        for (std::size_t m = 0; m < d.freq_bins; ++m)
            for (std::size_t n = 0; n < d.slots; ++n)
                if (assign(m, n, k)) {
                    gains.push_back(inst.gains(m, n, k));
                    where.push_back(assign.offset(m, n, k));
                }
        const auto& q = inst.qos[k];
        auto alloc = min_power_fixed_assignment(gains, q.payload_bits, q.error_prob, inst.p_max_watts);
        if (!alloc) return std::nullopt;
        for (std::size_t j = 0; j < where.size(); ++j) s.power[where[j]] = alloc->powers[j];
    }
    return s;
}

SearchSpaceTooLarge::SearchSpaceTooLarge(double space, double limit)
    : std::length_error(describe_space(space, limit)), space_(space), limit_(limit) {}

double search_space_size(const ProblemInstance& inst) {
    const GridDims& d = inst.dims();
    double space = 1.0;
    for (std::size_t n = 0; n < d.slots; ++n) {
        double options = 1.0;
        for (std::size_t k = 0; k < d.users; ++k)
            if (inst.eligible(n, k)) options += 1.0;
        space *= std::pow(options, static_cast<double>(d.freq_bins));
    }
    return space;
}

OracleResult exhaustive_solve(const ProblemInstance& inst, double limit) {
    validate(inst);
    const double space = search_space_size(inst);
    if (space > limit) throw SearchSpaceTooLarge(space, limit);

    const GridDims& d = inst.dims();
    struct Prb {
        std::size_t m, n;
        std::vector<std::size_t> users;  // eligible users; option 0 is "unused"
    };
    std::vector<Prb> prbs;
    for (std::size_t m = 0; m < d.freq_bins; ++m)
        for (std::size_t n = 0; n < d.slots; ++n) {
            Prb p{m, n, {}};
            for (std::size_t k = 0; k < d.users; ++k)
                if (inst.eligible(n, k)) p.users.push_back(k);
            if (!p.users.empty()) prbs.push_back(std::move(p));
        }

    OracleResult result;
    result.best_p_tot = std::numeric_limits<double>::infinity();
    result.best_schedule = Schedule(d);

    std::vector<std::size_t> choice(prbs.size(), 0);
    std::vector<std::vector<double>> user_gains(d.users);
    std::vector<PowerAllocation> allocs(d.users);

    // odometer, last PRB fastest
    auto advance = [&] {
        for (std::size_t pos = prbs.size(); pos-- > 0;) {
            if (++choice[pos] <= prbs[pos].users.size()) return true;
            choice[pos] = 0;
        }
        return false;
    };

    while (true) {
        ++result.assignments_searched;
        for (auto& g : user_gains) g.clear();
        for (std::size_t i = 0; i < prbs.size(); ++i)
            if (choice[i] > 0) {
                std::size_t k = prbs[i].users[choice[i] - 1];
                user_gains[k].push_back(inst.gains(prbs[i].m, prbs[i].n, k));
            }

        double total = 0.0;
        bool ok = true;
        for (std::size_t k = 0; k < d.users && ok; ++k) {
            const auto& q = inst.qos[k];
            auto alloc = min_power_fixed_assignment(user_gains[k], q.payload_bits, q.error_prob, inst.p_max_watts);
            if (!alloc) {
                ok = false;
                break;
            }
            total += alloc->total;
            // pruning: cannot beat the incumbent (ties keep the earlier one)
            if (total >= result.best_p_tot) ok = false;
            allocs[k] = std::move(*alloc);
        }

        if (ok && total < result.best_p_tot) {
            result.best_p_tot = total;
            result.feasible_found = true;
            Schedule s(d);
            std::vector<std::size_t> next(d.users, 0);
            for (std::size_t i = 0; i < prbs.size(); ++i)
                if (choice[i] > 0) {
                    std::size_t k = prbs[i].users[choice[i] - 1];
                    s.assign(prbs[i].m, prbs[i].n, k) = 1;
                    s.power(prbs[i].m, prbs[i].n, k) = allocs[k].powers[next[k]++];
                }
            result.best_schedule = std::move(s);
        }

        if (!advance()) break;
    }

    if (!result.feasible_found) result.best_p_tot = std::numeric_limits<double>::infinity();
    return result;
}

}  // namespace urllc::oracle
