#include "urllc/model.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "urllc/fbl.hpp"

namespace urllc {

const char* to_string(Constraint c) {
    switch (c) {
        case Constraint::Payload: return "payload";
        case Constraint::Binary: return "binary";
        case Constraint::Exclusive: return "exclusive";
        case Constraint::Deadline: return "deadline";
        case Constraint::PowerBound: return "power_bound";
    }
    return "unknown";
}

double total_power(const Schedule& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.power.size(); ++i)
        if (s.assign[i]) sum += s.power[i];
    return sum;
}

FeasibilityReport check_feasible(const ProblemInstance& inst, const Schedule& s) {
    const GridDims& d = inst.dims();
    if (s.assign.dims() != d || s.power.dims() != d)
        throw std::invalid_argument("check_feasible: schedule dimensions do not match the instance");

    FeasibilityReport rep;
    std::vector<std::vector<double>> snrs(d.users);

    for (std::size_t m = 0; m < d.freq_bins; ++m)
        for (std::size_t n = 0; n < d.slots; ++n) {
            std::size_t users_on_prb = 0;
            for (std::size_t k = 0; k < d.users; ++k) {
                std::uint8_t a = s.assign(m, n, k);
                double p = s.power(m, n, k);
                if (a > 1) rep.violated.push_back({Constraint::Binary, m, n, k});
                bool on = a != 0;
                if (on) {
                    ++users_on_prb;
                    if (!inst.eligible(n, k)) rep.violated.push_back({Constraint::Deadline, m, n, k});
                    snrs[k].push_back(inst.gains(m, n, k) * p);
                }
                double cap = on ? inst.p_max_watts * (1.0 + 1e-12) : 0.0;
                if (!(p >= 0.0) || p > cap) rep.violated.push_back({Constraint::PowerBound, m, n, k});
            }
            if (users_on_prb > 1) rep.violated.push_back({Constraint::Exclusive, m, n, 0});
        }

    rep.per_user_rate.resize(d.users);
    rep.per_user_rate_exact.resize(d.users);
    for (std::size_t k = 0; k < d.users; ++k) {
        const auto& q = inst.qos[k];
        rep.per_user_rate[k] = fbl::fbl_rate_approx(snrs[k], q.error_prob);
        rep.per_user_rate_exact[k] = fbl::fbl_rate_exact(snrs[k], q.error_prob);
        double slack = kRateTolerance * std::max(1.0, q.payload_bits);
        if (rep.per_user_rate[k] < q.payload_bits - slack) rep.violated.push_back({Constraint::Payload, 0, 0, k});
    }
    rep.feasible = rep.violated.empty();
    return rep;
}

Schedule recover_solution(const Tensor3<double>& assign, const Tensor3<double>& lifted_power) {
    if (assign.dims() != lifted_power.dims())
        throw std::invalid_argument("recover_solution: tensor dimensions differ");
    Schedule s(assign.dims());
    for (std::size_t i = 0; i < assign.size(); ++i) {
        double a = assign[i];
        if (a != 0.0 && a != 1.0) throw std::invalid_argument("recover_solution: assignment is not binary");
        if (a == 1.0) {
            s.assign[i] = 1;
            s.power[i] = lifted_power[i];
        }
    }
    return s;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_schedule(std::ostream& out, const Schedule& s) {
    const GridDims& d = s.dims();
    out << "schedule " << d.freq_bins << ' ' << d.slots << ' ' << d.users << '\n';
    for (std::size_t m = 0; m < d.freq_bins; ++m)
        for (std::size_t n = 0; n < d.slots; ++n)
            for (std::size_t k = 0; k < d.users; ++k)
                if (s.assign(m, n, k))
                    out << m + 1 << ' ' << n + 1 << ' ' << k + 1 << ' ' << format_double(s.power(m, n, k)) << '\n';
}

namespace {

template <typename T>
T parse_token(const std::string& tok, const char* what) {
    T v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw std::invalid_argument(std::string("schedule file: bad ") + what + " '" + tok + "'");
    return v;
}

}  // namespace

Schedule read_schedule(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("schedule file: empty");
    std::istringstream head(line);
    std::string tag, sm, sn, sk;
    head >> tag >> sm >> sn >> sk;
    if (tag != "schedule") throw std::invalid_argument("schedule file: missing 'schedule' header");
    GridDims d{parse_token<std::size_t>(sm, "dimension"), parse_token<std::size_t>(sn, "dimension"),
               parse_token<std::size_t>(sk, "dimension")};
    Schedule s(d);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c, p;
        if (!(row >> a >> b >> c >> p)) throw std::invalid_argument("schedule file: short row '" + line + "'");
        auto m = parse_token<std::size_t>(a, "index");
        auto n = parse_token<std::size_t>(b, "index");
        auto k = parse_token<std::size_t>(c, "index");
        if (m < 1 || n < 1 || k < 1 || m > d.freq_bins || n > d.slots || k > d.users)
            throw std::invalid_argument("schedule file: index out of range in '" + line + "'");
        s.assign(m - 1, n - 1, k - 1) = 1;
        s.power(m - 1, n - 1, k - 1) = parse_token<double>(p, "power");
    }
    return s;
}

void save_schedule(const Schedule& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write schedule " + path.string());
    write_schedule(out, s);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Schedule load_schedule(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schedule " + path.string());
    return read_schedule(in);
}

}  // namespace urllc
