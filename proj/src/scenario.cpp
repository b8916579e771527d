#include "urllc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace urllc {

namespace {

std::string at_user(const char* what, std::size_t k) {
    std::ostringstream os;
    os << what << " (user " << k + 1 << ")";
    return os.str();
}

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit_open(std::uint64_t bits) {
    // (0, 1]: never zero, so log() below stays finite
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
    if (cfg.num_freq_bins < 1 || cfg.num_slots < 1 || cfg.num_users < 1)
        throw std::invalid_argument("grid dimensions must be at least 1");
    if (!(cfg.prb_bandwidth_hz > 0.0)) throw std::invalid_argument("prb_bandwidth_hz must be positive");
    if (!std::isfinite(cfg.noise_psd_dbm_per_hz)) throw std::invalid_argument("noise_psd_dbm_per_hz must be finite");
    if (!(cfg.cell_radius_m > 0.0)) throw std::invalid_argument("cell_radius_m must be positive");
    if (!(cfg.error_bound >= 0.0) || !std::isfinite(cfg.error_bound))
        throw std::invalid_argument("error_bound must be a finite nonnegative number");
    if (!std::isfinite(cfg.p_max_dbm)) throw std::invalid_argument("p_max_dbm must be finite");
    if (cfg.user_distances_m.size() != cfg.num_users)
        throw std::invalid_argument("user_distances_m must have num_users entries");
    if (cfg.qos.size() != cfg.num_users) throw std::invalid_argument("qos must have num_users entries");
    for (std::size_t k = 0; k < cfg.num_users; ++k) {
        double d = cfg.user_distances_m[k];
        if (!(d > 0.0 && d <= cfg.cell_radius_m))
            throw std::invalid_argument(at_user("distance must lie in (0, cell_radius_m]", k));
        const auto& q = cfg.qos[k];
        if (!(q.payload_bits >= 0.0) || !std::isfinite(q.payload_bits))
            throw std::invalid_argument(at_user("payload_bits must be nonnegative", k));
        if (q.deadline_slots < 1 || q.deadline_slots > cfg.num_slots)
            throw std::invalid_argument(at_user("deadline_slots must lie in [1, num_slots]", k));
        if (!(q.error_prob > 0.0 && q.error_prob < 0.5))
            throw std::invalid_argument(at_user("error_prob must lie in (0, 0.5)", k));
    }
}

void validate(const ProblemInstance& inst) {
    const auto& d = inst.dims();
    if (d.freq_bins < 1 || d.slots < 1 || d.users < 1)
        throw std::invalid_argument("grid dimensions must be at least 1");
    if (inst.qos.size() != d.users) throw std::invalid_argument("qos must have one entry per user");
    if (!(inst.p_max_watts > 0.0) || !std::isfinite(inst.p_max_watts))
        throw std::invalid_argument("p_max_watts must be positive");
    for (double c : inst.gains.data())
        if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("gains must be finite and nonnegative");
    for (std::size_t k = 0; k < d.users; ++k) {
        const auto& q = inst.qos[k];
        if (!(q.payload_bits >= 0.0) || !std::isfinite(q.payload_bits))
            throw std::invalid_argument(at_user("payload_bits must be nonnegative", k));
        // error_prob = 0.5 is accepted here: it zeroes the dispersion penalty,
        // which hand-built test instances rely on.
        if (!(q.error_prob > 0.0 && q.error_prob <= 0.5))
            throw std::invalid_argument(at_user("error_prob must lie in (0, 0.5]", k));
    }
}

ProblemInstance make_instance(Tensor3<double> gains, std::vector<QosTriple> qos, double p_max_watts) {
    ProblemInstance inst{std::move(gains), std::move(qos), p_max_watts};
    validate(inst);
    return inst;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0 - 3.0); }

double path_loss_gain(double distance_m) {
    double loss_db = 35.3 + 37.6 * std::log10(distance_m);
    return std::pow(10.0, -loss_db / 10.0);
}

double noise_power_watts(double noise_psd_dbm_per_hz, double bandwidth_hz) {
    return dbm_to_watts(noise_psd_dbm_per_hz) * bandwidth_hz;
}

std::complex<double> worst_case_error(std::complex<double> h_est, double bound) {
    if (bound < 0.0) throw std::invalid_argument("error bound must be nonnegative");
    double mag = std::abs(h_est);
    if (mag == 0.0) return {-bound, 0.0};
    if (bound >= mag) return -h_est;  // the ball covers the origin
    return -(h_est / mag) * bound;
}

double worst_case_gain(double h_abs, double bound, double large_scale_gain, double noise_power) {
    double amp = std::max(h_abs - bound, 0.0);
    return large_scale_gain * amp * amp / noise_power;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(mix64(base) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

Tensor3<std::complex<double>> draw_fading(std::uint64_t seed, GridDims dims) {
    Tensor3<std::complex<double>> h(dims);
    const double sigma = std::sqrt(0.5);
    for (std::size_t m = 0; m < dims.freq_bins; ++m)
        for (std::size_t n = 0; n < dims.slots; ++n)
            for (std::size_t k = 0; k < dims.users; ++k) {
                std::uint64_t key = derive_seed(seed, (static_cast<std::uint64_t>(m) << 42) ^
                                                          (static_cast<std::uint64_t>(n) << 21) ^ k);
                std::mt19937_64 eng(key);
                // Box-Muller on raw engine output (portable across standard libraries)
                double u1 = unit_open(eng());
                double u2 = unit_open(eng());
                double r = std::sqrt(-2.0 * std::log(u1)) * sigma;
                double theta = 2.0 * std::numbers::pi * u2;
                h(m, n, k) = {r * std::cos(theta), r * std::sin(theta)};
            }
    return h;
}

ProblemInstance generate_instance(const ScenarioConfig& cfg) {
    validate(cfg);
    const GridDims dims = cfg.dims();
    auto fading = draw_fading(cfg.rng_seed, dims);
    const double noise = noise_power_watts(cfg.noise_psd_dbm_per_hz, cfg.prb_bandwidth_hz);

    std::vector<double> alpha(dims.users);
    for (std::size_t k = 0; k < dims.users; ++k) alpha[k] = path_loss_gain(cfg.user_distances_m[k]);

    Tensor3<double> gains(dims);
    for (std::size_t m = 0; m < dims.freq_bins; ++m)
        for (std::size_t n = 0; n < dims.slots; ++n)
            for (std::size_t k = 0; k < dims.users; ++k)
                gains(m, n, k) = worst_case_gain(std::abs(fading(m, n, k)), cfg.error_bound, alpha[k], noise);

    return make_instance(std::move(gains), cfg.qos, dbm_to_watts(cfg.p_max_dbm));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const std::set<std::string> kConfigKeys = {
    "num_freq_bins", "num_slots",   "num_users", "prb_bandwidth_hz", "noise_psd_dbm_per_hz", "cell_radius_m",
    "user_distances_m", "error_bound", "p_max_dbm", "qos", "rng_seed"};
const std::set<std::string> kQosKeys = {"payload_bits", "deadline_slots", "error_prob"};

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const char* where) {
    if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
    for (const auto& item : j.items())
        if (!allowed.contains(item.key()))
            throw std::invalid_argument(std::string(where) + ": unknown key '" + item.key() + "'");
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

}  // namespace

ScenarioConfig config_from_json(const nlohmann::json& j) {
    reject_unknown(j, kConfigKeys, "scenario config");
    ScenarioConfig cfg = default_config();
    read_if(j, "num_freq_bins", cfg.num_freq_bins);
    read_if(j, "num_slots", cfg.num_slots);
    read_if(j, "num_users", cfg.num_users);
    read_if(j, "prb_bandwidth_hz", cfg.prb_bandwidth_hz);
    read_if(j, "noise_psd_dbm_per_hz", cfg.noise_psd_dbm_per_hz);
    read_if(j, "cell_radius_m", cfg.cell_radius_m);
    read_if(j, "error_bound", cfg.error_bound);
    read_if(j, "p_max_dbm", cfg.p_max_dbm);
    read_if(j, "rng_seed", cfg.rng_seed);
    if (j.contains("user_distances_m"))
        read_if(j, "user_distances_m", cfg.user_distances_m);
    else
        cfg.user_distances_m.assign(cfg.num_users, cfg.cell_radius_m);
    if (auto it = j.find("qos"); it != j.end()) {
        if (!it->is_array()) throw std::invalid_argument("qos: expected an array");
        cfg.qos.clear();
        for (const auto& q : *it) {
            reject_unknown(q, kQosKeys, "qos entry");
            QosTriple t;
            read_if(q, "payload_bits", t.payload_bits);
            read_if(q, "deadline_slots", t.deadline_slots);
            read_if(q, "error_prob", t.error_prob);
            cfg.qos.push_back(t);
        }
    }
    validate(cfg);
    return cfg;
}

nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    nlohmann::json qos = nlohmann::json::array();
    for (const auto& q : cfg.qos)
        qos.push_back({{"payload_bits", q.payload_bits},
                       {"deadline_slots", q.deadline_slots},
                       {"error_prob", q.error_prob}});
    return {{"num_freq_bins", cfg.num_freq_bins},
            {"num_slots", cfg.num_slots},
            {"num_users", cfg.num_users},
            {"prb_bandwidth_hz", cfg.prb_bandwidth_hz},
            {"noise_psd_dbm_per_hz", cfg.noise_psd_dbm_per_hz},
            {"cell_radius_m", cfg.cell_radius_m},
            {"user_distances_m", cfg.user_distances_m},
            {"error_bound", cfg.error_bound},
            {"p_max_dbm", cfg.p_max_dbm},
            {"qos", qos},
            {"rng_seed", cfg.rng_seed}};
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario config " + path.string());
    out << config_to_json(cfg).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

ScenarioConfig default_config() {
    ScenarioConfig cfg;
    cfg.user_distances_m.assign(cfg.num_users, cfg.cell_radius_m);
    cfg.qos = {{20.0, 3, 1e-6}, {20.0, 4, 1e-6}, {20.0, 4, 1e-6}, {20.0, 6, 1e-6}};
    return cfg;
}

}  // namespace urllc
