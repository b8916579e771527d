#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "urllc/tensor.hpp"

namespace urllc {

/// Per-user service requirement: deliver `payload_bits` within the first
/// `deadline_slots` slots with packet error probability at most `error_prob`.
struct QosTriple {
    double payload_bits = 0.0;
    std::size_t deadline_slots = 1;
    double error_prob = 1e-6;

    friend bool operator==(const QosTriple&, const QosTriple&) = default;
};

struct ScenarioConfig {
    std::size_t num_freq_bins = 16;
    std::size_t num_slots = 6;
    std::size_t num_users = 4;
    double prb_bandwidth_hz = 180e3;
    double noise_psd_dbm_per_hz = -169.0;
    double cell_radius_m = 200.0;
    std::vector<double> user_distances_m;
    double error_bound = 0.01;
    double p_max_dbm = 23.0;
    std::vector<QosTriple> qos;
    std::uint64_t rng_seed = 1;

    GridDims dims() const { return {num_freq_bins, num_slots, num_users}; }

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// One realized problem: worst-case effective gains c[m][n][k] in 1/W, so
/// that the received SNR on a PRB is c * P.
struct ProblemInstance {
    Tensor3<double> gains;
    std::vector<QosTriple> qos;
    double p_max_watts = 0.0;

    const GridDims& dims() const { return gains.dims(); }

    /// Slot index `n` is 0-based here; slot number n + 1 must not exceed D_k.
    bool eligible(std::size_t n, std::size_t k) const { return n + 1 <= qos[k].deadline_slots; }
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const ScenarioConfig& cfg);
void validate(const ProblemInstance& inst);

/// Builds an instance from explicit gains; validates the result.
ProblemInstance make_instance(Tensor3<double> gains, std::vector<QosTriple> qos, double p_max_watts);

double dbm_to_watts(double dbm);

/// Large-scale gain 10^(-(35.3 + 37.6 log10 d)/10) for distance d in metres.
double path_loss_gain(double distance_m);

/// Noise power in watts over one PRB.
double noise_power_watts(double noise_psd_dbm_per_hz, double bandwidth_hz);

/// Error inside the disk |e| <= bound that minimizes |h + e|. For h == 0 any
/// point on the circle attains the minimum; -bound is returned. When the
/// bound reaches |h| the minimum 0 is attained at -h.
std::complex<double> worst_case_error(std::complex<double> h_est, double bound);

/// alpha * max(|h| - bound, 0)^2 / noise_power.
double worst_case_gain(double h_abs, double bound, double large_scale_gain, double noise_power);

/// Unit-variance circularly-symmetric complex Gaussian draws. Entry (m,n,k)
/// depends only on (seed, m, n, k), so growing the grid keeps existing draws.
Tensor3<std::complex<double>> draw_fading(std::uint64_t seed, GridDims dims);

ProblemInstance generate_instance(const ScenarioConfig& cfg);

/// Mixes a base seed with a stream index; used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path);

/// A valid configuration with every user at the cell edge.
ScenarioConfig default_config();

}  // namespace urllc
