#include "urllc/fbl.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace urllc::fbl {

namespace {

// log Q(z) for z >= 0 without underflow in the far tail
double log_q(double z) {
    double q = q_function(z);
    if (q > 0.0) return std::log(q);
    // Mills-ratio asymptote, only reached for z > ~38
    return -0.5 * z * z - std::log(z * std::sqrt(2.0 * std::numbers::pi));
}

double gaussian_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Root of log Q(z) = log eps for eps in (0, 0.5]; Newton safeguarded by a
// bisection bracket [lo, hi] on which log Q is strictly decreasing.
double solve_upper_tail(double eps) {
    if (eps == 0.5) return 0.0;
    const double target = std::log(eps);
    double lo = 0.0;
    double hi = 1.0;
    while (log_q(hi) > target) hi *= 2.0;

    double z = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        double f = log_q(z) - target;
        if (f > 0.0)
            lo = z;
        else
            hi = z;
        // d/dz log Q(z) = -pdf(z) / Q(z)
        double q = q_function(z);
        double slope = q > 0.0 ? -gaussian_pdf(z) / q : -z;
        double next = z - f / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - z) <= 1e-15 * std::max(1.0, std::abs(z))) return next;
        z = next;
    }
    return z;
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inverse(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("q_inverse: argument must lie in (0, 1)");
    thread_local std::unordered_map<double, double> cache;
    if (auto it = cache.find(eps); it != cache.end()) return it->second;
    double z = eps <= 0.5 ? solve_upper_tail(eps) : -solve_upper_tail(1.0 - eps);
    if (cache.size() > 4096) cache.clear();
    cache.emplace(eps, z);
    return z;
}

double penalty_factor(double eps) { return q_inverse(eps) / std::numbers::ln2; }

double dispersion(double snr) {
    double r = 1.0 / (1.0 + snr);
    return 1.0 - r * r;
}

RateTerms rate_terms_exact(std::span<const double> snrs, double eps) {
    RateTerms t;
    for (double rho : snrs) {
        t.shannon_sum += std::log2(1.0 + rho);
        t.dispersion_sum += dispersion(rho);
    }
    t.penalty = std::sqrt(t.dispersion_sum) * penalty_factor(eps);
    return t;
}

RateTerms rate_terms_approx(std::span<const double> snrs, double eps) {
    RateTerms t;
    for (double rho : snrs) t.shannon_sum += std::log2(1.0 + rho);
    t.dispersion_sum = static_cast<double>(snrs.size());
    t.penalty = std::sqrt(t.dispersion_sum) * penalty_factor(eps);
    return t;
}

}  // namespace urllc::fbl
