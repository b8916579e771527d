#pragma once

#include <span>

namespace urllc::fbl {

/// Gaussian tail probability Q(x) = P[Z > x], Z ~ N(0, 1).
double q_function(double x);

/// Inverse of the Gaussian tail: returns z with Q(z) = eps. Throws
/// std::domain_error unless 0 < eps < 1. Results are memoized per thread.
double q_inverse(double eps);

/// Dispersion penalty per unit sqrt(channel use), in bits: Q^-1(eps) / ln 2.
double penalty_factor(double eps);

/// Channel dispersion 1 - 1/(1+snr)^2.
double dispersion(double snr);

/// Decomposition of a finite-blocklength rate. rate() may be negative.
struct RateTerms {
    double shannon_sum = 0.0;     // sum of log2(1 + snr), bits
    double dispersion_sum = 0.0;  // x: channel uses (or summed dispersion)
    double penalty = 0.0;         // sqrt(x) * Q^-1(eps) / ln 2, bits

    double rate() const { return shannon_sum - penalty; }
};

/// Dispersion sums the exact per-use channel dispersion.
RateTerms rate_terms_exact(std::span<const double> snrs, double eps);

/// Dispersion of every scheduled use taken as 1, so x is the use count.
RateTerms rate_terms_approx(std::span<const double> snrs, double eps);

inline double fbl_rate_exact(std::span<const double> snrs, double eps) { return rate_terms_exact(snrs, eps).rate(); }
inline double fbl_rate_approx(std::span<const double> snrs, double eps) {
    return rate_terms_approx(snrs, eps).rate();
}

}  // namespace urllc::fbl
