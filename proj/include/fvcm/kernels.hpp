#pragma once

#include "fvcm/errors.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace fvcm {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// Relative threshold below which a normalising denominator counts as zero.
inline constexpr double kDegeneracyTol = 1e-12;

enum class KernelType { Gaussian };

/// Symmetric smoothing kernel; a probability density on the real line.
struct Kernel {
    KernelType type = KernelType::Gaussian;

    double operator()(double v) const {
        switch (type) {
            case KernelType::Gaussian:
                return kInvSqrt2Pi * std::exp(-0.5 * v * v);
        }
        return 0.0;
    }
};

/// Bandwidth-scaled evaluation h^{-1} K(v/h).
inline double kernel_eval(const Kernel& kernel, double v, double h) {
    if (!(h > 0.0)) {
        throw InvalidBandwidthError("kernel_eval: bandwidth must be positive, got " +
                                    std::to_string(h));
    }
    return kernel(v / h) / h;
}

enum class Weighting { LocalConstant, LocalLinear, MetricBall };

inline std::string to_string(Weighting w) {
    switch (w) {
        case Weighting::LocalConstant: return "constant";
        case Weighting::LocalLinear: return "linear";
        case Weighting::MetricBall: return "ball";
    }
    return "?";
}

/// Smoothing scheme: which localisation rule to apply and at what bandwidth.
struct WeightScheme {
    Weighting kind = Weighting::LocalConstant;
    double bandwidth = 0.0;
};

/// Smoothing weights s_in at a query point. All three constructions satisfy
/// n^{-1} sum_i s_in = 1 by design; local-linear weights may be negative.
using WeightVector = std::vector<double>;

namespace detail {

inline void require_bandwidth(double h, const char* where) {
    if (!(h > 0.0)) {
        throw InvalidBandwidthError(std::string(where) + ": bandwidth must be positive, got " +
                                    std::to_string(h));
    }
}

}  // namespace detail

/// Nadaraya-Watson weights s_in = K_h(U_i - u) / (n^{-1} sum_j K_h(U_j - u)).
inline WeightVector local_constant_weights(std::span<const double> u_train, double u,
                                           const Kernel& kernel, double h) {
    detail::require_bandwidth(h, "local_constant_weights");
    const std::size_t n = u_train.size();
    if (n == 0) throw ValidationError("local_constant_weights: empty sample");

    WeightVector k(n);
    double sum = 0.0;
    double kmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = kernel_eval(kernel, u_train[i] - u, h);
        sum += k[i];
        kmax = std::max(kmax, k[i]);
    }
    const double denom = sum / static_cast<double>(n);
    if (denom <= kDegeneracyTol * kmax || denom <= 0.0) {
        throw DegenerateNeighborhoodError(
            "local_constant_weights: no effective kernel mass at u = " + std::to_string(u));
    }
    for (double& v : k) v /= denom;
    return k;
}

/// First-order local polynomial weights, eq. form
/// s_in = K_h(U_i-u) (mu2 - mu1 (U_i-u)) / (mu0 mu2 - mu1^2)
/// with mu_j = n^{-1} sum_i K_h(U_i-u) (U_i-u)^j. Satisfies both
/// n^{-1} sum s_in = 1 and n^{-1} sum s_in (U_i-u) = 0 exactly.
inline WeightVector local_linear_weights(std::span<const double> u_train, double u,
                                         const Kernel& kernel, double h) {
    detail::require_bandwidth(h, "local_linear_weights");
    const std::size_t n = u_train.size();
    if (n < 2) throw ValidationError("local_linear_weights: need at least two observations");

    std::vector<double> k(n), d(n);
    double mu0 = 0.0, mu1 = 0.0, mu2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = u_train[i] - u;
        k[i] = kernel_eval(kernel, d[i], h);
        mu0 += k[i];
        mu1 += k[i] * d[i];
        mu2 += k[i] * d[i] * d[i];
    }
    const double dn = static_cast<double>(n);
    mu0 /= dn;
    mu1 /= dn;
    mu2 /= dn;

    const double denom = mu0 * mu2 - mu1 * mu1;
    const double scale = mu0 * mu2 + mu1 * mu1;
    if (denom <= kDegeneracyTol * scale || denom <= 0.0) {
        throw DegenerateNeighborhoodError(
            "local_linear_weights: degenerate local design at u = " + std::to_string(u));
    }

    WeightVector s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = k[i] * (mu2 - mu1 * d[i]) / denom;
    }
    return s;
}

/// Metric-ball weights s_in = K_h(d_i) / (n^{-1} sum_j K_h(d_j)) for
/// precomputed modifier-space distances d_i >= 0.
inline WeightVector metric_ball_weights(std::span<const double> distances, const Kernel& kernel,
                                        double h) {
    detail::require_bandwidth(h, "metric_ball_weights");
    const std::size_t n = distances.size();
    if (n == 0) throw ValidationError("metric_ball_weights: empty sample");

    WeightVector k(n);
    double sum = 0.0;
    double kmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = kernel_eval(kernel, distances[i], h);
        sum += k[i];
        kmax = std::max(kmax, k[i]);
    }
    const double denom = sum / static_cast<double>(n);
    if (denom <= kDegeneracyTol * kmax || denom <= 0.0) {
        throw DegenerateNeighborhoodError(
            "metric_ball_weights: no effective kernel mass inside the ball");
    }
    for (double& v : k) v /= denom;
    return k;
}

}  // namespace fvcm
