#pragma once

#include "fvcm/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fvcm {

inline constexpr double kWeightSumTol = 1e-8;

/// Interior quantile grid t_i = (2i-1)/(2m), i = 1..m. Midpoints keep
/// Gaussian quantile values finite at both ends.
inline std::vector<double> quantile_grid(int m) {
    if (m < 1) throw ValidationError("quantile_grid: m must be >= 1");
    std::vector<double> t(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) t[static_cast<std::size_t>(i)] = (2.0 * i + 1.0) / (2.0 * m);
    return t;
}

/// A probability distribution represented by its quantile values on the
/// fixed interior grid; the Wasserstein-space response type.
class QuantileFunction {
public:
    explicit QuantileFunction(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw ValidationError("QuantileFunction: empty value vector");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw ValidationError("QuantileFunction: non-finite value at index " +
                                      std::to_string(i));
            }
            if (i > 0 && values_[i] < values_[i - 1]) {
                throw ValidationError("QuantileFunction: values must be nondecreasing (index " +
                                      std::to_string(i) + ")");
            }
        }
    }

    const std::vector<double>& values() const { return values_; }
    int size() const { return static_cast<int>(values_.size()); }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    std::vector<double> values_;
};

/// Discretised squared 2-Wasserstein distance m^{-1} sum_i (a_i - b_i)^2.
inline double wasserstein_sq_distance(const QuantileFunction& a, const QuantileFunction& b) {
    if (a.size() != b.size()) {
        throw GridMismatchError("wasserstein_sq_distance: grids of length " +
                                std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
        acc += d * d;
    }
    return acc / a.size();
}

/// Exact Euclidean projection onto the nondecreasing cone (uniform weights):
/// pool-adjacent-violators over consecutive blocks.
inline std::vector<double> isotonic_projection(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<double> mean;    // running block means
    std::vector<std::size_t> len;
    mean.reserve(n);
    len.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        mean.push_back(v[i]);
        len.push_back(1);
        while (mean.size() > 1 && mean[mean.size() - 2] > mean.back()) {
            const double merged = (mean[mean.size() - 2] * static_cast<double>(len[len.size() - 2]) +
                                   mean.back() * static_cast<double>(len.back())) /
                                  static_cast<double>(len[len.size() - 2] + len.back());
            len[len.size() - 2] += len.back();
            mean[mean.size() - 2] = merged;
            mean.pop_back();
            len.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < mean.size(); ++b) {
        out.insert(out.end(), len[b], mean[b]);
    }
    return out;
}

namespace detail {

inline void require_weight_sum(std::span<const double> w, const char* where) {
    double sum = 0.0;
    for (double x : w) sum += x;
    if (std::abs(sum - 1.0) > kWeightSumTol) {
        throw InvalidWeightsError(std::string(where) + ": weights must sum to 1, got " +
                                  std::to_string(sum));
    }
}

inline Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// A symmetric positive semi-definite matrix with its symmetric square root
/// cached at construction; the Cholesky-metric response type.
class SPDPoint {
public:
    explicit SPDPoint(Eigen::MatrixXd m) : mat_(std::move(m)) {
        if (mat_.rows() != mat_.cols() || mat_.rows() == 0) {
            throw InvalidMatrixError("SPDPoint: matrix must be square and nonempty");
        }
        const double scale = std::max(1.0, mat_.cwiseAbs().maxCoeff());
        const double asym = (mat_ - mat_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-10 * scale) {
            throw InvalidMatrixError("SPDPoint: matrix is not symmetric (relative asymmetry " +
                                     std::to_string(asym / scale) + ")");
        }
        const Eigen::MatrixXd sym = 0.5 * (mat_ + mat_.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        const double trace_scale = std::max(1.0, std::abs(sym.trace()));
        if (es.eigenvalues().minCoeff() < -1e-10 * trace_scale) {
            throw InvalidMatrixError("SPDPoint: matrix is not PSD (min eigenvalue " +
                                     std::to_string(es.eigenvalues().minCoeff()) + ")");
        }
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        sqrt_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    }

    const Eigen::MatrixXd& matrix() const { return mat_; }
    const Eigen::MatrixXd& sqrt() const { return sqrt_; }
    Eigen::Index dim() const { return mat_.rows(); }

private:
    Eigen::MatrixXd mat_;
    Eigen::MatrixXd sqrt_;  // V diag(sqrt(max(lambda,0))) V^T
};

/// Symmetric PSD square root from the (clipped) eigendecomposition.
inline Eigen::MatrixXd matrix_sqrt(const SPDPoint& p) { return p.sqrt(); }

/// Squared Frobenius distance between symmetric square roots.
inline double cholesky_sq_distance(const SPDPoint& a, const SPDPoint& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("cholesky_sq_distance: dimensions " + std::to_string(a.dim()) +
                             " and " + std::to_string(b.dim()));
    }
    return (a.sqrt() - b.sqrt()).squaredNorm();
}

/// Weighted mean with signed weights summing to one; the unique minimiser of
/// sum_j w_j (y_j - y)^2.
inline double scalar_weighted_mean(std::span<const double> points, std::span<const double> weights) {
    if (points.size() != weights.size()) {
        throw DimensionError("scalar_weighted_mean: size mismatch");
    }
    detail::require_weight_sum(weights, "scalar_weighted_mean");
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) acc += weights[i] * points[i];
    return acc;
}

/// Fréchet mean in Wasserstein space: the signed weighted average on the
/// quantile grid, projected onto the monotone cone. For nonnegative weights
/// the projection is a no-op.
inline QuantileFunction quantile_weighted_mean(std::span<const QuantileFunction> points,
                                               std::span<const double> weights) {
    if (points.empty()) throw ValidationError("quantile_weighted_mean: empty input");
    if (points.size() != weights.size()) {
        throw DimensionError("quantile_weighted_mean: size mismatch");
    }
    detail::require_weight_sum(weights, "quantile_weighted_mean");
    const int m = points[0].size();
    for (const auto& p : points) {
        if (p.size() != m) throw GridMismatchError("quantile_weighted_mean: mixed grid sizes");
    }
    std::vector<double> raw(static_cast<std::size_t>(m), 0.0);
    for (std::size_t j = 0; j < points.size(); ++j) {
        for (int k = 0; k < m; ++k) {
            raw[static_cast<std::size_t>(k)] += weights[j] * points[j][static_cast<std::size_t>(k)];
        }
    }
    return QuantileFunction(isotonic_projection(raw));
}

/// Fréchet mean in the square-root metric: average the cached square roots,
/// clip the result to the PSD cone, and square back.
inline SPDPoint spd_weighted_mean(std::span<const SPDPoint> points, std::span<const double> weights) {
    if (points.empty()) throw ValidationError("spd_weighted_mean: empty input");
    if (points.size() != weights.size()) {
        throw DimensionError("spd_weighted_mean: size mismatch");
    }
    detail::require_weight_sum(weights, "spd_weighted_mean");
    const Eigen::Index dim = points[0].dim();
    for (const auto& p : points) {
        if (p.dim() != dim) throw DimensionError("spd_weighted_mean: mixed dimensions");
    }
    Eigen::MatrixXd rbar = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t j = 0; j < points.size(); ++j) rbar += weights[j] * points[j].sqrt();
    const Eigen::MatrixXd rproj = detail::clip_psd(0.5 * (rbar + rbar.transpose()));
    Eigen::MatrixXd sq = rproj * rproj;
    return SPDPoint(0.5 * (sq + sq.transpose()));
}

// Metric-space handles: one squared distance plus one signed-weight Fréchet
// mean solver each, so the regression engines stay response-type agnostic.

struct ScalarSpace {
    using Point = double;
    static double squared_distance(double a, double b) { return (a - b) * (a - b); }
    static Point weighted_frechet_mean(std::span<const Point> pts, std::span<const double> w) {
        return scalar_weighted_mean(pts, w);
    }
    static constexpr const char* name() { return "scalar"; }
};

struct WassersteinSpace {
    using Point = QuantileFunction;
    static double squared_distance(const Point& a, const Point& b) {
        return wasserstein_sq_distance(a, b);
    }
    static Point weighted_frechet_mean(std::span<const Point> pts, std::span<const double> w) {
        return quantile_weighted_mean(pts, w);
    }
    static constexpr const char* name() { return "quantile"; }
};

struct CholeskySpace {
    using Point = SPDPoint;
    static double squared_distance(const Point& a, const Point& b) {
        return cholesky_sq_distance(a, b);
    }
    static Point weighted_frechet_mean(std::span<const Point> pts, std::span<const double> w) {
        return spd_weighted_mean(pts, w);
    }
    static constexpr const char* name() { return "spd"; }
};

}  // namespace fvcm
