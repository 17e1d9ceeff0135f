#pragma once

#include "fvcm/errors.hpp"
#include "fvcm/kernels.hpp"
#include "fvcm/metric_spaces.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace fvcm {

/// Scalar effect modifier; supports local-constant and local-linear smoothing.
struct ScalarModifier {
    using Query = double;

    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    WeightVector weights_at(double u, const WeightScheme& scheme, const Kernel& kernel) const {
        switch (scheme.kind) {
            case Weighting::LocalConstant:
                return local_constant_weights(values, u, kernel, scheme.bandwidth);
            case Weighting::LocalLinear:
                return local_linear_weights(values, u, kernel, scheme.bandwidth);
            case Weighting::MetricBall:
                throw ValidationError(
                    "weights_at: metric-ball smoothing is reserved for metric-space modifiers");
        }
        throw ValidationError("weights_at: unknown weighting scheme");
    }

    double distance(double a, double b) const { return std::abs(a - b); }

    ScalarModifier subset(std::span<const int> idx) const {
        ScalarModifier out;
        out.values.reserve(idx.size());
        for (int i : idx) out.values.push_back(values[static_cast<std::size_t>(i)]);
        return out;
    }
};

/// Effect modifier living in a metric space; smoothed by metric-ball weights
/// built from precomputed distances.
template <class USpace>
struct MetricModifier {
    using Query = typename USpace::Point;

    std::vector<Query> values;

    std::size_t size() const { return values.size(); }

    WeightVector weights_at(const Query& u, const WeightScheme& scheme,
                            const Kernel& kernel) const {
        if (scheme.kind != Weighting::MetricBall) {
            throw ValidationError(
                "weights_at: metric-space modifiers require metric-ball smoothing");
        }
        std::vector<double> d(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            d[i] = std::sqrt(USpace::squared_distance(values[i], u));
        }
        return metric_ball_weights(d, kernel, scheme.bandwidth);
    }

    double distance(const Query& a, const Query& b) const {
        return std::sqrt(USpace::squared_distance(a, b));
    }

    MetricModifier subset(std::span<const int> idx) const {
        MetricModifier out;
        out.values.reserve(idx.size());
        for (int i : idx) out.values.push_back(values[static_cast<std::size_t>(i)]);
        return out;
    }
};

template <class Modifier>
inline constexpr bool is_scalar_modifier_v = false;
template <>
inline constexpr bool is_scalar_modifier_v<ScalarModifier> = true;

/// Aligned sample: Euclidean predictors X (n x p), effect modifier U and
/// metric-space responses Y.
template <class Space, class Modifier>
struct TrainingSet {
    using Point = typename Space::Point;
    using Query = typename Modifier::Query;

    Eigen::MatrixXd X;
    Modifier U;
    std::vector<Point> Y;

    int n() const { return static_cast<int>(X.rows()); }
    int p() const { return static_cast<int>(X.cols()); }

    void validate() const {
        const auto rows = static_cast<std::size_t>(X.rows());
        if (U.size() != rows || Y.size() != rows) {
            throw ValidationError("TrainingSet: X, U, Y must have equal length (n = " +
                                  std::to_string(rows) + ", |U| = " + std::to_string(U.size()) +
                                  ", |Y| = " + std::to_string(Y.size()) + ")");
        }
        if (X.rows() < X.cols() + 2) {
            throw ValidationError("TrainingSet: need n >= p + 2, got n = " +
                                  std::to_string(X.rows()) + ", p = " + std::to_string(X.cols()));
        }
        if (!X.allFinite()) throw ValidationError("TrainingSet: non-finite predictor entry");
    }

    TrainingSet subset(std::span<const int> idx) const {
        TrainingSet out;
        out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
        out.Y.reserve(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out.X.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
            out.Y.push_back(Y[static_cast<std::size_t>(idx[k])]);
        }
        out.U = U.subset(idx);
        return out;
    }
};

/// Sample standard deviation of the pairwise modifier distances; used to put
/// bandwidth grids on the modifier's own scale.
template <class Modifier>
double pairwise_distance_sd(const Modifier& mod) {
    const std::size_t n = mod.size();
    if (n < 2) throw ValidationError("pairwise_distance_sd: need at least two modifiers");
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = mod.distance(mod.values[i], mod.values[j]);
            sum += d;
            sumsq += d * d;
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sumsq / static_cast<double>(count) - mean * mean);
    return std::sqrt(var);
}

}  // namespace fvcm
