#pragma once

#include "fvcm/errors.hpp"
#include "fvcm/training.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace fvcm {

inline std::vector<double> default_bandwidth_grid() {
    return {0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
}

/// Generalised mean squared error: the averaged squared response-space
/// distance between predictions and held-out responses. Reported as MSPE in
/// real-data workflows.
template <class Predictor, class Space, class Modifier>
double gmse(const Predictor& predictor, const TrainingSet<Space, Modifier>& test) {
    test.validate();
    const int n = test.n();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        try {
            const auto yhat = predictor.predict(test.X.row(i).transpose(),
                                                test.U.values[static_cast<std::size_t>(i)]);
            acc += Space::squared_distance(yhat, test.Y[static_cast<std::size_t>(i)]);
        } catch (const DegenerateNeighborhoodError& e) {
            throw DegenerateNeighborhoodError(std::string(e.what()) + " (test point " +
                                              std::to_string(i) + ")");
        } catch (const SingularDesignError& e) {
            throw SingularDesignError(std::string(e.what()) + " (test point " +
                                      std::to_string(i) + ")");
        }
    }
    return acc / static_cast<double>(n);
}

/// Pairwise-distance sd of a Unif[0,1] modifier, 1/sqrt(18); the default
/// bandwidth grid presumes a modifier on that scale.
inline constexpr double kUniformPairwiseSd = 0.23570226039551584;

struct CVConfig {
    std::vector<double> grid = default_bandwidth_grid();
    int folds = 10;
    std::uint64_t seed = 0;
    /// Rescale the grid so the sample sd of the pairwise modifier distances
    /// plays the role the Unif[0,1] spread plays for the default grid; for
    /// modifiers that do not live on a [0,1]-like scale.
    bool scale_grid_to_modifier = false;
};

struct CVResult {
    std::vector<double> grid;        // effective grid after any scaling
    std::vector<double> cv_errors;   // mean held-out error per bandwidth
    double chosen_bandwidth = 0.0;
    double chosen_error = 0.0;
    std::vector<int> fold_assignment;
};

namespace detail {

inline void validate_cv_config(const CVConfig& cfg, int n) {
    if (cfg.grid.empty()) throw ValidationError("cv: bandwidth grid is empty");
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        if (!(cfg.grid[i] > 0.0)) throw ValidationError("cv: bandwidths must be positive");
        if (i > 0 && cfg.grid[i] <= cfg.grid[i - 1]) {
            throw ValidationError("cv: bandwidth grid must be strictly increasing");
        }
    }
    if (cfg.folds < 2) throw ValidationError("cv: need at least two folds");
    if (cfg.folds > n) {
        throw ValidationError("cv: folds = " + std::to_string(cfg.folds) + " exceeds n = " +
                              std::to_string(n));
    }
}

inline std::vector<int> assign_folds(int n, int k, std::uint64_t seed) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i % k;
    return fold;
}

}  // namespace detail

/// k-fold cross-validated bandwidth selection. `make(training, h)` must
/// return a fitted object exposing predict(x, u). Folds where fitting or
/// prediction degenerates push that bandwidth's error to +infinity; ties are
/// broken toward the smaller bandwidth.
template <class Space, class Modifier, class Factory>
CVResult select_bandwidth(const TrainingSet<Space, Modifier>& training, Factory&& make,
                          const CVConfig& cfg) {
    training.validate();
    const int n = training.n();
    detail::validate_cv_config(cfg, n);

    CVResult result;
    result.grid = cfg.grid;
    if (cfg.scale_grid_to_modifier) {
        const double sd = pairwise_distance_sd(training.U);
        if (!(sd > 0.0)) throw ValidationError("cv: modifier distances have zero spread");
        for (double& h : result.grid) h *= sd / kUniformPairwiseSd;
    }
    result.fold_assignment = detail::assign_folds(n, cfg.folds, cfg.seed);

    std::vector<std::vector<int>> in_fold(static_cast<std::size_t>(cfg.folds));
    std::vector<std::vector<int>> out_fold(static_cast<std::size_t>(cfg.folds));
    for (int i = 0; i < n; ++i) {
        const int f = result.fold_assignment[static_cast<std::size_t>(i)];
        in_fold[static_cast<std::size_t>(f)].push_back(i);
        for (int g = 0; g < cfg.folds; ++g) {
            if (g != f) out_fold[static_cast<std::size_t>(g)].push_back(i);
        }
    }

    constexpr double inf = std::numeric_limits<double>::infinity();
    result.cv_errors.assign(result.grid.size(), 0.0);
    for (std::size_t hi = 0; hi < result.grid.size(); ++hi) {
        double total = 0.0;
        for (int f = 0; f < cfg.folds; ++f) {
            const auto fit_set = training.subset(out_fold[static_cast<std::size_t>(f)]);
            const auto held_out = training.subset(in_fold[static_cast<std::size_t>(f)]);
            try {
                const auto predictor = make(fit_set, result.grid[hi]);
                total += gmse(predictor, held_out);
            } catch (const NumericError&) {
                total = inf;
                break;
            }
        }
        result.cv_errors[hi] = std::isinf(total) ? inf : total / cfg.folds;
    }

    std::size_t best = result.grid.size();
    for (std::size_t hi = 0; hi < result.grid.size(); ++hi) {
        if (std::isfinite(result.cv_errors[hi]) &&
            (best == result.grid.size() || result.cv_errors[hi] < result.cv_errors[best])) {
            best = hi;
        }
    }
    if (best == result.grid.size()) {
        throw NoFeasibleBandwidthError("cv: every bandwidth in the grid was disqualified");
    }
    result.chosen_bandwidth = result.grid[best];
    result.chosen_error = result.cv_errors[best];
    return result;
}

}  // namespace fvcm
