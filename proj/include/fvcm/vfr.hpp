#pragma once

#include "fvcm/errors.hpp"
#include "fvcm/kernels.hpp"
#include "fvcm/metric_spaces.hpp"
#include "fvcm/parallel.hpp"
#include "fvcm/training.hpp"

#include <Eigen/Dense>

#include <cstring>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace fvcm {

/// Default ridge added to a local covariance: tiny relative to its trace, so
/// well-conditioned designs are effectively untouched.
inline double default_ridge(const Eigen::MatrixXd& sigma_raw) {
    const Eigen::Index p = sigma_raw.rows();
    if (p == 0) return 0.0;
    return 1e-8 * sigma_raw.trace() / static_cast<double>(p);
}

/// Locally smoothed first and second moments of X at the query modifier:
/// xbar = n^{-1} sum_i s_in X_i and
/// sigma = n^{-1} sum_i s_in (X_i - xbar)(X_i - xbar)^T + ridge I,
/// together with the weights that produced them and the factorisation of
/// sigma used by downstream solves.
struct ConditionalMoments {
    Eigen::VectorXd xbar;
    Eigen::MatrixXd sigma;
    WeightVector weights;
    Eigen::LLT<Eigen::MatrixXd> llt;

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        if (sigma.rows() == 0) return Eigen::VectorXd(0);
        return llt.solve(rhs);
    }
};

inline ConditionalMoments moments_from_weights(const Eigen::MatrixXd& X, WeightVector weights,
                                               std::optional<double> ridge) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const double dn = static_cast<double>(n);

    ConditionalMoments mom;
    mom.weights = std::move(weights);

    mom.xbar = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        mom.xbar += (mom.weights[static_cast<std::size_t>(i)] / dn) * X.row(i).transpose();
    }

    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd centred = X.row(i).transpose() - mom.xbar;
        raw += (mom.weights[static_cast<std::size_t>(i)] / dn) * (centred * centred.transpose());
    }
    const double lambda = ridge.value_or(default_ridge(raw));
    mom.sigma = raw + lambda * Eigen::MatrixXd::Identity(p, p);

    if (p > 0) {
        mom.llt.compute(mom.sigma);
        if (mom.llt.info() != Eigen::Success) {
            throw SingularDesignError(
                "conditional moments: local covariance is singular even after ridge");
        }
    }
    return mom;
}

template <class Space, class Modifier>
ConditionalMoments conditional_moments(const TrainingSet<Space, Modifier>& training,
                                       const typename Modifier::Query& u,
                                       const WeightScheme& scheme, const Kernel& kernel,
                                       std::optional<double> ridge = std::nullopt) {
    training.validate();
    return moments_from_weights(training.X, training.U.weights_at(u, scheme, kernel), ridge);
}

/// Signed prediction weights
/// c_j = s_jn/n + (x - xbar)^T sigma^{-1} n^{-1} sum_i s_in (X_i - xbar)(delta_ij - s_jn/n),
/// evaluated with the centring term retained; sum_j c_j = 1.
inline Eigen::VectorXd cj_weights(const Eigen::MatrixXd& X, const ConditionalMoments& mom,
                                  const Eigen::VectorXd& x) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (x.size() != p) {
        throw DimensionError("cj_weights: query has dimension " + std::to_string(x.size()) +
                             ", training has p = " + std::to_string(p));
    }
    const double dn = static_cast<double>(n);

    Eigen::VectorXd c(n);
    for (Eigen::Index j = 0; j < n; ++j) c(j) = mom.weights[static_cast<std::size_t>(j)] / dn;
    if (p == 0) return c;

    const Eigen::VectorXd v = mom.solve(x - mom.xbar);

    // g = n^{-1} sum_i s_in (X_i - xbar); zero in exact arithmetic, kept so the
    // implemented weight is the unsimplified formula.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        g += (mom.weights[static_cast<std::size_t>(i)] / dn) * (X.row(i).transpose() - mom.xbar);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::VectorXd aj =
            (mom.weights[static_cast<std::size_t>(j)] / dn) * (X.row(j).transpose() - mom.xbar - g);
        c(j) += v.dot(aj);
    }
    return c;
}

/// Closed-form varying-coefficient prediction for scalar responses:
/// beta(u) from the locally weighted covariance equations, the intercept from
/// the local means, prediction = beta0(u) + x^T beta(u). Serves as the
/// Euclidean specialisation the Fréchet path must reproduce.
template <class Modifier>
double euclidean_vcm_predict(const TrainingSet<ScalarSpace, Modifier>& training,
                             const Eigen::VectorXd& x, const typename Modifier::Query& u,
                             const WeightScheme& scheme, const Kernel& kernel,
                             std::optional<double> ridge = std::nullopt) {
    const ConditionalMoments mom = conditional_moments(training, u, scheme, kernel, ridge);
    const Eigen::Index n = training.X.rows();
    const Eigen::Index p = training.X.cols();
    const double dn = static_cast<double>(n);

    double ybar = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        ybar += (mom.weights[static_cast<std::size_t>(i)] / dn) * training.Y[static_cast<std::size_t>(i)];
    }
    if (p == 0) return ybar;

    Eigen::VectorXd cross = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        cross += (mom.weights[static_cast<std::size_t>(i)] / dn) *
                 (training.X.row(i).transpose() - mom.xbar) *
                 (training.Y[static_cast<std::size_t>(i)] - ybar);
    }
    const Eigen::VectorXd beta = mom.solve(cross);
    const double beta0 = ybar - mom.xbar.dot(beta);
    return beta0 + x.dot(beta);
}

/// Varying-coefficient Fréchet regression. Fitting is lazy: the predictor
/// stores the sample and hyperparameters and answers queries by computing
/// the c_j weights at (x, u) and handing them to the response space's
/// Fréchet mean solver.
template <class Space, class Modifier>
class VfrPredictor {
public:
    using Point = typename Space::Point;
    using Query = typename Modifier::Query;

    VfrPredictor(TrainingSet<Space, Modifier> training, WeightScheme scheme, Kernel kernel,
                 std::optional<double> ridge = std::nullopt)
        : training_(std::move(training)), scheme_(scheme), kernel_(kernel), ridge_(ridge) {
        training_.validate();
    }

    const TrainingSet<Space, Modifier>& training() const { return training_; }
    const WeightScheme& scheme() const { return scheme_; }
    const Kernel& kernel() const { return kernel_; }
    std::optional<double> ridge() const { return ridge_; }

    Point predict(const Eigen::VectorXd& x, const Query& u) const {
        const ConditionalMoments mom =
            conditional_moments(training_, u, scheme_, kernel_, ridge_);
        return predict_with_moments(mom, x);
    }

    /// Batch prediction; conditional moments are shared between queries with
    /// the same modifier value within this call. Deterministic for any thread
    /// count.
    std::vector<Point> predict_batch(const Eigen::MatrixXd& Xq, std::span<const Query> uq,
                                     int threads = 1) const {
        if (Xq.rows() != static_cast<Eigen::Index>(uq.size())) {
            throw DimensionError("predict_batch: X and U query counts differ");
        }
        const int q = static_cast<int>(uq.size());
        std::vector<int> group = group_queries(uq);
        const int n_groups = *std::max_element(group.begin(), group.end()) + 1;

        std::vector<ConditionalMoments> moments(static_cast<std::size_t>(n_groups));
        std::vector<int> rep(static_cast<std::size_t>(n_groups), -1);
        for (int i = 0; i < q; ++i) {
            if (rep[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])] < 0) {
                rep[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])] = i;
            }
        }
        parallel_for(n_groups, threads, [&](int gi) {
            moments[static_cast<std::size_t>(gi)] = conditional_moments(
                training_, uq[static_cast<std::size_t>(rep[static_cast<std::size_t>(gi)])],
                scheme_, kernel_, ridge_);
        });

        std::vector<Point> out;
        out.reserve(static_cast<std::size_t>(q));
        for (int i = 0; i < q; ++i) {
            out.push_back(predict_with_moments(
                moments[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])],
                Xq.row(i).transpose()));
        }
        return out;
    }

private:
    Point predict_with_moments(const ConditionalMoments& mom, const Eigen::VectorXd& x) const {
        const Eigen::VectorXd c = cj_weights(training_.X, mom, x);
        // sum c_j = 1 is an algebraic identity; losing it in floating point
        // means the local covariance solve was effectively singular
        if (std::abs(c.sum() - 1.0) > kWeightSumTol) {
            throw SingularDesignError(
                "vfr: ill-conditioned local design, prediction weights lost the "
                "sum-to-one identity");
        }
        std::vector<double> w(c.data(), c.data() + c.size());
        return Space::weighted_frechet_mean(training_.Y, w);
    }

    std::vector<int> group_queries(std::span<const Query> uq) const {
        const std::size_t q = uq.size();
        std::vector<int> group(q, -1);
        if constexpr (is_scalar_modifier_v<Modifier>) {
            std::unordered_map<std::uint64_t, int> seen;
            int next = 0;
            for (std::size_t i = 0; i < q; ++i) {
                std::uint64_t bits;
                std::memcpy(&bits, &uq[i], sizeof bits);
                auto [it, inserted] = seen.try_emplace(bits, next);
                if (inserted) ++next;
                group[i] = it->second;
            }
        } else {
            std::vector<std::size_t> reps;
            for (std::size_t i = 0; i < q; ++i) {
                for (std::size_t r = 0; r < reps.size(); ++r) {
                    if (training_.U.distance(uq[reps[r]], uq[i]) == 0.0) {
                        group[i] = static_cast<int>(r);
                        break;
                    }
                }
                if (group[i] < 0) {
                    group[i] = static_cast<int>(reps.size());
                    reps.push_back(i);
                }
            }
        }
        return group;
    }

    TrainingSet<Space, Modifier> training_;
    WeightScheme scheme_;
    Kernel kernel_;
    std::optional<double> ridge_;
};

template <class Space, class Modifier>
typename Space::Point vfr_predict(const TrainingSet<Space, Modifier>& training,
                                  const Eigen::VectorXd& x,
                                  const typename Modifier::Query& u, const WeightScheme& scheme,
                                  const Kernel& kernel,
                                  std::optional<double> ridge = std::nullopt) {
    return VfrPredictor<Space, Modifier>(training, scheme, kernel, ridge).predict(x, u);
}

}  // namespace fvcm
