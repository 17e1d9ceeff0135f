#pragma once

#include "fvcm/errors.hpp"
#include "fvcm/kernels.hpp"
#include "fvcm/metric_spaces.hpp"
#include "fvcm/training.hpp"
#include "fvcm/vfr.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fvcm {

/// Estimator selector shared by the benchmark harness, the CLI and model
/// files. gfr and lfr require a scalar effect modifier.
enum class Method { Gfr, Lfr, Pfr, Vfr };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Gfr: return "gfr";
        case Method::Lfr: return "lfr";
        case Method::Pfr: return "pfr";
        case Method::Vfr: return "vfr";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "gfr") return Method::Gfr;
    if (s == "lfr") return Method::Lfr;
    if (s == "pfr") return Method::Pfr;
    if (s == "vfr") return Method::Vfr;
    throw ValidationError("unknown method '" + s + "' (expected gfr, lfr, pfr or vfr)");
}

namespace detail {

template <class Modifier>
const std::vector<double>& scalar_modifier_values(const Modifier& mod, const char* method) {
    if constexpr (is_scalar_modifier_v<Modifier>) {
        return mod.values;
    } else {
        throw UnsupportedModifierError(std::string(method) +
                                       ": requires a scalar effect modifier");
    }
}

template <class Modifier>
double scalar_query(const typename Modifier::Query& u, const char* method) {
    if constexpr (is_scalar_modifier_v<Modifier>) {
        return u;
    } else {
        throw UnsupportedModifierError(std::string(method) +
                                       ": requires a scalar effect modifier");
    }
}

}  // namespace detail

/// Global Fréchet regression on the stacked predictor z = (x, u): weights
/// g_i = 1 + (z - zbar)^T Sigma_Z^{-1} (Z_i - zbar), applied as g/n.
template <class Space, class Modifier>
class GfrPredictor {
public:
    using Point = typename Space::Point;
    using Query = typename Modifier::Query;

    GfrPredictor(TrainingSet<Space, Modifier> training, std::optional<double> ridge = std::nullopt)
        : training_(std::move(training)) {
        training_.validate();
        const std::vector<double>& u = detail::scalar_modifier_values(training_.U, "gfr");
        const Eigen::Index n = training_.X.rows();
        const Eigen::Index p = training_.X.cols();
        Z_.resize(n, p + 1);
        Z_.leftCols(p) = training_.X;
        for (Eigen::Index i = 0; i < n; ++i) Z_(i, p) = u[static_cast<std::size_t>(i)];

        zbar_ = Z_.colwise().mean().transpose();
        Eigen::MatrixXd centred = Z_.rowwise() - zbar_.transpose();
        Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n);
        const double lambda = ridge.value_or(default_ridge(cov));
        cov += lambda * Eigen::MatrixXd::Identity(p + 1, p + 1);
        llt_.compute(cov);
        if (llt_.info() != Eigen::Success) {
            throw SingularDesignError("gfr: stacked predictor covariance is singular");
        }
    }

    Point predict(const Eigen::VectorXd& x, const Query& u) const {
        const double us = detail::scalar_query<Modifier>(u, "gfr");
        const Eigen::Index n = Z_.rows();
        const Eigen::Index q = Z_.cols();
        if (x.size() + 1 != q) throw DimensionError("gfr: query dimension mismatch");
        Eigen::VectorXd z(q);
        z.head(q - 1) = x;
        z(q - 1) = us;
        const Eigen::VectorXd v = llt_.solve(z - zbar_);
        std::vector<double> w(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            w[static_cast<std::size_t>(i)] =
                (1.0 + v.dot(Z_.row(i).transpose() - zbar_)) / static_cast<double>(n);
        }
        return Space::weighted_frechet_mean(training_.Y, w);
    }

    const TrainingSet<Space, Modifier>& training() const { return training_; }

private:
    TrainingSet<Space, Modifier> training_;
    Eigen::MatrixXd Z_;
    Eigen::VectorXd zbar_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Local Fréchet regression on the standardised stacked predictor z = (x, u):
/// first-order local polynomial (equivalent-kernel) weights
///   w_i = (k_i / sum k) (1 - mu1^T S^{-1} ((Z_i - z) - mu1)),
/// where k_i is a product Gaussian kernel, mu1 the kernel-weighted mean of
/// Z_i - z and S the kernel-weighted covariance. The weights are signed and
/// sum to one; near-singular local moments at small bandwidths make this
/// estimator blow up, which is its documented failure mode.
template <class Space, class Modifier>
class LfrPredictor {
public:
    using Point = typename Space::Point;
    using Query = typename Modifier::Query;

    LfrPredictor(TrainingSet<Space, Modifier> training, std::vector<double> bandwidths,
                 Kernel kernel = {})
        : training_(std::move(training)), h_(std::move(bandwidths)), kernel_(kernel) {
        training_.validate();
        const std::vector<double>& u = detail::scalar_modifier_values(training_.U, "lfr");
        const Eigen::Index n = training_.X.rows();
        const Eigen::Index p = training_.X.cols();
        if (static_cast<Eigen::Index>(h_.size()) != p + 1) {
            throw DimensionError("lfr: need p + 1 = " + std::to_string(p + 1) +
                                 " bandwidths, got " + std::to_string(h_.size()));
        }
        for (double h : h_) detail::require_bandwidth(h, "lfr");
        Z_.resize(n, p + 1);
        Z_.leftCols(p) = training_.X;
        for (Eigen::Index i = 0; i < n; ++i) Z_(i, p) = u[static_cast<std::size_t>(i)];
        const Eigen::RowVectorXd mean = Z_.colwise().mean();
        sd_ = ((Z_.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n))
                  .sqrt();
        for (Eigen::Index k = 0; k < sd_.size(); ++k) {
            if (!(sd_(k) > 0.0)) {
                throw SingularDesignError("lfr: stacked predictor column " + std::to_string(k) +
                                          " is constant");
            }
        }
    }

    /// Convenience: one shared bandwidth across all standardised coordinates.
    LfrPredictor(TrainingSet<Space, Modifier> training, double shared_bandwidth,
                 Kernel kernel = {})
        : LfrPredictor(std::move(training),
                       std::vector<double>(static_cast<std::size_t>(training.X.cols()) + 1,
                                           shared_bandwidth),
                       kernel) {}

    Point predict(const Eigen::VectorXd& x, const Query& u) const {
        const double us = detail::scalar_query<Modifier>(u, "lfr");
        const Eigen::Index n = Z_.rows();
        const Eigen::Index q = Z_.cols();
        if (x.size() + 1 != q) throw DimensionError("lfr: query dimension mismatch");
        Eigen::VectorXd z(q);
        z.head(q - 1) = x;
        z(q - 1) = us;

        Eigen::VectorXd k(n);
        double ksum = 0.0, kmax = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double wi = 1.0;
            for (Eigen::Index c = 0; c < q; ++c) {
                wi *= kernel_((Z_(i, c) - z(c)) / (sd_(c) * h_[static_cast<std::size_t>(c)]));
            }
            k(i) = wi;
            ksum += wi;
            kmax = std::max(kmax, wi);
        }
        if (ksum / static_cast<double>(n) <= kDegeneracyTol * kmax || ksum <= 0.0) {
            throw DegenerateNeighborhoodError("lfr: no effective kernel mass at the query");
        }

        Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(q);
        for (Eigen::Index i = 0; i < n; ++i) mu1 += (k(i) / ksum) * (Z_.row(i).transpose() - z);
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(q, q);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd centred = Z_.row(i).transpose() - z - mu1;
            S += (k(i) / ksum) * (centred * centred.transpose());
        }
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success) {
            throw DegenerateNeighborhoodError(
                "lfr: local second-moment matrix is singular at the query");
        }
        const Eigen::VectorXd v = llt.solve(mu1);

        std::vector<double> w(static_cast<std::size_t>(n));
        double wsum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd centred = Z_.row(i).transpose() - z - mu1;
            w[static_cast<std::size_t>(i)] = (k(i) / ksum) * (1.0 - v.dot(centred));
            wsum += w[static_cast<std::size_t>(i)];
        }
        // Exact-arithmetic sum is 1; renormalise away the cancellation error
        // of the signed weights, and give up when it has destroyed the scale.
        if (!(wsum > 0.5)) {
            throw DegenerateNeighborhoodError(
                "lfr: local weights cancelled catastrophically at the query");
        }
        for (double& wi : w) wi /= wsum;
        return Space::weighted_frechet_mean(training_.Y, w);
    }

    const TrainingSet<Space, Modifier>& training() const { return training_; }

private:
    TrainingSet<Space, Modifier> training_;
    std::vector<double> h_;
    Kernel kernel_;
    Eigen::MatrixXd Z_;
    Eigen::ArrayXd sd_;
};

/// Partially-global Fréchet regression: a single global coefficient vector
/// for X, profiled out against kernel smoothing in U. Training points enter
/// the prediction through
///   p_j(x, u) = s_jn(u)/n + (x - xbar_u)^T D^{-1} q_j / n,
/// where xtilde_i = X_i - xbar_{U_i}, D = n^{-1} sum_i xtilde_i xtilde_i^T
/// and q_j = xtilde_j - n^{-1} sum_i s_jn(U_i) xtilde_i. The weights sum to
/// one and reduce to s_jn(u)/n at x = xbar_u.
template <class Space, class Modifier>
class PfrPredictor {
public:
    using Point = typename Space::Point;
    using Query = typename Modifier::Query;

    PfrPredictor(TrainingSet<Space, Modifier> training, WeightScheme scheme, Kernel kernel = {},
                 std::optional<double> ridge = std::nullopt)
        : training_(std::move(training)), scheme_(scheme), kernel_(kernel) {
        training_.validate();
        const Eigen::Index n = training_.X.rows();
        const Eigen::Index p = training_.X.cols();
        const double dn = static_cast<double>(n);

        // Locally centred predictors and the row-stochastic smoothing matrix.
        Eigen::MatrixXd S(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const WeightVector s =
                training_.U.weights_at(training_.U.values[static_cast<std::size_t>(i)], scheme_,
                                       kernel_);
            for (Eigen::Index j = 0; j < n; ++j) S(i, j) = s[static_cast<std::size_t>(j)];
        }
        Eigen::MatrixXd xtilde(n, p);
        for (Eigen::Index i = 0; i < n; ++i) {
            xtilde.row(i) = training_.X.row(i) - (S.row(i) * training_.X) / dn;
        }

        Eigen::MatrixXd D = xtilde.transpose() * xtilde / dn;
        const double lambda = ridge.value_or(default_ridge(D));
        D += lambda * Eigen::MatrixXd::Identity(p, p);
        Eigen::LLT<Eigen::MatrixXd> llt(D);
        if (llt.info() != Eigen::Success) {
            throw SingularDesignError("pfr: profiled design matrix is singular");
        }

        Eigen::MatrixXd Q = xtilde.transpose();  // columns q_j
        Q -= (xtilde.transpose() * S) / dn;
        G_ = llt.solve(Q) / dn;
    }

    Point predict(const Eigen::VectorXd& x, const Query& u) const {
        const Eigen::Index n = training_.X.rows();
        const Eigen::Index p = training_.X.cols();
        if (x.size() != p) throw DimensionError("pfr: query dimension mismatch");
        const double dn = static_cast<double>(n);

        const WeightVector s = training_.U.weights_at(u, scheme_, kernel_);
        Eigen::VectorXd xbar_u = Eigen::VectorXd::Zero(p);
        for (Eigen::Index j = 0; j < n; ++j) {
            xbar_u += (s[static_cast<std::size_t>(j)] / dn) * training_.X.row(j).transpose();
        }
        const Eigen::VectorXd corr = G_.transpose() * (x - xbar_u);
        std::vector<double> w(static_cast<std::size_t>(n));
        double wsum = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            w[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j)] / dn + corr(j);
            wsum += w[static_cast<std::size_t>(j)];
        }
        if (std::abs(wsum - 1.0) > kWeightSumTol) {
            throw SingularDesignError(
                "pfr: ill-conditioned profiled design, prediction weights lost the "
                "sum-to-one identity");
        }
        return Space::weighted_frechet_mean(training_.Y, w);
    }

    const TrainingSet<Space, Modifier>& training() const { return training_; }
    const WeightScheme& scheme() const { return scheme_; }

private:
    TrainingSet<Space, Modifier> training_;
    WeightScheme scheme_;
    Kernel kernel_;
    Eigen::MatrixXd G_;  // p x n, maps (x - xbar_u) to the linear weight correction
};

template <class Space, class Modifier>
typename Space::Point gfr_predict(const TrainingSet<Space, Modifier>& training,
                                  const Eigen::VectorXd& x, const typename Modifier::Query& u,
                                  std::optional<double> ridge = std::nullopt) {
    return GfrPredictor<Space, Modifier>(training, ridge).predict(x, u);
}

template <class Space, class Modifier>
typename Space::Point lfr_predict(const TrainingSet<Space, Modifier>& training,
                                  const Eigen::VectorXd& x, const typename Modifier::Query& u,
                                  const std::vector<double>& bandwidths, Kernel kernel = {}) {
    return LfrPredictor<Space, Modifier>(training, bandwidths, kernel).predict(x, u);
}

template <class Space, class Modifier>
typename Space::Point pfr_predict(const TrainingSet<Space, Modifier>& training,
                                  const Eigen::VectorXd& x, const typename Modifier::Query& u,
                                  const WeightScheme& scheme, Kernel kernel = {},
                                  std::optional<double> ridge = std::nullopt) {
    return PfrPredictor<Space, Modifier>(training, scheme, kernel, ridge).predict(x, u);
}

}  // namespace fvcm
