#include "fvcm/baselines.hpp"

#include "support/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace fvcm;

namespace {

TrainingSet<ScalarSpace, ScalarModifier> random_scalar_set(std::mt19937_64& rng, int n, int p,
                                                           double noise = 0.3) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    TrainingSet<ScalarSpace, ScalarModifier> ts;
    ts.X.resize(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) ts.X(i, j) = normal(rng);
        ts.U.values.push_back(unif(rng));
        double y = std::cos(2.0 * ts.U.values.back());
        for (int j = 0; j < p; ++j) y += 0.7 * ts.X(i, j);
        ts.Y.push_back(y + noise * normal(rng));
    }
    return ts;
}

TrainingSet<ScalarSpace, MetricModifier<WassersteinSpace>> quantile_modifier_set(
    std::mt19937_64& rng, int n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    TrainingSet<ScalarSpace, MetricModifier<WassersteinSpace>> ts;
    ts.X.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        ts.X(i, 0) = normal(rng);
        const double loc = normal(rng);
        ts.U.values.push_back(QuantileFunction({loc - 0.5, loc, loc + 0.5}));
        ts.Y.push_back(loc + 0.5 * ts.X(i, 0) + 0.1 * normal(rng));
    }
    return ts;
}

}  // namespace

TEST_CASE("global Fréchet regression") {
    const Kernel kernel;
    std::mt19937_64 rng(41);

    SECTION("centred query returns the unweighted Fréchet mean") {
        auto ts = random_scalar_set(rng, 20, 2);
        GfrPredictor<ScalarSpace, ScalarModifier> fitted(ts);
        Eigen::VectorXd zbar(3);
        zbar.head(2) = ts.X.colwise().mean().transpose();
        double ubar = 0.0;
        for (double u : ts.U.values) ubar += u / ts.n();
        double ybar = 0.0;
        for (double y : ts.Y) ybar += y / ts.n();
        CHECK(fitted.predict(zbar.head(2), ubar) == Catch::Approx(ybar).margin(1e-10));
    }

    SECTION("scalar responses equal ordinary least squares") {
        for (int rep = 0; rep < 25; ++rep) {
            auto ts = random_scalar_set(rng, 25, 2);
            GfrPredictor<ScalarSpace, ScalarModifier> fitted(ts, 0.0);
            Eigen::MatrixXd Z(ts.n(), 3);
            Z.leftCols(2) = ts.X;
            for (int i = 0; i < ts.n(); ++i) Z(i, 2) = ts.U.values[static_cast<std::size_t>(i)];
            std::normal_distribution<double> normal(0.0, 1.0);
            Eigen::VectorXd z(3);
            z << normal(rng), normal(rng), 0.4;
            const double ref = oracle::ols_predict(Z, ts.Y, z);
            CHECK(fitted.predict(z.head(2), z(2)) == Catch::Approx(ref).margin(1e-8));
        }
    }

    SECTION("weights average to one for any query") {
        auto ts = random_scalar_set(rng, 18, 2);
        // scalar prediction of the constant response 1 must be 1 for any query:
        // that is exactly the n^{-1} sum g_i = 1 identity
        for (auto& y : ts.Y) y = 1.0;
        GfrPredictor<ScalarSpace, ScalarModifier> fitted(ts);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int rep = 0; rep < 50; ++rep) {
            Eigen::VectorXd x(2);
            x << 3.0 * normal(rng), 3.0 * normal(rng);
            CHECK(fitted.predict(x, normal(rng)) == Catch::Approx(1.0).margin(1e-10));
        }
    }

    SECTION("metric modifiers are unsupported") {
        auto ts = quantile_modifier_set(rng, 12);
        CHECK_THROWS_AS((GfrPredictor<ScalarSpace, MetricModifier<WassersteinSpace>>(ts)),
                        UnsupportedModifierError);
        CHECK_THROWS_AS(gfr_predict(ts, Eigen::VectorXd::Zero(1), ts.U.values[0]),
                        UnsupportedModifierError);
    }
}

TEST_CASE("local Fréchet regression") {
    const Kernel kernel;
    std::mt19937_64 rng(42);

    SECTION("identical stacked predictors give the unweighted mean") {
        TrainingSet<ScalarSpace, ScalarModifier> ts;
        const int n = 8;
        ts.X.resize(n, 1);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            ts.X(i, 0) = 1.5;
            ts.U.values.push_back(0.5);
            ts.Y.push_back(normal(rng));
        }
        // constant columns have zero sd: the standardisation itself is singular
        CHECK_THROWS_AS((LfrPredictor<ScalarSpace, ScalarModifier>(ts, 0.2)), SingularDesignError);
    }

    SECTION("huge bandwidth approaches the global linear fit") {
        auto ts = random_scalar_set(rng, 40, 1, 0.0);
        LfrPredictor<ScalarSpace, ScalarModifier> fitted(ts, 1e6);
        Eigen::MatrixXd Z(ts.n(), 2);
        Z.col(0) = ts.X.col(0);
        for (int i = 0; i < ts.n(); ++i) Z(i, 1) = ts.U.values[static_cast<std::size_t>(i)];
        Eigen::VectorXd x(1);
        x << 0.3;
        Eigen::VectorXd z(2);
        z << 0.3, 0.6;
        const double ref = oracle::ols_predict(Z, ts.Y, z);
        CHECK(fitted.predict(x, 0.6) == Catch::Approx(ref).margin(1e-4));
    }

    SECTION("p = 0 reduces to one-dimensional local-linear smoothing") {
        TrainingSet<ScalarSpace, ScalarModifier> ts;
        const int n = 25;
        ts.X.resize(n, 0);
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> normal(0.0, 0.2);
        for (int i = 0; i < n; ++i) {
            ts.U.values.push_back(unif(gen));
            ts.Y.push_back(std::sin(4.0 * ts.U.values.back()) + normal(gen));
        }
        const double h = 0.2;
        LfrPredictor<ScalarSpace, ScalarModifier> fitted(ts, h);
        // independent oracle: local-linear weights on the standardised u column
        double sd = 0.0, mean = 0.0;
        for (double u : ts.U.values) mean += u / n;
        for (double u : ts.U.values) sd += (u - mean) * (u - mean) / n;
        sd = std::sqrt(sd);
        std::vector<double> u_std(ts.U.values);
        for (double& u : u_std) u /= sd;
        for (double q : {0.2, 0.5, 0.8}) {
            const auto w = oracle::local_linear(u_std, q / sd, h);
            long double ref = 0.0L;
            for (int i = 0; i < n; ++i) ref += w[static_cast<std::size_t>(i)] * ts.Y[static_cast<std::size_t>(i)] / n;
            CHECK(fitted.predict(Eigen::VectorXd(0), q) ==
                  Catch::Approx(static_cast<double>(ref)).margin(1e-8));
        }
    }

    SECTION("small instance matches an independent weight recomputation") {
        auto ts = random_scalar_set(rng, 12, 1);
        const double h = 0.8;
        LfrPredictor<ScalarSpace, ScalarModifier> fitted(ts, h);
        Eigen::VectorXd x(1);
        x << 0.2;
        const double u = 0.55;

        // literal long-double recomputation of the equivalent-kernel weights
        const int n = ts.n();
        Eigen::MatrixXd Z(n, 2);
        Z.col(0) = ts.X.col(0);
        for (int i = 0; i < n; ++i) Z(i, 1) = ts.U.values[static_cast<std::size_t>(i)];
        Eigen::RowVectorXd mean = Z.colwise().mean();
        Eigen::RowVectorXd sd =
            ((Z.rowwise() - mean).array().square().colwise().sum() / n).sqrt();
        std::vector<long double> k(static_cast<std::size_t>(n));
        long double ksum = 0.0L;
        Eigen::Vector2d z(0.2, 0.55);
        for (int i = 0; i < n; ++i) {
            long double wi = 1.0L;
            for (int c = 0; c < 2; ++c) {
                wi *= oracle::gauss_kernel((Z(i, c) - z(c)) / (sd(c) * h));
            }
            k[static_cast<std::size_t>(i)] = wi;
            ksum += wi;
        }
        long double mu1[2] = {0.0L, 0.0L};
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < 2; ++c) mu1[c] += k[static_cast<std::size_t>(i)] / ksum * (Z(i, c) - z(c));
        long double S00 = 0, S01 = 0, S11 = 0;
        for (int i = 0; i < n; ++i) {
            const long double d0 = Z(i, 0) - z(0) - mu1[0];
            const long double d1 = Z(i, 1) - z(1) - mu1[1];
            S00 += k[static_cast<std::size_t>(i)] / ksum * d0 * d0;
            S01 += k[static_cast<std::size_t>(i)] / ksum * d0 * d1;
            S11 += k[static_cast<std::size_t>(i)] / ksum * d1 * d1;
        }
        const long double det = S00 * S11 - S01 * S01;
        const long double v0 = (S11 * mu1[0] - S01 * mu1[1]) / det;
        const long double v1 = (-S01 * mu1[0] + S00 * mu1[1]) / det;
        long double pred = 0.0L, wsum = 0.0L;
        std::vector<long double> w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const long double d0 = Z(i, 0) - z(0) - mu1[0];
            const long double d1 = Z(i, 1) - z(1) - mu1[1];
            w[static_cast<std::size_t>(i)] = k[static_cast<std::size_t>(i)] / ksum * (1.0L - (v0 * d0 + v1 * d1));
            wsum += w[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < n; ++i) pred += w[static_cast<std::size_t>(i)] / wsum * ts.Y[static_cast<std::size_t>(i)];
        CHECK(fitted.predict(x, u) == Catch::Approx(static_cast<double>(pred)).margin(1e-10));
    }

    SECTION("bandwidth vector must have p + 1 entries") {
        auto ts = random_scalar_set(rng, 10, 2);
        CHECK_THROWS_AS(
            (LfrPredictor<ScalarSpace, ScalarModifier>(ts, std::vector<double>{0.1, 0.1})),
            DimensionError);
    }

    SECTION("metric modifiers are unsupported") {
        auto ts = quantile_modifier_set(rng, 10);
        CHECK_THROWS_AS((LfrPredictor<ScalarSpace, MetricModifier<WassersteinSpace>>(ts, 0.2)),
                        UnsupportedModifierError);
    }
}

TEST_CASE("partially-global Fréchet regression") {
    const Kernel kernel;
    std::mt19937_64 rng(43);

    SECTION("query at the local mean reduces to the smoothing weights") {
        auto ts = random_scalar_set(rng, 20, 2);
        const WeightScheme scheme{Weighting::LocalConstant, 0.3};
        PfrPredictor<ScalarSpace, ScalarModifier> fitted(ts, scheme, kernel);
        const double u = 0.45;
        const auto s = ts.U.weights_at(u, scheme, kernel);
        Eigen::VectorXd xbar_u = Eigen::VectorXd::Zero(2);
        double ybar_u = 0.0;
        for (int i = 0; i < ts.n(); ++i) {
            xbar_u += s[static_cast<std::size_t>(i)] / ts.n() * ts.X.row(i).transpose();
            ybar_u += s[static_cast<std::size_t>(i)] / ts.n() * ts.Y[static_cast<std::size_t>(i)];
        }
        CHECK(fitted.predict(xbar_u, u) == Catch::Approx(ybar_u).margin(1e-10));
    }

    SECTION("weights sum to one across random queries") {
        auto ts = random_scalar_set(rng, 20, 2);
        for (auto& y : ts.Y) y = 1.0;  // constant response isolates the weight sum
        for (auto kind : {Weighting::LocalConstant, Weighting::LocalLinear}) {
            PfrPredictor<ScalarSpace, ScalarModifier> fitted(ts, {kind, 0.25}, kernel);
            std::normal_distribution<double> normal(0.0, 1.0);
            std::uniform_real_distribution<double> unif(0.1, 0.9);
            for (int rep = 0; rep < 50; ++rep) {
                Eigen::VectorXd x(2);
                x << normal(rng), normal(rng);
                CHECK(fitted.predict(x, unif(rng)) == Catch::Approx(1.0).margin(1e-10));
            }
        }
    }

    SECTION("profiled coefficients match a literal recomputation") {
        auto ts = random_scalar_set(rng, 15, 2);
        const double h = 0.35;
        const WeightScheme scheme{Weighting::LocalConstant, h};
        PfrPredictor<ScalarSpace, ScalarModifier> fitted(ts, scheme, kernel, 0.0);
        const int n = ts.n();

        // long-double Robinson profile: beta = D^{-1} n^{-1} sum xtilde_i (Y_i - ybar_{U_i})
        std::vector<std::vector<long double>> s_rows;
        for (int i = 0; i < n; ++i) {
            s_rows.push_back(oracle::local_constant(ts.U.values, ts.U.values[static_cast<std::size_t>(i)], h));
        }
        std::vector<std::array<long double, 2>> xt(static_cast<std::size_t>(n));
        std::vector<long double> yt(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            long double xb0 = 0, xb1 = 0, yb = 0;
            for (int j = 0; j < n; ++j) {
                xb0 += s_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * ts.X(j, 0) / n;
                xb1 += s_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * ts.X(j, 1) / n;
                yb += s_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * ts.Y[static_cast<std::size_t>(j)] / n;
            }
            xt[static_cast<std::size_t>(i)] = {ts.X(i, 0) - xb0, ts.X(i, 1) - xb1};
            yt[static_cast<std::size_t>(i)] = ts.Y[static_cast<std::size_t>(i)] - yb;
        }
        long double D00 = 0, D01 = 0, D11 = 0, c0 = 0, c1 = 0;
        for (int i = 0; i < n; ++i) {
            D00 += xt[static_cast<std::size_t>(i)][0] * xt[static_cast<std::size_t>(i)][0] / n;
            D01 += xt[static_cast<std::size_t>(i)][0] * xt[static_cast<std::size_t>(i)][1] / n;
            D11 += xt[static_cast<std::size_t>(i)][1] * xt[static_cast<std::size_t>(i)][1] / n;
            c0 += xt[static_cast<std::size_t>(i)][0] * yt[static_cast<std::size_t>(i)] / n;
            c1 += xt[static_cast<std::size_t>(i)][1] * yt[static_cast<std::size_t>(i)] / n;
        }
        const long double det = D00 * D11 - D01 * D01;
        const long double b0 = (D11 * c0 - D01 * c1) / det;
        const long double b1 = (-D01 * c0 + D00 * c1) / det;

        // prediction = ybar_u + (x - xbar_u)^T beta
        const double u = 0.6;
        const auto s = oracle::local_constant(ts.U.values, u, h);
        long double xb0 = 0, xb1 = 0, yb = 0;
        for (int j = 0; j < n; ++j) {
            xb0 += s[static_cast<std::size_t>(j)] * ts.X(j, 0) / n;
            xb1 += s[static_cast<std::size_t>(j)] * ts.X(j, 1) / n;
            yb += s[static_cast<std::size_t>(j)] * ts.Y[static_cast<std::size_t>(j)] / n;
        }
        Eigen::VectorXd x(2);
        x << 0.8, -0.3;
        const long double ref = yb + (0.8L - xb0) * b0 + (-0.3L - xb1) * b1;
        CHECK(fitted.predict(x, u) == Catch::Approx(static_cast<double>(ref)).margin(1e-9));
    }

    SECTION("recovers a partially linear signal") {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        TrainingSet<ScalarSpace, ScalarModifier> ts;
        const int n = 150;
        ts.X.resize(n, 1);
        for (int i = 0; i < n; ++i) {
            ts.X(i, 0) = normal(rng);
            ts.U.values.push_back(unif(rng));
            ts.Y.push_back(std::sin(3.0 * ts.U.values.back()) + 2.0 * ts.X(i, 0) +
                           0.05 * normal(rng));
        }
        PfrPredictor<ScalarSpace, ScalarModifier> fitted(ts, {Weighting::LocalConstant, 0.1},
                                                         kernel);
        Eigen::VectorXd x(1);
        x << 0.5;
        CHECK(fitted.predict(x, 0.5) ==
              Catch::Approx(std::sin(1.5) + 1.0).margin(0.15));
    }

    SECTION("metric modifiers run with metric-ball smoothing") {
        auto ts = quantile_modifier_set(rng, 15);
        PfrPredictor<ScalarSpace, MetricModifier<WassersteinSpace>> fitted(
            ts, {Weighting::MetricBall, 1.0}, kernel);
        Eigen::VectorXd x(1);
        x << 0.0;
        CHECK_NOTHROW(fitted.predict(x, ts.U.values[3]));
    }
}
