#pragma once

#include "fvcm/baselines.hpp"
#include "fvcm/io_util.hpp"
#include "fvcm/kernels.hpp"
#include "fvcm/metric_spaces.hpp"
#include "fvcm/model_selection.hpp"
#include "fvcm/parallel.hpp"
#include "fvcm/training.hpp"
#include "fvcm/vfr.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace fvcm {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double t) {
    return std::sqrt(2.0) * boost::math::erf_inv(2.0 * t - 1.0);
}

/// Deterministic sub-seed derivation so that replications and phases get
/// disjoint, order-independent RNG streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Data-generating configuration for the six simulation designs.
struct DGPConfig {
    int example = 1;
    int n_train = 100;
    int n_test = 1000;
    double gamma2 = 1.0;
    double gamma3 = 1.0;
    std::uint64_t seed = 0;
    int m = 20;  // quantile grid size

    // response constants, shared by all examples
    double mu0 = 1.0, gamma1 = 2.0, sigma0 = 2.0, nu1 = 1.0, nu2 = 2.0;
    // density-modifier constants (examples 2 and 5)
    double mu0u = 0.0, sigma0u = 2.0, gammau = 3.0, nuu = 1.0;
    // SPD constants: matrix size M, Wishart sample count N, drift beta_u and
    // level mu0u_spd of the modifier (examples 3 and 6)
    int M = 2, N = 10;
    double betau = 1.0, mu0u_spd = 2.0;
    // example 6 noise variances for the random mu_u and sigma_u
    double nuu1 = 1.0, nuu2 = 1.0;

    void validate() const {
        if (example < 1 || example > 6) {
            throw ValidationError("DGPConfig: example must be 1..6, got " +
                                  std::to_string(example));
        }
        if (n_train < 1 || n_test < 1) throw ValidationError("DGPConfig: sample sizes must be >= 1");
        if (m < 1) throw ValidationError("DGPConfig: quantile grid size must be >= 1");
        if (M < 1 || N < 1) throw ValidationError("DGPConfig: M and N must be >= 1");
    }
};

/// Per-example constants: example 6 raises the modifier drift and slope.
inline DGPConfig make_dgp_config(int example, int n_train, double gamma2, double gamma3,
                                 std::uint64_t seed, int n_test = 1000, int m = 20) {
    DGPConfig cfg;
    cfg.example = example;
    cfg.n_train = n_train;
    cfg.n_test = n_test;
    cfg.gamma2 = gamma2;
    cfg.gamma3 = gamma3;
    cfg.seed = seed;
    cfg.m = m;
    if (example == 6) {
        cfg.betau = 4.0;
        cfg.gammau = 4.0;
    }
    cfg.validate();
    return cfg;
}

template <class Space, class Modifier>
struct SimulatedDataset {
    TrainingSet<Space, Modifier> train;
    TrainingSet<Space, Modifier> test;
    // noiseless regression-function values at the test points
    std::vector<typename Space::Point> truth;
};

namespace detail {

// sigma-terms feed Gamma(shape = s^2/nu, scale = nu/s); the effective value
// must be positive when the linear term goes negative. Folding by absolute
// value keeps the Gamma well-spread (a floor alone would concentrate it at
// zero with a heavy rare tail); the 1e-3 floor guards the measure-zero
// neighbourhood of sign change.
inline double clamp_sigma(double v) { return std::max(std::abs(v), 1e-3); }

inline double draw_normal(std::mt19937_64& rng, double mean, double variance) {
    if (variance <= 0.0) return mean;
    std::normal_distribution<double> dist(mean, std::sqrt(variance));
    return dist(rng);
}

inline double draw_gamma_mean_sigma(std::mt19937_64& rng, double sigma_term, double nu) {
    const double s = clamp_sigma(sigma_term);
    if (nu <= 0.0) return s;
    std::gamma_distribution<double> dist(s * s / nu, nu / s);
    return dist(rng);
}

/// Raw predictors: rows of S are AR(1) Gaussians with lag correlation 0.5
/// (the recursion is the Cholesky factor of the 0.5^{|j-j'|} covariance);
/// T = Phi(S_4) is uniform.
inline void draw_predictors(std::mt19937_64& rng, Eigen::VectorXd& s_row, double& t) {
    std::normal_distribution<double> std_normal(0.0, 1.0);
    s_row.resize(4);
    s_row(0) = std_normal(rng);
    const double resid = std::sqrt(0.75);
    for (int j = 1; j < 4; ++j) s_row(j) = 0.5 * s_row(j - 1) + resid * std_normal(rng);
    t = normal_cdf(s_row(3));
}

inline Eigen::MatrixXd strict_upper_ones(int M) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = i + 1; j < M; ++j) v(i, j) = 1.0;
    return v;
}

inline Eigen::MatrixXd draw_wishart_scatter(std::mt19937_64& rng, int M, int N) {
    std::normal_distribution<double> std_normal(0.0, 1.0);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(M, M);
    Eigen::VectorXd z(M);
    for (int k = 0; k < N; ++k) {
        for (int j = 0; j < M; ++j) z(j) = std_normal(rng);
        w += z * z.transpose();
    }
    return w / static_cast<double>(N);
}

struct ResponseTerms {
    double mu_term;
    double sigma_term;  // unclamped
};

inline ResponseTerms response_terms(const DGPConfig& cfg, const Eigen::VectorXd& x, double t) {
    ResponseTerms r;
    r.mu_term = cfg.mu0 + cfg.gamma1 * t * x(0) + cfg.gamma2 * t * t * x(1);
    r.sigma_term = cfg.sigma0 + cfg.gamma3 * std::sin(M_PI * t) * x(2);
    return r;
}

inline QuantileFunction quantile_response(const DGPConfig& cfg, std::mt19937_64& rng,
                                          const ResponseTerms& terms,
                                          const std::vector<double>& grid) {
    const double mu = draw_normal(rng, terms.mu_term, cfg.nu1);
    const double sigma = draw_gamma_mean_sigma(rng, terms.sigma_term, cfg.nu2);
    std::vector<double> vals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) vals[k] = mu + sigma * normal_quantile(grid[k]);
    return QuantileFunction(std::move(vals));
}

inline QuantileFunction quantile_truth(const ResponseTerms& terms,
                                       const std::vector<double>& grid) {
    const double s = clamp_sigma(terms.sigma_term);
    std::vector<double> vals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        vals[k] = terms.mu_term + s * normal_quantile(grid[k]);
    }
    return QuantileFunction(std::move(vals));
}

inline SPDPoint spd_response(const DGPConfig& cfg, std::mt19937_64& rng,
                             const ResponseTerms& terms, const Eigen::MatrixXd& V) {
    const double mu = draw_normal(rng, terms.mu_term, cfg.nu1);
    const double sigma = draw_gamma_mean_sigma(rng, terms.sigma_term, cfg.nu2);
    const Eigen::MatrixXd B =
        (mu + sigma) * Eigen::MatrixXd::Identity(cfg.M, cfg.M) + sigma * V;
    const Eigen::MatrixXd W = draw_wishart_scatter(rng, cfg.M, cfg.N);
    Eigen::MatrixXd y = B.transpose() * W * B;
    return SPDPoint(0.5 * (y + y.transpose()));
}

inline SPDPoint spd_truth(const DGPConfig& cfg, const ResponseTerms& terms,
                          const Eigen::MatrixXd& V) {
    const double s = clamp_sigma(terms.sigma_term);
    const Eigen::MatrixXd eb =
        (terms.mu_term + s) * Eigen::MatrixXd::Identity(cfg.M, cfg.M) + s * V;
    Eigen::MatrixXd y = eb.transpose() * eb;
    return SPDPoint(0.5 * (y + y.transpose()));
}

inline QuantileFunction quantile_modifier(const DGPConfig& cfg, std::mt19937_64& rng, double t,
                                          const std::vector<double>& grid) {
    const double sigma_u = draw_gamma_mean_sigma(rng, cfg.sigma0u + cfg.gammau * t, cfg.nuu);
    std::vector<double> vals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        vals[k] = cfg.mu0u + sigma_u * normal_quantile(grid[k]);
    }
    return QuantileFunction(std::move(vals));
}

inline SPDPoint spd_modifier(const DGPConfig& cfg, std::mt19937_64& rng, double t,
                             const Eigen::MatrixXd& V) {
    double mu_u = cfg.mu0u_spd + cfg.betau * t;
    double nu_gamma = cfg.nuu;
    if (cfg.example == 6) {
        mu_u = draw_normal(rng, cfg.mu0u_spd + cfg.betau * t, cfg.nuu1);
        nu_gamma = cfg.nuu2;
    }
    const double sigma_u = draw_gamma_mean_sigma(rng, cfg.sigma0u + cfg.gammau * t, nu_gamma);
    const Eigen::MatrixXd A =
        (mu_u + sigma_u) * Eigen::MatrixXd::Identity(cfg.M, cfg.M) + sigma_u * V;
    const Eigen::MatrixXd W = draw_wishart_scatter(rng, cfg.M, cfg.N);
    Eigen::MatrixXd u = A.transpose() * W * A;
    return SPDPoint(0.5 * (u + u.transpose()));
}

template <class Space, class Modifier>
void gen_block(const DGPConfig& cfg, int count, std::uint64_t stream_seed,
               TrainingSet<Space, Modifier>& out, std::vector<typename Space::Point>* truth) {
    std::mt19937_64 rng(stream_seed);
    const std::vector<double> grid = quantile_grid(cfg.m);
    const Eigen::MatrixXd V = strict_upper_ones(cfg.M);

    out.X.resize(count, 3);
    out.Y.clear();
    out.Y.reserve(static_cast<std::size_t>(count));
    out.U.values.clear();
    out.U.values.reserve(static_cast<std::size_t>(count));
    if (truth) {
        truth->clear();
        truth->reserve(static_cast<std::size_t>(count));
    }

    Eigen::VectorXd s_row;
    for (int i = 0; i < count; ++i) {
        double t = 0.0;
        draw_predictors(rng, s_row, t);
        out.X.row(i) = s_row.head(3).transpose();

        if constexpr (is_scalar_modifier_v<Modifier>) {
            out.U.values.push_back(t);
        } else if constexpr (std::is_same_v<Modifier, MetricModifier<WassersteinSpace>>) {
            out.U.values.push_back(quantile_modifier(cfg, rng, t, grid));
        } else {
            out.U.values.push_back(spd_modifier(cfg, rng, t, V));
        }

        const ResponseTerms terms = response_terms(cfg, s_row.head(3), t);
        if constexpr (std::is_same_v<Space, WassersteinSpace>) {
            out.Y.push_back(quantile_response(cfg, rng, terms, grid));
            if (truth) truth->push_back(quantile_truth(terms, grid));
        } else {
            out.Y.push_back(spd_response(cfg, rng, terms, V));
            if (truth) truth->push_back(spd_truth(cfg, terms, V));
        }
    }
}

template <class Space, class Modifier>
SimulatedDataset<Space, Modifier> gen_dataset(const DGPConfig& cfg) {
    cfg.validate();
    SimulatedDataset<Space, Modifier> data;
    gen_block(cfg, cfg.n_train, mix_seed(cfg.seed, 1), data.train, nullptr);
    gen_block(cfg, cfg.n_test, mix_seed(cfg.seed, 2), data.test, &data.truth);
    return data;
}

}  // namespace detail

/// Raw predictor draw shared by all examples: S is n x 4 with the AR(1)
/// covariance 0.5^{|j-j'|}; T = Phi(S_4).
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> gen_predictors(int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("gen_predictors: n must be >= 1");
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd S(n, 4);
    Eigen::VectorXd T(n);
    Eigen::VectorXd row;
    for (int i = 0; i < n; ++i) {
        double t = 0.0;
        detail::draw_predictors(rng, row, t);
        S.row(i) = row.transpose();
        T(i) = t;
    }
    return {S, T};
}

inline SimulatedDataset<WassersteinSpace, ScalarModifier> gen_example1(const DGPConfig& cfg) {
    return detail::gen_dataset<WassersteinSpace, ScalarModifier>(cfg);
}
inline SimulatedDataset<WassersteinSpace, MetricModifier<WassersteinSpace>> gen_example2(
    const DGPConfig& cfg) {
    return detail::gen_dataset<WassersteinSpace, MetricModifier<WassersteinSpace>>(cfg);
}
inline SimulatedDataset<WassersteinSpace, MetricModifier<CholeskySpace>> gen_example3(
    const DGPConfig& cfg) {
    return detail::gen_dataset<WassersteinSpace, MetricModifier<CholeskySpace>>(cfg);
}
inline SimulatedDataset<CholeskySpace, ScalarModifier> gen_example4(const DGPConfig& cfg) {
    return detail::gen_dataset<CholeskySpace, ScalarModifier>(cfg);
}
inline SimulatedDataset<CholeskySpace, MetricModifier<WassersteinSpace>> gen_example5(
    const DGPConfig& cfg) {
    return detail::gen_dataset<CholeskySpace, MetricModifier<WassersteinSpace>>(cfg);
}
inline SimulatedDataset<CholeskySpace, MetricModifier<CholeskySpace>> gen_example6(
    const DGPConfig& cfg) {
    return detail::gen_dataset<CholeskySpace, MetricModifier<CholeskySpace>>(cfg);
}

/// Calls f with the simulated dataset of the example's concrete type.
template <class F>
auto visit_example(const DGPConfig& cfg, F&& f) {
    cfg.validate();
    switch (cfg.example) {
        case 1: return f(gen_example1(cfg));
        case 2: return f(gen_example2(cfg));
        case 3: return f(gen_example3(cfg));
        case 4: return f(gen_example4(cfg));
        case 5: return f(gen_example5(cfg));
        case 6: return f(gen_example6(cfg));
    }
    throw ValidationError("visit_example: example must be 1..6");
}

struct BenchmarkConfig {
    int example = 1;
    std::vector<int> n_train = {200};
    double gamma2 = 1.0;
    double gamma3 = 1.0;
    std::vector<Method> methods = {Method::Gfr, Method::Lfr, Method::Pfr, Method::Vfr};
    int reps = 50;
    std::uint64_t seed = 0;
    int n_test = 1000;
    int m = 20;
    std::vector<double> grid = default_bandwidth_grid();
    int folds = 10;
    Weighting vfr_weighting = Weighting::LocalConstant;  // for scalar modifiers
    std::optional<double> ridge;
    int threads = 1;
};

struct BenchmarkCell {
    int example = 0;
    Method method = Method::Vfr;
    int n = 0;
    double gamma2 = 0.0, gamma3 = 0.0;
    int reps = 0;
    bool applicable = true;
    double mean_gmse = 0.0;
    double se_gmse = 0.0;
    int failures = 0;
};

namespace detail {

template <class Space, class Modifier>
double evaluate_method(const SimulatedDataset<Space, Modifier>& data, Method method,
                       const BenchmarkConfig& cfg, std::uint64_t cv_seed) {
    const Kernel kernel;
    CVConfig cv;
    cv.grid = cfg.grid;
    cv.folds = cfg.folds;
    cv.seed = cv_seed;
    cv.scale_grid_to_modifier = !is_scalar_modifier_v<Modifier>;

    switch (method) {
        case Method::Gfr: {
            GfrPredictor<Space, Modifier> fitted(data.train, cfg.ridge);
            return gmse(fitted, data.test);
        }
        case Method::Lfr: {
            auto make = [&](const TrainingSet<Space, Modifier>& tr, double h) {
                return LfrPredictor<Space, Modifier>(tr, h, kernel);
            };
            const CVResult cvres = select_bandwidth(data.train, make, cv);
            LfrPredictor<Space, Modifier> fitted(data.train, cvres.chosen_bandwidth, kernel);
            return gmse(fitted, data.test);
        }
        case Method::Pfr: {
            const Weighting kind =
                is_scalar_modifier_v<Modifier> ? Weighting::LocalLinear : Weighting::MetricBall;
            auto make = [&](const TrainingSet<Space, Modifier>& tr, double h) {
                return PfrPredictor<Space, Modifier>(tr, {kind, h}, kernel, cfg.ridge);
            };
            const CVResult cvres = select_bandwidth(data.train, make, cv);
            PfrPredictor<Space, Modifier> fitted(data.train, {kind, cvres.chosen_bandwidth},
                                                 kernel, cfg.ridge);
            return gmse(fitted, data.test);
        }
        case Method::Vfr: {
            const Weighting kind =
                is_scalar_modifier_v<Modifier> ? cfg.vfr_weighting : Weighting::MetricBall;
            auto make = [&](const TrainingSet<Space, Modifier>& tr, double h) {
                return VfrPredictor<Space, Modifier>(tr, {kind, h}, kernel, cfg.ridge);
            };
            const CVResult cvres = select_bandwidth(data.train, make, cv);
            VfrPredictor<Space, Modifier> fitted(data.train, {kind, cvres.chosen_bandwidth},
                                                 kernel, cfg.ridge);
            return gmse(fitted, data.test);
        }
    }
    throw ValidationError("evaluate_method: unknown method");
}

}  // namespace detail

/// Monte-Carlo comparison of the regression methods on one simulation
/// design: fresh train/test draw per replication, per-method bandwidth
/// selection, GMSE on the test sample. Deterministic given the seed,
/// independent of the thread count.
inline std::vector<BenchmarkCell> run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.reps < 1) throw ValidationError("run_benchmark: reps must be >= 1");
    if (cfg.methods.empty()) throw ValidationError("run_benchmark: no methods requested");
    if (cfg.n_train.empty()) throw ValidationError("run_benchmark: no training sizes requested");

    const bool scalar_modifier = (cfg.example == 1 || cfg.example == 4);
    std::vector<BenchmarkCell> cells;

    for (std::size_t ni = 0; ni < cfg.n_train.size(); ++ni) {
        const int n = cfg.n_train[ni];
        const std::size_t n_methods = cfg.methods.size();
        // results[method][rep]; NaN marks a failed replication
        std::vector<std::vector<double>> results(
            n_methods, std::vector<double>(static_cast<std::size_t>(cfg.reps),
                                           std::numeric_limits<double>::quiet_NaN()));

        parallel_for(cfg.reps, cfg.threads, [&](int rep) {
            DGPConfig dgp = make_dgp_config(cfg.example, n, cfg.gamma2, cfg.gamma3,
                                            mix_seed(cfg.seed, 1000 * ni + static_cast<std::size_t>(rep)),
                                            cfg.n_test, cfg.m);
            visit_example(dgp, [&](const auto& data) {
                for (std::size_t mi = 0; mi < n_methods; ++mi) {
                    const Method method = cfg.methods[mi];
                    if ((method == Method::Gfr || method == Method::Lfr) && !scalar_modifier) {
                        continue;  // recorded as not-applicable below
                    }
                    try {
                        results[mi][static_cast<std::size_t>(rep)] = detail::evaluate_method(
                            data, method, cfg, mix_seed(dgp.seed, 17 + mi));
                    } catch (const NumericError&) {
                        // failed replication; stays NaN and is counted
                    }
                }
            });
        });

        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            BenchmarkCell cell;
            cell.example = cfg.example;
            cell.method = cfg.methods[mi];
            cell.n = n;
            cell.gamma2 = cfg.gamma2;
            cell.gamma3 = cfg.gamma3;
            cell.reps = cfg.reps;
            cell.applicable =
                scalar_modifier || (cell.method != Method::Gfr && cell.method != Method::Lfr);
            if (cell.applicable) {
                double sum = 0.0;
                int count = 0;
                for (double v : results[mi]) {
                    if (std::isnan(v)) continue;
                    sum += v;
                    ++count;
                }
                cell.failures = cfg.reps - count;
                if (count == 0) {
                    cell.mean_gmse = std::numeric_limits<double>::quiet_NaN();
                    cell.se_gmse = std::numeric_limits<double>::quiet_NaN();
                } else {
                    cell.mean_gmse = sum / count;
                    double ss = 0.0;
                    for (double v : results[mi]) {
                        if (std::isnan(v)) continue;
                        ss += (v - cell.mean_gmse) * (v - cell.mean_gmse);
                    }
                    cell.se_gmse = count > 1 ? std::sqrt(ss / (count - 1) / count) : 0.0;
                }
            } else {
                cell.failures = 0;
                cell.mean_gmse = std::numeric_limits<double>::quiet_NaN();
                cell.se_gmse = std::numeric_limits<double>::quiet_NaN();
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

inline void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkCell>& cells) {
    os << "example,method,n,gamma2,gamma3,reps,mean_gmse,se_gmse,failures\n";
    for (const auto& c : cells) {
        os << c.example << ',' << to_string(c.method) << ',' << c.n << ','
           << format_double(c.gamma2) << ',' << format_double(c.gamma3) << ',' << c.reps << ',';
        if (!c.applicable || std::isnan(c.mean_gmse)) {
            os << "na,na,";
        } else {
            os << format_double(c.mean_gmse) << ',' << format_double(c.se_gmse) << ',';
        }
        os << c.failures << '\n';
    }
}

inline void print_benchmark_table(std::ostream& os, const std::vector<BenchmarkCell>& cells) {
    if (cells.empty()) return;
    os << "example " << cells.front().example << ", (gamma2, gamma3) = ("
       << format_double(cells.front().gamma2) << ", " << format_double(cells.front().gamma3)
       << "), " << cells.front().reps << " replications\n";
    os << std::left << std::setw(8) << "method" << std::right << std::setw(6) << "n"
       << std::setw(14) << "mean_gmse" << std::setw(12) << "se" << std::setw(10) << "failures"
       << '\n';
    for (const auto& c : cells) {
        os << std::left << std::setw(8) << to_string(c.method) << std::right << std::setw(6)
           << c.n;
        if (!c.applicable) {
            os << std::setw(14) << "--" << std::setw(12) << "--";
        } else if (std::isnan(c.mean_gmse)) {
            os << std::setw(14) << "failed" << std::setw(12) << "--";
        } else {
            os << std::setw(14) << std::fixed << std::setprecision(3) << c.mean_gmse
               << std::setw(12) << c.se_gmse;
            os.unsetf(std::ios_base::floatfield);
        }
        os << std::setw(10) << c.failures << '\n';
    }
}

}  // namespace fvcm
