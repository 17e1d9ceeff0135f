#pragma once

// Independent reference implementations used as test oracles. Everything in
// here re-derives values from first principles (literal formula evaluation in
// long double, exhaustive search, partition enumeration) and stays clear of
// the library's own computation paths.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace oracle {

inline long double gauss_kernel(long double v) {
    const long double inv_sqrt_2pi = 0.398942280401432677939946L;
    return inv_sqrt_2pi * std::exp(-0.5L * v * v);
}

inline long double gauss_kernel_scaled(long double v, long double h) {
    return gauss_kernel(v / h) / h;
}

inline std::vector<long double> local_constant(std::span<const double> u, double q, double h) {
    const std::size_t n = u.size();
    std::vector<long double> k(n);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = gauss_kernel_scaled(static_cast<long double>(u[i]) - q, h);
        sum += k[i];
    }
    const long double denom = sum / static_cast<long double>(n);
    for (auto& v : k) v /= denom;
    return k;
}

inline std::vector<long double> local_linear(std::span<const double> u, double q, double h) {
    const std::size_t n = u.size();
    long double mu0 = 0.0L, mu1 = 0.0L, mu2 = 0.0L;
    std::vector<long double> k(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = static_cast<long double>(u[i]) - q;
        k[i] = gauss_kernel_scaled(d[i], h);
        mu0 += k[i];
        mu1 += k[i] * d[i];
        mu2 += k[i] * d[i] * d[i];
    }
    mu0 /= n;
    mu1 /= n;
    mu2 /= n;
    std::vector<long double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = k[i] * (mu2 - mu1 * d[i]) / (mu0 * mu2 - mu1 * mu1);
    }
    return s;
}

inline std::vector<long double> metric_ball(std::span<const double> dist, double h) {
    const std::size_t n = dist.size();
    std::vector<long double> k(n);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = gauss_kernel_scaled(dist[i], h);
        sum += k[i];
    }
    const long double denom = sum / static_cast<long double>(n);
    for (auto& v : k) v /= denom;
    return k;
}

/// Literal term-by-term evaluation of the prediction-weight formula,
/// including the inner Kronecker-delta sum, in long double. The inverse of
/// the ridged local covariance is taken by Gauss-Jordan elimination.
inline std::vector<long double> cj_literal(const Eigen::MatrixXd& X,
                                           std::span<const long double> s,
                                           const Eigen::VectorXd& x, double ridge) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    const long double dn = n;

    std::vector<long double> xbar(static_cast<std::size_t>(p), 0.0L);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < p; ++c)
            xbar[static_cast<std::size_t>(c)] += s[static_cast<std::size_t>(i)] * X(i, c) / dn;

    std::vector<std::vector<long double>> sigma(
        static_cast<std::size_t>(p), std::vector<long double>(static_cast<std::size_t>(p), 0.0L));
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b)
                sigma[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +=
                    s[static_cast<std::size_t>(i)] *
                    (X(i, a) - xbar[static_cast<std::size_t>(a)]) *
                    (X(i, b) - xbar[static_cast<std::size_t>(b)]) / dn;
    }
    for (int a = 0; a < p; ++a) sigma[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] += ridge;

    // Gauss-Jordan inverse
    std::vector<std::vector<long double>> inv(
        static_cast<std::size_t>(p), std::vector<long double>(static_cast<std::size_t>(p), 0.0L));
    for (int a = 0; a < p; ++a) inv[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = 1.0L;
    auto A = sigma;
    for (int col = 0; col < p; ++col) {
        int piv = col;
        for (int r = col + 1; r < p; ++r) {
            if (std::fabs((double)A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::fabs((double)A[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)]))
                piv = r;
        }
        std::swap(A[static_cast<std::size_t>(col)], A[static_cast<std::size_t>(piv)]);
        std::swap(inv[static_cast<std::size_t>(col)], inv[static_cast<std::size_t>(piv)]);
        const long double diag = A[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        for (int c = 0; c < p; ++c) {
            A[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)] /= diag;
            inv[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)] /= diag;
        }
        for (int r = 0; r < p; ++r) {
            if (r == col) continue;
            const long double f = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
            for (int c = 0; c < p; ++c) {
                A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    f * A[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
                inv[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    f * inv[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
            }
        }
    }

    std::vector<long double> vl(static_cast<std::size_t>(p), 0.0L);  // (x - xbar)^T Sigma^{-1}
    for (int c = 0; c < p; ++c) {
        for (int a = 0; a < p; ++a) {
            vl[static_cast<std::size_t>(c)] += (x(a) - xbar[static_cast<std::size_t>(a)]) *
                                               inv[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
        }
    }

    std::vector<long double> cj(static_cast<std::size_t>(n), 0.0L);
    for (int j = 0; j < n; ++j) {
        long double val = s[static_cast<std::size_t>(j)] / dn;
        for (int a = 0; a < p; ++a) {
            long double inner = 0.0L;
            for (int i = 0; i < n; ++i) {
                const long double delta = (i == j) ? 1.0L : 0.0L;
                inner += (s[static_cast<std::size_t>(i)] / dn) *
                         (X(i, a) - xbar[static_cast<std::size_t>(a)]) *
                         (delta - s[static_cast<std::size_t>(j)] / dn);
            }
            val += vl[static_cast<std::size_t>(a)] * inner;
        }
        cj[static_cast<std::size_t>(j)] = val;
    }
    return cj;
}

/// Ordinary least squares prediction with intercept, via long-double normal
/// equations and Gauss-Jordan elimination.
inline double ols_predict(const Eigen::MatrixXd& Z, const std::vector<double>& y,
                          const Eigen::VectorXd& z) {
    const int n = static_cast<int>(Z.rows());
    const int q = static_cast<int>(Z.cols());
    const int d = q + 1;  // intercept first
    std::vector<std::vector<long double>> A(
        static_cast<std::size_t>(d), std::vector<long double>(static_cast<std::size_t>(d + 1), 0.0L));
    auto design = [&](int i, int c) -> long double { return c == 0 ? 1.0L : Z(i, c - 1); };
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) A[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += design(i, a) * design(i, b);
            A[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)] += design(i, a) * y[static_cast<std::size_t>(i)];
        }
    }
    for (int col = 0; col < d; ++col) {
        int piv = col;
        for (int r = col + 1; r < d; ++r) {
            if (std::fabs((double)A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::fabs((double)A[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)]))
                piv = r;
        }
        std::swap(A[static_cast<std::size_t>(col)], A[static_cast<std::size_t>(piv)]);
        for (int r = 0; r < d; ++r) {
            if (r == col) continue;
            const long double f = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] /
                                  A[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int c = col; c <= d; ++c)
                A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    f * A[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
        }
    }
    long double pred = A[0][static_cast<std::size_t>(d)] / A[0][0];
    for (int c = 0; c < q; ++c) {
        pred += z(c) * A[static_cast<std::size_t>(c + 1)][static_cast<std::size_t>(d)] /
                A[static_cast<std::size_t>(c + 1)][static_cast<std::size_t>(c + 1)];
    }
    return static_cast<double>(pred);
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix in long double.
/// Returns eigenvalues (ascending) and eigenvectors as columns.
inline void jacobi_eigen(std::vector<std::vector<long double>> A,
                         std::vector<long double>& eigenvalues,
                         std::vector<std::vector<long double>>& eigenvectors) {
    const std::size_t n = A.size();
    eigenvectors.assign(n, std::vector<long double>(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i) eigenvectors[i][i] = 1.0L;
    for (int sweep = 0; sweep < 100; ++sweep) {
        long double off = 0.0L;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += A[i][j] * A[i][j];
        if (off < 1e-36L) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs((double)A[p][q]) < 1e-300) continue;
                const long double theta = (A[q][q] - A[p][p]) / (2.0L * A[p][q]);
                const long double t = (theta >= 0 ? 1.0L : -1.0L) /
                                      (std::fabs((double)theta) +
                                       std::sqrt((double)(theta * theta + 1.0L)));
                const long double c = 1.0L / std::sqrt((double)(t * t + 1.0L));
                const long double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const long double akp = A[k][p], akq = A[k][q];
                    A[k][p] = c * akp - s * akq;
                    A[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const long double apk = A[p][k], aqk = A[q][k];
                    A[p][k] = c * apk - s * aqk;
                    A[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const long double vkp = eigenvectors[k][p], vkq = eigenvectors[k][q];
                    eigenvectors[k][p] = c * vkp - s * vkq;
                    eigenvectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = A[i][i];
}

/// Symmetric PSD square root via the Jacobi route (independent of Eigen).
inline Eigen::MatrixXd spd_sqrt_jacobi(const Eigen::MatrixXd& m) {
    const std::size_t n = static_cast<std::size_t>(m.rows());
    std::vector<std::vector<long double>> A(n, std::vector<long double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A[i][j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    std::vector<long double> lam;
    std::vector<std::vector<long double>> V;
    jacobi_eigen(std::move(A), lam, V);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
    for (std::size_t k = 0; k < n; ++k) {
        const long double sq = lam[k] > 0.0L ? std::sqrt((double)lam[k]) : 0.0L;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
                    static_cast<double>(sq * V[i][k] * V[j][k]);
    }
    return out;
}

/// Exact isotonic projection by enumerating all 2^{n-1} consecutive-block
/// partitions and keeping the feasible one with the least squared error.
inline std::vector<double> isotonic_by_partition(std::span<const double> v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> best;
    double best_obj = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
        std::vector<double> fit(static_cast<std::size_t>(n));
        double prev_mean = -std::numeric_limits<double>::infinity();
        bool feasible = true;
        int start = 0;
        double obj = 0.0;
        for (int i = 0; i < n; ++i) {
            const bool boundary = (i == n - 1) || (mask & (1u << i));
            if (!boundary) continue;
            double block_sum = 0.0;
            for (int k = start; k <= i; ++k) block_sum += v[static_cast<std::size_t>(k)];
            const double mean = block_sum / (i - start + 1);
            if (mean < prev_mean) {
                feasible = false;
                break;
            }
            for (int k = start; k <= i; ++k) {
                fit[static_cast<std::size_t>(k)] = mean;
                obj += (v[static_cast<std::size_t>(k)] - mean) * (v[static_cast<std::size_t>(k)] - mean);
            }
            prev_mean = mean;
            start = i + 1;
        }
        if (feasible && obj < best_obj) {
            best_obj = obj;
            best = fit;
        }
    }
    return best;
}

/// Enumerates monotone m-tuples over a value grid and returns the one that
/// minimises sum_j w_j * meansq(candidate - y_j).
struct QuantileGridSearch {
    std::vector<double> best;
    double best_objective = std::numeric_limits<double>::infinity();
    double resolution = 0.0;
};

inline void quantile_grid_recurse(const std::vector<std::vector<double>>& points,
                                  std::span<const double> w, const std::vector<double>& grid,
                                  std::vector<double>& candidate, std::size_t pos,
                                  std::size_t min_idx, QuantileGridSearch& out) {
    const std::size_t m = points.front().size();
    if (pos == m) {
        double obj = 0.0;
        for (std::size_t j = 0; j < points.size(); ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const double d = candidate[k] - points[j][k];
                d2 += d * d;
            }
            obj += w[j] * d2 / static_cast<double>(m);
        }
        if (obj < out.best_objective) {
            out.best_objective = obj;
            out.best = candidate;
        }
        return;
    }
    for (std::size_t g = min_idx; g < grid.size(); ++g) {
        candidate[pos] = grid[g];
        quantile_grid_recurse(points, w, grid, candidate, pos + 1, g, out);
    }
}

inline QuantileGridSearch quantile_mean_grid_search(const std::vector<std::vector<double>>& points,
                                                    std::span<const double> w, int grid_size) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& pt : points)
        for (double v : pt) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double pad = 0.5 * (hi - lo) + 1.0;
    lo -= pad;
    hi += pad;
    std::vector<double> grid(static_cast<std::size_t>(grid_size));
    for (int g = 0; g < grid_size; ++g) {
        grid[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (grid_size - 1);
    }
    QuantileGridSearch out;
    out.resolution = (hi - lo) / (grid_size - 1);
    std::vector<double> candidate(points.front().size());
    quantile_grid_recurse(points, w, grid, candidate, 0, 0, out);
    return out;
}

/// Brute-force search for the 2x2 SPD Fréchet mean under the square-root
/// metric: scans symmetric PSD square-root candidates R = [[a,b],[b,c]] and
/// minimises sum_j w_j ||sqrt_j - R||_F^2.
struct SpdGridSearch {
    Eigen::MatrixXd best_sqrt;
    double best_objective = std::numeric_limits<double>::infinity();
    double resolution = 0.0;
};

inline SpdGridSearch spd_mean_grid_search(const std::vector<Eigen::MatrixXd>& sqrts,
                                          std::span<const double> w, int grid_size) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : sqrts) {
        lo = std::min(lo, s.minCoeff());
        hi = std::max(hi, s.maxCoeff());
    }
    const double pad = 0.5 * (hi - lo) + 0.5;
    lo -= pad;
    hi += pad;
    SpdGridSearch out;
    out.resolution = (hi - lo) / (grid_size - 1);
    Eigen::MatrixXd r(2, 2);
    for (int ia = 0; ia < grid_size; ++ia) {
        for (int ib = 0; ib < grid_size; ++ib) {
            for (int ic = 0; ic < grid_size; ++ic) {
                const double a = lo + (hi - lo) * ia / (grid_size - 1);
                const double b = lo + (hi - lo) * ib / (grid_size - 1);
                const double c = lo + (hi - lo) * ic / (grid_size - 1);
                // PSD check for a symmetric 2x2
                if (a < 0.0 || c < 0.0 || a * c - b * b < 0.0) continue;
                r << a, b, b, c;
                double obj = 0.0;
                for (std::size_t j = 0; j < sqrts.size(); ++j) {
                    obj += w[j] * (sqrts[j] - r).squaredNorm();
                }
                if (obj < out.best_objective) {
                    out.best_objective = obj;
                    out.best_sqrt = r;
                }
            }
        }
    }
    return out;
}

/// Random SPD matrix with eigenvalues in [lo, hi].
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int dim, double lo, double hi) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ();
    std::uniform_real_distribution<double> unif(lo, hi);
    Eigen::VectorXd lam(dim);
    for (int i = 0; i < dim; ++i) lam(i) = unif(rng);
    Eigen::MatrixXd m = q * lam.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
}

}  // namespace oracle
