#include "carnot/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "carnot/errors.hpp"
#include "carnot/parallel.hpp"
#include "carnot/rng.hpp"

namespace carnot::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_survival(double x) {
    if (x <= 0.0) {
        return 1.0;
    }
    if (x < 0.3) {
        // Series below converges slowly here; the survival is 1 to double precision.
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) {
            break;
        }
    }
    return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_test_normal(std::span<const double> samples, double variance) {
    if (samples.empty() || !(variance > 0.0)) {
        throw ParameterError("ks_test_normal: need samples and positive variance");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double sd = std::sqrt(variance);
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = normal_cdf(sorted[i] / sd);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    // Stephens' small-sample correction.
    const double root = std::sqrt(n);
    return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

ColumnMoments::ColumnMoments(const std::vector<std::vector<double>>& columns)
    : n_(columns.empty() ? 0 : columns.front().size()), k_(columns.size()) {
    means_.resize(k_);
    cov_.assign(k_ * k_, 0.0);
    if (n_ == 0) {
        return;
    }
    for (std::size_t i = 0; i < k_; ++i) {
        if (columns[i].size() != n_) {
            throw StructuralError("ColumnMoments: columns differ in length");
        }
        means_[i] = pairwise_sum(columns[i]) / static_cast<double>(n_);
    }
    std::vector<double> prod(n_);
    for (std::size_t i = 0; i < k_; ++i) {
        for (std::size_t j = i; j < k_; ++j) {
            for (std::size_t s = 0; s < n_; ++s) {
                prod[s] = (columns[i][s] - means_[i]) * (columns[j][s] - means_[j]);
            }
            const double c = n_ > 1 ? pairwise_sum(prod) / static_cast<double>(n_ - 1) : 0.0;
            cov_[i * k_ + j] = c;
            cov_[j * k_ + i] = c;
        }
    }
}

double ColumnMoments::delta_stderr(std::span<const double> g) const {
    if (n_ == 0) {
        return 0.0;
    }
    double var = 0.0;
    for (std::size_t i = 0; i < k_; ++i) {
        for (std::size_t j = 0; j < k_; ++j) {
            var += g[i] * cov_[i * k_ + j] * g[j];
        }
    }
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n_));
}

double ColumnMoments::stderr_of_mean(std::size_t i) const {
    return n_ == 0 ? 0.0 : std::sqrt(std::max(cov_[i * k_ + i], 0.0) / static_cast<double>(n_));
}

double top_share(std::span<const double> values, double top_fraction) {
    if (values.empty()) {
        return 0.0;
    }
    std::vector<double> mags(values.size());
    std::transform(values.begin(), values.end(), mags.begin(), [](double v) { return std::abs(v); });
    const auto top = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(top_fraction * mags.size())));
    std::nth_element(mags.begin(), mags.begin() + (top - 1), mags.end(), std::greater<>());
    const double total = pairwise_sum(mags);
    if (total == 0.0) {
        return 0.0;
    }
    return pairwise_sum(std::span<const double>(mags).first(top)) / total;
}

EnergyTest energy_distance_test(std::span<const double> a, std::span<const double> b, std::size_t dim,
                                int permutations, std::uint64_t seed) {
    const std::size_t na = a.size() / dim;
    const std::size_t nb = b.size() / dim;
    const std::size_t n = na + nb;
    if (na < 2 || nb < 2) {
        throw ParameterError("energy_distance_test: need at least two points per sample");
    }
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> dist(n * n, 0.0);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    const double d = pooled[i * dim + c] - pooled[j * dim + c];
                    s += d * d;
                }
                dist[i * n + j] = std::sqrt(s);
            }
        }
    });

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    auto statistic = [&](const std::vector<std::size_t>& p) {
        double xy = 0.0;
        double xx = 0.0;
        double yy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_a = i < na;
            const double* row = &dist[p[i] * n];
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = row[p[j]];
                const bool j_a = j < na;
                if (in_a && j_a) {
                    xx += d;
                } else if (!in_a && !j_a) {
                    yy += d;
                } else {
                    xy += d;
                }
            }
        }
        // V-statistic form: nonnegative, so the null is close to a gamma law.
        return 2.0 * xy / (double(na) * nb) - 2.0 * xx / (double(na) * na) - 2.0 * yy / (double(nb) * nb);
    };

    EnergyTest out;
    out.permutations = permutations;
    out.statistic = statistic(perm);
    NormalStream rng(seed, 0xE7E7, 0);
    std::vector<double> null(permutations);
    for (int k = 0; k < permutations; ++k) {
        for (std::size_t i = n - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
            std::swap(perm[i], perm[std::min(j, i)]);
        }
        null[k] = statistic(perm);
    }
    const double mean = std::accumulate(null.begin(), null.end(), 0.0) / permutations;
    double var = 0.0;
    for (double v : null) {
        var += (v - mean) * (v - mean);
    }
    out.null_mean = mean;
    out.null_sd = std::sqrt(var / std::max(1, permutations - 1));
    // The permutation null is right-skewed; a moment-matched gamma law gives the
    // tail probability, reported as the equivalent one-sided normal z.
    if (out.null_sd > 0.0 && mean > 0.0) {
        const double shape = mean * mean / (out.null_sd * out.null_sd);
        const double scale = out.null_sd * out.null_sd / mean;
        out.p_value = boost::math::gamma_q(shape, std::max(out.statistic, 0.0) / scale);
        out.z = out.p_value > 0.0 ? std::min(std::sqrt(2.0) * boost::math::erfc_inv(2.0 * out.p_value), 40.0) : 40.0;
    }
    return out;
}

LinearFit least_squares(std::span<const double> design, std::size_t cols, std::span<const double> y) {
    const std::size_t rows = y.size();
    if (rows <= cols || design.size() != rows * cols) {
        throw ParameterError("least_squares: need more rows than regressors");
    }
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd v(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            x(r, c) = design[r * cols + c];
        }
        v(r) = y[r];
    }
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(v);
    const Eigen::VectorXd resid = v - x * beta;
    LinearFit fit;
    fit.rss = resid.squaredNorm();
    const double sigma2 = fit.rss / static_cast<double>(rows - cols);
    const Eigen::MatrixXd cov = sigma2 * (x.transpose() * x).inverse();
    for (std::size_t c = 0; c < cols; ++c) {
        fit.coefficients.push_back(beta(c));
        fit.stderrs.push_back(std::sqrt(std::max(cov(c, c), 0.0)));
    }
    const double n = static_cast<double>(rows);
    fit.aic = n * std::log(std::max(fit.rss, 1e-300) / n) + 2.0 * static_cast<double>(cols);
    return fit;
}

}  // namespace carnot::stats
