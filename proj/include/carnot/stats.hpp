#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace carnot::stats {

double normal_cdf(double x);

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_survival(double x);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against N(0, variance).
KsResult ks_test_normal(std::span<const double> samples, double variance);

/// Sample means of a set of per-sample columns (all of length n) with their
/// covariance, for delta-method standard errors of smooth functionals.
class ColumnMoments {
public:
    explicit ColumnMoments(const std::vector<std::vector<double>>& columns);

    std::size_t count() const { return n_; }
    double mean(std::size_t i) const { return means_[i]; }
    double covariance(std::size_t i, std::size_t j) const { return cov_[i * k_ + j]; }
    /// sqrt(g^T Sigma g / n) for gradient g.
    double delta_stderr(std::span<const double> gradient) const;
    double stderr_of_mean(std::size_t i) const;

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    std::vector<double> means_;
    std::vector<double> cov_;
};

/// Share of sum |v| contributed by the largest `top_fraction` of |v|.
double top_share(std::span<const double> values, double top_fraction);

struct EnergyTest {
    double statistic = 0.0;
    double null_mean = 0.0;
    double null_sd = 0.0;
    /// Upper tail probability under a gamma law matched to the permutation
    /// null's mean and variance; z is the matching one-sided normal quantile.
    double p_value = 1.0;
    double z = 0.0;
    int permutations = 0;
};

/// Two-sample energy-distance statistic between row-major point sets (dim
/// columns), calibrated by a seeded permutation null.
EnergyTest energy_distance_test(std::span<const double> a, std::span<const double> b, std::size_t dim,
                                int permutations, std::uint64_t seed);

struct LinearFit {
    std::vector<double> coefficients;
    std::vector<double> stderrs;
    double rss = 0.0;
    /// n log(rss/n) + 2k
    double aic = 0.0;
};

/// Ordinary least squares y ~ X (row-major design, `cols` regressors).
LinearFit least_squares(std::span<const double> design, std::size_t cols, std::span<const double> y);

}  // namespace carnot::stats
