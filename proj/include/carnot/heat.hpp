#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "carnot/group.hpp"
#include "carnot/report.hpp"

namespace carnot {

struct HeatParams {
    double s = 1.0;
    std::size_t n_samples = 10000;
    std::size_t n_steps = 512;
    std::uint64_t seed = 0;
    /// Optional importance tilt: mean of the horizontal endpoint in the
    /// orthonormal V_1 frame. Empty means plain sampling.
    std::vector<double> tilt;

    nlohmann::json to_json() const;
    static HeatParams from_json(const nlohmann::json& j);
    void validate(const CarnotGroup& group) const;
};

/// Monte Carlo sample of rho_s dm: endpoints of the horizontal random walk
/// X_{k+1} = X_k * exp(sum_i dW_{k,i} u_i) with dW ~ N(0, h/2) per orthonormal
/// direction u_i, which has generator Delta/4.
///
/// With a tilt mu the driving walk gets drift mu/s per unit time and each
/// sample carries the likelihood ratio exp(-(2 mu.W_s - |mu|^2)/s), which only
/// depends on the horizontal endpoint. Weighted sample means stay unbiased.
class HeatSampleBatch {
public:
    HeatSampleBatch(CarnotGroup group, HeatParams params, std::vector<double> data,
                    std::vector<double> log_weights = {});

    const CarnotGroup& group() const { return group_; }
    const HeatParams& params() const { return params_; }
    double s() const { return params_.s; }
    std::size_t size() const { return n_; }
    std::size_t dimension() const { return dim_; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    GroupElement element(std::size_t i) const;
    std::span<const double> data() const { return data_; }
    std::vector<double> coordinate(int index) const;

    bool weighted() const { return !log_weights_.empty(); }
    std::span<const double> log_weights() const { return log_weights_; }
    double weight(std::size_t i) const;

    /// Applies `map` to every sample (weights carried over).
    HeatSampleBatch transformed(const std::function<GroupElement(const GroupElement&)>& map) const;
    /// Every sample right-multiplied by g.
    HeatSampleBatch right_translated(const GroupElement& g) const;
    HeatSampleBatch dilated(double lambda) const;
    HeatSampleBatch inverted() const;

    /// CSV with a header of coordinate labels x_j_k (plus log_weight when tilted).
    void write_csv(std::ostream& out) const;
    static HeatSampleBatch read_csv(std::istream& in, const CarnotGroup& group, HeatParams params);
    /// Little-endian binary: magic "CARNOTB1", u32 dim, u64 n, u32 weighted, f64 s, then rows.
    void write_binary(std::ostream& out) const;
    static HeatSampleBatch read_binary(std::istream& in, const CarnotGroup& group, HeatParams params);
    /// Reads CSV or binary depending on the file's first bytes.
    static HeatSampleBatch load(const std::string& path, const CarnotGroup& group, HeatParams params);

private:
    CarnotGroup group_;
    HeatParams params_;
    std::size_t dim_ = 0;
    std::size_t n_ = 0;
    std::vector<double> data_;
    std::vector<double> log_weights_;
};

/// Draws the batch. Counter-based streams keyed by (seed, path index) make the
/// result bit-identical for any worker count. For power-of-two n_steps the
/// horizontal path is built by dyadic Brownian-bridge refinement, so batches
/// with the same seed and different power-of-two step counts share one
/// underlying Brownian path (and, for every n_steps, the same endpoint).
HeatSampleBatch sample_heat(const CarnotGroup& group, const HeatParams& params);

/// KS test of each first-layer coordinate (orthonormal frame) against N(0, s/2).
struct MarginalCheck {
    std::vector<double> statistics;
    std::vector<double> p_values;
    double min_p_value = 1.0;
};
MarginalCheck check_first_layer_marginals(const HeatSampleBatch& batch);

/// {X_i} vs {X_i^{-1}}: paired moment differences up to order 3 per coordinate
/// plus an energy-distance permutation test. Passes iff every |z| < thr.z.
CheckReport empirical_check_inverse_symmetry(const HeatSampleBatch& batch, const Thresholds& thr = {},
                                             std::uint64_t seed = 17);

/// {delta_{1/lambda} X_i} (batch at s) vs {X'_i} (batch at s / lambda^2).
CheckReport empirical_check_scaling(const HeatSampleBatch& batch_s, double lambda,
                                    const HeatSampleBatch& batch_scaled, const Thresholds& thr = {},
                                    std::uint64_t seed = 23);

struct TailReport {
    /// log P(N > r) ~ a - kappa r^2 / s
    Estimate kappa;
    double window_low = 0.0;
    double window_high = 0.0;
    double aic_quadratic = 0.0;
    double aic_linear = 0.0;
    std::vector<double> radii;
    std::vector<double> log_survival;
    bool passed = false;

    nlohmann::json to_json() const;
    CheckReport as_check() const;
};

/// Fit of a tail curve; shared by the empirical profile and exact oracles.
TailReport fit_tail_profile(std::span<const double> radii, std::span<const double> log_survival, double s);

/// Tail of the quasi-norm N(X_s): requires n >= 1e4. Passes iff the fitted
/// Gaussian decay coefficient is positive and the quadratic-in-r model beats
/// the linear one by AIC.
TailReport empirical_tail_profile(const HeatSampleBatch& batch, std::size_t grid_points = 24);

}  // namespace carnot
