#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "carnot/field.hpp"
#include "carnot/heat.hpp"
#include "carnot/report.hpp"

namespace carnot {

/// Integrals against rho_s dm.
enum class Functional {
    mean,        // int f
    lp_norm,     // (int |f|^p)^{1/p}
    f_log_f,     // int f log f
    entropy,     // int f log f - |f|_1 log |f|_1
    dirichlet,   // int |grad f|^2 / f
    gradient_sq, // int |grad f|^2
    euler,       // int Ef
    laplacian,   // int Delta f
};

std::string_view to_string(Functional f);
Functional functional_from_string(std::string_view name);

struct FunctionalEstimate {
    Functional functional = Functional::mean;
    double value = 0.0;
    double stderr = 0.0;
    std::size_t n = 0;
    nlohmann::json params = nlohmann::json::object();

    Estimate estimate() const { return {value, stderr}; }
    nlohmann::json to_json() const;
};

/// Sample-mean estimate. `p` is used by lp_norm only. Domain failures throw
/// DomainError carrying the lowest offending sample index.
FunctionalEstimate estimate(Functional id, const ScalarField& f, const HeatSampleBatch& batch, double p = 1.0);

double janson_time(double c, double p, double q);
double defect_factor(double beta, double p, double q);

enum class LsiForm { l1, l2 };

/// int Ef = (s/2) int Delta f, two-sided.
CheckReport check_time_space(const ScalarField& f, const HeatSampleBatch& batch, const Thresholds& thr = {});

/// L1 form: entropy(f) <= (cs/2) int |grad f|^2/f + beta |f|_1.
/// L2 form: int f^2 log|f| - |f|_2^2 log |f|_2 <= cs int |grad f|^2 + (beta/2) |f|_2^2.
CheckReport check_lsi(const ScalarField& f, const HeatSampleBatch& batch, double c, double beta,
                      LsiForm form = LsiForm::l1, const Thresholds& thr = {});

/// entropy(f) <= c int Ef + beta |f|_1. A note is attached when f is not
/// LSH-consistent on the batch points.
CheckReport check_slsi(const ScalarField& f, const HeatSampleBatch& batch, double c, double beta,
                       const Thresholds& thr = {});

/// int |grad f|^2/f <= int Delta f, chained with the time-space equality.
CheckReport check_lsi_implies_slsi_chain(const ScalarField& f, const HeatSampleBatch& batch,
                                         const Thresholds& thr = {});

/// |e^{-tE} f|_q <= M(p,q) |f|_p from one batch. Refuses t < t_J(p,q) unless
/// exploratory. params["ratio"] carries lhs/rhs with its standard error.
CheckReport check_shc(const ScalarField& f, const HeatSampleBatch& batch, double p, double q, double t, double c,
                      double beta, bool exploratory = false, const Thresholds& thr = {});

struct CurvePoint {
    double t = 0.0;
    double value = 0.0;
    double stderr = 0.0;
};

struct Curve {
    std::vector<CurvePoint> points;
    /// Non-increasing check over consecutive grid points, using the standard
    /// error of each paired difference.
    CheckReport report;

    void write_csv(std::ostream& out) const;
};

/// alpha(t) = M(t)^{-1} |e^{-tE} f|_{r(t)}, r(t) = e^{t/c}, M(t) = exp(beta(1 - e^{-t/c})).
Curve sweep_alpha(const ScalarField& f, const HeatSampleBatch& batch, double c, double beta,
                  const std::vector<double>& ts, const Thresholds& thr = {});

/// Uniform grid of `points` times on [0, t_J(1, q)].
std::vector<double> alpha_grid(double c, double q, std::size_t points = 11);

/// |e^{-tE} f|_1 on the grid, checked non-increasing.
Curve check_l1_contractivity(const ScalarField& f, const HeatSampleBatch& batch, const std::vector<double>& ts,
                             const Thresholds& thr = {});

}  // namespace carnot
