#pragma once

#include <span>
#include <vector>

#include "carnot/field.hpp"
#include "carnot/group.hpp"
#include "carnot/jet.hpp"

namespace carnot {

/// 2-jet of t -> f(x * exp(t xi)). The curve is the integral curve of the
/// left-invariant field xi~, so the components are (f, xi~ f, xi~^2 f) at x.
Jet2 left_invariant_derivative(const CarnotGroup& group, const ScalarField& f,
                               std::span<const double> xi, const GroupElement& x);

/// 2-jet of t -> f(exp(t xi) * x): the right-invariant field xi^.
Jet2 right_invariant_derivative(const CarnotGroup& group, const ScalarField& f,
                                std::span<const double> xi, const GroupElement& x);

/// Algebra vectors of the orthonormal V_1 frame (w.r.t. metric_v1), embedded
/// in the full coordinate space.
std::vector<std::vector<double>> horizontal_basis(const CarnotGroup& group);

/// |grad f|^2 = sum_i (xi~_i f)^2 over the orthonormal V_1 frame.
double sub_gradient_sq(const CarnotGroup& group, const ScalarField& f, const GroupElement& x);

/// Delta f = sum_i xi~_i^2 f.
double sub_laplacian(const CarnotGroup& group, const ScalarField& f, const GroupElement& x);

/// Ef(x) = d/dr f(delta_{e^r} x) at r = 0.
double euler_derivative(const CarnotGroup& group, const ScalarField& f, const GroupElement& x);

/// Ef through the coordinate formula sum_j j x_{j,k} df/dx_{j,k}.
double euler_derivative_coordinates(const CarnotGroup& group, const ScalarField& f, const GroupElement& x);

/// df/dx_i along the coordinate line.
double partial_derivative(const ScalarField& f, const GroupElement& x, int index);

/// e^{-tE} f = f o delta_{e^{-t}}.
ScalarField dilation_pullback(const CarnotGroup& group, const ScalarField& f, double t);

/// Everything the inequality estimators need at one point, from a single
/// sweep of jets over the horizontal frame.
struct PointDerivatives {
    double value = 0.0;
    std::vector<double> gradient;  // xi~_i f, orthonormal frame
    double gradient_sq = 0.0;
    double laplacian = 0.0;
    double euler = 0.0;
};

/// Reusable evaluator; holds the frame and scratch buffers. Not thread-safe:
/// use one per thread.
class DerivativeEvaluator {
public:
    explicit DerivativeEvaluator(const CarnotGroup& group);

    PointDerivatives evaluate(const ScalarField& f, std::span<const double> x, bool with_euler = true);
    Jet2 along_left(const ScalarField& f, std::span<const double> x, std::span<const double> xi);

private:
    CarnotGroup group_;
    std::vector<std::vector<double>> frame_;
    std::vector<int> layer_;
    std::vector<Jet2> direction_;
    std::vector<Jet2> curve_;
    std::vector<Jet2> scratch_;
};

}  // namespace carnot
