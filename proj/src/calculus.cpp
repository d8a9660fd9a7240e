#include "carnot/calculus.hpp"

#include <cmath>

#include "carnot/errors.hpp"

namespace carnot {

namespace {

std::vector<Jet2> direction_jet(std::span<const double> xi) {
    std::vector<Jet2> d(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
        d[i] = Jet2::linear(0.0, xi[i]);
    }
    return d;
}

void check_direction(const CarnotGroup& group, std::span<const double> xi, const GroupElement& x) {
    if (xi.size() != static_cast<std::size_t>(group.dimension())) {
        throw StructuralError("derivative direction has wrong dimension");
    }
    group.check_element(x, "derivative");
}

}  // namespace

Jet2 left_invariant_derivative(const CarnotGroup& group, const ScalarField& f, std::span<const double> xi,
                               const GroupElement& x) {
    check_direction(group, xi, x);
    const auto d = direction_jet(xi);
    std::vector<Jet2> curve(d.size());
    group.multiply_into<double, Jet2, Jet2>(x.coords(), d, curve);
    return f.jet(curve);
}

Jet2 right_invariant_derivative(const CarnotGroup& group, const ScalarField& f, std::span<const double> xi,
                                const GroupElement& x) {
    check_direction(group, xi, x);
    const auto d = direction_jet(xi);
    std::vector<Jet2> curve(d.size());
    group.multiply_into<Jet2, double, Jet2>(d, x.coords(), curve);
    return f.jet(curve);
}

std::vector<std::vector<double>> horizontal_basis(const CarnotGroup& group) {
    const auto& alg = group.algebra();
    const Eigen::MatrixXd& frame = alg.horizontal_frame();
    std::vector<std::vector<double>> basis;
    for (int c = 0; c < frame.cols(); ++c) {
        std::vector<double> v(alg.dimension(), 0.0);
        for (int r = 0; r < frame.rows(); ++r) {
            v[r] = frame(r, c);
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

double sub_gradient_sq(const CarnotGroup& group, const ScalarField& f, const GroupElement& x) {
    group.check_element(x, "sub_gradient_sq");
    DerivativeEvaluator ev(group);
    return ev.evaluate(f, x.coords(), false).gradient_sq;
}

double sub_laplacian(const CarnotGroup& group, const ScalarField& f, const GroupElement& x) {
    group.check_element(x, "sub_laplacian");
    DerivativeEvaluator ev(group);
    return ev.evaluate(f, x.coords(), false).laplacian;
}

double euler_derivative(const CarnotGroup& group, const ScalarField& f, const GroupElement& x) {
    group.check_element(x, "euler_derivative");
    DerivativeEvaluator ev(group);
    return ev.evaluate(f, x.coords(), true).euler;
}

double partial_derivative(const ScalarField& f, const GroupElement& x, int index) {
    std::vector<Jet2> line(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        line[i] = Jet2::linear(x[i], static_cast<int>(i) == index ? 1.0 : 0.0);
    }
    return f.jet(line).d1;
}

double euler_derivative_coordinates(const CarnotGroup& group, const ScalarField& f, const GroupElement& x) {
    group.check_element(x, "euler_derivative_coordinates");
    double e = 0.0;
    for (int i = 0; i < group.dimension(); ++i) {
        if (x[i] != 0.0) {
            e += group.algebra().layer_of(i) * x[i] * partial_derivative(f, x, i);
        }
    }
    return e;
}

ScalarField dilation_pullback(const CarnotGroup& group, const ScalarField& f, double t) {
    if (!std::isfinite(t)) {
        throw ParameterError("dilation_pullback: t must be finite");
    }
    if (t == 0.0) {
        return f;
    }
    return f.dilated(group.algebra(), std::exp(-t));
}

DerivativeEvaluator::DerivativeEvaluator(const CarnotGroup& group)
    : group_(group),
      frame_(horizontal_basis(group)),
      layer_(group.algebra().layers()),
      direction_(group.dimension()),
      curve_(group.dimension()),
      scratch_(group.bch().node_count() * group.dimension()) {}

Jet2 DerivativeEvaluator::along_left(const ScalarField& f, std::span<const double> x, std::span<const double> xi) {
    for (std::size_t i = 0; i < direction_.size(); ++i) {
        direction_[i] = Jet2::linear(0.0, xi[i]);
    }
    group_.bch().multiply<double, Jet2, Jet2>(x, direction_, curve_, scratch_);
    return f.jet(curve_);
}

PointDerivatives DerivativeEvaluator::evaluate(const ScalarField& f, std::span<const double> x, bool with_euler) {
    PointDerivatives out;
    out.gradient.reserve(frame_.size());
    for (const auto& xi : frame_) {
        const Jet2 j = along_left(f, x, xi);
        out.value = j.v;
        out.gradient.push_back(j.d1);
        out.gradient_sq += j.d1 * j.d1;
        out.laplacian += j.d2;
    }
    if (with_euler) {
        // r -> delta_{e^r} x has coordinate jets (x, j x, j^2 x).
        for (std::size_t i = 0; i < curve_.size(); ++i) {
            const double w = layer_[i];
            curve_[i] = Jet2(x[i], w * x[i], w * w * x[i]);
        }
        out.euler = f.jet(curve_).d1;
    }
    return out;
}

}  // namespace carnot
