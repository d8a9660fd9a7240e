#include "carnot/lsh.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"
#include "carnot/parallel.hpp"
#include "carnot/rng.hpp"

namespace carnot {

std::string_view to_string(LshStatus s) {
    switch (s) {
        case LshStatus::consistent:
            return "lsh-consistent";
        case LshStatus::violated:
            return "violated";
        case LshStatus::domain_error:
            return "domain-error";
    }
    return "domain-error";
}

std::string_view to_string(LshLabel l) {
    switch (l) {
        case LshLabel::lsh:
            return "lsh";
        case LshLabel::not_lsh:
            return "not-lsh";
        case LshLabel::unknown:
            return "unknown";
    }
    return "unknown";
}

nlohmann::json LshVerdict::to_json() const {
    nlohmann::json j{{"verdict", to_string(status)},
                     {"min_delta_log", min_delta_log},
                     {"worst_index", worst_index},
                     {"worst_point", worst_point.to_json()},
                     {"tolerance", tolerance},
                     {"min_equivalent_form", min_equivalent_form},
                     {"forms_agree", forms_agree},
                     {"points", points}};
    if (!domain_message.empty()) {
        j["domain_error"] = domain_message;
    }
    return j;
}

LshVerdict check_lsh(const CarnotGroup& group, const ScalarField& f, const std::vector<GroupElement>& points,
                     double tol) {
    if (!(tol >= 0.0)) {
        throw ParameterError("check_lsh: tolerance must be >= 0");
    }
    if (f.max_variable() >= group.dimension()) {
        throw StructuralError("check_lsh: field references a coordinate outside the algebra");
    }
    for (const auto& p : points) {
        group.check_element(p, "check_lsh");
    }
    const ScalarField log_f = f.log();
    const std::size_t n = points.size();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> delta_log(n, nan);
    std::vector<double> form(n, nan);
    std::vector<std::string> failure(n);

    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        DerivativeEvaluator ev(group);
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                const double v = f(points[i].coords());
                if (!(v > 0.0) || !std::isfinite(v)) {
                    failure[i] = "f = " + std::to_string(v) + " is not positive";
                    continue;
                }
                delta_log[i] = ev.evaluate(log_f, points[i].coords(), false).laplacian;
                const auto d = ev.evaluate(f, points[i].coords(), false);
                form[i] = (d.laplacian - d.gradient_sq / d.value) / d.value;
            } catch (const DomainError& e) {
                failure[i] = e.what();
            }
        }
    });

    LshVerdict out;
    out.tolerance = tol;
    out.points = n;
    out.min_delta_log = std::numeric_limits<double>::infinity();
    out.min_equivalent_form = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (!failure[i].empty()) {
            out.status = LshStatus::domain_error;
            out.worst_index = i;
            out.worst_point = points[i];
            out.domain_message = "point " + std::to_string(i) + ": " + failure[i];
            return out;
        }
        if (delta_log[i] < out.min_delta_log) {
            out.min_delta_log = delta_log[i];
            out.worst_index = i;
        }
        out.min_equivalent_form = std::min(out.min_equivalent_form, form[i]);
        if ((delta_log[i] < -tol) != (form[i] < -tol)) {
            out.forms_agree = false;
        }
    }
    if (n == 0) {
        out.min_delta_log = 0.0;
        out.min_equivalent_form = 0.0;
        return out;
    }
    out.worst_point = points[out.worst_index];
    out.status = out.min_delta_log < -tol ? LshStatus::violated : LshStatus::consistent;
    return out;
}

LshOp lsh_op_from_string(std::string_view name) {
    if (name == "product") {
        return LshOp::product;
    }
    if (name == "sum") {
        return LshOp::sum;
    }
    if (name == "power") {
        return LshOp::power;
    }
    if (name == "dilate") {
        return LshOp::dilate;
    }
    throw StructuralError("unknown LSH operation '" + std::string(name) + "'");
}

ScalarField lsh_combine(const StratifiedAlgebra& algebra, LshOp op, const ScalarField& f,
                        const std::optional<ScalarField>& g, double parameter) {
    switch (op) {
        case LshOp::product:
        case LshOp::sum:
            if (!g) {
                throw ParameterError("lsh_combine: product and sum need a second field");
            }
            return op == LshOp::product ? f * *g : f + *g;
        case LshOp::power:
            if (!(parameter > 0.0) || !std::isfinite(parameter)) {
                throw ParameterError("lsh_combine: power needs p > 0");
            }
            return f.pow(parameter);
        case LshOp::dilate:
            if (!(parameter > 0.0) || !std::isfinite(parameter)) {
                throw ParameterError("lsh_combine: dilate needs lambda > 0");
            }
            return f.dilated(algebra, parameter);
    }
    throw ParameterError("lsh_combine: bad operation");
}

namespace {

ScalarField x(int i) { return ScalarField::variable(i); }

int lcm_up_to(int m) {
    int l = 1;
    for (int k = 2; k <= m; ++k) {
        l = std::lcm(l, k);
    }
    return l;
}

}  // namespace

std::vector<LibraryField> builtin_lsh_library(const StratifiedAlgebra& algebra) {
    const int d = algebra.horizontal_dimension();
    const bool is_engel = algebra.name() == "engel";
    std::vector<LibraryField> lib;
    const auto one = ScalarField::constant(1.0);

    lib.push_back({"const1", one, LshLabel::lsh, "positive constant"});
    lib.push_back({"expx1", x(0).exp(), LshLabel::lsh, "exp of a harmonic first-layer coordinate"});
    if (d >= 2) {
        lib.push_back({"expx2", x(1).exp(), LshLabel::lsh, "exp of a harmonic first-layer coordinate"});
    }
    {
        std::vector<double> coeffs(algebra.dimension(), 0.0);
        coeffs[0] = 0.7;
        if (d >= 2) {
            coeffs[1] = -0.4;
        }
        lib.push_back({"explin", ScalarField::affine(coeffs, 0.3).exp(), LshLabel::lsh,
                       "exp of a first-layer linear form"});
    }
    lib.push_back({"cosh1", x(0).exp() + (-x(0)).exp(), LshLabel::lsh, "sum of LSH functions"});
    lib.push_back({"expx1-cubed", x(0).exp().pow(3.0), LshLabel::lsh, "power of an LSH function"});
    if (d >= 2) {
        lib.push_back({"prod12", x(0).exp() * x(1).exp(), LshLabel::lsh, "product of LSH functions"});
        lib.push_back({"radial2-eps", x(0) * x(0) + x(1) * x(1) + ScalarField::constant(0.25), LshLabel::lsh,
                       "Delta log = 4 eps / (r^2 + eps)^2 in two horizontal directions"});
    } else {
        lib.push_back({"radial1-eps", x(0) * x(0) + ScalarField::constant(0.25), LshLabel::not_lsh,
                       "log(x^2 + eps) is concave for x^2 > eps"});
    }
    if (algebra.step() >= 2) {
        // Sum of x_{j,k}^{2L/j}: delta-homogeneous of degree 2L, positive.
        const int l = lcm_up_to(algebra.step());
        ScalarField hom = ScalarField::constant(0.25);
        for (int i = 0; i < algebra.dimension(); ++i) {
            hom = hom + x(i).pow(2.0 * l / algebra.layer_of(i));
        }
        lib.push_back({"homogeneous-eps", hom, LshLabel::unknown,
                       is_engel ? "homogeneous polynomial plus eps on the Engel group; status not known"
                                : "homogeneous polynomial plus eps; status not known"});
    }
    lib.push_back({"gauss-neg", (-(x(0) * x(0))).exp(), LshLabel::not_lsh, "Delta log f = -2"});
    if (d >= 2) {
        lib.push_back({"gauss-neg2", (-(x(0) * x(0) + x(1) * x(1))).exp(), LshLabel::not_lsh, "Delta log f = -4"});
    }
    return lib;
}

LibraryField library_field(const StratifiedAlgebra& algebra, std::string_view name) {
    for (auto& entry : builtin_lsh_library(algebra)) {
        if (entry.name == name) {
            return entry;
        }
    }
    throw StructuralError("unknown library field '" + std::string(name) + "'");
}

std::vector<GroupElement> sample_grid(const CarnotGroup& group, std::size_t n, double radius, std::uint64_t seed) {
    if (!(radius > 0.0)) {
        throw ParameterError("sample_grid: radius must be positive");
    }
    const auto dim = static_cast<std::size_t>(group.dimension());
    const auto& layers = group.algebra().layers();
    std::vector<GroupElement> points(n, GroupElement::identity(dim));
    for (std::size_t p = 0; p < n; ++p) {
        NormalStream rng(seed, p, 0x6E1D);
        for (std::size_t i = 0; i < dim; ++i) {
            points[p][i] = (2.0 * rng.uniform() - 1.0) * std::pow(radius, layers[i]);
        }
    }
    return points;
}

}  // namespace carnot
