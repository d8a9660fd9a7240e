#include <doctest.h>

#include <cmath>
#include <random>

#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"
#include "carnot/lsh.hpp"

using namespace carnot;

namespace {

ScalarField x(int i) { return ScalarField::variable(i); }

std::vector<LibraryField> labeled(const StratifiedAlgebra& alg, LshLabel label) {
    std::vector<LibraryField> out;
    for (auto& e : builtin_lsh_library(alg)) {
        if (e.label == label) {
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("check_lsh examples on H^3") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    const auto pts = sample_grid(g, 1000);
    const auto lin = (ScalarField::affine({0.8, -1.1, 0.0}, 0.0)).exp();
    const auto v = check_lsh(g, lin, pts);
    CHECK(v.consistent());
    CHECK(std::abs(v.min_delta_log) < 1e-12);
    CHECK(v.points == 1000);
    CHECK(check_lsh(g, ScalarField::constant(2.5), pts).consistent());

    const auto neg = check_lsh(g, (-(x(0) * x(0))).exp(), pts);
    CHECK(neg.status == LshStatus::violated);
    CHECK(neg.min_delta_log == doctest::Approx(-2.0));
    CHECK(neg.min_equivalent_form == doctest::Approx(-2.0));
    CHECK(neg.forms_agree);
}

TEST_CASE("non-positive field gives a domain-error verdict") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    const std::vector<GroupElement> pts{{1, 1, 0}, {0.5, 0, 0}, {-1, 0, 0}, {-2, 0, 0}};
    const auto v = check_lsh(g, x(0), pts);
    CHECK(v.status == LshStatus::domain_error);
    CHECK(v.worst_index == 2);
    CHECK(v.worst_point == pts[2]);
    CHECK_FALSE(v.domain_message.empty());
    CHECK(to_string(v.status) == "domain-error");
}

TEST_CASE("grid points stay inside the quasi-norm ball") {
    const CarnotGroup g(builtin_algebra("engel"));
    const auto pts = sample_grid(g, 500, 2.0, 3);
    CHECK(pts.size() == 500);
    for (const auto& p : pts) {
        CHECK(g.homogeneous_norm(p) <= 2.0 + 1e-12);
    }
    CHECK(sample_grid(g, 500, 2.0, 3) == pts);
    CHECK_THROWS_AS(sample_grid(g, 5, -1.0), ParameterError);
}

TEST_CASE("library labels agree with check_lsh on every builtin") {
    for (const char* name : {"euclidean(1)", "euclidean(2)", "heisenberg(1)", "heisenberg(2)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        const auto pts = sample_grid(g, 1000);
        for (const auto& e : builtin_lsh_library(g.algebra())) {
            CAPTURE(e.name);
            const auto v = check_lsh(g, e.field, pts);
            CHECK(v.forms_agree);
            if (e.label == LshLabel::lsh) {
                CHECK(v.consistent());
            } else if (e.label == LshLabel::not_lsh) {
                CHECK(v.status == LshStatus::violated);
            }
        }
    }
}

TEST_CASE("library contents") {
    const auto h = builtin_algebra("heisenberg(1)");
    CHECK(library_field(h, "expx1").label == LshLabel::lsh);
    CHECK(library_field(h, "const1").label == LshLabel::lsh);
    CHECK(library_field(h, "gauss-neg").label == LshLabel::not_lsh);
    CHECK(library_field(h, "homogeneous-eps").label == LshLabel::unknown);
    CHECK(library_field(builtin_algebra("engel"), "homogeneous-eps").label == LshLabel::unknown);
    CHECK_THROWS_AS(library_field(h, "no-such-field"), StructuralError);
    const GroupElement p{0.3, -0.2, 0.9};
    CHECK(library_field(h, "expx1").field(p.coords()) == doctest::Approx(std::exp(0.3)));
}

TEST_CASE("closure of the LSH-labeled library under every operation") {
    for (const char* name : {"heisenberg(1)", "heisenberg(2)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        const auto& alg = g.algebra();
        const auto pts = sample_grid(g, 1000, 3.0);
        const auto lib = labeled(alg, LshLabel::lsh);
        REQUIRE(lib.size() >= 4);
        for (const auto& f : lib) {
            for (double p : {0.5, 2.0}) {
                CAPTURE(f.name);
                CAPTURE(p);
                CHECK(check_lsh(g, lsh_combine(alg, LshOp::power, f.field, std::nullopt, p), pts).consistent());
            }
            for (double l : {0.5, 2.0}) {
                CAPTURE(f.name);
                CAPTURE(l);
                CHECK(check_lsh(g, lsh_combine(alg, LshOp::dilate, f.field, std::nullopt, l), pts).consistent());
            }
            for (const auto& h : lib) {
                CAPTURE(f.name);
                CAPTURE(h.name);
                CHECK(check_lsh(g, lsh_combine(alg, LshOp::product, f.field, h.field), pts).consistent());
                CHECK(check_lsh(g, lsh_combine(alg, LshOp::sum, f.field, h.field), pts).consistent());
            }
        }
    }
}

TEST_CASE("combination examples") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    const auto& alg = g.algebra();
    const GroupElement p{0.4, -0.7, 1.3};
    const auto prod = lsh_combine(alg, LshOp::product, x(0).exp(), x(1).exp());
    CHECK(prod(p.coords()) == doctest::Approx(std::exp(0.4 - 0.7)));
    const auto cube = lsh_combine(alg, LshOp::power, x(0).exp(), std::nullopt, 3.0);
    CHECK(cube(p.coords()) == doctest::Approx(std::exp(1.2)));
    const auto sum = lsh_combine(alg, LshOp::sum, x(0).exp(), (-x(0)).exp());
    CHECK(check_lsh(g, sum, sample_grid(g, 1000)).consistent());
    const auto dil = lsh_combine(alg, LshOp::dilate, x(2).exp(), std::nullopt, 2.0);
    CHECK(dil(p.coords()) == doctest::Approx(std::exp(4.0 * 1.3)));
    CHECK_THROWS_AS(lsh_combine(alg, LshOp::power, x(0).exp(), std::nullopt, 0.0), ParameterError);
    CHECK_THROWS_AS(lsh_combine(alg, LshOp::power, x(0).exp(), std::nullopt, -1.0), ParameterError);
    CHECK_THROWS_AS(lsh_combine(alg, LshOp::dilate, x(0).exp(), std::nullopt, 0.0), ParameterError);
    CHECK_THROWS_AS(lsh_combine(alg, LshOp::product, x(0).exp()), ParameterError);
    CHECK(lsh_op_from_string("sum") == LshOp::sum);
    CHECK_THROWS_AS(lsh_op_from_string("quotient"), StructuralError);
}

TEST_CASE("Delta log of a dilation scales by lambda^2") {
    const CarnotGroup g(builtin_algebra("engel"));
    const auto& alg = g.algebra();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lam(0.3, 2.0);
    const auto f = library_field(alg, "radial2-eps").field + library_field(alg, "expx1").field;
    double worst = 0.0;
    for (const auto& p : sample_grid(g, 300, 1.5, 9)) {
        const double l = lam(rng);
        const double lhs = sub_laplacian(g, f.dilated(alg, l).log(), p);
        const double rhs = l * l * sub_laplacian(g, f.log(), g.dilate(l, p));
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("LSH functions are subharmonic; both criteria agree in sign") {
    for (const char* name : {"heisenberg(1)", "engel"}) {
        const CarnotGroup g(builtin_algebra(name));
        const auto pts = sample_grid(g, 1000);
        DerivativeEvaluator ev(g);
        for (const auto& e : builtin_lsh_library(g.algebra())) {
            CAPTURE(e.name);
            for (const auto& p : pts) {
                const auto d = ev.evaluate(e.field, p.coords(), false);
                const double dlog = sub_laplacian(g, e.field.log(), p);
                const double other = d.laplacian - d.gradient_sq / d.value;
                CHECK((dlog >= -1e-9) == (other >= -1e-9 * d.value));
                if (e.label == LshLabel::lsh) {
                    CHECK(d.laplacian >= -1e-9);
                }
            }
        }
    }
}

TEST_CASE("radial field has the closed-form Delta log") {
    // Delta log(r^2 + eps) = 4 eps / (r^2 + eps)^2 on H^3 (x3 does not enter).
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    const auto f = library_field(g.algebra(), "radial2-eps").field;
    for (const auto& p : sample_grid(g, 200)) {
        const double r2 = p[0] * p[0] + p[1] * p[1];
        const double expected = 4.0 * 0.25 / ((r2 + 0.25) * (r2 + 0.25));
        CHECK(std::abs(sub_laplacian(g, f.log(), p) - expected) < 1e-12);
    }
}
