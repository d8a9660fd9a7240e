#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <random>

#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"

using namespace carnot;

namespace {

// Polynomials on H^3 with exact differential operators, used as an oracle for
// the jet machinery: xi~_1 = d1 - (x2/2) d3, xi~_2 = d2 + (x1/2) d3.
using Mono = std::array<int, 3>;
using Poly = std::map<Mono, double>;

Poly d(const Poly& p, int i) {
    Poly out;
    for (const auto& [m, c] : p) {
        if (m[i] > 0) {
            Mono n = m;
            n[i] -= 1;
            out[n] += c * m[i];
        }
    }
    return out;
}

Poly times_var(const Poly& p, int i, double s) {
    Poly out;
    for (const auto& [m, c] : p) {
        Mono n = m;
        n[i] += 1;
        out[n] += s * c;
    }
    return out;
}

Poly add(Poly a, const Poly& b) {
    for (const auto& [m, c] : b) {
        a[m] += c;
    }
    return a;
}

Poly mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, ca] : a) {
        for (const auto& [mb, cb] : b) {
            out[{ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]}] += ca * cb;
        }
    }
    return out;
}

Poly xi1(const Poly& p) { return add(d(p, 0), times_var(d(p, 2), 1, -0.5)); }
Poly xi2(const Poly& p) { return add(d(p, 1), times_var(d(p, 2), 0, 0.5)); }
Poly laplacian(const Poly& p) { return add(xi1(xi1(p)), xi2(xi2(p))); }
Poly euler(const Poly& p) {
    return add(add(times_var(d(p, 0), 0, 1.0), times_var(d(p, 1), 1, 1.0)), times_var(d(p, 2), 2, 2.0));
}

double eval(const Poly& p, const GroupElement& x) {
    double v = 0.0;
    for (const auto& [m, c] : p) {
        v += c * std::pow(x[0], m[0]) * std::pow(x[1], m[1]) * std::pow(x[2], m[2]);
    }
    return v;
}

ScalarField to_field(const Poly& p) {
    ScalarField f = ScalarField::constant(0.0);
    for (const auto& [m, c] : p) {
        ScalarField term = ScalarField::constant(c);
        for (int i = 0; i < 3; ++i) {
            for (int k = 0; k < m[i]; ++k) {
                term = term * ScalarField::variable(i);
            }
        }
        f = f + term;
    }
    return f;
}

Poly random_poly(std::mt19937_64& rng, int max_degree) {
    std::uniform_int_distribution<int> deg(0, max_degree);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    Poly p;
    for (int t = 0; t < 6; ++t) {
        Mono m{0, 0, 0};
        int budget = deg(rng);
        for (int i = 0; i < budget; ++i) {
            m[std::uniform_int_distribution<int>(0, 2)(rng)] += 1;
        }
        p[m] += coef(rng);
    }
    return p;
}

GroupElement random_point(int dim, std::mt19937_64& rng, double scale = 1.5) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> x(dim);
    for (auto& v : x) {
        v = u(rng);
    }
    return GroupElement(x);
}

std::vector<double> unit(int dim, int i) {
    std::vector<double> v(dim, 0.0);
    v[i] = 1.0;
    return v;
}

const CarnotGroup& h3() {
    static const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    return g;
}

ScalarField x(int i) { return ScalarField::variable(i); }
ScalarField k(double c) { return ScalarField::constant(c); }

double at(const ScalarField& f, std::vector<double> p) { return f(p); }

}  // namespace

TEST_CASE("Jet2 arithmetic follows Leibniz and chain rules") {
    // u(t) = 1 + 2t + 1.5t^2, v(t) = 3 - t + 2t^2 as jets (value, u', u'').
    const Jet2 u{1.0, 2.0, 3.0};
    const Jet2 v{3.0, -1.0, 4.0};
    const Jet2 p = u * v;
    CHECK(p.v == 3.0);
    CHECK(p.d1 == doctest::Approx(2.0 * 3.0 + 1.0 * -1.0));
    CHECK(p.d2 == doctest::Approx(3.0 * 3.0 + 2.0 * 2.0 * -1.0 + 1.0 * 4.0));
    const Jet2 q = u / v;
    // (u/v)' = (u'v - uv')/v^2; (u/v)'' from the quotient rule twice.
    const double q1 = (2.0 * 3.0 - 1.0 * -1.0) / 9.0;
    const double q2 = (3.0 * 3.0 - 1.0 * 4.0) / 9.0 - 2.0 * (2.0 * 3.0 - 1.0 * -1.0) * -1.0 / 27.0;
    CHECK(q.d1 == doctest::Approx(q1));
    CHECK(q.d2 == doctest::Approx(q2));
    const Jet2 e = exp(u);
    CHECK(e.d1 == doctest::Approx(std::exp(1.0) * 2.0));
    CHECK(e.d2 == doctest::Approx(std::exp(1.0) * (3.0 + 4.0)));
    const Jet2 l = log(v);
    CHECK(l.d1 == doctest::Approx(-1.0 / 3.0));
    CHECK(l.d2 == doctest::Approx(4.0 / 3.0 - 1.0 / 9.0));
    const Jet2 c = pow(u, 3.0);
    CHECK(c.d1 == doctest::Approx(3.0 * 2.0));
    CHECK(c.d2 == doctest::Approx(6.0 * 4.0 + 3.0 * 3.0));
    const Jet2 r = pow(v, 0.5);
    CHECK(r.d1 == doctest::Approx(0.5 / std::sqrt(3.0) * -1.0));
    CHECK(r.d2 == doctest::Approx(-0.25 * std::pow(3.0, -1.5) * 1.0 + 0.5 / std::sqrt(3.0) * 4.0));
}

TEST_CASE("left-invariant derivative examples on H^3") {
    const auto& g = h3();
    const auto j = left_invariant_derivative(g, x(2), unit(3, 0), {0, 1, 0});
    CHECK(j.d1 == doctest::Approx(-0.5));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto p = random_point(3, rng);
        const auto jj = left_invariant_derivative(g, x(0) * x(0), unit(3, 0), p);
        CHECK(jj.v == doctest::Approx(p[0] * p[0]));
        CHECK(jj.d1 == doctest::Approx(2.0 * p[0]));
        CHECK(jj.d2 == doctest::Approx(2.0));
    }
}

TEST_CASE("right-invariant derivative examples") {
    const auto& g = h3();
    CHECK(right_invariant_derivative(g, x(2), unit(3, 0), {0, 1, 0}).d1 == doctest::Approx(0.5));
    std::mt19937_64 rng(2);
    const CarnotGroup r3(builtin_algebra("euclidean(3)"));
    const ScalarField f = (x(0) * x(1) + x(2)).exp() + x(1) * x(1) * x(2);
    for (int i = 0; i < 50; ++i) {
        const auto p = random_point(3, rng);
        const auto xi = random_point(3, rng).vector();
        const auto a = left_invariant_derivative(r3, f, xi, p);
        const auto b = right_invariant_derivative(r3, f, xi, p);
        CHECK(a.d1 == doctest::Approx(b.d1));
        CHECK(a.d2 == doctest::Approx(b.d2));
        // On H^3 they agree at the identity only.
        const auto c = left_invariant_derivative(g, f, xi, g.identity());
        const auto e = right_invariant_derivative(g, f, xi, g.identity());
        CHECK(c.d1 == doctest::Approx(e.d1));
        CHECK(c.d2 == doctest::Approx(e.d2));
    }
    const GroupElement p{0.3, 0.8, 0.1};
    CHECK(left_invariant_derivative(g, x(2), unit(3, 0), p).d1 !=
          doctest::Approx(right_invariant_derivative(g, x(2), unit(3, 0), p).d1));
}

TEST_CASE("closed forms on H^3 at 1e3 random points") {
    const auto& g = h3();
    std::mt19937_64 rng(3);
    const ScalarField x3sq = x(2) * x(2);
    const ScalarField hom = x(0) * x(1) + x(2);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_point(3, rng);
        const double r2 = p[0] * p[0] + p[1] * p[1];
        worst = std::max(worst, std::abs(sub_laplacian(g, x3sq, p) - r2 / 2.0));
        worst = std::max(worst, std::abs(sub_gradient_sq(g, x(2), p) - r2 / 4.0));
        worst = std::max(worst, std::abs(euler_derivative(g, hom, p) - 2.0 * hom(p.coords())));
        worst = std::max(worst, std::abs(sub_gradient_sq(g, x(0), p) - 1.0));
        worst = std::max(worst, std::abs(sub_laplacian(g, x(0) * x(0), p) - 2.0));
        worst = std::max(worst, std::abs(sub_gradient_sq(g, ScalarField::constant(4.0), p)));
        worst = std::max(worst, std::abs(euler_derivative(g, ScalarField::constant(4.0), p)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("jets match symbolic operators on random polynomials") {
    const auto& g = h3();
    std::mt19937_64 rng(4);
    double worst = 0.0;
    for (int rep = 0; rep < 40; ++rep) {
        const Poly p = random_poly(rng, 4);
        const ScalarField f = to_field(p);
        const Poly lap = laplacian(p);
        const Poly eul = euler(p);
        const Poly grad_sq = add(mul(xi1(p), xi1(p)), mul(xi2(p), xi2(p)));
        for (int i = 0; i < 25; ++i) {
            const auto pt = random_point(3, rng, 1.0);
            worst = std::max(worst, std::abs(sub_laplacian(g, f, pt) - eval(lap, pt)));
            worst = std::max(worst, std::abs(euler_derivative(g, f, pt) - eval(eul, pt)));
            worst = std::max(worst, std::abs(sub_gradient_sq(g, f, pt) - eval(grad_sq, pt)));
            worst = std::max(worst, std::abs(left_invariant_derivative(g, f, unit(3, 1), pt).d1 - eval(xi2(p), pt)));
            worst = std::max(worst, std::abs(left_invariant_derivative(g, f, unit(3, 0), pt).d2 - eval(xi1(xi1(p)), pt)));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("Euler field: curve and coordinate formulas agree") {
    std::mt19937_64 rng(5);
    for (const char* name : {"heisenberg(2)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        const int n = g.dimension();
        ScalarField f = (x(0) * x(n - 1) + x(1)).exp() + x(n - 2) * x(n - 2) * x(0);
        for (int i = 0; i < 200; ++i) {
            const auto p = random_point(n, rng);
            CHECK(std::abs(euler_derivative(g, f, p) - euler_derivative_coordinates(g, f, p)) < 1e-12 * (1 + std::abs(f(p.coords()))));
        }
    }
    const CarnotGroup r1(builtin_algebra("euclidean(1)"));
    const double a = 1.3;
    const ScalarField e = (k(a) * x(0)).exp();
    for (double t : {-1.0, 0.0, 0.4, 2.0}) {
        CHECK(euler_derivative(r1, e, {t}) == doctest::Approx(a * t * std::exp(a * t)));
    }
}

TEST_CASE("sub-Laplacian commutes with dilation up to lambda^2") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> lam(0.3, 2.5);
    for (const char* name : {"heisenberg(1)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        const int n = g.dimension();
        const ScalarField f = (x(0) - x(n - 1) * k(0.5)).exp() * (x(1) * x(1) + k(1.0));
        for (int i = 0; i < 200; ++i) {
            const double l = lam(rng);
            const auto p = random_point(n, rng, 1.0);
            const double lhs = sub_laplacian(g, f.dilated(g.algebra(), l), p);
            const double rhs = l * l * sub_laplacian(g, f, g.dilate(l, p));
            CHECK(std::abs(lhs - rhs) < 1e-10 * (1 + std::abs(rhs)));
        }
    }
}

TEST_CASE("xi~(f o delta) = lambda^j (xi~ f) o delta for xi in V_j") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lam(0.3, 2.5);
    const CarnotGroup g(builtin_algebra("engel"));
    const auto& alg = g.algebra();
    const ScalarField f = (x(0) * x(2) + x(3) - x(1)).exp() + x(2) * x(3);
    double worst = 0.0;
    for (int i = 0; i < 300; ++i) {
        const double l = lam(rng);
        const auto p = random_point(4, rng, 1.0);
        for (int b = 0; b < 4; ++b) {
            const double lhs = left_invariant_derivative(g, f.dilated(alg, l), unit(4, b), p).d1;
            const double rhs = std::pow(l, alg.layer_of(b)) * left_invariant_derivative(g, f, unit(4, b), g.dilate(l, p)).d1;
            worst = std::max(worst, std::abs(lhs - rhs) / (1 + std::abs(rhs)));
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("left-invariant field coefficients are homogeneous polynomials") {
    // a_i(x) = xi~_b x_i must be a polynomial of degree layer(i) - layer(b):
    // finite differences of that order + 1 vanish along any line, and
    // a_i(delta_l x) = l^{layer(i) - layer(b)} a_i(x).
    std::mt19937_64 rng(8);
    const CarnotGroup g(builtin_algebra("engel"));
    const auto& alg = g.algebra();
    for (int rep = 0; rep < 50; ++rep) {
        const auto base = random_point(4, rng, 1.0);
        const auto dir = random_point(4, rng, 1.0);
        for (int b = 0; b < 4; ++b) {
            for (int i = 0; i < 4; ++i) {
                const int degree = alg.layer_of(i) - alg.layer_of(b);
                auto coef = [&](double t) {
                    auto p = base;
                    for (int k = 0; k < 4; ++k) {
                        p[k] += t * dir[k];
                    }
                    return left_invariant_derivative(g, x(i), unit(4, b), p).d1;
                };
                if (degree < 0) {
                    CHECK(std::abs(coef(0.0)) < 1e-15);
                    continue;
                }
                // (degree+1)-th forward difference with unit spacing.
                double diff = 0.0;
                const int m = degree + 1;
                double binom = 1.0;
                for (int k = 0; k <= m; ++k) {
                    diff += ((m - k) % 2 == 0 ? 1.0 : -1.0) * binom * coef(k);
                    binom = binom * (m - k) / (k + 1);
                }
                CHECK(std::abs(diff) < 1e-10);
                const double l = 1.7;
                const double scaled = left_invariant_derivative(g, x(i), unit(4, b), g.dilate(l, base)).d1;
                CHECK(std::abs(scaled - std::pow(l, degree) * coef(0.0)) < 1e-12);
            }
        }
    }
}

TEST_CASE("Leibniz rule for the sub-Laplacian") {
    std::mt19937_64 rng(9);
    const auto& g = h3();
    DerivativeEvaluator ev(g);
    for (int rep = 0; rep < 20; ++rep) {
        const ScalarField f = to_field(random_poly(rng, 3));
        const ScalarField h = to_field(random_poly(rng, 3));
        for (int i = 0; i < 20; ++i) {
            const auto p = random_point(3, rng, 1.0);
            const auto df = ev.evaluate(f, p.coords());
            const auto dh = ev.evaluate(h, p.coords());
            const auto dfh = ev.evaluate(f * h, p.coords());
            double inner = 0.0;
            for (std::size_t k = 0; k < df.gradient.size(); ++k) {
                inner += df.gradient[k] * dh.gradient[k];
            }
            const double rhs = df.value * dh.laplacian + dh.value * df.laplacian + 2.0 * inner;
            CHECK(std::abs(dfh.laplacian - rhs) < 1e-11);
        }
    }
}

TEST_CASE("gradient uses the orthonormal frame of a non-identity metric") {
    // metric diag(4, 1): orthonormal frame (xi_1/2, xi_2), so |grad x1|^2 = 1/4.
    const auto alg = StratifiedAlgebra::from_json(nlohmann::json::parse(
        R"({"layer_dims": [2, 1], "brackets": [[[1,1],[1,2],[[2,1],1]]], "metric_v1": [[4, 0], [0, 1]]})"));
    const CarnotGroup g(alg);
    CHECK(sub_gradient_sq(g, x(0), {0.3, 0.2, 0.1}) == doctest::Approx(0.25));
    CHECK(sub_laplacian(g, x(0) * x(0) + x(1) * x(1), {0.3, 0.2, 0.1}) == doctest::Approx(0.5 + 2.0));
}

TEST_CASE("dilation pullback") {
    const auto& g = h3();
    const ScalarField f = x(0) * x(1) + x(2).exp();
    const GroupElement p{0.4, -1.2, 0.7};
    CHECK(dilation_pullback(g, f, 0.0)(p.coords()) == f(p.coords()));
    CHECK(dilation_pullback(g, x(2), std::log(2.0))(p.coords()) == doctest::Approx(p[2] / 4.0));
    const double a = dilation_pullback(g, dilation_pullback(g, f, 0.3), 0.5)(p.coords());
    const double b = dilation_pullback(g, f, 0.8)(p.coords());
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
    const CarnotGroup r1(builtin_algebra("euclidean(1)"));
    const double t = 0.35;
    CHECK(dilation_pullback(r1, (k(2.0) * x(0)).exp(), t)(std::vector<double>{0.9}) == doctest::Approx(std::exp(2.0 * std::exp(-t) * 0.9)));
}

TEST_CASE("field parser") {
    const auto& alg = h3().algebra();
    const auto f = parse_field("(exp (+ (* a x_1_1) (* b x_1_2)))", alg, {{"a", 0.5}, {"b", -2.0}});
    const GroupElement p{1.0, 0.25, 3.0};
    CHECK(f(p.coords()) == doctest::Approx(std::exp(0.5 - 0.5)));
    CHECK(parse_field("(+ (* x_1_1 x_1_2) x_2_1 5)", alg)(p.coords()) == doctest::Approx(0.25 + 3.0 + 5.0));
    CHECK(parse_field("(^ x_2_1 2)", alg)(p.coords()) == doctest::Approx(9.0));
    CHECK(parse_field("(pow x_2_1 0.5)", alg)(p.coords()) == doctest::Approx(std::sqrt(3.0)));
    CHECK(parse_field("(/ (- x_2_1 1) 4)", alg)(p.coords()) == doctest::Approx(0.5));
    CHECK(parse_field("(log x_2_1)", alg)(p.coords()) == doctest::Approx(std::log(3.0)));
    CHECK(parse_field("-2.5e-1", alg)(p.coords()) == -0.25);
    CHECK_THROWS_AS(parse_field("(exp x_3_1)", alg), StructuralError);
    CHECK_THROWS_AS(parse_field("(exp (* c x_1_1))", alg), StructuralError);
    CHECK_THROWS_AS(parse_field("(exp x_1_1", alg), StructuralError);
    CHECK_THROWS_AS(parse_field("(sin x_1_1)", alg), StructuralError);
    CHECK(parse_field("(exp x_1_1)", alg).known_positive());
    CHECK_FALSE(parse_field("(+ x_1_1 1)", alg).known_positive());
}

TEST_CASE("domain errors are raised at evaluation") {
    const auto& g = h3();
    const ScalarField f = x(0).log();
    CHECK_THROWS_AS(at(f, {-1.0, 0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(sub_laplacian(g, f, {-1.0, 0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(at(x(0).pow(0.5), {-0.1, 0.0, 0.0}), DomainError);
    CHECK_NOTHROW(at(x(0).pow(2.0), {-0.1, 0.0, 0.0}));
}
