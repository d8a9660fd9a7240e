#include <doctest.h>

#include <cmath>
#include <random>

#include "carnot/errors.hpp"
#include "carnot/group.hpp"

using namespace carnot;

namespace {

GroupElement random_element(const CarnotGroup& g, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> x(g.dimension());
    for (auto& v : x) {
        v = u(rng);
    }
    return GroupElement(x);
}

// Exact law of the Heisenberg group in exponential coordinates.
GroupElement heisenberg_law(const GroupElement& x, const GroupElement& y) {
    return {x[0] + y[0], x[1] + y[1], x[2] + y[2] + 0.5 * (x[0] * y[1] - x[1] * y[0])};
}

Eigen::VectorXd vec(const GroupElement& x) { return Eigen::Map<const Eigen::VectorXd>(x.vector().data(), x.size()); }

}  // namespace

TEST_CASE("heisenberg product examples") {
    const CarnotGroup h(builtin_algebra("heisenberg(1)"));
    CHECK(h.multiply({1, 0, 0}, {0, 1, 0}) == GroupElement{1, 1, 0.5});
    const auto c = h.multiply(h.multiply(h.multiply({1, 0, 0}, {0, 1, 0}), {-1, 0, 0}), {0, -1, 0});
    CHECK(c.max_abs_diff({0, 0, 1}) < 1e-15);
    CHECK(h.inverse({1, 2, 3}) == GroupElement{-1, -2, -3});
    CHECK(h.inverse(h.identity()) == h.identity());
    CHECK(h.dilate(2.0, {1, 1, 1}) == GroupElement{2, 2, 4});
    CHECK(h.homogeneous_norm(h.identity()) == 0.0);
    CHECK(h.homogeneous_norm({0, 0, 4}) == 2.0);
}

TEST_CASE("identity and inverse on every builtin") {
    std::mt19937_64 rng(11);
    for (const char* name : {"euclidean(3)", "heisenberg(1)", "heisenberg(2)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        for (int i = 0; i < 200; ++i) {
            const auto x = random_element(g, rng, 3.0);
            CHECK(g.multiply(x, g.identity()) == x);
            CHECK(g.multiply(g.identity(), x) == x);
            CHECK(g.multiply(x, g.inverse(x)).max_abs_diff(g.identity()) < 1e-12);
            CHECK(g.multiply(g.inverse(x), x).max_abs_diff(g.identity()) < 1e-12);
        }
    }
}

TEST_CASE("associativity over 1e4 random triples") {
    std::mt19937_64 rng(2024);
    for (const char* name : {"euclidean(3)", "heisenberg(1)", "heisenberg(2)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const auto x = random_element(g, rng);
            const auto y = random_element(g, rng);
            const auto z = random_element(g, rng);
            worst = std::max(worst,
                             g.multiply(g.multiply(x, y), z).max_abs_diff(g.multiply(x, g.multiply(y, z))));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("heisenberg matches the closed-form law") {
    std::mt19937_64 rng(7);
    const CarnotGroup h(builtin_algebra("heisenberg(1)"));
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto x = random_element(h, rng);
        const auto y = random_element(h, rng);
        worst = std::max(worst, h.multiply(x, y).max_abs_diff(heisenberg_law(x, y)));
    }
    CHECK(worst < 1e-14);
}

TEST_CASE("engel matches the third-order BCH formula") {
    // Independent oracle: x + y + [x,y]/2 + ([x,[x,y]] + [y,[y,x]])/12, brackets
    // taken straight from the structure constants.
    std::mt19937_64 rng(99);
    const auto alg = builtin_algebra("engel");
    const CarnotGroup g(alg);
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const auto x = random_element(g, rng, 2.0);
        const auto y = random_element(g, rng, 2.0);
        const Eigen::VectorXd a = vec(x);
        const Eigen::VectorXd b = vec(y);
        const Eigen::VectorXd ab = alg.bracket(a, b);
        const Eigen::VectorXd expected =
            a + b + 0.5 * ab + (alg.bracket(a, ab) + alg.bracket(b, alg.bracket(b, a))) / 12.0;
        worst = std::max(worst, (vec(g.multiply(x, y)) - expected).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("BCH table is truncated at the step") {
    for (const char* name : {"euclidean(2)", "heisenberg(2)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        CHECK(g.bch().max_degree() == g.algebra().step());
        for (const auto& t : g.bch().terms()) {
            CHECK(t.word.size() >= 2);
            CHECK(static_cast<int>(t.word.size()) <= g.algebra().step());
        }
        CHECK(g.bch().remainder_depends_only_on_lower_layers());
    }
    CHECK(CarnotGroup(builtin_algebra("euclidean(2)")).bch().terms().empty());
}

TEST_CASE("remainder only involves lower layers") {
    // (x*y)_{j,k} - x_{j,k} - y_{j,k} must not change when coordinates of layers >= j move.
    std::mt19937_64 rng(5);
    const CarnotGroup g(builtin_algebra("engel"));
    const auto& alg = g.algebra();
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = random_element(g, rng);
        const auto y = random_element(g, rng);
        const auto xy = g.multiply(x, y);
        for (int i = 0; i < g.dimension(); ++i) {
            auto x2 = x;
            auto y2 = y;
            for (int k = 0; k < g.dimension(); ++k) {
                if (alg.layer_of(k) >= alg.layer_of(i)) {
                    x2[k] += 0.7;
                    y2[k] -= 0.3;
                }
            }
            const auto xy2 = g.multiply(x2, y2);
            CHECK(std::abs((xy2[i] - x2[i] - y2[i]) - (xy[i] - x[i] - y[i])) < 1e-12);
        }
    }
}

TEST_CASE("dilations compose and are automorphisms") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lam(0.1, 3.0);
    for (const char* name : {"heisenberg(1)", "heisenberg(2)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        for (int i = 0; i < 500; ++i) {
            const double l = lam(rng);
            const double m = lam(rng);
            const auto x = random_element(g, rng);
            const auto y = random_element(g, rng);
            CHECK(g.dilate(l, g.dilate(m, x)).max_abs_diff(g.dilate(l * m, x)) < 1e-12);
            CHECK(g.dilate(l, g.multiply(x, y)).max_abs_diff(g.multiply(g.dilate(l, x), g.dilate(l, y))) < 1e-12);
            CHECK(g.homogeneous_norm(g.dilate(3.0, x)) == doctest::Approx(3.0 * g.homogeneous_norm(x)).epsilon(1e-14));
        }
        CHECK(g.dilate(0.0, random_element(g, rng)) == g.identity());
        CHECK_THROWS_AS(g.dilate(-1.0, g.identity()), ParameterError);
    }
}

TEST_CASE("dimension mismatch is rejected") {
    const CarnotGroup h(builtin_algebra("heisenberg(1)"));
    CHECK_THROWS_AS(h.multiply({1, 2}, {1, 2, 3}), StructuralError);
    CHECK_THROWS_AS(h.inverse({1, 2}), StructuralError);
    CHECK_THROWS_AS(h.dilate(2.0, {1, 2, 3, 4}), StructuralError);
}

TEST_CASE("Haar measure scales by lambda^D") {
    // Lebesgue volume of delta_lambda(B), B the coordinate unit ball: sample the
    // bounding box of delta_lambda(B) and pull points back by delta_{1/lambda}.
    std::mt19937_64 rng(17);
    for (const char* name : {"heisenberg(1)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        const int dim = g.dimension();
        const double lambda = 1.5;
        const auto w = g.dilation_weights(lambda);
        const int n = 200000;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        int hits_unit = 0;
        int hits_scaled = 0;
        for (int i = 0; i < n; ++i) {
            auto y = GroupElement::identity(dim);
            auto z = GroupElement::identity(dim);
            for (int k = 0; k < dim; ++k) {
                y[k] = u(rng) * w[k];
                z[k] = u(rng);
            }
            const auto back = g.dilate(1.0 / lambda, y);
            hits_scaled += vec(back).squaredNorm() <= 1.0;
            hits_unit += vec(z).squaredNorm() <= 1.0;
        }
        double box = 1.0;
        for (double wk : w) {
            box *= wk;
        }
        const double p1 = static_cast<double>(hits_unit) / n;
        const double p2 = static_cast<double>(hits_scaled) / n;
        const double ratio = box * p2 / p1;
        const double se = ratio * std::sqrt((1 - p1) / (n * p1) + (1 - p2) / (n * p2));
        CHECK(std::abs(ratio - std::pow(lambda, g.algebra().homogeneous_dimension())) < 4 * se);
    }
}

TEST_CASE("elements serialize as flat arrays") {
    const GroupElement x{1.5, -2, 0.25};
    CHECK(x.to_json().dump() == "[1.5,-2.0,0.25]");
    CHECK(GroupElement::from_json(x.to_json()) == x);
}
