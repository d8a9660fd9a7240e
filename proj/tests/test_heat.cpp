#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "carnot/errors.hpp"
#include "carnot/heat.hpp"
#include "carnot/parallel.hpp"
#include "carnot/rng.hpp"
#include "carnot/stats.hpp"

using namespace carnot;

namespace {

HeatParams params(double s, std::size_t n, std::size_t steps, std::uint64_t seed) {
    HeatParams p;
    p.s = s;
    p.n_samples = n;
    p.n_steps = steps;
    p.seed = seed;
    return p;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double var_se = 0.0;
};

Moments moments(const std::vector<double>& v) {
    const auto n = static_cast<double>(v.size());
    Moments m;
    for (double x : v) {
        m.mean += x;
    }
    m.mean /= n;
    std::vector<double> sq;
    for (double x : v) {
        sq.push_back((x - m.mean) * (x - m.mean));
    }
    for (double q : sq) {
        m.var += q;
    }
    m.var /= n;
    double v4 = 0.0;
    for (double q : sq) {
        v4 += (q - m.var) * (q - m.var);
    }
    m.var_se = std::sqrt(v4 / n / n);
    return m;
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32(0)(C{0, 0, 0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32(~std::uint64_t{0})(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    const std::uint64_t key = 0xa4093822u | (std::uint64_t{0x299f31d0u} << 32);
    CHECK(Philox4x32(key)(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal stream moments") {
    NormalStream z(3, 0, 0);
    std::vector<double> v(200000);
    for (auto& x : v) {
        x = z.next();
    }
    const auto m = moments(v);
    CHECK(std::abs(m.mean) < 4.0 / std::sqrt(200000.0));
    CHECK(std::abs(m.var - 1.0) < 4.0 * m.var_se);
    CHECK(stats::ks_test_normal(v, 1.0).p_value > 0.01);
}

TEST_CASE("batches are identical for any worker count") {
    const CarnotGroup g(builtin_algebra("engel"));
    for (std::size_t steps : {64, 48}) {
        const auto p = params(1.0, 3000, steps, 77);
        set_thread_count(1);
        const auto a = sample_heat(g, p);
        set_thread_count(4);
        const auto b = sample_heat(g, p);
        set_thread_count(8);
        const auto c = sample_heat(g, p);
        set_thread_count(0);
        CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end()));
        CHECK(std::equal(a.data().begin(), a.data().end(), c.data().begin(), c.data().end()));
    }
}

TEST_CASE("R^1 at s = 2 is standard normal") {
    const CarnotGroup g(builtin_algebra("euclidean(1)"));
    const auto batch = sample_heat(g, params(2.0, 100000, 16, 5));
    const auto m = moments(batch.coordinate(0));
    CHECK(std::abs(m.var - 1.0) < 3.0 * m.var_se);
    CHECK(std::abs(m.mean) < 4.0 / std::sqrt(1e5));
}

TEST_CASE("first-layer marginals pass KS on every builtin") {
    for (const char* name : {"euclidean(1)", "euclidean(3)", "heisenberg(1)", "heisenberg(2)", "engel"}) {
        CAPTURE(name);
        const CarnotGroup g(builtin_algebra(name));
        for (std::size_t steps : {1, 32, 100}) {
            const auto batch = sample_heat(g, params(1.5, 20000, steps, 31));
            CHECK(check_first_layer_marginals(batch).min_p_value > 0.01);
        }
    }
}

TEST_CASE("marginal check detects the wrong variance") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    const auto batch = sample_heat(g, params(1.0, 20000, 16, 2));
    const HeatSampleBatch mislabeled(g, params(2.0, 20000, 16, 2), std::vector<double>(batch.data().begin(), batch.data().end()));
    CHECK(check_first_layer_marginals(mislabeled).min_p_value < 1e-6);
}

TEST_CASE("dyadic refinement keeps the endpoint") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    const auto coarse = sample_heat(g, params(1.0, 500, 4, 9));
    const auto fine = sample_heat(g, params(1.0, 500, 1024, 9));
    const auto odd = sample_heat(g, params(1.0, 500, 37, 9));
    double worst = 0.0;
    for (std::size_t i = 0; i < 500; ++i) {
        for (int c = 0; c < 2; ++c) {
            worst = std::max(worst, std::abs(coarse.row(i)[c] - fine.row(i)[c]));
            worst = std::max(worst, std::abs(coarse.row(i)[c] - odd.row(i)[c]));
        }
    }
    CHECK(worst < 1e-12);
    // Different seeds give different paths.
    const auto other = sample_heat(g, params(1.0, 500, 4, 10));
    CHECK(other.row(0)[0] != coarse.row(0)[0]);
}

TEST_CASE("Levy area variance of the discrete walk") {
    // With K steps the BCH walk's x3 is the Levy area of the piecewise-linear
    // path: Var = (s^2/16)(1 - 1/K), tending to s^2/16.
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    for (std::size_t steps : {8, 64}) {
        CAPTURE(steps);
        const double s = 1.5;
        const auto batch = sample_heat(g, params(s, 100000, steps, 21));
        const auto m = moments(batch.coordinate(2));
        const double oracle = s * s / 16.0 * (1.0 - 1.0 / static_cast<double>(steps));
        CHECK(std::abs(m.var - oracle) < 4.0 * m.var_se);
        CHECK(std::abs(m.mean) < 4.0 * std::sqrt(m.var / 1e5));
    }
}

TEST_CASE("inverse symmetry, shift control and scaling") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    const auto batch = sample_heat(g, params(1.0, 20000, 64, 41));
    CHECK(empirical_check_inverse_symmetry(batch).verdict == Verdict::holds);
    const auto shifted = batch.right_translated({1, 0, 0});
    CHECK(empirical_check_inverse_symmetry(shifted).verdict == Verdict::violated);

    const CarnotGroup r2(builtin_algebra("euclidean(2)"));
    CHECK(empirical_check_inverse_symmetry(sample_heat(r2, params(1.0, 20000, 1, 3))).verdict == Verdict::holds);

    const auto big = sample_heat(g, params(4.0, 20000, 64, 43));
    const auto small = sample_heat(g, params(1.0, 20000, 64, 44));
    CHECK(empirical_check_scaling(big, 2.0, small).verdict == Verdict::holds);
    CHECK(empirical_check_scaling(small, 1.0, batch).verdict == Verdict::holds);
    // Comparing against the wrong time fails as a parameter error; a wrong
    // lambda with matching time label is caught statistically.
    CHECK_THROWS_AS(empirical_check_scaling(big, 2.0, big), ParameterError);
    const HeatSampleBatch relabeled(g, params(1.0, 20000, 64, 43), std::vector<double>(big.data().begin(), big.data().end()));
    CHECK(empirical_check_scaling(big, 2.0, relabeled).verdict == Verdict::violated);
}

TEST_CASE("R^1 dilation scales the variance") {
    const CarnotGroup g(builtin_algebra("euclidean(1)"));
    const auto batch = sample_heat(g, params(2.0, 50000, 1, 8));
    const auto m = moments(batch.dilated(0.5).coordinate(0));
    CHECK(std::abs(m.var - 2.0 / (2.0 * 4.0)) < 4.0 * m.var_se);
}

TEST_CASE("tail profile matches the exact Gaussian tail on R^1") {
    const CarnotGroup g(builtin_algebra("euclidean(1)"));
    const auto batch = sample_heat(g, params(2.0, 200000, 1, 12));
    const auto t = empirical_tail_profile(batch);
    CHECK(t.passed);
    // Oracle: the same fit applied to log P(|Z| > r) = log erfc(r / sqrt 2).
    std::vector<double> exact;
    for (double r : t.radii) {
        exact.push_back(std::log(std::erfc(r / std::sqrt(2.0))));
    }
    const auto oracle = fit_tail_profile(t.radii, exact, 2.0);
    CHECK(std::abs(t.kappa.value - oracle.kappa.value) < 0.2 * oracle.kappa.value);
}

TEST_CASE("tail profile on H^3 shows Gaussian decay") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    const auto t = empirical_tail_profile(sample_heat(g, params(1.0, 50000, 64, 13)));
    CHECK(t.passed);
    CHECK(t.kappa.value > 0.0);
    CHECK(t.as_check().verdict == Verdict::holds);
}

TEST_CASE("heavy-tailed control fails the tail profile") {
    const CarnotGroup g(builtin_algebra("euclidean(1)"));
    std::mt19937_64 rng(14);
    std::cauchy_distribution<double> cauchy;
    std::vector<double> data(50000);
    for (auto& x : data) {
        x = cauchy(rng);
    }
    const HeatSampleBatch batch(g, params(2.0, 50000, 1, 0), data);
    CHECK_FALSE(empirical_tail_profile(batch).passed);
    CHECK_THROWS_AS(empirical_tail_profile(HeatSampleBatch(g, params(2.0, 100, 1, 0), std::vector<double>(100, 0.0))),
                    ParameterError);
}

TEST_CASE("CSV and binary round trips") {
    const CarnotGroup g(builtin_algebra("engel"));
    auto p = params(0.7, 50, 8, 15);
    const auto batch = sample_heat(g, p);
    std::stringstream csv;
    batch.write_csv(csv);
    CHECK(csv.str().rfind("x_1_1,x_1_2,x_2_1,x_3_1\n", 0) == 0);
    const auto from_csv = HeatSampleBatch::read_csv(csv, g, p);
    CHECK(std::equal(batch.data().begin(), batch.data().end(), from_csv.data().begin(), from_csv.data().end()));

    std::stringstream bin;
    batch.write_binary(bin);
    const auto from_bin = HeatSampleBatch::read_binary(bin, g, p);
    CHECK(std::equal(batch.data().begin(), batch.data().end(), from_bin.data().begin(), from_bin.data().end()));

    auto tp = params(2.0, 20, 1, 4);
    tp.tilt = {1.0};
    const CarnotGroup r1(builtin_algebra("euclidean(1)"));
    const auto tilted = sample_heat(r1, tp);
    std::stringstream tcsv;
    tilted.write_csv(tcsv);
    const auto tback = HeatSampleBatch::read_csv(tcsv, r1, tp);
    REQUIRE(tback.weighted());
    CHECK(std::equal(tilted.log_weights().begin(), tilted.log_weights().end(), tback.log_weights().begin()));

    std::stringstream wrong("x_1_1,x_1_2,x_2_2,x_3_1\n1,2,3,4\n");
    CHECK_THROWS_AS(HeatSampleBatch::read_csv(wrong, g, p), StructuralError);
    std::stringstream junk("NOTMAGIC");
    CHECK_THROWS_AS(HeatSampleBatch::read_binary(junk, g, p), StructuralError);
}

TEST_CASE("importance tilt keeps weighted means unbiased") {
    const CarnotGroup g(builtin_algebra("euclidean(1)"));
    auto p = params(2.0, 200000, 1, 16);
    p.tilt = {1.0};
    const auto batch = sample_heat(g, p);
    std::vector<double> w(batch.size());
    std::vector<double> wx(batch.size());
    std::vector<double> wexp(batch.size());
    std::vector<double> wexp2(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double x = batch.row(i)[0];
        w[i] = batch.weight(i);
        wx[i] = w[i] * x;
        wexp[i] = w[i] * std::exp(x);
        wexp2[i] = w[i] * std::exp(2.0 * x);
    }
    const stats::ColumnMoments cm({w, wx, wexp, wexp2});
    CHECK(std::abs(cm.mean(0) - 1.0) < 4.0 * cm.stderr_of_mean(0));
    CHECK(std::abs(cm.mean(1)) < 4.0 * cm.stderr_of_mean(1));
    // Tilt mu = 1 is the zero-variance choice for e^x: every weighted term is e^{1/2}.
    CHECK(std::abs(cm.mean(2) - std::exp(0.5)) < 1e-12);
    CHECK(std::abs(cm.mean(3) - std::exp(2.0)) < 4.0 * cm.stderr_of_mean(3));
    // The tilted endpoint itself has mean mu.
    const auto raw = moments(batch.coordinate(0));
    CHECK(std::abs(raw.mean - 1.0) < 4.0 * std::sqrt(1.0 / 2e5));
}

TEST_CASE("tilted batches are rejected by the law diagnostics") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    auto p = params(1.0, 100, 4, 1);
    p.tilt = {0.5, 0.0};
    const auto batch = sample_heat(g, p);
    CHECK_THROWS_AS(empirical_check_inverse_symmetry(batch), ParameterError);
}

TEST_CASE("heat parameter validation") {
    const CarnotGroup g(builtin_algebra("heisenberg(1)"));
    CHECK_THROWS_AS(sample_heat(g, params(0.0, 10, 4, 1)), ParameterError);
    CHECK_THROWS_AS(sample_heat(g, params(-1.0, 10, 4, 1)), ParameterError);
    CHECK_THROWS_AS(sample_heat(g, params(1.0, 0, 4, 1)), ParameterError);
    CHECK_THROWS_AS(sample_heat(g, params(1.0, 10, 0, 1)), ParameterError);
    auto p = params(1.0, 10, 4, 1);
    p.tilt = {1.0};
    CHECK_THROWS_AS(sample_heat(g, p), ParameterError);
    CHECK_THROWS_AS(HeatParams::from_json(nlohmann::json{{"s", 1}, {"samples", 5}}), StructuralError);
    const auto back = HeatParams::from_json(params(0.5, 7, 3, 99).to_json());
    CHECK(back.s == 0.5);
    CHECK(back.n_samples == 7);
    CHECK(back.n_steps == 3);
    CHECK(back.seed == 99);
}
