#include "carnot/heat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "carnot/errors.hpp"
#include "carnot/parallel.hpp"
#include "carnot/rng.hpp"
#include "carnot/stats.hpp"

namespace carnot {

namespace {

constexpr std::uint32_t kSequentialBlock = 0x80000000u;
constexpr char kBinaryMagic[8] = {'C', 'A', 'R', 'N', 'O', 'T', 'B', '1'};

// Horizontal Brownian path in the orthonormal frame, variance rate 1/2,
// values at the K+1 grid times, row-major (K+1) x d.
void brownian_path(std::uint64_t seed, std::uint64_t path, std::size_t steps, std::size_t d, double s,
                   std::vector<double>& w) {
    w.assign((steps + 1) * d, 0.0);
    {
        NormalStream z(seed, path, 1);
        const double sd = std::sqrt(0.5 * s);
        for (std::size_t c = 0; c < d; ++c) {
            w[steps * d + c] = sd * z.next();
        }
    }
    const double h = s / static_cast<double>(steps);
    if (std::has_single_bit(steps)) {
        // Heap-ordered bisection: node id covers [i K/2^l, (i+1) K/2^l].
        for (std::size_t width = steps, level = 0; width > 1; width /= 2, ++level) {
            for (std::size_t i = 0; i < (steps / width); ++i) {
                const std::size_t a = i * width;
                const std::size_t b = a + width;
                const std::size_t mid = a + width / 2;
                const auto node = static_cast<std::uint32_t>((std::size_t{1} << level) + i);
                NormalStream z(seed, path, node + 1);
                const double sd = std::sqrt(static_cast<double>(width) * h / 8.0);
                for (std::size_t c = 0; c < d; ++c) {
                    w[mid * d + c] = 0.5 * (w[a * d + c] + w[b * d + c]) + sd * z.next();
                }
            }
        }
        return;
    }
    // Sequential bridge towards the fixed endpoint.
    for (std::size_t k = 0; k + 1 < steps; ++k) {
        NormalStream z(seed, path, kSequentialBlock | static_cast<std::uint32_t>(k));
        const double remaining = s - k * h;
        const double frac = h / remaining;
        const double sd = std::sqrt(0.5 * h * (remaining - h) / remaining);
        for (std::size_t c = 0; c < d; ++c) {
            const double cur = w[k * d + c];
            w[(k + 1) * d + c] = cur + (w[steps * d + c] - cur) * frac + sd * z.next();
        }
    }
}

std::vector<double> parse_row(const std::string& line) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            row.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw StructuralError("batch csv: bad number '" + cell + "'");
        }
    }
    return row;
}

CheckReport moment_part(std::string name, double diff_mean, double diff_se, const Thresholds& thr) {
    CheckReport part = equality_report(std::move(name), {0.0, 0.0}, {diff_mean, diff_se}, diff_se, thr);
    return part;
}

// Per-coordinate standardized, subsampled rows for energy tests.
std::vector<double> standardized(const std::vector<double>& rows, std::size_t dim, const std::vector<double>& sd) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double s = sd[i % dim];
        out[i] = s > 0.0 ? rows[i] / s : rows[i];
    }
    return out;
}

std::vector<double> coordinate_sd(const HeatSampleBatch& b) {
    std::vector<double> sd(b.dimension());
    for (std::size_t c = 0; c < b.dimension(); ++c) {
        auto col = b.coordinate(static_cast<int>(c));
        double m = pairwise_sum(col) / col.size();
        double v = 0.0;
        for (double x : col) {
            v += (x - m) * (x - m);
        }
        sd[c] = std::sqrt(v / std::max<std::size_t>(1, col.size() - 1));
    }
    return sd;
}

std::vector<double> subsample_rows(const HeatSampleBatch& b, std::size_t first, std::size_t count,
                                   const std::function<GroupElement(const GroupElement&)>& map) {
    std::vector<double> out;
    out.reserve(count * b.dimension());
    const std::size_t stride = std::max<std::size_t>(1, (b.size() / 2) / count);
    for (std::size_t k = 0; k < count; ++k) {
        const GroupElement g = map(b.element(std::min(b.size() - 1, first + k * stride)));
        out.insert(out.end(), g.coords().begin(), g.coords().end());
    }
    return out;
}

void require_unweighted(const HeatSampleBatch& b, const char* what) {
    if (b.weighted()) {
        throw ParameterError(std::string(what) + ": tilted batches are not supported");
    }
}

constexpr std::size_t kEnergySubsample = 400;
constexpr int kEnergyPermutations = 199;

}  // namespace

nlohmann::json HeatParams::to_json() const {
    nlohmann::json j{{"s", s}, {"n", n_samples}, {"steps", n_steps}, {"seed", seed}};
    if (!tilt.empty()) {
        j["tilt"] = tilt;
    }
    return j;
}

HeatParams HeatParams::from_json(const nlohmann::json& j) {
    HeatParams p;
    for (const auto& [key, value] : j.items()) {
        if (key == "s") {
            p.s = value.get<double>();
        } else if (key == "n") {
            p.n_samples = value.get<std::size_t>();
        } else if (key == "steps") {
            p.n_steps = value.get<std::size_t>();
        } else if (key == "seed") {
            p.seed = value.get<std::uint64_t>();
        } else if (key == "tilt") {
            p.tilt = value.get<std::vector<double>>();
        } else {
            throw StructuralError("heat parameters: unknown key '" + key + "'");
        }
    }
    return p;
}

void HeatParams::validate(const CarnotGroup& group) const {
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw ParameterError("heat: s must be positive and finite");
    }
    if (n_steps < 1 || n_steps > (std::size_t{1} << 30)) {
        throw ParameterError("heat: n_steps must be in [1, 2^30]");
    }
    if (n_samples < 1) {
        throw ParameterError("heat: n_samples must be >= 1");
    }
    if (!tilt.empty() && tilt.size() != static_cast<std::size_t>(group.algebra().horizontal_dimension())) {
        throw ParameterError("heat: tilt must have one entry per first-layer direction");
    }
    for (double t : tilt) {
        if (!std::isfinite(t)) {
            throw ParameterError("heat: tilt must be finite");
        }
    }
}

HeatSampleBatch::HeatSampleBatch(CarnotGroup group, HeatParams params, std::vector<double> data,
                                 std::vector<double> log_weights)
    : group_(std::move(group)),
      params_(std::move(params)),
      dim_(group_.dimension()),
      data_(std::move(data)),
      log_weights_(std::move(log_weights)) {
    if (data_.size() % dim_ != 0) {
        throw StructuralError("batch data is not a whole number of rows");
    }
    n_ = data_.size() / dim_;
    if (!log_weights_.empty() && log_weights_.size() != n_) {
        throw StructuralError("batch weights do not match sample count");
    }
    params_.n_samples = n_;
}

GroupElement HeatSampleBatch::element(std::size_t i) const {
    auto r = row(i);
    return GroupElement(std::vector<double>(r.begin(), r.end()));
}

std::vector<double> HeatSampleBatch::coordinate(int index) const {
    std::vector<double> col(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        col[i] = data_[i * dim_ + index];
    }
    return col;
}

double HeatSampleBatch::weight(std::size_t i) const { return weighted() ? std::exp(log_weights_[i]) : 1.0; }

HeatSampleBatch HeatSampleBatch::transformed(const std::function<GroupElement(const GroupElement&)>& map) const {
    std::vector<double> out(data_.size());
    parallel_for(n_, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const GroupElement g = map(element(i));
            std::copy(g.coords().begin(), g.coords().end(), out.begin() + i * dim_);
        }
    });
    return HeatSampleBatch(group_, params_, std::move(out), log_weights_);
}

HeatSampleBatch HeatSampleBatch::right_translated(const GroupElement& g) const {
    group_.check_element(g, "right_translated");
    return transformed([&](const GroupElement& x) { return group_.multiply(x, g); });
}

HeatSampleBatch HeatSampleBatch::dilated(double lambda) const {
    return transformed([&](const GroupElement& x) { return group_.dilate(lambda, x); });
}

HeatSampleBatch HeatSampleBatch::inverted() const {
    return transformed([&](const GroupElement& x) { return group_.inverse(x); });
}

void HeatSampleBatch::write_csv(std::ostream& out) const {
    for (std::size_t c = 0; c < dim_; ++c) {
        out << (c ? "," : "") << group_.algebra().coordinate_label(static_cast<int>(c));
    }
    if (weighted()) {
        out << ",log_weight";
    }
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t c = 0; c < dim_; ++c) {
            out << (c ? "," : "") << data_[i * dim_ + c];
        }
        if (weighted()) {
            out << ',' << log_weights_[i];
        }
        out << '\n';
    }
}

HeatSampleBatch HeatSampleBatch::read_csv(std::istream& in, const CarnotGroup& group, HeatParams params) {
    std::string header;
    if (!std::getline(in, header)) {
        throw StructuralError("batch csv: missing header");
    }
    std::vector<std::string> labels;
    {
        std::stringstream ss(header);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
                cell.pop_back();
            }
            labels.push_back(cell);
        }
    }
    const auto dim = static_cast<std::size_t>(group.dimension());
    const bool weighted = labels.size() == dim + 1 && labels.back() == "log_weight";
    if (labels.size() != dim + (weighted ? 1 : 0)) {
        throw StructuralError("batch csv: header has " + std::to_string(labels.size()) + " columns, expected " +
                              std::to_string(dim));
    }
    for (std::size_t c = 0; c < dim; ++c) {
        if (labels[c] != group.algebra().coordinate_label(static_cast<int>(c))) {
            throw StructuralError("batch csv: column " + std::to_string(c) + " is '" + labels[c] + "', expected '" +
                                  group.algebra().coordinate_label(static_cast<int>(c)) + "'");
        }
    }
    std::vector<double> data;
    std::vector<double> logw;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        auto row = parse_row(line);
        if (row.size() != labels.size()) {
            throw StructuralError("batch csv: row with " + std::to_string(row.size()) + " cells");
        }
        data.insert(data.end(), row.begin(), row.begin() + dim);
        if (weighted) {
            logw.push_back(row.back());
        }
    }
    return HeatSampleBatch(group, std::move(params), std::move(data), std::move(logw));
}

void HeatSampleBatch::write_binary(std::ostream& out) const {
    static_assert(std::endian::native == std::endian::little, "binary batch format is little-endian");
    out.write(kBinaryMagic, sizeof kBinaryMagic);
    const auto dim = static_cast<std::uint32_t>(dim_);
    const auto n = static_cast<std::uint64_t>(n_);
    const std::uint32_t w = weighted() ? 1 : 0;
    const double s = params_.s;
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&w), sizeof w);
    out.write(reinterpret_cast<const char*>(&s), sizeof s);
    out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size() * sizeof(double)));
    if (weighted()) {
        out.write(reinterpret_cast<const char*>(log_weights_.data()),
                  static_cast<std::streamsize>(log_weights_.size() * sizeof(double)));
    }
}

HeatSampleBatch HeatSampleBatch::read_binary(std::istream& in, const CarnotGroup& group, HeatParams params) {
    char magic[8];
    std::uint32_t dim = 0;
    std::uint64_t n = 0;
    std::uint32_t w = 0;
    double s = 0.0;
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) {
        throw StructuralError("batch binary: bad magic");
    }
    in.read(reinterpret_cast<char*>(&dim), sizeof dim);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&w), sizeof w);
    in.read(reinterpret_cast<char*>(&s), sizeof s);
    if (!in || dim != static_cast<std::uint32_t>(group.dimension())) {
        throw StructuralError("batch binary: dimension does not match the algebra");
    }
    std::vector<double> data(static_cast<std::size_t>(n) * dim);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    std::vector<double> logw;
    if (w) {
        logw.resize(n);
        in.read(reinterpret_cast<char*>(logw.data()), static_cast<std::streamsize>(logw.size() * sizeof(double)));
    }
    if (!in) {
        throw StructuralError("batch binary: truncated file");
    }
    params.s = s;
    return HeatSampleBatch(group, std::move(params), std::move(data), std::move(logw));
}

HeatSampleBatch HeatSampleBatch::load(const std::string& path, const CarnotGroup& group, HeatParams params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StructuralError("cannot open batch file '" + path + "'");
    }
    char magic[8] = {};
    in.read(magic, sizeof magic);
    in.clear();
    in.seekg(0);
    if (std::memcmp(magic, kBinaryMagic, sizeof magic) == 0) {
        return read_binary(in, group, std::move(params));
    }
    return read_csv(in, group, std::move(params));
}

HeatSampleBatch sample_heat(const CarnotGroup& group, const HeatParams& params) {
    params.validate(group);
    const auto& alg = group.algebra();
    const auto dim = static_cast<std::size_t>(alg.dimension());
    const auto d = static_cast<std::size_t>(alg.horizontal_dimension());
    const std::size_t n = params.n_samples;
    const std::size_t steps = params.n_steps;
    const double s = params.s;
    const Eigen::MatrixXd& frame = alg.horizontal_frame();
    const bool tilted = !params.tilt.empty();

    std::vector<double> data(n * dim);
    std::vector<double> logw(tilted ? n : 0);

    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> w;
        std::vector<double> x(dim);
        std::vector<double> y(dim, 0.0);
        std::vector<double> next(dim);
        std::vector<double> scratch(group.bch().node_count() * dim);
        for (std::size_t path = lo; path < hi; ++path) {
            brownian_path(params.seed, path, steps, d, s, w);
            if (tilted) {
                for (std::size_t k = 0; k <= steps; ++k) {
                    const double frac = static_cast<double>(k) / static_cast<double>(steps);
                    for (std::size_t c = 0; c < d; ++c) {
                        w[k * d + c] += params.tilt[c] * frac;
                    }
                }
            }
            std::fill(x.begin(), x.end(), 0.0);
            for (std::size_t k = 0; k < steps; ++k) {
                for (std::size_t r = 0; r < d; ++r) {
                    double v = 0.0;
                    for (std::size_t c = 0; c < d; ++c) {
                        v += frame(r, c) * (w[(k + 1) * d + c] - w[k * d + c]);
                    }
                    y[r] = v;
                }
                group.bch().multiply<double, double, double>(x, y, next, scratch);
                std::swap(x, next);
            }
            std::copy(x.begin(), x.end(), data.begin() + path * dim);
            if (tilted) {
                double dot = 0.0;
                double norm2 = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    dot += params.tilt[c] * w[steps * d + c];
                    norm2 += params.tilt[c] * params.tilt[c];
                }
                logw[path] = -(2.0 * dot - norm2) / s;
            }
        }
    });
    return HeatSampleBatch(group, params, std::move(data), std::move(logw));
}

MarginalCheck check_first_layer_marginals(const HeatSampleBatch& batch) {
    require_unweighted(batch, "check_first_layer_marginals");
    const auto& alg = batch.group().algebra();
    const int d = alg.horizontal_dimension();
    // Orthonormal-frame coordinates y = L^T x where frame = L^{-T}.
    const Eigen::MatrixXd to_frame = alg.horizontal_frame().inverse();
    MarginalCheck out;
    for (int c = 0; c < d; ++c) {
        std::vector<double> col(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            double v = 0.0;
            for (int r = 0; r < d; ++r) {
                v += to_frame(c, r) * batch.row(i)[r];
            }
            col[i] = v;
        }
        const auto ks = stats::ks_test_normal(col, batch.s() / 2.0);
        out.statistics.push_back(ks.statistic);
        out.p_values.push_back(ks.p_value);
        out.min_p_value = std::min(out.min_p_value, ks.p_value);
    }
    return out;
}

CheckReport empirical_check_inverse_symmetry(const HeatSampleBatch& batch, const Thresholds& thr,
                                             std::uint64_t seed) {
    require_unweighted(batch, "inverse symmetry");
    if (batch.size() < 4) {
        throw ParameterError("inverse symmetry: need at least 4 samples");
    }
    const auto& group = batch.group();
    const std::size_t dim = batch.dimension();
    std::vector<CheckReport> parts;
    for (std::size_t c = 0; c < dim; ++c) {
        const auto col = batch.coordinate(static_cast<int>(c));
        for (int k = 1; k <= 3; ++k) {
            // X^{-1} has coordinates -x, so the paired difference is x^k - (-x)^k.
            std::vector<std::vector<double>> diff(1, std::vector<double>(col.size()));
            for (std::size_t i = 0; i < col.size(); ++i) {
                const double p = std::pow(col[i], k);
                diff[0][i] = p - std::pow(-col[i], k);
            }
            stats::ColumnMoments m(diff);
            parts.push_back(moment_part(group.algebra().coordinate_label(static_cast<int>(c)) + "^" +
                                            std::to_string(k),
                                        m.mean(0), m.stderr_of_mean(0), thr));
        }
    }
    const auto sd = coordinate_sd(batch);
    const std::size_t m = std::min(kEnergySubsample, batch.size() / 2);
    const auto a = standardized(subsample_rows(batch, 0, m, [](const GroupElement& g) { return g; }), dim, sd);
    const auto b = standardized(
        subsample_rows(batch, batch.size() / 2, m, [&](const GroupElement& g) { return group.inverse(g); }), dim, sd);
    const auto energy = stats::energy_distance_test(a, b, dim, kEnergyPermutations, seed);
    CheckReport e;
    e.check = "energy_distance";
    e.lhs = {energy.statistic, energy.null_sd};
    e.rhs = {energy.null_mean, energy.null_sd};
    e.z = energy.z;
    e.stderr = energy.null_sd;
    e.margin = energy.null_mean - energy.statistic;
    e.verdict = energy.z < thr.z ? Verdict::holds : Verdict::violated;
    parts.push_back(e);

    CheckReport r = z_score_report("inverse_symmetry", std::move(parts), thr);
    r.params = {{"s", batch.s()}, {"n", batch.size()}, {"energy_subsample", m}};
    return r;
}

CheckReport empirical_check_scaling(const HeatSampleBatch& batch_s, double lambda,
                                    const HeatSampleBatch& batch_scaled, const Thresholds& thr, std::uint64_t seed) {
    require_unweighted(batch_s, "scaling");
    require_unweighted(batch_scaled, "scaling");
    if (!(lambda > 0.0)) {
        throw ParameterError("scaling: lambda must be positive");
    }
    const double expected = batch_s.s() / (lambda * lambda);
    if (std::abs(batch_scaled.s() - expected) > 1e-12 * std::max(1.0, expected)) {
        throw ParameterError("scaling: second batch has s' = " + std::to_string(batch_scaled.s()) +
                             ", expected s / lambda^2 = " + std::to_string(expected));
    }
    if (batch_s.dimension() != batch_scaled.dimension()) {
        throw StructuralError("scaling: batches from different algebras");
    }
    const HeatSampleBatch mapped = batch_s.dilated(1.0 / lambda);
    const std::size_t dim = mapped.dimension();
    std::vector<CheckReport> parts;
    for (std::size_t c = 0; c < dim; ++c) {
        const auto a = mapped.coordinate(static_cast<int>(c));
        const auto b = batch_scaled.coordinate(static_cast<int>(c));
        for (int k = 1; k <= 3; ++k) {
            std::vector<std::vector<double>> ca(1, std::vector<double>(a.size()));
            std::vector<std::vector<double>> cb(1, std::vector<double>(b.size()));
            for (std::size_t i = 0; i < a.size(); ++i) {
                ca[0][i] = std::pow(a[i], k);
            }
            for (std::size_t i = 0; i < b.size(); ++i) {
                cb[0][i] = std::pow(b[i], k);
            }
            stats::ColumnMoments ma(ca);
            stats::ColumnMoments mb(cb);
            const double se = std::hypot(ma.stderr_of_mean(0), mb.stderr_of_mean(0));
            CheckReport p = equality_report(
                mapped.group().algebra().coordinate_label(static_cast<int>(c)) + "^" + std::to_string(k),
                {ma.mean(0), ma.stderr_of_mean(0)}, {mb.mean(0), mb.stderr_of_mean(0)}, se, thr);
            parts.push_back(p);
        }
    }
    auto sd = coordinate_sd(batch_scaled);
    const std::size_t m = std::min({kEnergySubsample, mapped.size(), batch_scaled.size()});
    auto id = [](const GroupElement& g) { return g; };
    const auto a = standardized(subsample_rows(mapped, 0, m, id), dim, sd);
    const auto b = standardized(subsample_rows(batch_scaled, 0, m, id), dim, sd);
    const auto energy = stats::energy_distance_test(a, b, dim, kEnergyPermutations, seed);
    CheckReport e;
    e.check = "energy_distance";
    e.lhs = {energy.statistic, energy.null_sd};
    e.rhs = {energy.null_mean, energy.null_sd};
    e.z = energy.z;
    e.stderr = energy.null_sd;
    e.margin = energy.null_mean - energy.statistic;
    e.verdict = energy.z < thr.z ? Verdict::holds : Verdict::violated;
    parts.push_back(e);

    CheckReport r = z_score_report("scaling", std::move(parts), thr);
    r.params = {{"s", batch_s.s()}, {"lambda", lambda}, {"s_scaled", batch_scaled.s()}};
    return r;
}

nlohmann::json TailReport::to_json() const {
    return {{"kappa", kappa.to_json()},
            {"window", {window_low, window_high}},
            {"aic_quadratic", aic_quadratic},
            {"aic_linear", aic_linear},
            {"radii", radii},
            {"log_survival", log_survival},
            {"passed", passed}};
}

CheckReport TailReport::as_check() const {
    CheckReport r;
    r.check = "tail_profile";
    r.lhs = {aic_quadratic, 0.0};
    r.rhs = {aic_linear, 0.0};
    r.margin = aic_linear - aic_quadratic;
    r.verdict = passed ? Verdict::holds : Verdict::violated;
    r.params = {{"kappa", kappa.to_json()}, {"window", {window_low, window_high}}};
    r.notes.push_back("decay constants are fitted only; no sharp constants are implied");
    return r;
}

TailReport fit_tail_profile(std::span<const double> radii, std::span<const double> log_survival, double s) {
    const std::size_t g = radii.size();
    if (g < 6 || log_survival.size() != g) {
        throw ParameterError("tail fit: need at least 6 grid points");
    }
    auto fit = [&](std::size_t lo, std::size_t hi, bool quadratic) {
        std::vector<double> design;
        std::vector<double> y;
        for (std::size_t i = lo; i < hi; ++i) {
            design.push_back(1.0);
            design.push_back(quadratic ? -radii[i] * radii[i] / s : radii[i]);
            y.push_back(log_survival[i]);
        }
        return stats::least_squares(design, 2, y);
    };
    TailReport t;
    t.radii.assign(radii.begin(), radii.end());
    t.log_survival.assign(log_survival.begin(), log_survival.end());
    const auto quad = fit(0, g, true);
    const auto lin = fit(0, g, false);
    t.kappa = {quad.coefficients[1], quad.stderrs[1]};
    t.aic_quadratic = quad.aic;
    t.aic_linear = lin.aic;
    const double lower = fit(0, g / 2 + 1, true).coefficients[1];
    const double upper = fit(g / 2 - 1, g, true).coefficients[1];
    t.window_low = std::min(lower, upper);
    t.window_high = std::max(lower, upper);
    t.passed = t.kappa.value > 0.0 && t.aic_quadratic < t.aic_linear;
    return t;
}

TailReport empirical_tail_profile(const HeatSampleBatch& batch, std::size_t grid_points) {
    require_unweighted(batch, "tail profile");
    if (batch.size() < 10000) {
        throw ParameterError("tail profile: need at least 1e4 samples");
    }
    std::vector<double> norms(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        norms[i] = batch.group().homogeneous_norm(batch.row(i));
    }
    std::sort(norms.begin(), norms.end());
    const auto n = static_cast<double>(norms.size());
    const double r_lo = norms[norms.size() / 2];
    const double r_hi = norms[norms.size() - 100];
    std::vector<double> radii;
    std::vector<double> logs;
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double r = r_lo + (r_hi - r_lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const auto above = static_cast<double>(norms.end() - std::upper_bound(norms.begin(), norms.end(), r));
        radii.push_back(r);
        logs.push_back(std::log(above / n));
    }
    return fit_tail_profile(radii, logs, batch.s());
}

}  // namespace carnot
