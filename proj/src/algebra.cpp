#include "carnot/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "carnot/errors.hpp"

namespace carnot {

namespace {

constexpr double kAlgebraTolerance = 1e-12;
constexpr double kPartialIsometryTolerance = 1e-10;

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Cholesky factor based orthonormal frame: columns u_i with u_i^T G u_j = delta_ij.
Eigen::MatrixXd orthonormal_frame(const Eigen::MatrixXd& gram) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        return Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    }
    Eigen::MatrixXd lower = llt.matrixL();
    return lower.transpose().triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
}

}  // namespace

StratifiedAlgebra::StratifiedAlgebra(std::vector<int> layer_dims,
                                     std::vector<StructureConstant> brackets,
                                     std::optional<Eigen::MatrixXd> metric_v1, std::string name)
    : name_(std::move(name)), layer_dims_(std::move(layer_dims)), supplied_(std::move(brackets)) {
    if (layer_dims_.empty()) {
        throw StructuralError("algebra: layer_dims must be nonempty");
    }
    int layer = 1;
    for (int d : layer_dims_) {
        if (d <= 0) {
            throw StructuralError("algebra: layer dimensions must be positive");
        }
        offsets_.push_back(dimension_);
        for (int k = 0; k < d; ++k) {
            layer_of_.push_back(layer);
        }
        dimension_ += d;
        homogeneous_dimension_ += layer * d;
        ++layer;
    }

    const auto n = static_cast<std::size_t>(dimension_);
    dense_.assign(n * n * n, 0.0);
    std::set<std::pair<int, int>> explicit_pairs;
    for (const auto& c : supplied_) {
        for (int idx : {c.left, c.right, c.target}) {
            if (idx < 0 || idx >= dimension_) {
                throw StructuralError("algebra: bracket index " + std::to_string(idx) +
                                      " outside basis range [0, " + std::to_string(dimension_) +
                                      ")");
            }
        }
        if (!std::isfinite(c.value)) {
            throw StructuralError("algebra: non-finite structure constant");
        }
        explicit_pairs.emplace(c.left, c.right);
    }
    auto at = [&](int a, int b, int t) -> double& {
        return dense_[(static_cast<std::size_t>(a) * n + b) * n + t];
    };
    for (const auto& c : supplied_) {
        at(c.left, c.right, c.target) += c.value;
        if (c.left != c.right && !explicit_pairs.contains({c.right, c.left})) {
            at(c.right, c.left, c.target) -= c.value;
        }
    }
    for (int a = 0; a < dimension_; ++a) {
        for (int b = 0; b < dimension_; ++b) {
            for (int t = 0; t < dimension_; ++t) {
                if (double v = at(a, b, t); v != 0.0) {
                    sparse_.push_back({a, b, t, v});
                }
            }
        }
    }

    const int h = layer_dims_.front();
    if (metric_v1) {
        if (metric_v1->rows() != h || metric_v1->cols() != h) {
            throw StructuralError("algebra: metric_v1 must be " + std::to_string(h) + "x" +
                                  std::to_string(h));
        }
        metric_v1_ = *metric_v1;
    } else {
        metric_v1_ = Eigen::MatrixXd::Identity(h, h);
    }
    frame_ = orthonormal_frame(0.5 * (metric_v1_ + metric_v1_.transpose()));
}

StratifiedAlgebra StratifiedAlgebra::from_json(const nlohmann::json& doc) {
    try {
        static const std::set<std::string> known{"layer_dims", "brackets", "metric_v1", "name"};
        for (const auto& [key, _] : doc.items()) {
            if (!known.contains(key)) {
                throw StructuralError("algebra file: unknown key '" + key + "'");
            }
        }
        auto dims = doc.at("layer_dims").get<std::vector<int>>();
        std::vector<int> offsets;
        int total = 0;
        for (int d : dims) {
            offsets.push_back(total);
            total += d;
        }
        auto flat = [&](const nlohmann::json& jk) {
            const int j = jk.at(0).get<int>();
            const int k = jk.at(1).get<int>();
            if (j < 1 || j > static_cast<int>(dims.size()) || k < 1 || k > dims[j - 1]) {
                throw StructuralError("algebra file: basis index [" + std::to_string(j) + "," +
                                      std::to_string(k) + "] out of range");
            }
            return offsets[j - 1] + k - 1;
        };
        std::vector<StructureConstant> brackets;
        if (doc.contains("brackets")) {
            for (const auto& entry : doc.at("brackets")) {
                if (!entry.is_array() || entry.size() < 3) {
                    throw StructuralError("algebra file: bracket entry needs [[j,k],[j',k'],[[j'',k''],v],...]");
                }
                const int left = flat(entry.at(0));
                const int right = flat(entry.at(1));
                for (std::size_t i = 2; i < entry.size(); ++i) {
                    brackets.push_back({left, right, flat(entry.at(i).at(0)),
                                        entry.at(i).at(1).get<double>()});
                }
            }
        }
        std::optional<Eigen::MatrixXd> metric;
        if (doc.contains("metric_v1")) {
            const auto rows = doc.at("metric_v1").get<std::vector<std::vector<double>>>();
            Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != static_cast<std::size_t>(m.cols())) {
                    throw StructuralError("algebra file: metric_v1 rows have unequal length");
                }
                for (std::size_t c = 0; c < rows[r].size(); ++c) {
                    m(r, c) = rows[r][c];
                }
            }
            metric = m;
        }
        return StratifiedAlgebra(std::move(dims), std::move(brackets), metric,
                                 doc.value("name", std::string("custom")));
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("algebra file: ") + e.what());
    }
}

nlohmann::json StratifiedAlgebra::to_json() const {
    nlohmann::json brackets = nlohmann::json::array();
    for (const auto& c : supplied_) {
        auto l = basis_index(c.left);
        auto r = basis_index(c.right);
        auto t = basis_index(c.target);
        brackets.push_back({{l.layer, l.k}, {r.layer, r.k}, {{t.layer, t.k}, c.value}});
    }
    nlohmann::json metric = nlohmann::json::array();
    for (int r = 0; r < metric_v1_.rows(); ++r) {
        std::vector<double> row(metric_v1_.cols());
        for (int c = 0; c < metric_v1_.cols(); ++c) {
            row[c] = metric_v1_(r, c);
        }
        metric.push_back(row);
    }
    return {{"name", name_}, {"layer_dims", layer_dims_}, {"brackets", brackets},
            {"metric_v1", metric}};
}

int StratifiedAlgebra::flat_index(BasisIndex idx) const {
    if (idx.layer < 1 || idx.layer > step() || idx.k < 1 || idx.k > layer_dim(idx.layer)) {
        throw StructuralError("basis index (" + std::to_string(idx.layer) + "," +
                              std::to_string(idx.k) + ") out of range");
    }
    return offset(idx.layer) + idx.k - 1;
}

BasisIndex StratifiedAlgebra::basis_index(int flat) const {
    const int layer = layer_of(flat);
    return {layer, flat - offset(layer) + 1};
}

std::string StratifiedAlgebra::coordinate_label(int flat) const {
    auto idx = basis_index(flat);
    return "x_" + std::to_string(idx.layer) + "_" + std::to_string(idx.k);
}

Eigen::VectorXd StratifiedAlgebra::bracket(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dimension_);
    accumulate_bracket<double, double, double>({u.data(), static_cast<std::size_t>(u.size())},
                                               {v.data(), static_cast<std::size_t>(v.size())}, 1.0,
                                               {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AxiomCheck& ValidationReport::find(std::string_view axiom) const {
    for (const auto& c : checks) {
        if (c.axiom == axiom) {
            return c;
        }
    }
    throw StructuralError("validation report has no axiom '" + std::string(axiom) + "'");
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json axioms = nlohmann::json::array();
    for (const auto& c : checks) {
        axioms.push_back(
            {{"axiom", c.axiom}, {"passed", c.passed}, {"residual", c.residual}, {"detail", c.detail}});
    }
    return {{"algebra", algebra}, {"passed", passed()}, {"tolerance", tolerance}, {"axioms", axioms}};
}

ValidationReport validate(const StratifiedAlgebra& alg) {
    ValidationReport report;
    report.algebra = alg.name();
    report.tolerance = kAlgebraTolerance;
    const int n = alg.dimension();

    {
        double worst = 0.0;
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                for (int t = 0; t < n; ++t) {
                    worst = std::max(worst, std::abs(alg.structure_constant(a, b, t) +
                                                     alg.structure_constant(b, a, t)));
                }
            }
        }
        report.checks.push_back({"antisymmetry", worst < kAlgebraTolerance, worst, ""});
    }

    {
        double worst = 0.0;
        std::vector<Eigen::VectorXd> basis;
        for (int a = 0; a < n; ++a) {
            basis.push_back(Eigen::VectorXd::Unit(n, a));
        }
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                for (int c = b + 1; c < n; ++c) {
                    Eigen::VectorXd jac = alg.bracket(basis[a], alg.bracket(basis[b], basis[c])) +
                                          alg.bracket(basis[b], alg.bracket(basis[c], basis[a])) +
                                          alg.bracket(basis[c], alg.bracket(basis[a], basis[b]));
                    worst = std::max(worst, jac.cwiseAbs().maxCoeff());
                }
            }
        }
        report.checks.push_back({"jacobi", worst < kAlgebraTolerance, worst, ""});
    }

    {
        double worst = 0.0;
        std::string detail;
        for (const auto& c : alg.structure_constants()) {
            const int expected = alg.layer_of(c.left) + alg.layer_of(c.right);
            if (alg.layer_of(c.target) != expected && std::abs(c.value) > worst) {
                worst = std::abs(c.value);
                detail = "[" + alg.coordinate_label(c.left) + "," + alg.coordinate_label(c.right) +
                         "] has a component along " + alg.coordinate_label(c.target);
            }
        }
        report.checks.push_back({"grading", worst < kAlgebraTolerance, worst, detail});
    }

    {
        // [V_1, V_j] must span V_{j+1}.
        double deficit = 0.0;
        std::string detail;
        const int h = alg.horizontal_dimension();
        for (int j = 1; j < alg.step(); ++j) {
            const int target_dim = alg.layer_dim(j + 1);
            const int target_off = alg.offset(j + 1);
            Eigen::MatrixXd images(target_dim, h * alg.layer_dim(j));
            int col = 0;
            for (int i = 0; i < h; ++i) {
                for (int b = alg.offset(j); b < alg.offset(j) + alg.layer_dim(j); ++b) {
                    Eigen::VectorXd br = alg.bracket(Eigen::VectorXd::Unit(n, i), Eigen::VectorXd::Unit(n, b));
                    images.col(col++) = br.segment(target_off, target_dim);
                }
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(images);
            const auto& sv = svd.singularValues();
            int rank = 0;
            for (int r = 0; r < sv.size(); ++r) {
                rank += sv(r) > kAlgebraTolerance ? 1 : 0;
            }
            if (rank < target_dim) {
                deficit += target_dim - rank;
                if (detail.empty()) {
                    detail = "[V_1,V_" + std::to_string(j) + "] does not span V_" + std::to_string(j + 1);
                }
            }
        }
        report.checks.push_back({"generation", deficit == 0.0, deficit, detail});
    }

    {
        const Eigen::MatrixXd& g = alg.metric_v1();
        const double asym = max_abs(g - g.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (g + g.transpose()));
        const double min_eig = eig.eigenvalues().minCoeff();
        std::ostringstream detail;
        detail << "min eigenvalue " << min_eig;
        report.checks.push_back({"metric_positive_definite", asym < kAlgebraTolerance && min_eig > 0.0,
                                 asym, detail.str()});
    }
    return report;
}

Eigen::MatrixXd j_map(const StratifiedAlgebra& alg, const Eigen::VectorXd& z,
                      const Eigen::MatrixXd& metric_v2) {
    const int h = alg.horizontal_dimension();
    const int off2 = alg.offset(2);
    const Eigen::VectorXd gz = metric_v2 * z;
    // K(v, w) = <z, [v, w]> in adapted V_1 coordinates.
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(h, h);
    for (const auto& c : alg.structure_constants()) {
        if (c.left < h && c.right < h && alg.layer_of(c.target) == 2) {
            k(c.left, c.right) += c.value * gz(c.target - off2);
        }
    }
    const Eigen::MatrixXd& u = alg.horizontal_frame();
    // <J u_j, u_i> = K(u_j, u_i)
    return (u.transpose() * k * u).transpose();
}

nlohmann::json HTypeVerdict::to_json() const {
    nlohmann::json maps = nlohmann::json::array();
    for (const auto& j : j_maps) {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < j.rows(); ++r) {
            std::vector<double> row(j.cols());
            for (int c = 0; c < j.cols(); ++c) {
                row[c] = j(r, c);
            }
            rows.push_back(row);
        }
        maps.push_back(rows);
    }
    return {{"h_type", h_type},           {"max_residual", max_residual},
            {"tolerance", tolerance},     {"random_draws", random_draws},
            {"basis_residuals", basis_residuals}, {"j_maps", maps}};
}

HTypeVerdict classify_h_type(const StratifiedAlgebra& alg, const std::optional<Eigen::MatrixXd>& metric_v2,
                             int random_draws, std::uint64_t seed) {
    if (alg.step() != 2) {
        throw NotStepTwoError("classify_h_type: algebra '" + alg.name() + "' has step " +
                              std::to_string(alg.step()) + ", expected 2");
    }
    const int d2 = alg.layer_dim(2);
    const Eigen::MatrixXd g2 = metric_v2.value_or(Eigen::MatrixXd::Identity(d2, d2));
    if (g2.rows() != d2 || g2.cols() != d2) {
        throw StructuralError("classify_h_type: metric_v2 must be " + std::to_string(d2) + "x" +
                              std::to_string(d2));
    }
    const Eigen::MatrixXd z_frame = orthonormal_frame(g2);

    auto residual = [](const Eigen::MatrixXd& j) {
        const Eigen::MatrixXd p = j.transpose() * j;
        return std::max(max_abs(p * p - p), max_abs(p - p.transpose()));
    };

    HTypeVerdict verdict;
    verdict.tolerance = kPartialIsometryTolerance;
    verdict.random_draws = random_draws;
    for (int i = 0; i < d2; ++i) {
        Eigen::MatrixXd j = j_map(alg, z_frame.col(i), g2);
        const double r = residual(j);
        verdict.basis_residuals.push_back(r);
        verdict.max_residual = std::max(verdict.max_residual, r);
        verdict.j_maps.push_back(std::move(j));
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int draw = 0; draw < random_draws; ++draw) {
        Eigen::VectorXd c(d2);
        for (int i = 0; i < d2; ++i) {
            c(i) = normal(rng);
        }
        if (c.norm() == 0.0) {
            continue;
        }
        c.normalize();
        verdict.max_residual = std::max(verdict.max_residual, residual(j_map(alg, z_frame * c, g2)));
    }
    verdict.h_type = verdict.max_residual < kPartialIsometryTolerance;
    return verdict;
}

StratifiedAlgebra builtin_algebra(std::string_view name) {
    static const std::regex pattern(R"(\s*([a-z]+)\s*(?:[\(:]\s*(\d+)\s*\)?)?\s*)");
    std::cmatch m;
    if (!std::regex_match(name.begin(), name.end(), m, pattern)) {
        throw StructuralError("unknown builtin algebra '" + std::string(name) + "'");
    }
    const std::string family = m[1].str();
    const bool has_n = m[2].matched;
    const int n = has_n ? std::stoi(m[2].str()) : 1;
    if (n < 1) {
        throw StructuralError("builtin algebra '" + std::string(name) + "': n must be >= 1");
    }
    if (family == "euclidean") {
        return StratifiedAlgebra({n}, {}, std::nullopt, "euclidean(" + std::to_string(n) + ")");
    }
    if (family == "heisenberg") {
        std::vector<StructureConstant> b;
        for (int i = 0; i < n; ++i) {
            b.push_back({i, n + i, 2 * n, 1.0});
        }
        return StratifiedAlgebra({2 * n, 1}, std::move(b), std::nullopt,
                                 "heisenberg(" + std::to_string(n) + ")");
    }
    if (family == "engel" && !has_n) {
        return StratifiedAlgebra({2, 1, 1}, {{0, 1, 2, 1.0}, {0, 2, 3, 1.0}}, std::nullopt, "engel");
    }
    throw StructuralError("unknown builtin algebra '" + std::string(name) + "'");
}

std::vector<std::string> builtin_algebra_names() {
    return {"euclidean(n)", "heisenberg(n)", "engel"};
}

StratifiedAlgebra load_algebra(std::string_view spec) {
    std::ifstream in{std::string(spec)};
    if (in) {
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw StructuralError("algebra file '" + std::string(spec) + "': " + e.what());
        }
        return StratifiedAlgebra::from_json(doc);
    }
    return builtin_algebra(spec);
}

}  // namespace carnot
