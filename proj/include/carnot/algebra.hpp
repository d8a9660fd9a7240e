#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace carnot {

/// Position of a basis vector xi_{j,k}; both indices are 1-based as in the
/// adapted-basis notation.
struct BasisIndex {
    int layer = 1;
    int k = 1;

    bool operator==(const BasisIndex&) const = default;
};

/// One structure constant [xi_left, xi_right] contains value * xi_target.
/// Indices are flat (0-based, ordered by layer then k).
struct StructureConstant {
    int left = 0;
    int right = 0;
    int target = 0;
    double value = 0.0;
};

/// A stratified Lie algebra g = V_1 + ... + V_m given by structure
/// constants over an adapted basis, plus an inner product on V_1.
///
/// Brackets supplied for an ordered pair (a,b) are mirrored to (b,a) with the
/// opposite sign unless (b,a) is supplied explicitly as well; explicit
/// inconsistent pairs are kept so validate() can report them.
///
/// Immutable after construction.
class StratifiedAlgebra {
public:
    StratifiedAlgebra(std::vector<int> layer_dims, std::vector<StructureConstant> brackets,
                      std::optional<Eigen::MatrixXd> metric_v1 = std::nullopt,
                      std::string name = "custom");

    /// Parses the algebra file format:
    /// {"layer_dims": [...], "brackets": [[[j,k],[j',k'],[[j'',k''],v],...],...],
    ///  "metric_v1": [[...],...], "name": "..."}.
    static StratifiedAlgebra from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    const std::string& name() const { return name_; }
    int dimension() const { return dimension_; }
    int step() const { return static_cast<int>(layer_dims_.size()); }
    const std::vector<int>& layer_dims() const { return layer_dims_; }
    int layer_dim(int layer) const { return layer_dims_.at(layer - 1); }
    int horizontal_dimension() const { return layer_dims_.front(); }

    /// Layer (1-based) of flat coordinate i.
    int layer_of(int i) const { return layer_of_.at(i); }
    const std::vector<int>& layers() const { return layer_of_; }
    /// First flat index of `layer` (1-based).
    int offset(int layer) const { return offsets_.at(layer - 1); }

    int flat_index(BasisIndex idx) const;
    BasisIndex basis_index(int flat) const;
    /// Coordinate label "x_j_k".
    std::string coordinate_label(int flat) const;

    /// D = sum_j j * dim V_j.
    int homogeneous_dimension() const { return homogeneous_dimension_; }

    const Eigen::MatrixXd& metric_v1() const { return metric_v1_; }
    /// Columns are an orthonormal basis of V_1 (w.r.t. metric_v1) expressed in
    /// the adapted V_1 coordinates.
    const Eigen::MatrixXd& horizontal_frame() const { return frame_; }

    std::span<const StructureConstant> structure_constants() const { return sparse_; }
    double structure_constant(int left, int right, int target) const {
        return dense_[(static_cast<std::size_t>(left) * dimension_ + right) * dimension_ + target];
    }

    /// out += scale * [u, v], generic in the scalar type (double or Jet2).
    template <class T, class U, class S>
    void accumulate_bracket(std::span<const T> u, std::span<const U> v, S scale,
                            std::span<S> out) const {
        for (const auto& c : sparse_) {
            out[c.target] += scale * (c.value * u[c.left]) * v[c.right];
        }
    }

    Eigen::VectorXd bracket(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

private:
    std::string name_;
    std::vector<int> layer_dims_;
    std::vector<int> offsets_;
    std::vector<int> layer_of_;
    int dimension_ = 0;
    int homogeneous_dimension_ = 0;
    std::vector<double> dense_;
    std::vector<StructureConstant> sparse_;
    std::vector<StructureConstant> supplied_;
    Eigen::MatrixXd metric_v1_;
    Eigen::MatrixXd frame_;
};

struct AxiomCheck {
    std::string axiom;
    bool passed = false;
    double residual = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::string algebra;
    double tolerance = 1e-12;
    std::vector<AxiomCheck> checks;

    bool passed() const;
    const AxiomCheck& find(std::string_view axiom) const;
    nlohmann::json to_json() const;
};

/// Checks antisymmetry, Jacobi, grading, generation of V_{j+1} by [V_1,V_j],
/// and positive-definiteness of the V_1 metric. Axiom failures are reported,
/// never thrown.
ValidationReport validate(const StratifiedAlgebra& algebra);

struct HTypeVerdict {
    bool h_type = false;
    /// J_z for each orthonormal basis vector z of V_2, in orthonormal V_1 coordinates.
    std::vector<Eigen::MatrixXd> j_maps;
    std::vector<double> basis_residuals;
    double max_residual = 0.0;
    int random_draws = 0;
    double tolerance = 1e-10;

    nlohmann::json to_json() const;
};

/// Tests whether J_z is a partial isometry for every unit z in V_2 (basis
/// vectors plus `random_draws` random unit vectors). `metric_v2` defaults to the
/// identity on the adapted V_2 basis. Throws NotStepTwoError unless step == 2.
HTypeVerdict classify_h_type(const StratifiedAlgebra& algebra,
                             const std::optional<Eigen::MatrixXd>& metric_v2 = std::nullopt,
                             int random_draws = 64, std::uint64_t seed = 0x5eed);

/// J_z for an arbitrary z in V_2 (given in adapted V_2 coordinates).
Eigen::MatrixXd j_map(const StratifiedAlgebra& algebra, const Eigen::VectorXd& z,
                      const Eigen::MatrixXd& metric_v2);

/// euclidean(n), heisenberg(n) (the group H^{2n+1}), engel. Bare
/// "euclidean"/"heisenberg" mean n = 1.
StratifiedAlgebra builtin_algebra(std::string_view name);
std::vector<std::string> builtin_algebra_names();

/// Builtin name, or path to an algebra JSON file.
StratifiedAlgebra load_algebra(std::string_view spec);

}  // namespace carnot
