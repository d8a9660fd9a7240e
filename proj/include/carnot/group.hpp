#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "carnot/algebra.hpp"

namespace carnot {

/// A point of the group in adapted exponential coordinates x_{j,k}, stored
/// flat in (j,k) order.
class GroupElement {
public:
    GroupElement() = default;
    explicit GroupElement(std::vector<double> coords);
    GroupElement(std::initializer_list<double> coords) : coords_(coords) {}

    static GroupElement identity(std::size_t dim) { return GroupElement(std::vector<double>(dim, 0.0)); }

    std::size_t size() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    double& operator[](std::size_t i) { return coords_[i]; }
    std::span<const double> coords() const { return coords_; }
    std::span<double> coords() { return coords_; }
    const std::vector<double>& vector() const { return coords_; }

    /// Max-norm distance between coordinate vectors.
    double max_abs_diff(const GroupElement& other) const;

    bool operator==(const GroupElement&) const = default;

    nlohmann::json to_json() const { return coords_; }
    static GroupElement from_json(const nlohmann::json& j) { return GroupElement(j.get<std::vector<double>>()); }

private:
    std::vector<double> coords_;
};

/// Truncated Baker-Campbell-Hausdorff series log(exp X exp Y) specialized to
/// one algebra. Terms above degree m (the step) vanish by nilpotency, so the
/// truncated series is the exact group law.
///
/// Each homogeneous component is stored as left-normed bracket words
/// [[..[a1,a2],..],an] (Dynkin-Specht-Wever projection), sharing prefixes in
/// a trie so every nested bracket is evaluated once per product.
class BchTable {
public:
    explicit BchTable(const StratifiedAlgebra& algebra);

    struct Term {
        std::vector<std::uint8_t> word;  // 0 = X, 1 = Y
        double coefficient = 0.0;
    };

    /// Nonzero bracket words of degree >= 2 with their rational coefficients.
    const std::vector<Term>& terms() const { return terms_; }
    int max_degree() const { return max_degree_; }
    /// True when every bracket of the algebra lands strictly above the layers
    /// of its arguments, i.e. the remainder R_{j,k}(x,y) of the group law only
    /// involves coordinates of layers < j.
    bool remainder_depends_only_on_lower_layers() const { return lower_layer_remainder_; }

    std::size_t node_count() const { return nodes_.size(); }

    /// out = log(exp x exp y). `scratch` must hold node_count() * dim values.
    /// `out` may not alias x or y.
    template <class T, class U, class S>
    void multiply(std::span<const T> x, std::span<const U> y, std::span<S> out, std::span<S> scratch) const;

private:
    struct Node {
        int parent = -1;  // -1: single letter
        std::uint8_t letter = 0;
        double coefficient = 0.0;
    };

    const StratifiedAlgebra* algebra_;
    int max_degree_ = 1;
    bool lower_layer_remainder_ = true;
    std::vector<Term> terms_;
    std::vector<Node> nodes_;  // topologically ordered (parents first)
};

/// The simply connected group of a stratified algebra: BCH multiplication,
/// inverse, dilations and the homogeneous quasi-norm. Cheap to copy (shared,
/// immutable state).
class CarnotGroup {
public:
    explicit CarnotGroup(StratifiedAlgebra algebra);

    const StratifiedAlgebra& algebra() const { return state_->algebra; }
    const BchTable& bch() const { return state_->bch; }
    int dimension() const { return algebra().dimension(); }

    GroupElement identity() const { return GroupElement::identity(dimension()); }
    GroupElement multiply(const GroupElement& x, const GroupElement& y) const;
    GroupElement inverse(const GroupElement& x) const;
    /// delta_lambda: x_{j,k} -> lambda^j x_{j,k}. lambda = 0 maps to e; lambda < 0 throws.
    GroupElement dilate(double lambda, const GroupElement& x) const;
    /// N(x) = max_{j,k} |x_{j,k}|^{1/j}, so N(delta_lambda x) = lambda N(x).
    double homogeneous_norm(const GroupElement& x) const;
    double homogeneous_norm(std::span<const double> x) const;
    /// Exponential coordinates of exp(v) for an algebra vector v.
    GroupElement exp(std::span<const double> v) const;

    /// Generic product for jets: out = x * y.
    template <class T, class U, class S>
    void multiply_into(std::span<const T> x, std::span<const U> y, std::span<S> out) const {
        std::vector<S> scratch(bch().node_count() * static_cast<std::size_t>(dimension()));
        bch().multiply(x, y, out, std::span<S>(scratch));
    }

    /// Per-coordinate factors lambda^{layer}.
    std::vector<double> dilation_weights(double lambda) const;

    GroupElement check_element(const GroupElement& x, const char* what) const;

private:
    struct State {
        StratifiedAlgebra algebra;
        BchTable bch;
        explicit State(StratifiedAlgebra a) : algebra(std::move(a)), bch(algebra) {}
    };
    std::shared_ptr<const State> state_;
};

template <class T, class U, class S>
void BchTable::multiply(std::span<const T> x, std::span<const U> y, std::span<S> out,
                        std::span<S> scratch) const {
    const auto dim = static_cast<std::size_t>(algebra_->dimension());
    for (std::size_t i = 0; i < dim; ++i) {
        out[i] = S(x[i]) + S(y[i]);
    }
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        const Node& node = nodes_[n];
        std::span<S> value = scratch.subspan(n * dim, dim);
        if (node.parent < 0) {
            for (std::size_t i = 0; i < dim; ++i) {
                value[i] = node.letter == 0 ? S(x[i]) : S(y[i]);
            }
            continue;
        }
        for (std::size_t i = 0; i < dim; ++i) {
            value[i] = S(0.0);
        }
        std::span<const S> parent = scratch.subspan(static_cast<std::size_t>(node.parent) * dim, dim);
        if (node.letter == 0) {
            algebra_->accumulate_bracket<S, T, S>(parent, x, S(1.0), value);
        } else {
            algebra_->accumulate_bracket<S, U, S>(parent, y, S(1.0), value);
        }
        if (node.coefficient != 0.0) {
            for (std::size_t i = 0; i < dim; ++i) {
                out[i] += node.coefficient * value[i];
            }
        }
    }
}

}  // namespace carnot
