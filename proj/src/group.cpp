#include "carnot/group.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/rational.hpp>

#include "carnot/errors.hpp"

namespace carnot {

namespace {

using Rational = boost::rational<long long>;
using Word = std::vector<std::uint8_t>;
// Noncommutative polynomial in X (0) and Y (1), truncated at some degree.
using Poly = std::map<Word, Rational>;

Poly multiply(const Poly& a, const Poly& b, std::size_t max_degree) {
    Poly out;
    for (const auto& [wa, ca] : a) {
        for (const auto& [wb, cb] : b) {
            if (wa.size() + wb.size() > max_degree) {
                continue;
            }
            Word w = wa;
            w.insert(w.end(), wb.begin(), wb.end());
            out[w] += ca * cb;
        }
    }
    std::erase_if(out, [](const auto& kv) { return kv.second.numerator() == 0; });
    return out;
}

long long factorial(int n) {
    long long f = 1;
    for (int i = 2; i <= n; ++i) {
        f *= i;
    }
    return f;
}

// log(exp X exp Y) as an associative polynomial, truncated at max_degree.
Poly bch_series(int max_degree) {
    const auto deg = static_cast<std::size_t>(max_degree);
    Poly w;  // exp X exp Y - 1
    for (int p = 0; p <= max_degree; ++p) {
        for (int q = 0; p + q <= max_degree; ++q) {
            if (p + q == 0) {
                continue;
            }
            Word word(p, 0);
            word.insert(word.end(), q, 1);
            w[word] += Rational(1, factorial(p) * factorial(q));
        }
    }
    Poly result;
    Poly power = w;
    for (int k = 1; k <= max_degree; ++k) {
        const Rational c((k % 2 == 1) ? 1 : -1, k);
        for (const auto& [word, coeff] : power) {
            result[word] += c * coeff;
        }
        power = multiply(power, w, deg);
    }
    std::erase_if(result, [](const auto& kv) { return kv.second.numerator() == 0; });
    return result;
}

}  // namespace

double GroupElement::max_abs_diff(const GroupElement& other) const {
    if (other.size() != size()) {
        throw StructuralError("group element dimension mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        worst = std::max(worst, std::abs(coords_[i] - other.coords_[i]));
    }
    return worst;
}

GroupElement::GroupElement(std::vector<double> coords) : coords_(std::move(coords)) {}

BchTable::BchTable(const StratifiedAlgebra& algebra) : algebra_(&algebra), max_degree_(algebra.step()) {
    for (const auto& c : algebra.structure_constants()) {
        if (algebra.layer_of(c.target) <= std::max(algebra.layer_of(c.left), algebra.layer_of(c.right))) {
            lower_layer_remainder_ = false;
        }
    }

    // Dynkin-Specht-Wever: a homogeneous Lie polynomial p of degree n equals
    // (1/n) sum_w c_w [[..[w1,w2],..],wn].
    std::map<Word, Rational> lie_terms;
    for (const auto& [word, coeff] : bch_series(max_degree_)) {
        if (word.size() < 2 || word[0] == word[1]) {
            continue;
        }
        lie_terms[word] += coeff / static_cast<long long>(word.size());
    }
    std::erase_if(lie_terms, [](const auto& kv) { return kv.second.numerator() == 0; });

    std::map<Word, int> node_of;
    auto intern = [&](auto&& self, const Word& prefix) -> int {
        if (auto it = node_of.find(prefix); it != node_of.end()) {
            return it->second;
        }
        Node node;
        node.letter = prefix.back();
        if (prefix.size() > 1) {
            node.parent = self(self, Word(prefix.begin(), prefix.end() - 1));
        }
        nodes_.push_back(node);
        return node_of[prefix] = static_cast<int>(nodes_.size()) - 1;
    };
    for (const auto& [word, coeff] : lie_terms) {
        const int id = intern(intern, word);
        nodes_[id].coefficient = boost::rational_cast<double>(coeff);
        terms_.push_back({word, nodes_[id].coefficient});
    }
}

CarnotGroup::CarnotGroup(StratifiedAlgebra algebra) : state_(std::make_shared<const State>(std::move(algebra))) {}

GroupElement CarnotGroup::check_element(const GroupElement& x, const char* what) const {
    if (x.size() != static_cast<std::size_t>(dimension())) {
        throw StructuralError(std::string(what) + ": element has " + std::to_string(x.size()) +
                              " coordinates, group dimension is " + std::to_string(dimension()));
    }
    return x;
}

GroupElement CarnotGroup::multiply(const GroupElement& x, const GroupElement& y) const {
    if (x.size() != static_cast<std::size_t>(dimension()) || y.size() != x.size()) {
        throw StructuralError("multiply: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                              std::to_string(y.size()) + ", group " + std::to_string(dimension()) + ")");
    }
    GroupElement out = identity();
    multiply_into<double, double, double>(x.coords(), y.coords(), out.coords());
    return out;
}

GroupElement CarnotGroup::inverse(const GroupElement& x) const {
    check_element(x, "inverse");
    GroupElement out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = -out[i];
    }
    return out;
}

std::vector<double> CarnotGroup::dilation_weights(double lambda) const {
    if (!(lambda >= 0.0)) {
        throw ParameterError("dilation factor must be nonnegative, got " + std::to_string(lambda));
    }
    std::vector<double> w(dimension());
    for (int i = 0; i < dimension(); ++i) {
        w[i] = std::pow(lambda, algebra().layer_of(i));
    }
    return w;
}

GroupElement CarnotGroup::dilate(double lambda, const GroupElement& x) const {
    check_element(x, "dilate");
    const auto w = dilation_weights(lambda);
    GroupElement out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= w[i];
    }
    return out;
}

double CarnotGroup::homogeneous_norm(std::span<const double> x) const {
    double n = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int layer = algebra().layer_of(static_cast<int>(i));
        const double a = std::abs(x[i]);
        n = std::max(n, layer == 1 ? a : std::pow(a, 1.0 / layer));
    }
    return n;
}

double CarnotGroup::homogeneous_norm(const GroupElement& x) const {
    check_element(x, "homogeneous_norm");
    return homogeneous_norm(x.coords());
}

GroupElement CarnotGroup::exp(std::span<const double> v) const {
    if (v.size() != static_cast<std::size_t>(dimension())) {
        throw StructuralError("exp: algebra vector has wrong dimension");
    }
    return GroupElement(std::vector<double>(v.begin(), v.end()));
}

}  // namespace carnot
