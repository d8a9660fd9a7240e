#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carnot/jet.hpp"

namespace carnot {

class StratifiedAlgebra;

/// A scalar field on the group: an immutable expression tree over the
/// coordinates x_{j,k}, evaluable on plain doubles or on 2-jets.
///
/// log and non-integer powers check positivity of their argument at evaluation
/// time and throw DomainError outside the domain.
class ScalarField {
public:
    enum class Kind { constant, variable, add, mul, pow, exp, log, affine, dilate };

    ScalarField();  // the constant 0

    static ScalarField constant(double c);
    static ScalarField variable(int flat_index);
    /// sum_i coeffs[i] x_i + offset
    static ScalarField affine(std::vector<double> coeffs, double offset = 0.0);

    ScalarField exp() const;
    ScalarField log() const;
    ScalarField pow(double exponent) const;
    /// f o delta_lambda, with per-coordinate factors lambda^{layer}.
    ScalarField dilated(const StratifiedAlgebra& algebra, double lambda) const;

    friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator/(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator-(const ScalarField& a);

    double operator()(std::span<const double> x) const { return evaluate<double>(x); }
    Jet2 jet(std::span<const Jet2> x) const { return evaluate<Jet2>(x); }

    template <class T>
    T evaluate(std::span<const T> x) const;

    Kind kind() const;
    /// Positive wherever it is defined, by construction (exp, positive
    /// constants, and sums/products/powers/dilations of such).
    bool known_positive() const;
    /// Largest coordinate index referenced, -1 if none.
    int max_variable() const;
    /// Prefix-notation rendering for reports; variables print as x#<flat index>.
    std::string to_string() const;

    struct Node;

private:
    explicit ScalarField(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

using FieldParameters = std::map<std::string, double>;

/// Parses the prefix field language, e.g. "(exp (+ (* a x_1_1) (* b x_1_2)))".
/// Operators: + - * / ^ (or pow) exp log. Variables are x_j_k (1-based
/// layer and index); any other symbol must be a named parameter.
ScalarField parse_field(std::string_view text, const StratifiedAlgebra& algebra,
                        const FieldParameters& params = {});

}  // namespace carnot
