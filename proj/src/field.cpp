#include "carnot/field.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "carnot/algebra.hpp"
#include "carnot/errors.hpp"

namespace carnot {

struct ScalarField::Node {
    Kind kind = Kind::constant;
    double value = 0.0;  // constant value, pow exponent, affine offset
    int index = -1;      // variable
    std::vector<double> coeffs;  // affine coefficients or dilation weights
    std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using NodePtr = std::shared_ptr<const ScalarField::Node>;

NodePtr make(ScalarField::Node n) { return std::make_shared<const ScalarField::Node>(std::move(n)); }

bool is_integer(double p) { return std::floor(p) == p && std::abs(p) < 1e15; }

double value_of(double x) { return x; }
double value_of(const Jet2& x) { return x.v; }

template <class T>
T eval(const ScalarField::Node& n, std::span<const T> x) {
    using K = ScalarField::Kind;
    switch (n.kind) {
        case K::constant:
            return T(n.value);
        case K::variable:
            if (static_cast<std::size_t>(n.index) >= x.size()) {
                throw StructuralError("field references coordinate " + std::to_string(n.index) +
                                      " but the point has " + std::to_string(x.size()));
            }
            return x[n.index];
        case K::add: {
            T acc = eval(*n.children[0], x);
            for (std::size_t i = 1; i < n.children.size(); ++i) {
                acc = acc + eval(*n.children[i], x);
            }
            return acc;
        }
        case K::mul: {
            T acc = eval(*n.children[0], x);
            for (std::size_t i = 1; i < n.children.size(); ++i) {
                acc = acc * eval(*n.children[i], x);
            }
            return acc;
        }
        case K::pow: {
            const T base = eval(*n.children[0], x);
            if (!is_integer(n.value) && !(value_of(base) > 0.0)) {
                throw DomainError("power with exponent " + std::to_string(n.value) +
                                  " of non-positive value " + std::to_string(value_of(base)));
            }
            if (n.value < 0.0 && value_of(base) == 0.0) {
                throw DomainError("negative power of zero");
            }
            using std::pow;
            return pow(base, n.value);
        }
        case K::exp: {
            using std::exp;
            return exp(eval(*n.children[0], x));
        }
        case K::log: {
            const T arg = eval(*n.children[0], x);
            if (!(value_of(arg) > 0.0)) {
                throw DomainError("log of non-positive value " + std::to_string(value_of(arg)));
            }
            using std::log;
            return log(arg);
        }
        case K::affine: {
            if (n.coeffs.size() > x.size()) {
                throw StructuralError("affine field longer than the point");
            }
            T acc = T(n.value);
            for (std::size_t i = 0; i < n.coeffs.size(); ++i) {
                if (n.coeffs[i] != 0.0) {
                    acc = acc + n.coeffs[i] * x[i];
                }
            }
            return acc;
        }
        case K::dilate: {
            if (n.coeffs.size() != x.size()) {
                throw StructuralError("dilated field evaluated on a point of the wrong dimension");
            }
            std::vector<T> y(x.begin(), x.end());
            for (std::size_t i = 0; i < y.size(); ++i) {
                y[i] = n.coeffs[i] * y[i];
            }
            return eval<T>(*n.children[0], std::span<const T>(y));
        }
    }
    return T(0.0);
}

std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string render(const ScalarField::Node& n) {
    using K = ScalarField::Kind;
    switch (n.kind) {
        case K::constant:
            return format_number(n.value);
        case K::variable:
            return "x#" + std::to_string(n.index);
        case K::add:
        case K::mul: {
            std::string s = n.kind == K::add ? "(+" : "(*";
            for (const auto& c : n.children) {
                s += " " + render(*c);
            }
            return s + ")";
        }
        case K::pow:
            return "(^ " + render(*n.children[0]) + " " + format_number(n.value) + ")";
        case K::exp:
            return "(exp " + render(*n.children[0]) + ")";
        case K::log:
            return "(log " + render(*n.children[0]) + ")";
        case K::affine: {
            std::string s = "(+ " + format_number(n.value);
            for (std::size_t i = 0; i < n.coeffs.size(); ++i) {
                if (n.coeffs[i] != 0.0) {
                    s += " (* " + format_number(n.coeffs[i]) + " x#" + std::to_string(i) + ")";
                }
            }
            return s + ")";
        }
        case K::dilate: {
            std::string s = "(dilate [";
            for (std::size_t i = 0; i < n.coeffs.size(); ++i) {
                s += (i ? " " : "") + format_number(n.coeffs[i]);
            }
            return s + "] " + render(*n.children[0]) + ")";
        }
    }
    return "?";
}

bool positive(const ScalarField::Node& n) {
    using K = ScalarField::Kind;
    switch (n.kind) {
        case K::constant:
            return n.value > 0.0;
        case K::exp:
            return true;
        case K::add:
        case K::mul:
            for (const auto& c : n.children) {
                if (!positive(*c)) {
                    return false;
                }
            }
            return true;
        case K::pow:
        case K::dilate:
            return positive(*n.children[0]);
        default:
            return false;
    }
}

int max_var(const ScalarField::Node& n) {
    int m = -1;
    if (n.kind == ScalarField::Kind::variable) {
        m = n.index;
    }
    if (n.kind == ScalarField::Kind::affine || n.kind == ScalarField::Kind::dilate) {
        for (std::size_t i = n.coeffs.size(); i-- > 0;) {
            if (n.kind == ScalarField::Kind::dilate || n.coeffs[i] != 0.0) {
                m = std::max(m, static_cast<int>(i));
                break;
            }
        }
    }
    for (const auto& c : n.children) {
        m = std::max(m, max_var(*c));
    }
    return m;
}

NodePtr nary(ScalarField::Kind kind, const NodePtr& a, const NodePtr& b) {
    ScalarField::Node n;
    n.kind = kind;
    for (const auto& side : {a, b}) {
        if (side->kind == kind) {
            n.children.insert(n.children.end(), side->children.begin(), side->children.end());
        } else {
            n.children.push_back(side);
        }
    }
    return make(std::move(n));
}

}  // namespace

template <class T>
T ScalarField::evaluate(std::span<const T> x) const {
    return eval<T>(*node_, x);
}

template double ScalarField::evaluate<double>(std::span<const double>) const;
template Jet2 ScalarField::evaluate<Jet2>(std::span<const Jet2>) const;

ScalarField::ScalarField() : node_(make(Node{})) {}

ScalarField ScalarField::constant(double c) {
    Node n;
    n.value = c;
    return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::variable(int flat_index) {
    if (flat_index < 0) {
        throw StructuralError("negative coordinate index");
    }
    Node n;
    n.kind = Kind::variable;
    n.index = flat_index;
    return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::affine(std::vector<double> coeffs, double offset) {
    Node n;
    n.kind = Kind::affine;
    n.coeffs = std::move(coeffs);
    n.value = offset;
    return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::exp() const {
    Node n;
    n.kind = Kind::exp;
    n.children = {node_};
    return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::log() const {
    Node n;
    n.kind = Kind::log;
    n.children = {node_};
    return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::pow(double exponent) const {
    if (!std::isfinite(exponent)) {
        throw ParameterError("field power exponent must be finite");
    }
    if (node_->kind == Kind::pow) {
        // (g^a)^b = g^{ab} holds on the positive domain; keep nested for signed bases.
        if (positive(*node_->children[0])) {
            return ScalarField(node_->children[0]).pow(node_->value * exponent);
        }
    }
    Node n;
    n.kind = Kind::pow;
    n.value = exponent;
    n.children = {node_};
    return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::dilated(const StratifiedAlgebra& algebra, double lambda) const {
    if (!(lambda >= 0.0)) {
        throw ParameterError("dilation factor must be nonnegative");
    }
    std::vector<double> w(algebra.dimension());
    for (int i = 0; i < algebra.dimension(); ++i) {
        w[i] = std::pow(lambda, algebra.layer_of(i));
    }
    if (node_->kind == Kind::dilate && node_->coeffs.size() == w.size()) {
        // delta_a o delta_b = delta_{ab}
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] *= node_->coeffs[i];
        }
        Node n;
        n.kind = Kind::dilate;
        n.coeffs = std::move(w);
        n.children = node_->children;
        return ScalarField(make(std::move(n)));
    }
    Node n;
    n.kind = Kind::dilate;
    n.coeffs = std::move(w);
    n.children = {node_};
    return ScalarField(make(std::move(n)));
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    return ScalarField(nary(ScalarField::Kind::add, a.node_, b.node_));
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    return ScalarField(nary(ScalarField::Kind::mul, a.node_, b.node_));
}

ScalarField operator-(const ScalarField& a) { return ScalarField::constant(-1.0) * a; }

ScalarField operator-(const ScalarField& a, const ScalarField& b) { return a + (-b); }

ScalarField operator/(const ScalarField& a, const ScalarField& b) { return a * b.pow(-1.0); }

ScalarField::Kind ScalarField::kind() const { return node_->kind; }

bool ScalarField::known_positive() const { return positive(*node_); }

int ScalarField::max_variable() const { return max_var(*node_); }

std::string ScalarField::to_string() const { return render(*node_); }

// ---------------------------------------------------------------------------
// Prefix parser

namespace {

class Parser {
public:
    Parser(std::string_view text, const StratifiedAlgebra& algebra, const FieldParameters& params)
        : text_(text), algebra_(algebra), params_(params) {}

    ScalarField parse() {
        ScalarField f = expression();
        skip_space();
        if (pos_ != text_.size()) {
            fail("unexpected trailing input");
        }
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw StructuralError("field '" + std::string(text_) + "': " + msg + " at offset " +
                              std::to_string(pos_));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    std::string atom() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '(' && text_[pos_] != ')') {
            ++pos_;
        }
        if (start == pos_) {
            fail("expected a token");
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    double number_value(const ScalarField& f, const char* what) const {
        if (f.kind() != ScalarField::Kind::constant) {
            fail(std::string(what) + " must be a number or parameter");
        }
        return f(std::span<const double>());
    }

    ScalarField leaf(const std::string& tok) {
        if (tok.size() > 2 && tok[0] == 'x' && tok[1] == '_') {
            int layer = 0;
            int k = 0;
            char extra = 0;
            if (std::sscanf(tok.c_str(), "x_%d_%d%c", &layer, &k, &extra) == 2) {
                return ScalarField::variable(algebra_.flat_index({layer, k}));
            }
            fail("bad variable name '" + tok + "'");
        }
        if (auto it = params_.find(tok); it != params_.end()) {
            return ScalarField::constant(it->second);
        }
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() && *end == '\0') {
            return ScalarField::constant(v);
        }
        fail("unknown symbol '" + tok + "'");
    }

    ScalarField expression() {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        if (text_[pos_] != '(') {
            return leaf(atom());
        }
        ++pos_;
        const std::string op = atom();
        std::vector<ScalarField> args;
        skip_space();
        while (pos_ < text_.size() && text_[pos_] != ')') {
            args.push_back(expression());
            skip_space();
        }
        if (pos_ >= text_.size()) {
            fail("missing ')'");
        }
        ++pos_;
        return apply(op, args);
    }

    ScalarField apply(const std::string& op, const std::vector<ScalarField>& args) {
        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi) {
                fail("operator '" + op + "' got " + std::to_string(args.size()) + " arguments");
            }
        };
        if (op == "+" || op == "*") {
            arity(1, std::numeric_limits<std::size_t>::max());
            ScalarField acc = args[0];
            for (std::size_t i = 1; i < args.size(); ++i) {
                acc = op == "+" ? acc + args[i] : acc * args[i];
            }
            return acc;
        }
        if (op == "-") {
            arity(1, 2);
            return args.size() == 1 ? -args[0] : args[0] - args[1];
        }
        if (op == "/") {
            arity(2, 2);
            return args[0] / args[1];
        }
        if (op == "^" || op == "pow") {
            arity(2, 2);
            return args[0].pow(number_value(args[1], "exponent"));
        }
        if (op == "exp") {
            arity(1, 1);
            return args[0].exp();
        }
        if (op == "log") {
            arity(1, 1);
            return args[0].log();
        }
        fail("unknown operator '" + op + "'");
    }

    std::string_view text_;
    const StratifiedAlgebra& algebra_;
    const FieldParameters& params_;
    std::size_t pos_ = 0;
};

}  // namespace

ScalarField parse_field(std::string_view text, const StratifiedAlgebra& algebra, const FieldParameters& params) {
    return Parser(text, algebra, params).parse();
}

}  // namespace carnot
