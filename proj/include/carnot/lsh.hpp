#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "carnot/field.hpp"
#include "carnot/group.hpp"

namespace carnot {

enum class LshStatus { consistent, violated, domain_error };

std::string_view to_string(LshStatus s);

struct LshVerdict {
    LshStatus status = LshStatus::consistent;
    double min_delta_log = 0.0;  // min over points of Delta log f
    std::size_t worst_index = 0;
    GroupElement worst_point;
    double tolerance = 1e-9;
    /// min over points of (Delta f - |grad f|^2 / f) / f
    double min_equivalent_form = 0.0;
    /// Delta log f >= -tol and Delta f - |grad f|^2/f >= -tol f gave the same
    /// answer at every point.
    bool forms_agree = true;
    std::size_t points = 0;
    std::string domain_message;

    bool consistent() const { return status == LshStatus::consistent; }
    nlohmann::json to_json() const;
};

/// Pointwise check of Delta log f >= 0 on a finite point set. A pass means
/// "consistent on these points", nothing more.
LshVerdict check_lsh(const CarnotGroup& group, const ScalarField& f, const std::vector<GroupElement>& points,
                     double tol = 1e-9);

enum class LshOp { product, sum, power, dilate };

LshOp lsh_op_from_string(std::string_view name);

/// f*g, f+g, f^p (p > 0) or f o delta_lambda (lambda > 0).
ScalarField lsh_combine(const StratifiedAlgebra& algebra, LshOp op, const ScalarField& f,
                        const std::optional<ScalarField>& g = std::nullopt, double parameter = 1.0);

enum class LshLabel { lsh, not_lsh, unknown };

std::string_view to_string(LshLabel l);

struct LibraryField {
    std::string name;
    ScalarField field;
    LshLabel label = LshLabel::unknown;
    std::string note;
};

/// Named test functions for the algebra: exponentials of first-layer linear
/// forms and their closures, homogeneous positive polynomials plus epsilon,
/// and superharmonic-exponent negative controls.
std::vector<LibraryField> builtin_lsh_library(const StratifiedAlgebra& algebra);

/// Library lookup by name; throws StructuralError for unknown names.
LibraryField library_field(const StratifiedAlgebra& algebra, std::string_view name);

/// n points uniformly spread over the coordinate box of quasi-norm radius
/// `radius` (every point has N(x) <= radius).
std::vector<GroupElement> sample_grid(const CarnotGroup& group, std::size_t n, double radius = 3.0,
                                      std::uint64_t seed = 1);

}  // namespace carnot
