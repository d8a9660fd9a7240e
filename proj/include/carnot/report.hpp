#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace carnot {

enum class Verdict { holds, violated, inconclusive };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

/// A Monte Carlo number always travels with its standard error.
struct Estimate {
    double value = 0.0;
    double stderr = 0.0;

    nlohmann::json to_json() const { return {{"value", value}, {"stderr", stderr}}; }
};

/// Verdict thresholds. A check holds iff margin >= -z * stderr (less round-off); it is
/// violated iff margin < -z * stderr and |margin| > abs_floor.
struct Thresholds {
    double z = 4.0;
    double abs_floor = 1e-9;
    /// Heavy-tail guard: if the top `tail_fraction` of samples carries more
    /// than `tail_share` of an integrand's mass the check is inconclusive.
    double tail_fraction = 1e-3;
    double tail_share = 0.2;

    nlohmann::json to_json() const;
    static Thresholds from_json(const nlohmann::json& j);
};

struct CheckReport {
    std::string check;
    Estimate lhs;
    Estimate rhs;
    double margin = 0.0;  // rhs - lhs
    double stderr = 0.0;  // of the margin
    double z = 0.0;
    Verdict verdict = Verdict::inconclusive;
    bool equality = false;
    bool exploratory = false;
    nlohmann::json params = nlohmann::json::object();
    std::vector<std::string> notes;
    std::vector<CheckReport> parts;

    nlohmann::json to_json() const;
};

/// lhs <= rhs with a jointly estimated margin standard error.
CheckReport inequality_report(std::string check, Estimate lhs, Estimate rhs, double margin_stderr,
                              const Thresholds& thr);
/// lhs == rhs, two-sided.
CheckReport equality_report(std::string check, Estimate lhs, Estimate rhs, double margin_stderr,
                            const Thresholds& thr);
/// Pass iff every |z| in `parts` is below thr.z; lhs carries the largest |z|.
CheckReport z_score_report(std::string check, std::vector<CheckReport> parts, const Thresholds& thr);

/// Worst verdict of the parts (violated > inconclusive > holds).
Verdict combine(const std::vector<CheckReport>& parts);

}  // namespace carnot
