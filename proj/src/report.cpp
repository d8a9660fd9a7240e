#include "carnot/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "carnot/errors.hpp"

namespace carnot {

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::holds:
            return "holds";
        case Verdict::violated:
            return "violated";
        case Verdict::inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

Verdict verdict_from_string(std::string_view s) {
    if (s == "holds") {
        return Verdict::holds;
    }
    if (s == "violated") {
        return Verdict::violated;
    }
    if (s == "inconclusive") {
        return Verdict::inconclusive;
    }
    throw StructuralError("unknown verdict '" + std::string(s) + "'");
}

nlohmann::json Thresholds::to_json() const {
    return {{"z", z}, {"abs_floor", abs_floor}, {"tail_fraction", tail_fraction}, {"tail_share", tail_share}};
}

Thresholds Thresholds::from_json(const nlohmann::json& j) {
    Thresholds t;
    for (const auto& [key, value] : j.items()) {
        if (key == "z") {
            t.z = value.get<double>();
        } else if (key == "abs_floor") {
            t.abs_floor = value.get<double>();
        } else if (key == "tail_fraction") {
            t.tail_fraction = value.get<double>();
        } else if (key == "tail_share") {
            t.tail_share = value.get<double>();
        } else {
            throw StructuralError("thresholds: unknown key '" + key + "'");
        }
    }
    if (!(t.z > 0.0) || !(t.abs_floor >= 0.0) || !(t.tail_fraction > 0.0 && t.tail_fraction < 1.0) ||
        !(t.tail_share > 0.0 && t.tail_share <= 1.0)) {
        throw ParameterError("thresholds out of range");
    }
    return t;
}

nlohmann::json CheckReport::to_json() const {
    nlohmann::json j{{"check", check},
                     {"lhs", lhs.to_json()},
                     {"rhs", rhs.to_json()},
                     {"margin", {{"value", margin}, {"stderr", stderr}}},
                     {"z", z},
                     {"verdict", to_string(verdict)},
                     {"kind", equality ? "equality" : "inequality"},
                     {"label", exploratory ? "exploratory" : "standard"},
                     {"params", params}};
    if (!notes.empty()) {
        j["notes"] = notes;
    }
    if (!parts.empty()) {
        nlohmann::json p = nlohmann::json::array();
        for (const auto& part : parts) {
            p.push_back(part.to_json());
        }
        j["parts"] = p;
    }
    return j;
}

namespace {

CheckReport base(std::string check, Estimate lhs, Estimate rhs, double margin_stderr) {
    CheckReport r;
    r.check = std::move(check);
    r.lhs = lhs;
    r.rhs = rhs;
    r.margin = rhs.value - lhs.value;
    r.stderr = margin_stderr;
    r.z = margin_stderr > 0.0 ? r.margin / margin_stderr : (r.margin == 0.0 ? 0.0 : std::copysign(INFINITY, r.margin));
    return r;
}

// Floating-point noise in the margin when both sides are computed exactly.
double roundoff(const CheckReport& r) {
    return 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(r.lhs.value), std::abs(r.rhs.value));
}

}  // namespace

CheckReport inequality_report(std::string check, Estimate lhs, Estimate rhs, double margin_stderr,
                              const Thresholds& thr) {
    CheckReport r = base(std::move(check), lhs, rhs, margin_stderr);
    if (!std::isfinite(r.margin) || !std::isfinite(r.stderr)) {
        r.verdict = Verdict::inconclusive;
        r.notes.push_back("non-finite estimate");
    } else if (r.margin >= -thr.z * r.stderr - roundoff(r)) {
        r.verdict = Verdict::holds;
    } else if (std::abs(r.margin) > thr.abs_floor) {
        r.verdict = Verdict::violated;
    } else {
        r.verdict = Verdict::inconclusive;
    }
    return r;
}

CheckReport equality_report(std::string check, Estimate lhs, Estimate rhs, double margin_stderr,
                            const Thresholds& thr) {
    CheckReport r = base(std::move(check), lhs, rhs, margin_stderr);
    r.equality = true;
    if (!std::isfinite(r.margin) || !std::isfinite(r.stderr)) {
        r.verdict = Verdict::inconclusive;
        r.notes.push_back("non-finite estimate");
    } else if (std::abs(r.margin) <= thr.z * r.stderr || std::abs(r.margin) <= thr.abs_floor) {
        r.verdict = Verdict::holds;
    } else {
        r.verdict = Verdict::violated;
    }
    return r;
}

CheckReport z_score_report(std::string check, std::vector<CheckReport> parts, const Thresholds& thr) {
    double worst = 0.0;
    for (const auto& p : parts) {
        worst = std::max(worst, std::abs(p.z));
    }
    CheckReport r;
    r.check = std::move(check);
    r.lhs = {worst, 0.0};
    r.rhs = {thr.z, 0.0};
    r.margin = thr.z - worst;
    r.stderr = 0.0;
    r.z = worst;
    r.verdict = worst < thr.z ? Verdict::holds : Verdict::violated;
    r.parts = std::move(parts);
    r.params["statistic"] = "max |z|";
    return r;
}

Verdict combine(const std::vector<CheckReport>& parts) {
    Verdict v = Verdict::holds;
    for (const auto& p : parts) {
        if (p.verdict == Verdict::violated) {
            return Verdict::violated;
        }
        if (p.verdict == Verdict::inconclusive) {
            v = Verdict::inconclusive;
        }
    }
    return v;
}

}  // namespace carnot
