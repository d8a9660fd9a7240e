#include "carnot/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"
#include "carnot/group.hpp"
#include "carnot/inequalities.hpp"
#include "carnot/lsh.hpp"

#ifndef CARNOT_VERSION
#define CARNOT_VERSION "unknown"
#endif

namespace carnot {

namespace {

using nlohmann::json;

const std::set<std::string> kCommonKeys = {"kind", "name", "expect", "heat", "algebra"};

// Arguments of each check kind with their defaults. A null default marks a
// required argument, except "t" of shc which defaults to Janson's time.
const std::map<std::string, json>& kind_defaults() {
    static const std::map<std::string, json> defaults = {
        {"validate", json::object()},
        {"htype", {{"v2_metric", nullptr}, {"draws", 64}, {"seed", 24301}}},
        {"marginals", {{"alpha", 0.01}}},
        {"inverse_symmetry", {{"seed", 17}, {"shift", nullptr}}},
        {"scaling", {{"lambda", 2.0}, {"seed", 23}}},
        {"tail", {{"grid_points", 24}}},
        {"time_space", {{"field", nullptr}, {"params", json::object()}}},
        {"lsi", {{"field", nullptr}, {"params", json::object()}, {"c", 0.5}, {"beta", 0.0}, {"form", "L1"}}},
        {"slsi", {{"field", nullptr}, {"params", json::object()}, {"c", 0.5}, {"beta", 0.0}}},
        {"chain", {{"field", nullptr}, {"params", json::object()}}},
        {"shc",
         {{"field", nullptr},
          {"params", json::object()},
          {"p", 1.0},
          {"q", 2.0},
          {"t", nullptr},
          {"t_scale", 1.0},
          {"c", 0.5},
          {"beta", 0.0},
          {"exploratory", false}}},
        {"alpha",
         {{"field", nullptr},
          {"params", json::object()},
          {"c", 1.0},
          {"beta", 0.0},
          {"q", std::numbers::e},
          {"points", 11}}},
        {"contractivity", {{"field", nullptr}, {"params", json::object()}, {"t_max", 1.0}, {"points", 11}}},
        {"lsh",
         {{"field", nullptr},
          {"params", json::object()},
          {"points", 1000},
          {"radius", 3.0},
          {"tol", 1e-9},
          {"grid_seed", 1},
          {"source", "grid"}}},
    };
    return defaults;
}

bool needs_batch(const std::string& kind) {
    return kind != "validate" && kind != "htype" && kind != "lsh";
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) {
        throw StructuralError(where + ": expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw StructuralError(where + ": unknown key '" + key + "'");
        }
    }
}

double number(const json& args, const char* key, const std::string& where) {
    const json& v = args.at(key);
    if (!v.is_number()) {
        throw StructuralError(where + ": '" + key + "' must be a number");
    }
    return v.get<double>();
}

long long integer(const json& args, const char* key, const std::string& where) {
    const json& v = args.at(key);
    if (!v.is_number_integer()) {
        throw StructuralError(where + ": '" + key + "' must be an integer");
    }
    return v.get<long long>();
}

void require(bool ok, const std::string& where, const std::string& what) {
    if (!ok) {
        throw ParameterError(where + ": " + what);
    }
}

StratifiedAlgebra algebra_from(const json& spec) {
    if (spec.is_string()) {
        return load_algebra(spec.get<std::string>());
    }
    if (spec.is_object()) {
        return StratifiedAlgebra::from_json(spec);
    }
    throw StructuralError("algebra must be a name, a file path or an inline object");
}

FieldParameters parameters_from(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw StructuralError(where + ": params must be an object");
    }
    FieldParameters p;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) {
            throw StructuralError(where + ": parameter '" + key + "' must be a number");
        }
        p[key] = value.get<double>();
    }
    return p;
}

HeatParams merged_heat(const HeatParams& base, const json& override_) {
    json h = base.to_json();
    for (const auto& [key, value] : override_.items()) {
        h[key] = value;
    }
    try {
        return HeatParams::from_json(h);
    } catch (const json::exception& e) {
        throw StructuralError(std::string("heat parameters: ") + e.what());
    }
}

Verdict verdict_of(bool ok) { return ok ? Verdict::holds : Verdict::violated; }

void mark_exploratory(CheckReport& r) {
    r.exploratory = true;
    for (auto& p : r.parts) {
        mark_exploratory(p);
    }
}

std::string fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string field_spec(const ExperimentConfig& cfg, const std::string& name) {
    auto it = cfg.fields.find(name);
    return it == cfg.fields.end() ? name : it->second;
}

FieldParameters check_params(const ExperimentConfig& cfg, const json& args, const std::string& where) {
    FieldParameters p = cfg.params;
    for (const auto& [k, v] : parameters_from(args.at("params"), where)) {
        p[k] = v;
    }
    return p;
}

ScalarField check_field(const ExperimentConfig& cfg, const json& args, const StratifiedAlgebra& alg,
                        const std::string& where) {
    if (!args.at("field").is_string()) {
        throw StructuralError(where + ": 'field' must be a string");
    }
    return resolve_field(field_spec(cfg, args.at("field").get<std::string>()), alg, check_params(cfg, args, where));
}

// Fills defaults, rejects unknown keys and checks ranges for one check.
CheckSpec resolve_check(const ExperimentConfig& cfg, const json& j, std::size_t index) {
    const std::string where = "check #" + std::to_string(index);
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        throw StructuralError(where + ": every check needs a string 'kind'");
    }
    CheckSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    const auto& defaults = kind_defaults();
    auto it = defaults.find(spec.kind);
    if (it == defaults.end()) {
        throw StructuralError(where + ": unknown check kind '" + spec.kind + "'");
    }
    std::set<std::string> allowed = kCommonKeys;
    for (const auto& [key, value] : it->second.items()) {
        allowed.insert(key);
    }
    reject_unknown(j, allowed, where);
    spec.name = j.value("name", spec.kind + "#" + std::to_string(index));
    if (j.contains("expect")) {
        if (!j.at("expect").is_string()) {
            throw StructuralError(where + ": 'expect' must be a verdict string");
        }
        const auto text = j.at("expect").get<std::string>();
        if (text == "any") {
            spec.observe = true;
        } else {
            spec.expect = verdict_from_string(text);
        }
    }
    if (j.contains("heat")) {
        reject_unknown(j.at("heat"), {"s", "n", "steps", "seed", "tilt"}, where + " heat");
        spec.heat = j.at("heat");
    }
    spec.algebra = j.contains("algebra") ? j.at("algebra") : cfg.algebra;

    spec.args = it->second;
    for (const auto& [key, value] : j.items()) {
        if (!kCommonKeys.contains(key)) {
            spec.args[key] = value;
        }
    }
    json& a = spec.args;
    for (const auto& [key, value] : a.items()) {
        if (value.is_null() && key == "field") {
            throw StructuralError(where + ": '" + spec.kind + "' needs a 'field'");
        }
    }

    const StratifiedAlgebra alg = algebra_from(spec.algebra);
    const CarnotGroup group(alg);
    if (needs_batch(spec.kind) || (spec.kind == "lsh" && a.at("source") == "batch")) {
        merged_heat(cfg.heat, spec.heat).validate(group);
    }
    if (a.contains("field")) {
        check_field(cfg, a, alg, where);
    }

    const std::string& k = spec.kind;
    if (k == "htype") {
        require(integer(a, "draws", where) >= 32, where, "draws must be >= 32");
        integer(a, "seed", where);
        if (!a.at("v2_metric").is_null() && !a.at("v2_metric").is_array()) {
            throw StructuralError(where + ": v2_metric must be a matrix");
        }
    } else if (k == "marginals") {
        const double alpha = number(a, "alpha", where);
        require(alpha > 0.0 && alpha < 1.0, where, "alpha must be in (0, 1)");
    } else if (k == "inverse_symmetry") {
        integer(a, "seed", where);
        if (!a.at("shift").is_null()) {
            const auto shift = a.at("shift").get<std::vector<double>>();
            if (shift.size() != static_cast<std::size_t>(alg.dimension())) {
                throw StructuralError(where + ": shift has the wrong dimension");
            }
        }
    } else if (k == "scaling") {
        require(number(a, "lambda", where) > 0.0, where, "lambda must be positive");
        integer(a, "seed", where);
    } else if (k == "tail") {
        require(integer(a, "grid_points", where) >= 6, where, "grid_points must be >= 6");
    } else if (k == "lsi" || k == "slsi") {
        require(number(a, "c", where) >= 0.0 && number(a, "beta", where) >= 0.0, where, "need c >= 0 and beta >= 0");
        if (k == "lsi" && a.at("form") != "L1" && a.at("form") != "L2") {
            throw StructuralError(where + ": form must be \"L1\" or \"L2\"");
        }
    } else if (k == "shc") {
        const double p = number(a, "p", where);
        const double q = number(a, "q", where);
        require(p > 0.0 && std::isfinite(q), where, "need 0 < p and finite q");
        require(p <= q, where, "p > q (sHC needs p <= q)");
        const double c = number(a, "c", where);
        require(c >= 0.0 && number(a, "beta", where) >= 0.0, where, "need c >= 0 and beta >= 0");
        if (!a.at("exploratory").is_boolean()) {
            throw StructuralError(where + ": exploratory must be a boolean");
        }
        const double tj = janson_time(c, p, q);
        if (a.at("t").is_null()) {
            a["t"] = number(a, "t_scale", where) * tj;
        }
        const double t = number(a, "t", where);
        require(std::isfinite(t) && t >= 0.0, where, "t must be finite and >= 0");
        require(t >= tj - 1e-12 * std::max(1.0, tj) || a.at("exploratory").get<bool>(), where,
                "t is below Janson's time; set exploratory to allow it");
    } else if (k == "alpha") {
        require(number(a, "c", where) > 0.0 && number(a, "beta", where) >= 0.0, where, "need c > 0 and beta >= 0");
        require(number(a, "q", where) > 1.0, where, "q must be > 1");
        require(integer(a, "points", where) >= 2, where, "points must be >= 2");
    } else if (k == "contractivity") {
        require(number(a, "t_max", where) > 0.0, where, "t_max must be positive");
        require(integer(a, "points", where) >= 2, where, "points must be >= 2");
    } else if (k == "lsh") {
        require(integer(a, "points", where) >= 1, where, "points must be >= 1");
        require(number(a, "radius", where) > 0.0, where, "radius must be positive");
        require(number(a, "tol", where) >= 0.0, where, "tol must be >= 0");
        integer(a, "grid_seed", where);
        if (a.at("source") != "grid" && a.at("source") != "batch") {
            throw StructuralError(where + ": source must be \"grid\" or \"batch\"");
        }
    }
    return spec;
}

class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg) {}

    CheckReport execute(const CheckSpec& spec, std::size_t index, std::string& csv_written) {
        const json& a = spec.args;
        const CarnotGroup& group = group_for(spec.algebra);
        const StratifiedAlgebra& alg = group.algebra();
        const Thresholds& thr = cfg_.thresholds;
        const std::string& k = spec.kind;
        const std::string where = "check #" + std::to_string(index);
        const HeatParams heat = merged_heat(cfg_.heat, spec.heat);

        if (k == "validate") {
            const auto v = validate(alg);
            CheckReport r;
            r.check = "algebra_validate";
            double worst = 0.0;
            for (const auto& c : v.checks) {
                worst = std::max(worst, c.residual);
            }
            r.lhs = {worst, 0.0};
            r.rhs = {v.tolerance, 0.0};
            r.margin = v.tolerance - worst;
            r.verdict = verdict_of(v.passed());
            r.params = v.to_json();
            return r;
        }
        if (k == "htype") {
            std::optional<Eigen::MatrixXd> metric;
            if (!a.at("v2_metric").is_null()) {
                const auto rows = a.at("v2_metric").get<std::vector<std::vector<double>>>();
                Eigen::MatrixXd m(rows.size(), rows.size());
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    if (rows[i].size() != rows.size()) {
                        throw StructuralError(where + ": v2_metric must be square");
                    }
                    for (std::size_t j = 0; j < rows.size(); ++j) {
                        m(i, j) = rows[i][j];
                    }
                }
                metric = m;
            }
            const auto v = classify_h_type(alg, metric, a.at("draws").get<int>(), a.at("seed").get<std::uint64_t>());
            CheckReport r;
            r.check = "h_type";
            r.lhs = {v.max_residual, 0.0};
            r.rhs = {v.tolerance, 0.0};
            r.margin = v.tolerance - v.max_residual;
            r.verdict = verdict_of(v.h_type);
            r.params = v.to_json();
            return r;
        }
        if (k == "lsh") {
            const ScalarField f = check_field(cfg_, a, alg, where);
            std::vector<GroupElement> points;
            const auto count = a.at("points").get<std::size_t>();
            if (a.at("source") == "grid") {
                points = sample_grid(group, count, a.at("radius").get<double>(), a.at("grid_seed").get<std::uint64_t>());
            } else {
                const auto& b = batch(group, spec.algebra, heat);
                for (std::size_t i = 0; i < std::min(count, b.size()); ++i) {
                    points.push_back(b.element(i));
                }
            }
            const LshVerdict v = check_lsh(group, f, points, a.at("tol").get<double>());
            CheckReport r;
            r.check = "lsh";
            r.lhs = {-v.tolerance, 0.0};
            r.rhs = {v.min_delta_log, 0.0};
            r.margin = v.min_delta_log + v.tolerance;
            r.verdict = v.status == LshStatus::domain_error ? Verdict::inconclusive : verdict_of(v.consistent());
            if (v.status == LshStatus::domain_error) {
                r.notes.push_back("domain error: " + v.domain_message);
            }
            if (!v.forms_agree) {
                r.notes.push_back("Delta log f and Delta f - |grad f|^2/f disagree at some point");
            }
            r.params = v.to_json();
            r.params["field"] = f.to_string();
            return r;
        }

        const HeatSampleBatch& b = batch(group, spec.algebra, heat);
        if (k == "marginals") {
            const auto m = check_first_layer_marginals(b);
            CheckReport r;
            r.check = "first_layer_marginals";
            const double alpha = a.at("alpha").get<double>();
            r.lhs = {alpha, 0.0};
            r.rhs = {m.min_p_value, 0.0};
            r.margin = m.min_p_value - alpha;
            r.verdict = verdict_of(m.min_p_value >= alpha);
            r.params = {{"ks_statistics", m.statistics}, {"p_values", m.p_values}, {"s", b.s()}, {"n", b.size()}};
            return r;
        }
        if (k == "inverse_symmetry") {
            const auto seed = a.at("seed").get<std::uint64_t>();
            if (a.at("shift").is_null()) {
                return empirical_check_inverse_symmetry(b, thr, seed);
            }
            const GroupElement g(a.at("shift").get<std::vector<double>>());
            CheckReport r = empirical_check_inverse_symmetry(b.right_translated(g), thr, seed);
            r.params["shift"] = g.to_json();
            return r;
        }
        if (k == "scaling") {
            const double lambda = a.at("lambda").get<double>();
            HeatParams scaled = heat;
            scaled.s = heat.s / (lambda * lambda);
            scaled.seed = heat.seed + 1;
            const auto& b2 = batch(group, spec.algebra, scaled);
            return empirical_check_scaling(b, lambda, b2, thr, a.at("seed").get<std::uint64_t>());
        }
        if (k == "tail") {
            const TailReport t = empirical_tail_profile(b, a.at("grid_points").get<std::size_t>());
            CheckReport r = t.as_check();
            r.params["fit"] = t.to_json();
            return r;
        }

        const ScalarField f = check_field(cfg_, a, alg, where);
        if (k == "time_space") {
            return check_time_space(f, b, thr);
        }
        if (k == "lsi") {
            return check_lsi(f, b, a.at("c").get<double>(), a.at("beta").get<double>(),
                             a.at("form") == "L2" ? LsiForm::l2 : LsiForm::l1, thr);
        }
        if (k == "slsi") {
            return check_slsi(f, b, a.at("c").get<double>(), a.at("beta").get<double>(), thr);
        }
        if (k == "chain") {
            return check_lsi_implies_slsi_chain(f, b, thr);
        }
        if (k == "shc") {
            return check_shc(f, b, a.at("p").get<double>(), a.at("q").get<double>(), a.at("t").get<double>(),
                             a.at("c").get<double>(), a.at("beta").get<double>(), a.at("exploratory").get<bool>(),
                             thr);
        }
        Curve curve;
        if (k == "alpha") {
            const double c = a.at("c").get<double>();
            const auto ts = alpha_grid(c, a.at("q").get<double>(), a.at("points").get<std::size_t>());
            curve = sweep_alpha(f, b, c, a.at("beta").get<double>(), ts, thr);
        } else {
            const auto n = a.at("points").get<std::size_t>();
            std::vector<double> ts(n);
            for (std::size_t i = 0; i < n; ++i) {
                ts[i] = a.at("t_max").get<double>() * static_cast<double>(i) / static_cast<double>(n - 1);
            }
            curve = check_l1_contractivity(f, b, ts, thr);
        }
        json rows = json::array();
        for (const auto& p : curve.points) {
            rows.push_back({{"t", p.t}, {"value", p.value}, {"stderr", p.stderr}});
        }
        curve.report.params["curve"] = rows;
        if (!cfg_.csv_dir.empty()) {
            std::filesystem::create_directories(cfg_.csv_dir);
            const auto path = std::filesystem::path(cfg_.csv_dir) / (spec.name + ".csv");
            std::ofstream out(path);
            if (!out) {
                throw StructuralError("cannot write " + path.string());
            }
            curve.write_csv(out);
            csv_written = path.string();
        }
        return curve.report;
    }

private:
    const CarnotGroup& group_for(const json& spec) {
        const std::string key = spec.dump();
        auto it = groups_.find(key);
        if (it == groups_.end()) {
            it = groups_.emplace(key, CarnotGroup(algebra_from(spec))).first;
        }
        return it->second;
    }

    const HeatSampleBatch& batch(const CarnotGroup& group, const json& algebra, const HeatParams& heat) {
        const std::string key = algebra.dump() + "|" + heat.to_json().dump();
        auto it = batches_.find(key);
        if (it == batches_.end()) {
            it = batches_.emplace(key, std::make_unique<HeatSampleBatch>(sample_heat(group, heat))).first;
        }
        return *it->second;
    }

    const ExperimentConfig& cfg_;
    std::map<std::string, CarnotGroup> groups_;
    std::map<std::string, std::unique_ptr<HeatSampleBatch>> batches_;
};

}  // namespace

nlohmann::json CheckSpec::to_json() const {
    json j = args;
    j["kind"] = kind;
    j["name"] = name;
    if (expect) {
        j["expect"] = to_string(*expect);
    } else if (observe) {
        j["expect"] = "any";
    }
    if (!heat.empty()) {
        j["heat"] = heat;
    }
    j["algebra"] = algebra;
    return j;
}

std::vector<std::string> check_kinds() {
    std::vector<std::string> out;
    for (const auto& [k, v] : kind_defaults()) {
        out.push_back(k);
    }
    return out;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    reject_unknown(j, {"name", "algebra", "heat", "thresholds", "exploratory", "fields", "params", "output", "checks"},
                   "config");
    ExperimentConfig cfg;
    try {
        cfg.name = j.value("name", cfg.name);
        if (j.contains("algebra")) {
            cfg.algebra = j.at("algebra");
        }
        if (j.contains("heat")) {
            cfg.heat = HeatParams::from_json(j.at("heat"));
        }
        if (j.contains("thresholds")) {
            cfg.thresholds = Thresholds::from_json(j.at("thresholds"));
        }
        cfg.exploratory = j.value("exploratory", false);
        if (j.contains("fields")) {
            cfg.fields = j.at("fields").get<std::map<std::string, std::string>>();
        }
        if (j.contains("params")) {
            cfg.params = parameters_from(j.at("params"), "config");
        }
        if (j.contains("output")) {
            reject_unknown(j.at("output"), {"manifest", "csv_dir"}, "output");
            cfg.manifest_path = j.at("output").value("manifest", "");
            cfg.csv_dir = j.at("output").value("csv_dir", "");
        }
        const StratifiedAlgebra alg = algebra_from(cfg.algebra);
        for (const auto& [name, expr] : cfg.fields) {
            resolve_field(expr, alg, cfg.params);
        }
        if (!j.contains("checks") || !j.at("checks").is_array()) {
            throw StructuralError("config: 'checks' must be an array");
        }
        std::set<std::string> names;
        for (std::size_t i = 0; i < j.at("checks").size(); ++i) {
            cfg.checks.push_back(resolve_check(cfg, j.at("checks")[i], i));
            if (!names.insert(cfg.checks.back().name).second) {
                throw StructuralError("config: duplicate check name '" + cfg.checks.back().name + "'");
            }
        }
    } catch (const json::exception& e) {
        throw StructuralError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw StructuralError("cannot open config '" + path + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw StructuralError("config '" + path + "': " + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    json checks_json = json::array();
    for (const auto& c : checks) {
        checks_json.push_back(c.to_json());
    }
    json j{{"name", name},
           {"algebra", algebra},
           {"heat", heat.to_json()},
           {"thresholds", thresholds.to_json()},
           {"exploratory", exploratory},
           {"fields", fields},
           {"params", params},
           {"checks", checks_json}};
    json out = json::object();
    if (!manifest_path.empty()) {
        out["manifest"] = manifest_path;
    }
    if (!csv_dir.empty()) {
        out["csv_dir"] = csv_dir;
    }
    j["output"] = out;
    return j;
}

std::string ExperimentConfig::hash() const { return fnv1a(to_json().dump()); }

bool CheckOutcome::passed() const {
    if (!report) {
        return false;
    }
    return observe || report->verdict == expect.value_or(Verdict::holds);
}

nlohmann::json CheckOutcome::to_json() const {
    json j{{"index", index}, {"kind", kind}, {"name", name}};
    if (expect) {
        j["expect"] = to_string(*expect);
    } else if (observe) {
        j["expect"] = "any";
    }
    if (report) {
        j["report"] = report->to_json();
        j["verdict"] = to_string(report->verdict);
    } else {
        j["error"] = {{"kind", error_kind}, {"message", error}};
    }
    j["outcome"] = !report ? "error" : observe ? "observed" : passed() ? "pass" : "fail";
    return j;
}

int RunManifest::exit_code() const {
    bool structural = false;
    bool violated = false;
    bool inconclusive = false;
    for (const auto& o : outcomes) {
        if (!o.report) {
            if (o.error_kind == "domain") {
                inconclusive = true;
            } else {
                structural = true;
            }
            continue;
        }
        if (o.passed()) {
            continue;
        }
        if (o.report->verdict == Verdict::inconclusive) {
            inconclusive = true;
        } else {
            violated = true;
        }
    }
    return structural ? 3 : violated ? 1 : inconclusive ? 2 : 0;
}

nlohmann::json RunManifest::to_json() const {
    json reports = json::array();
    for (const auto& o : outcomes) {
        reports.push_back(o.to_json());
    }
    return {{"config", config},     {"config_hash", config_hash}, {"seed", seed},
            {"version", version},   {"reports", reports},         {"exit_code", exit_code()}};
}

nlohmann::json RunManifest::timings_json() const {
    json per = json::object();
    for (const auto& o : outcomes) {
        per[o.name] = o.seconds;
    }
    return {{"config_hash", config_hash}, {"checks_seconds", per}, {"total_seconds", total_seconds}};
}

RunManifest run(const ExperimentConfig& config) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    RunManifest m;
    m.config = config.to_json();
    m.config_hash = config.hash();
    m.seed = config.heat.seed;
    m.version = CARNOT_VERSION;
    Runner runner(config);
    for (std::size_t i = 0; i < config.checks.size(); ++i) {
        const CheckSpec& spec = config.checks[i];
        CheckOutcome o;
        o.index = i;
        o.kind = spec.kind;
        o.name = spec.name;
        o.expect = spec.expect;
        o.observe = spec.observe;
        const auto t0 = clock::now();
        try {
            std::string csv;
            CheckReport r = runner.execute(spec, i, csv);
            if (config.exploratory) {
                mark_exploratory(r);
            }
            if (!csv.empty()) {
                r.params["csv"] = csv;
            }
            o.report = std::move(r);
        } catch (const DomainError& e) {
            o.error_kind = "domain";
            o.error = e.what();
        } catch (const ParameterError& e) {
            o.error_kind = "parameter";
            o.error = e.what();
        } catch (const NotStepTwoError& e) {
            o.error_kind = "precondition";
            o.error = e.what();
        } catch (const std::exception& e) {
            o.error_kind = "structural";
            o.error = e.what();
        }
        o.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        m.outcomes.push_back(std::move(o));
    }
    m.total_seconds = std::chrono::duration<double>(clock::now() - start).count();
    if (!config.manifest_path.empty()) {
        const std::filesystem::path path(config.manifest_path);
        if (path.has_parent_path()) {
            std::filesystem::create_directories(path.parent_path());
        }
        std::ofstream out(path);
        if (!out) {
            throw StructuralError("cannot write manifest '" + config.manifest_path + "'");
        }
        out << m.to_json().dump(2) << '\n';
        std::ofstream timings(config.manifest_path + ".timings.json");
        timings << m.timings_json().dump(2) << '\n';
    }
    return m;
}

ScalarField resolve_field(const std::string& spec, const StratifiedAlgebra& algebra, const FieldParameters& params) {
    for (const auto& entry : builtin_lsh_library(algebra)) {
        if (entry.name == spec) {
            return entry.field;
        }
    }
    return parse_field(spec, algebra, params);
}

namespace {

const std::map<std::string, std::string_view>& presets() {
    static const std::map<std::string, std::string_view> table = {
        {"gaussian-sharpness", R"json({
  "name": "gaussian-sharpness",
  "algebra": "euclidean(1)",
  "heat": {"s": 2, "n": 1000000, "steps": 1, "seed": 11, "tilt": [3]},
  "checks": [
    {"kind": "shc", "name": "shc-at-janson-time", "field": "(exp (* 2 x_1_1))",
     "p": 1, "q": 4, "c": 0.5, "beta": 0},
    {"kind": "shc", "name": "shc-below-janson-time", "field": "(exp (* 2 x_1_1))",
     "p": 1, "q": 4, "c": 0.5, "beta": 0, "t_scale": 0.9, "exploratory": true, "expect": "violated"},
    {"kind": "lsi", "name": "lsi-a1", "field": "(exp x_1_1)", "c": 0.5, "heat": {"tilt": [1]}},
    {"kind": "lsi", "name": "lsi-a2", "field": "(exp (* 2 x_1_1))", "c": 0.5, "heat": {"tilt": [2]}},
    {"kind": "slsi", "name": "slsi-a1", "field": "(exp x_1_1)", "c": 0.5, "heat": {"tilt": [1]}},
    {"kind": "slsi", "name": "slsi-a2", "field": "(exp (* 2 x_1_1))", "c": 0.5, "heat": {"tilt": [2]}},
    {"kind": "lsi", "name": "lsi-c-too-small", "field": "(exp (* 2 x_1_1))", "c": 0.1,
     "heat": {"tilt": [2]}, "expect": "violated"}
  ]
}
)json"},
        {"heisenberg-time-space", R"json({
  "name": "heisenberg-time-space",
  "algebra": "heisenberg(1)",
  "heat": {"s": 1, "n": 100000, "steps": 512, "seed": 5},
  "fields": {
    "x1sq": "(* x_1_1 x_1_1)",
    "expx1": "(exp x_1_1)",
    "poly": "(+ (* x_1_1 x_1_2) x_2_1 5)"
  },
  "checks": [
    {"kind": "time_space", "name": "x1sq-s1", "field": "x1sq"},
    {"kind": "time_space", "name": "expx1-s1", "field": "expx1"},
    {"kind": "time_space", "name": "poly-s1", "field": "poly"},
    {"kind": "time_space", "name": "x1sq-s2", "field": "x1sq", "heat": {"s": 2}},
    {"kind": "time_space", "name": "expx1-s2", "field": "expx1", "heat": {"s": 2}},
    {"kind": "time_space", "name": "poly-s2", "field": "poly", "heat": {"s": 2}}
  ]
}
)json"},
        {"heisenberg-slsi-sweep", R"json({
  "name": "heisenberg-slsi-sweep",
  "algebra": "heisenberg(1)",
  "heat": {"s": 1, "n": 100000, "steps": 256, "seed": 7},
  "checks": [
    {"kind": "slsi", "name": "slsi-c0.5", "field": "expx1", "c": 0.5},
    {"kind": "slsi", "name": "slsi-c1", "field": "expx1", "c": 1.0},
    {"kind": "slsi", "name": "slsi-c2", "field": "expx1", "c": 2.0},
    {"kind": "chain", "name": "chain-expx1", "field": "expx1"},
    {"kind": "chain", "name": "chain-gauss-neg", "field": "gauss-neg", "expect": "violated"},
    {"kind": "alpha", "name": "alpha-expx1", "field": "expx1", "c": 1.0, "q": 2.718281828459045},
    {"kind": "contractivity", "name": "l1-expx1", "field": "expx1", "t_max": 1.0},
    {"kind": "contractivity", "name": "l1-gauss-neg", "field": "gauss-neg", "t_max": 1.0, "expect": "violated"},
    {"kind": "lsh", "name": "lsh-expx1", "field": "expx1"},
    {"kind": "lsh", "name": "lsh-gauss-neg", "field": "gauss-neg", "expect": "violated"}
  ]
}
)json"},
        {"htype-classify", R"json({
  "name": "htype-classify",
  "algebra": "heisenberg(1)",
  "checks": [
    {"kind": "validate", "name": "validate-h3"},
    {"kind": "htype", "name": "htype-h3"},
    {"kind": "htype", "name": "htype-h5", "algebra": "heisenberg(2)"},
    {"kind": "htype", "name": "htype-h3-scaled", "expect": "violated",
     "algebra": {"name": "heisenberg-scaled", "layer_dims": [2, 1],
                 "brackets": [[[1, 1], [1, 2], [[2, 1], 2.0]]]}}
  ]
}
)json"},
        {"engel-exploratory", R"json({
  "name": "engel-exploratory",
  "algebra": "engel",
  "exploratory": true,
  "heat": {"s": 1, "n": 20000, "steps": 256, "seed": 13},
  "checks": [
    {"kind": "validate", "name": "validate-engel"},
    {"kind": "marginals", "name": "marginals-engel"},
    {"kind": "time_space", "name": "time-space-expx1", "field": "expx1"},
    {"kind": "slsi", "name": "slsi-expx1-c1", "field": "expx1", "c": 1.0, "expect": "any"},
    {"kind": "alpha", "name": "alpha-expx1", "field": "expx1", "c": 1.0, "q": 2.718281828459045, "expect": "any"},
    {"kind": "lsh", "name": "lsh-homogeneous-eps", "field": "homogeneous-eps", "radius": 1.0, "expect": "any"}
  ]
}
)json"},
        {"heat-kernel-identities", R"json({
  "name": "heat-kernel-identities",
  "algebra": "heisenberg(1)",
  "heat": {"s": 1, "n": 100000, "steps": 512, "seed": 3},
  "checks": [
    {"kind": "marginals", "name": "marginals"},
    {"kind": "inverse_symmetry", "name": "inverse-symmetry"},
    {"kind": "inverse_symmetry", "name": "inverse-symmetry-shifted", "shift": [1, 0, 0], "expect": "violated"},
    {"kind": "scaling", "name": "scaling-lambda2", "lambda": 2.0, "heat": {"s": 4}},
    {"kind": "tail", "name": "tail-profile"}
  ]
}
)json"},
    };
    return table;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : presets()) {
        out.push_back(k);
    }
    return out;
}

std::string_view preset_text(std::string_view name) {
    auto it = presets().find(std::string(name));
    if (it == presets().end()) {
        throw StructuralError("unknown preset '" + std::string(name) + "'");
    }
    return it->second;
}

ExperimentConfig preset(std::string_view name) { return ExperimentConfig::from_json(json::parse(preset_text(name))); }

}  // namespace carnot
