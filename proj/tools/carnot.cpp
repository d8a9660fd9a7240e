#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "carnot/algebra.hpp"
#include "carnot/errors.hpp"
#include "carnot/experiment.hpp"
#include "carnot/group.hpp"
#include "carnot/heat.hpp"
#include "carnot/lsh.hpp"
#include "carnot/parallel.hpp"

using nlohmann::json;

namespace {

struct HeatOptions {
    std::string algebra = "heisenberg(1)";
    double s = 1.0;
    std::size_t n = 10000;
    std::size_t steps = 512;
    std::uint64_t seed = 0;
    std::vector<double> tilt;
};

void add_heat_options(CLI::App* cmd, HeatOptions& h) {
    cmd->add_option("--algebra", h.algebra, "builtin name or algebra JSON file")->capture_default_str();
    cmd->add_option("--s", h.s, "heat time s")->capture_default_str();
    cmd->add_option("--n", h.n, "number of samples")->capture_default_str();
    cmd->add_option("--steps", h.steps, "random-walk steps per path")->capture_default_str();
    cmd->add_option("--seed", h.seed, "64-bit seed")->capture_default_str();
    cmd->add_option("--tilt", h.tilt, "importance tilt of the horizontal endpoint");
}

json heat_json(const HeatOptions& h) {
    json j{{"s", h.s}, {"n", h.n}, {"steps", h.steps}, {"seed", h.seed}};
    if (!h.tilt.empty()) {
        j["tilt"] = h.tilt;
    }
    return j;
}

json algebra_json(const std::string& spec) { return spec; }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw carnot::StructuralError("cannot write '" + path + "'");
    }
    out << text;
}

int report_run(const carnot::RunManifest& m, const std::string& out_path) {
    const std::string text = m.to_json().dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text(out_path, text);
        for (const auto& o : m.outcomes) {
            std::cout << o.name << ": " << (o.report ? std::string(carnot::to_string(o.report->verdict)) : "error")
                      << " (" << o.to_json().at("outcome").get<std::string>() << ")\n";
        }
    }
    return m.exit_code();
}

// Options of `check` and `sweep`; only explicitly given ones reach the config.
struct CheckOptions {
    std::string field;
    double c = 0.5;
    double beta = 0.0;
    double p = 1.0;
    double q = 2.0;
    double t = 0.0;
    double lambda = 2.0;
    double tol = 1e-9;
    double radius = 3.0;
    double t_max = 1.0;
    std::size_t points = 0;
    std::string form;
    std::string points_source;
    bool exploratory = false;
    std::string expect;
    std::string out;
    std::string csv;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Carnot group heat-kernel toolkit and inequality checker"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: CARNOT_THREADS or hardware)");

    // algebra validate
    auto* algebra_cmd = app.add_subcommand("algebra", "algebra utilities");
    algebra_cmd->require_subcommand(1);
    auto* validate_cmd = algebra_cmd->add_subcommand("validate", "check the stratified algebra axioms");
    std::string algebra_spec;
    validate_cmd->add_option("algebra", algebra_spec, "builtin name or algebra JSON file")->required();

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "draw a heat-kernel batch");
    HeatOptions sample_heat_opts;
    std::string sample_out;
    std::string sample_format = "csv";
    add_heat_options(sample_cmd, sample_heat_opts);
    sample_cmd->add_option("--out", sample_out, "output file")->required();
    sample_cmd->add_option("--format", sample_format, "csv or binary")
        ->check(CLI::IsMember({"csv", "binary"}))
        ->capture_default_str();

    // check <kind>
    auto* check_cmd = app.add_subcommand("check", "run one check");
    std::string kind;
    HeatOptions check_heat;
    CheckOptions opt;
    check_cmd->add_option("kind", kind, "lsi, slsi, shc, time-space, chain, contractivity, lsh, inverse-symmetry, "
                                        "scaling, tail, marginals, htype, validate")
        ->required();
    add_heat_options(check_cmd, check_heat);
    std::vector<CLI::Option*> passthrough;
    passthrough.push_back(check_cmd->add_option("--field", opt.field, "prefix expression or library name"));
    passthrough.push_back(check_cmd->add_option("--c", opt.c, "constant c"));
    passthrough.push_back(check_cmd->add_option("--beta", opt.beta, "defect beta"));
    passthrough.push_back(check_cmd->add_option("--p", opt.p, "exponent p"));
    passthrough.push_back(check_cmd->add_option("--q", opt.q, "exponent q"));
    passthrough.push_back(check_cmd->add_option("--t", opt.t, "dilation time t (default: Janson's time)"));
    passthrough.push_back(check_cmd->add_option("--lambda", opt.lambda, "dilation factor for scaling"));
    passthrough.push_back(check_cmd->add_option("--tol", opt.tol, "LSH tolerance"));
    passthrough.push_back(check_cmd->add_option("--radius", opt.radius, "LSH grid quasi-norm radius"));
    passthrough.push_back(check_cmd->add_option("--t-max", opt.t_max, "contractivity grid end"));
    passthrough.push_back(check_cmd->add_option("--grid-points", opt.points, "number of grid points"));
    passthrough.push_back(check_cmd->add_option("--form", opt.form, "LSI form L1 or L2"));
    passthrough.push_back(check_cmd->add_flag("--exploratory", opt.exploratory, "allow t below Janson's time"));
    check_cmd->add_option("--points", opt.points_source, "lsh points: 'grid' or a batch file");
    check_cmd->add_option("--expect", opt.expect, "expected verdict (negative controls)");
    check_cmd->add_option("--out", opt.out, "write the manifest here instead of stdout");

    // sweep alpha
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweeps");
    sweep_cmd->require_subcommand(1);
    auto* alpha_cmd = sweep_cmd->add_subcommand("alpha", "alpha(t) monotonicity sweep");
    HeatOptions sweep_heat;
    CheckOptions sweep;
    sweep.c = 1.0;
    sweep.q = 2.718281828459045;
    sweep.points = 11;
    add_heat_options(alpha_cmd, sweep_heat);
    alpha_cmd->add_option("--field", sweep.field, "prefix expression or library name")->required();
    alpha_cmd->add_option("--c", sweep.c, "constant c")->capture_default_str();
    alpha_cmd->add_option("--beta", sweep.beta, "defect beta")->capture_default_str();
    alpha_cmd->add_option("--q", sweep.q, "final exponent q")->capture_default_str();
    alpha_cmd->add_option("--grid-points", sweep.points, "grid points on [0, t_J(1,q)]")->capture_default_str();
    alpha_cmd->add_option("--csv", sweep.csv, "write the curve as CSV");
    alpha_cmd->add_option("--out", sweep.out, "write the manifest here instead of stdout");

    // run / preset
    auto* run_cmd = app.add_subcommand("run", "run an experiment config");
    std::string config_path;
    std::string run_out;
    std::string run_csv;
    run_cmd->add_option("config", config_path, "config JSON")->required();
    run_cmd->add_option("--out", run_out, "manifest path (overrides the config)");
    run_cmd->add_option("--csv-dir", run_csv, "directory for sweep CSVs (overrides the config)");

    auto* preset_cmd = app.add_subcommand("preset", "print or run a shipped preset");
    std::string preset_name;
    bool preset_run = false;
    bool preset_list = false;
    preset_cmd->add_option("name", preset_name, "preset name");
    preset_cmd->add_flag("--run", preset_run, "run it instead of printing it");
    preset_cmd->add_flag("--list", preset_list, "list presets");
    preset_cmd->add_option("--out", run_out, "manifest path when running");
    preset_cmd->add_option("--csv-dir", run_csv, "directory for sweep CSVs when running");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) {
        carnot::set_thread_count(threads);
    }

    try {
        if (validate_cmd->parsed()) {
            const auto alg = carnot::load_algebra(algebra_spec);
            const auto report = carnot::validate(alg);
            json j{{"validation", report.to_json()}, {"homogeneous_dimension", alg.homogeneous_dimension()}};
            if (alg.step() == 2 && report.passed()) {
                j["h_type"] = carnot::classify_h_type(alg).to_json();
            }
            std::cout << j.dump(2) << "\n";
            return report.passed() ? 0 : 1;
        }
        if (sample_cmd->parsed()) {
            const carnot::CarnotGroup group(carnot::load_algebra(sample_heat_opts.algebra));
            const auto params = carnot::HeatParams::from_json(heat_json(sample_heat_opts));
            const auto batch = carnot::sample_heat(group, params);
            std::ofstream out(sample_out, std::ios::binary);
            if (!out) {
                throw carnot::StructuralError("cannot write '" + sample_out + "'");
            }
            if (sample_format == "csv") {
                batch.write_csv(out);
            } else {
                batch.write_binary(out);
            }
            std::cout << json{{"out", sample_out}, {"format", sample_format}, {"heat", params.to_json()}}.dump(2)
                      << "\n";
            return 0;
        }
        if (check_cmd->parsed()) {
            std::string k = kind;
            std::replace(k.begin(), k.end(), '-', '_');
            if (k == "lsh" && !opt.points_source.empty() && opt.points_source != "grid") {
                // Points from a saved batch file.
                const carnot::CarnotGroup group(carnot::load_algebra(check_heat.algebra));
                const auto batch = carnot::HeatSampleBatch::load(
                    opt.points_source, group, carnot::HeatParams::from_json(heat_json(check_heat)));
                std::vector<carnot::GroupElement> points;
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    points.push_back(batch.element(i));
                }
                const auto f = carnot::resolve_field(opt.field, group.algebra());
                const auto v = carnot::check_lsh(group, f, points, opt.tol);
                std::cout << v.to_json().dump(2) << "\n";
                return v.status == carnot::LshStatus::consistent ? 0
                       : v.status == carnot::LshStatus::violated ? 1
                                                                  : 2;
            }
            json c{{"kind", k}, {"name", kind}};
            const json values{{"--field", opt.field},   {"--c", opt.c},         {"--beta", opt.beta},
                              {"--p", opt.p},           {"--q", opt.q},         {"--t", opt.t},
                              {"--lambda", opt.lambda}, {"--tol", opt.tol},     {"--radius", opt.radius},
                              {"--t-max", opt.t_max},   {"--grid-points", opt.points}, {"--form", opt.form},
                              {"--exploratory", opt.exploratory}};
            for (auto* o : passthrough) {
                if (o->count() > 0) {
                    std::string key = o->get_name().substr(2);
                    std::replace(key.begin(), key.end(), '-', '_');
                    if (key == "grid_points") {
                        key = "points";
                    }
                    c[key] = values.at(o->get_name());
                }
            }
            if (!opt.expect.empty()) {
                c["expect"] = opt.expect;
            }
            const json cfg{{"name", "check-" + kind},
                           {"algebra", algebra_json(check_heat.algebra)},
                           {"heat", heat_json(check_heat)},
                           {"checks", json::array({c})}};
            return report_run(carnot::run(carnot::ExperimentConfig::from_json(cfg)), opt.out);
        }
        if (alpha_cmd->parsed()) {
            const json c{{"kind", "alpha"}, {"name", "alpha"},    {"field", sweep.field},    {"c", sweep.c},
                         {"beta", sweep.beta}, {"q", sweep.q},    {"points", sweep.points}};
            const json cfg{{"name", "sweep-alpha"},
                           {"algebra", algebra_json(sweep_heat.algebra)},
                           {"heat", heat_json(sweep_heat)},
                           {"checks", json::array({c})}};
            const auto m = carnot::run(carnot::ExperimentConfig::from_json(cfg));
            if (!sweep.csv.empty() && m.outcomes.front().report) {
                std::string text = "t,value,stderr\n";
                std::ostringstream rows;
                rows.precision(17);
                for (const auto& p : m.outcomes.front().report->params.at("curve")) {
                    rows << p.at("t").get<double>() << ',' << p.at("value").get<double>() << ','
                         << p.at("stderr").get<double>() << '\n';
                }
                write_text(sweep.csv, text + rows.str());
            }
            return report_run(m, sweep.out);
        }
        if (run_cmd->parsed() || (preset_cmd->parsed() && preset_run)) {
            auto cfg = run_cmd->parsed() ? carnot::ExperimentConfig::from_file(config_path)
                                         : carnot::preset(preset_name);
            if (!run_out.empty()) {
                cfg.manifest_path = run_out;
            }
            if (!run_csv.empty()) {
                cfg.csv_dir = run_csv;
            }
            const auto m = carnot::run(cfg);
            return report_run(m, cfg.manifest_path);
        }
        if (preset_cmd->parsed()) {
            if (preset_list || preset_name.empty()) {
                for (const auto& n : carnot::preset_names()) {
                    std::cout << n << "\n";
                }
                return 0;
            }
            std::cout << carnot::preset_text(preset_name);
            return 0;
        }
    } catch (const carnot::DomainError& e) {
        std::cerr << "carnot: domain error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "carnot: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
