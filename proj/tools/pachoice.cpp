// Command-line front end: simulate, predict, verify, sweep.
//
// Exit codes: 0 success / all verdicts pass, 1 verification failure,
// 2 configuration error, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pachoice/config_file.hpp"
#include "pachoice/harness.hpp"
#include "pachoice/theory.hpp"
#include "pachoice/trace_io.hpp"
#include "pachoice/version.hpp"

namespace fs = std::filesystem;
using namespace pachoice;

namespace {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kRuntimeError = 3 };

struct Options {
    std::string config_path;
    std::string out_dir = "pachoice-out";
    std::vector<std::string> overrides;
    unsigned jobs = 1;
    bool quiet = false;
};

Config load_config(const Options& opt) {
    Config cfg = Config::load_file(opt.config_path);
    for (const auto& o : opt.overrides) {
        cfg.apply_override(o);
    }
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string trace_name(std::size_t r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trace-%03zu.csv", r);
    return buf;
}

/// Runs the ensemble described by `cfg` into `dir`. Returns the exit code.
int simulate_into(const Config& cfg, const fs::path& dir, unsigned jobs, bool quiet) {
    const EnsembleSpec spec = load_ensemble_spec(cfg, jobs);
    const std::string resolved = cfg.resolved_text();
    fs::create_directories(dir);
    write_text(dir / "config.ini", resolved);
    const auto traces = run_replicates(spec);
    const Prediction prediction = predict(spec.params);
    nlohmann::json runs = nlohmann::json::array();
    bool partial = false;
    for (std::size_t r = 0; r < traces.size(); ++r) {
        std::ofstream csv(dir / trace_name(r), std::ios::binary);
        write_trace_csv(csv, traces[r], resolved);
        runs.push_back(run_summary_json(traces[r], prediction));
        partial = partial || traces[r].partial;
    }
    nlohmann::json summary;
    summary["version"] = version;
    summary["config"] = resolved;
    summary["params"] = params_to_json(spec.params);
    summary["seed"] = spec.params.seed;
    summary["prediction"] = prediction_to_json(prediction);
    summary["validation_warnings"] = validate(spec.params).warnings;
    summary["runs"] = runs;
    summary["ensemble"] = report_to_json(aggregate(spec, traces));
    write_json(dir / "summary.json", summary);
    if (!quiet) {
        std::cout << "wrote " << traces.size() << " trace(s) to " << dir.string() << "\n";
    }
    return partial ? kRuntimeError : kOk;
}

int verify_into(const Config& cfg, const fs::path& dir, unsigned jobs, bool quiet) {
    const EnsembleSpec spec = load_ensemble_spec(cfg, jobs);
    const Tolerances tol = load_tolerances(cfg);
    const CrossValidationSettings cvs = load_cross_validation(cfg);
    const std::string resolved = cfg.resolved_text();
    fs::create_directories(dir);
    write_text(dir / "config.ini", resolved);

    const auto traces = run_replicates(spec);
    EnsembleReport report = aggregate(spec, traces);
    add_regime_verdicts(report, tol);
    for (std::size_t r = 0; r < traces.size(); ++r) {
        std::ofstream csv(dir / trace_name(r), std::ios::binary);
        write_trace_csv(csv, traces[r], resolved);
    }
    nlohmann::json j = report_to_json(report, resolved);
    bool passed = report.all_passed();
    if (cvs.enabled) {
        const auto cv = cross_validate_samplers(spec.params, cvs.horizon, cvs.replicates, tol, jobs, cvs.draws);
        j["cross_validation"] = cross_validation_to_json(cv);
        passed = passed && cv.passed();
        j["all_passed"] = passed;
    }
    write_json(dir / "report.json", j);
    std::string text = report_to_text(report);
    if (j.contains("cross_validation")) {
        for (const auto& v : j["cross_validation"]["verdicts"]) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%-26s %12.6g %12s %12.6g  %s\n", v["name"].get<std::string>().c_str(),
                          v["observed"].get<double>(), "-", v["tolerance"].get<double>(),
                          v["passed"].get<bool>() ? "PASS" : "FAIL");
            text += buf;
        }
    }
    write_text(dir / "report.txt", text);
    if (!quiet) {
        std::cout << text;
    }
    if (report.partial) {
        return kRuntimeError;
    }
    return passed ? kOk : kVerifyFailed;
}

int cmd_simulate(const Options& opt) {
    const Config cfg = load_config(opt);
    return simulate_into(cfg, fs::path(opt.out_dir) / content_hash(cfg.resolved_text()), opt.jobs, opt.quiet);
}

int cmd_verify(const Options& opt) {
    const Config cfg = load_config(opt);
    return verify_into(cfg, fs::path(opt.out_dir) / content_hash(cfg.resolved_text()), opt.jobs, opt.quiet);
}

int cmd_predict(const Options& opt) {
    const Config cfg = load_config(opt);
    const ModelParams params = load_model_params(cfg);
    nlohmann::json j;
    j["version"] = version;
    j["config"] = cfg.resolved_text();
    j["params"] = params_to_json(params);
    j["prediction"] = prediction_to_json(predict(params));
    j["validation_warnings"] = validate(params).warnings;
    fs::create_directories(opt.out_dir);
    write_json(fs::path(opt.out_dir) / "prediction.json", j);
    if (!opt.quiet) {
        std::cout << j["prediction"].dump(2) << "\n";
    }
    return kOk;
}

int cmd_sweep(const Options& opt) {
    const Config base = load_config(opt);
    const SweepGrid grid = load_sweep(base);
    const fs::path out(opt.out_dir);
    fs::create_directories(out);

    auto axis = [](const std::vector<double>& v) { return v.empty() ? std::vector<double>{std::nan("")} : v; };
    const auto alphas = axis(grid.alphas);
    const auto gammas = axis(grid.gammas);
    const auto c_ds = axis(grid.c_ds);
    const auto laws = grid.m_laws.empty() ? std::vector<std::string>{""} : grid.m_laws;

    nlohmann::json points = nlohmann::json::array();
    int worst = kOk;
    for (const double a : alphas) {
        for (const double g : gammas) {
            for (const double c : c_ds) {
                for (const auto& law : laws) {
                    nlohmann::json entry;
                    Config cfg = base;
                    for (const char* k : {"sweep.mode", "sweep.alpha", "sweep.gamma", "sweep.c_d", "sweep.m_law"}) {
                        cfg.erase(k);
                    }
                    try {
                        if (!std::isnan(a)) {
                            cfg.set("model.alpha", format_double(a));
                        }
                        if (!std::isnan(g)) {
                            cfg.set("model.gamma", format_double(g));
                        }
                        if (!std::isnan(c)) {
                            cfg.set("model.c_d", format_double(c));
                        }
                        if (!law.empty()) {
                            set_m_law(cfg, law);
                        }
                        entry["alpha"] = cfg.get_double("model.alpha");
                        entry["gamma"] = cfg.get_double("model.gamma");
                        entry["c_d"] = cfg.get_double("model.c_d");
                        entry["m_law"] = load_m_dist(cfg).describe();
                        entry["regime"] = to_string(
                            classify_regime(entry["alpha"].get<double>(), entry["gamma"].get<double>()));
                        const std::string hash = content_hash(cfg.resolved_text());
                        const fs::path dir = out / hash;
                        const int code = grid.mode == "verify" ? verify_into(cfg, dir, opt.jobs, true)
                                                               : simulate_into(cfg, dir, opt.jobs, true);
                        entry["path"] = hash + (grid.mode == "verify" ? "/report.json" : "/summary.json");
                        entry["status"] = code == kOk ? "ok" : code == kVerifyFailed ? "failed" : "partial";
                        entry["exit_code"] = code;
                        worst = std::max(worst, code);
                    } catch (const std::exception& e) {
                        entry["status"] = "error";
                        entry["error"] = e.what();
                        entry["exit_code"] = kRuntimeError;
                        worst = kRuntimeError;
                    }
                    points.push_back(entry);
                }
            }
        }
    }
    nlohmann::json index;
    index["version"] = version;
    index["config"] = base.resolved_text();
    index["mode"] = grid.mode;
    index["points"] = points;
    write_json(out / "index.json", index);
    if (!opt.quiet) {
        for (const auto& p : points) {
            std::cout << p.value("regime", std::string("?")) << "  " << p.value("status", std::string("?")) << "  "
                      << p.value("path", p.value("error", std::string())) << "\n";
        }
    }
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sublinear preferential attachment with growing choice: simulate, predict, verify, sweep"};
    app.set_version_flag("--version", std::string("pachoice ") + version);
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "configuration file")->required();
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--set", opt.overrides, "override section.key=value (repeatable)");
        sub->add_option("--jobs", opt.jobs, "parallel replicates")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", opt.quiet, "suppress console output");
    };
    auto* simulate = app.add_subcommand("simulate", "grow graphs and write traces");
    auto* predict_cmd = app.add_subcommand("predict", "print the limit predictions");
    auto* verify = app.add_subcommand("verify", "simulate and check the predictions");
    auto* sweep = app.add_subcommand("sweep", "run verify or simulate over a parameter grid");
    for (auto* s : {simulate, predict_cmd, verify, sweep}) {
        add_common(s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*simulate) {
            return cmd_simulate(opt);
        }
        if (*predict_cmd) {
            return cmd_predict(opt);
        }
        if (*verify) {
            return cmd_verify(opt);
        }
        return cmd_sweep(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}
