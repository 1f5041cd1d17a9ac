#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pachoice/growth_engine.hpp"
#include "pachoice/stats.hpp"
#include "pachoice/theory.hpp"
#include "pachoice/trace_io.hpp"
#include "pachoice/version.hpp"

namespace pachoice {

/// Thresholds behind every verdict. They are design tolerances; each one is
/// echoed next to the verdict it decides.
struct Tolerances {
    double exponent_tol = 0.05;
    double critical_tol = 0.05;
    /// Supercritical: median M(n)/n must reach this fraction of E m.
    double supercritical_threshold = 0.9;
    /// Relative band for the subcritical constant; informational only.
    double constant_rel_tol = 0.5;
    double chi2_p_min = 0.001;
    double ks_p_min = 0.01;
    std::optional<double> degree_fraction_tol;
    std::optional<double> weight_rel_tol;
};

struct EnsembleSpec {
    ModelParams params;
    std::uint64_t replicates = 1;
    double checkpoint_ratio = 1.1;
    std::vector<degree_t> tracked_degrees{1, 2, 3};
    /// Regression window; 0/0 selects the last two decades of n.
    std::uint64_t window_lo = 0;
    std::uint64_t window_hi = 0;
    /// Worker threads. Never changes results.
    unsigned jobs = 1;
    /// Replicate r uses stream stream_offset + r of the master seed.
    std::uint64_t stream_offset = 0;
};

inline std::pair<std::uint64_t, std::uint64_t> resolved_window(const EnsembleSpec& spec) {
    if (spec.window_lo == 0 && spec.window_hi == 0) {
        return {std::max<std::uint64_t>(1, spec.params.horizon / 100), spec.params.horizon};
    }
    return {spec.window_lo, spec.window_hi};
}

inline void validate_spec(const EnsembleSpec& spec) {
    if (const auto r = validate(spec.params); !r.ok()) {
        throw std::invalid_argument("invalid model parameters: " + r.violations.front());
    }
    if (spec.replicates < 1) {
        throw std::invalid_argument("replicate count must be >= 1");
    }
    const auto [lo, hi] = resolved_window(spec);
    if (!(lo < hi && hi <= spec.params.horizon)) {
        throw std::invalid_argument("regression window must satisfy n_lo < n_hi <= horizon");
    }
}

struct CheckpointStats {
    std::uint64_t n = 0;
    stats::Summary max_over_n;
    stats::Summary max_over_power;
    stats::Summary weight_over_n;
    std::vector<stats::Summary> class_fraction;
};

struct Verdict {
    std::string name;
    double observed = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    std::string rule;
    bool passed = false;
    /// Reported but never fails the run.
    bool informational = false;
};

struct EnsembleReport {
    EnsembleSpec spec;
    Prediction prediction;
    std::vector<CheckpointStats> checkpoints;
    std::optional<stats::LinearFit> growth_fit;
    std::string fit_error;
    std::vector<Verdict> verdicts;
    std::uint64_t completed_replicates = 0;
    bool partial = false;
    std::vector<std::string> failures;

    bool all_passed() const {
        if (partial) {
            return false;
        }
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.informational || v.passed; });
    }
};

/// Runs f(i) for i in [0, count) on up to `jobs` threads.
template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& f) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            f(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                f(i);
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
}

/// Independent replicates; trace r is always at position r.
inline std::vector<RunTrace> run_replicates(const EnsembleSpec& spec) {
    validate_spec(spec);
    std::vector<RunTrace> traces(spec.replicates);
    parallel_for(spec.replicates, spec.jobs, [&](std::size_t r) {
        RunOptions opts;
        opts.tracked_degrees = spec.tracked_degrees;
        opts.checkpoint_ratio = spec.checkpoint_ratio;
        opts.stream = spec.stream_offset + r;
        try {
            traces[r] = run(spec.params, opts);
        } catch (const std::exception& e) {
            traces[r].params = spec.params;
            traces[r].stream = opts.stream;
            traces[r].tracked_degrees = spec.tracked_degrees;
            traces[r].partial = true;
            traces[r].error = e.what();
        }
    });
    return traces;
}

/// Pooled least-squares slope of log M(n) against log n over the window.
inline stats::LinearFit fit_growth_exponent(std::span<const RunTrace> traces, std::uint64_t n_lo,
                                            std::uint64_t n_hi) {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::uint64_t> distinct;
    for (const auto& t : traces) {
        for (const auto& row : t.rows) {
            if (row.n < n_lo || row.n > n_hi || row.max_degree == 0) {
                continue;
            }
            x.push_back(std::log(static_cast<double>(row.n)));
            y.push_back(std::log(static_cast<double>(row.max_degree)));
            distinct.push_back(row.n);
        }
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 10) {
        throw std::invalid_argument("insufficient points: " + std::to_string(distinct.size()) +
                                    " checkpoints in window, need 10");
    }
    return stats::least_squares(x, y);
}

/// Pure function of the traces: the same traces always give the same report.
inline EnsembleReport aggregate(const EnsembleSpec& spec, std::span<const RunTrace> traces) {
    EnsembleReport report;
    report.spec = spec;
    report.prediction = predict(spec.params);
    std::vector<const RunTrace*> complete;
    for (std::size_t r = 0; r < traces.size(); ++r) {
        if (traces[r].partial) {
            report.partial = true;
            report.failures.push_back("replicate " + std::to_string(r) + ": " + traces[r].error);
        } else {
            complete.push_back(&traces[r]);
        }
    }
    report.completed_replicates = complete.size();
    if (complete.empty()) {
        return report;
    }
    std::size_t rows = complete.front()->rows.size();
    for (const auto* t : complete) {
        rows = std::min(rows, t->rows.size());
    }
    const double exponent = report.prediction.exponent;
    for (std::size_t i = 0; i < rows; ++i) {
        CheckpointStats cs;
        cs.n = complete.front()->rows[i].n;
        const double n = static_cast<double>(cs.n);
        std::vector<double> m_n;
        std::vector<double> m_p;
        std::vector<double> d_n;
        std::vector<std::vector<double>> frac(spec.tracked_degrees.size());
        for (const auto* t : complete) {
            const auto& row = t->rows[i];
            m_n.push_back(static_cast<double>(row.max_degree) / n);
            m_p.push_back(static_cast<double>(row.max_degree) / std::pow(n, exponent));
            d_n.push_back(row.total_weight / n);
            for (std::size_t k = 0; k < frac.size() && k < row.class_counts.size(); ++k) {
                frac[k].push_back(static_cast<double>(row.class_counts[k]) / n);
            }
        }
        cs.max_over_n = stats::summarize(m_n);
        cs.max_over_power = stats::summarize(m_p);
        cs.weight_over_n = stats::summarize(d_n);
        for (const auto& f : frac) {
            cs.class_fraction.push_back(f.empty() ? stats::Summary{} : stats::summarize(f));
        }
        report.checkpoints.push_back(std::move(cs));
    }
    std::vector<RunTrace> kept;
    kept.reserve(complete.size());
    for (const auto* t : complete) {
        kept.push_back(*t);
    }
    const auto [lo, hi] = resolved_window(spec);
    try {
        report.growth_fit = fit_growth_exponent(kept, lo, hi);
    } catch (const std::invalid_argument& e) {
        report.fit_error = e.what();
    }
    return report;
}

inline EnsembleReport run_ensemble(const EnsembleSpec& spec) {
    const auto traces = run_replicates(spec);
    return aggregate(spec, traces);
}

inline Verdict make_verdict(std::string name, double observed, double target, double tolerance, bool passed,
                            std::string rule, bool informational = false) {
    return Verdict{std::move(name), observed, target, tolerance, std::move(rule), passed, informational};
}

/// Appends the limit-law verdicts for the report's regime, plus the
/// degree-fraction and total-weight checks when their tolerances are set.
inline void add_regime_verdicts(EnsembleReport& report, const Tolerances& tol) {
    if (report.checkpoints.empty()) {
        report.verdicts.push_back(make_verdict("ensemble", 0.0, 0.0, 0.0, false, "no completed replicates"));
        return;
    }
    const auto& last = report.checkpoints.back();
    const auto& pred = report.prediction;
    const auto& p = report.spec.params;
    switch (pred.regime) {
    case Regime::Subcritical: {
        if (report.growth_fit) {
            const double slope = report.growth_fit->slope;
            report.verdicts.push_back(make_verdict("growth_exponent", slope, pred.exponent, tol.exponent_tol,
                                                   std::abs(slope - pred.exponent) <= tol.exponent_tol,
                                                   "|slope - gamma/(1-alpha)| <= tol"));
        } else {
            report.verdicts.push_back(make_verdict("growth_exponent", std::nan(""), pred.exponent, tol.exponent_tol,
                                                   false, report.fit_error));
        }
        const double c = last.max_over_power.median;
        report.verdicts.push_back(make_verdict("sublinear_constant", c, pred.constant, tol.constant_rel_tol,
                                               std::abs(c / pred.constant - 1.0) <= tol.constant_rel_tol,
                                               "|median M/n^e / x* - 1| <= tol", true));
        if (pred.alt_constant) {
            report.verdicts.push_back(make_verdict("sublinear_upper_constant", c, *pred.alt_constant,
                                                   tol.constant_rel_tol,
                                                   std::abs(c / *pred.alt_constant - 1.0) <= tol.constant_rel_tol,
                                                   "|median M/n^e / upper - 1| <= tol", true));
        }
        break;
    }
    case Regime::Critical: {
        const double m = last.max_over_n.median;
        report.verdicts.push_back(make_verdict("critical_fraction", m, pred.constant, tol.critical_tol,
                                               std::abs(m - pred.constant) <= tol.critical_tol,
                                               "|median M/n - rho*| <= tol"));
        break;
    }
    case Regime::Supercritical: {
        const double m = last.max_over_n.median;
        report.verdicts.push_back(make_verdict("condensation", m, pred.em, tol.supercritical_threshold,
                                               m >= tol.supercritical_threshold * pred.em,
                                               "median M/n >= threshold * E m"));
        break;
    }
    }
    if (tol.degree_fraction_tol) {
        double worst = 0.0;
        for (std::size_t i = 0; i < report.spec.tracked_degrees.size() && i < last.class_fraction.size(); ++i) {
            const double expected = p.m_dist.pmf(report.spec.tracked_degrees[i]);
            worst = std::max(worst, std::abs(last.class_fraction[i].mean - expected));
        }
        report.verdicts.push_back(make_verdict("degree_fractions", worst, 0.0, *tol.degree_fraction_tol,
                                               worst <= *tol.degree_fraction_tol,
                                               "max_k |mean N_k/n - Pr(m=k)| <= tol"));
    }
    if (tol.weight_rel_tol) {
        const double rel = std::abs(last.weight_over_n.mean / pred.em_alpha - 1.0);
        report.verdicts.push_back(make_verdict("total_weight", last.weight_over_n.mean, pred.em_alpha,
                                               *tol.weight_rel_tol, rel <= *tol.weight_rel_tol,
                                               "|mean D/n / E m^alpha - 1| <= tol"));
    }
}

inline EnsembleReport verify_regime(const EnsembleSpec& spec, const Tolerances& tol) {
    auto report = run_ensemble(spec);
    add_regime_verdicts(report, tol);
    return report;
}

struct FrozenChiSquare {
    std::uint64_t d = 1;
    std::uint64_t draws = 0;
    std::vector<degree_t> classes;
    std::vector<double> observed;
    std::vector<double> expected;
    stats::ChiSquareResult test;
};

/// Draws `draws` naive targets from a frozen index and compares the class
/// histogram with the closed-form attachment law.
template <class Rng>
FrozenChiSquare frozen_state_chi_square(const DegreeClassIndex& index, std::uint64_t d, std::uint64_t draws,
                                        Rng& rng) {
    FrozenChiSquare out;
    out.d = d;
    out.draws = draws;
    const auto pmf = attachment_class_pmf(index, static_cast<double>(d));
    std::vector<std::size_t> slot(index.max_degree() + 1, 0);
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        out.classes.push_back(pmf[i].first);
        out.expected.push_back(pmf[i].second);
        slot[pmf[i].first] = i;
    }
    out.observed.assign(pmf.size(), 0.0);
    for (std::uint64_t i = 0; i < draws; ++i) {
        const vertex_id v = sample_target_naive(index, d, rng);
        out.observed[slot[index.degree(v)]] += 1.0;
    }
    out.test = stats::chi_square_test(out.observed, out.expected);
    return out;
}

struct CrossValidation {
    FrozenChiSquare frozen;
    stats::KsResult ks;
    std::vector<double> naive_final;
    std::vector<double> fast_final;
    std::vector<Verdict> verdicts;

    bool passed() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
    }
};

/// (a) chi-square of naive draws against the closed form on the state grown
/// to `horizon`; (b) two-sample KS on final M(n)/n between a naive and a fast
/// ensemble of `replicates` runs each (disjoint streams).
inline CrossValidation cross_validate_samplers(ModelParams params, std::uint64_t horizon, std::uint64_t replicates,
                                               const Tolerances& tol, unsigned jobs = 1,
                                               std::uint64_t draws = 100000) {
    if (params.d_rounding == DRounding::RealExponent) {
        params.d_rounding = DRounding::Round;
    }
    params.horizon = horizon;
    CrossValidation cv;

    ModelParams frozen_params = params;
    frozen_params.sampler_mode = SamplerMode::FastClass;
    GrowthEngine engine(frozen_params, 2 * replicates);
    while (engine.step_count() < horizon) {
        engine.step();
    }
    auto rng = make_stream(params.seed, 2 * replicates + 1);
    const auto d = static_cast<std::uint64_t>(sample_size(params, horizon + 1));
    cv.frozen = frozen_state_chi_square(engine.index(), d, draws, rng);
    cv.verdicts.push_back(make_verdict("frozen_state_chi_square", cv.frozen.test.p_value, 0.0, tol.chi2_p_min,
                                       cv.frozen.test.p_value > tol.chi2_p_min, "p > p_min"));

    auto finals = [&](SamplerMode mode, std::uint64_t offset) {
        EnsembleSpec spec;
        spec.params = params;
        spec.params.sampler_mode = mode;
        spec.replicates = replicates;
        spec.tracked_degrees = {};
        spec.window_lo = 1;
        spec.window_hi = horizon;
        spec.jobs = jobs;
        spec.stream_offset = offset;
        std::vector<double> out;
        for (const auto& t : run_replicates(spec)) {
            if (!t.partial && !t.rows.empty()) {
                out.push_back(static_cast<double>(t.rows.back().max_degree) / static_cast<double>(t.rows.back().n));
            }
        }
        return out;
    };
    cv.naive_final = finals(SamplerMode::Naive, 0);
    cv.fast_final = finals(SamplerMode::FastClass, replicates);
    if (cv.naive_final.empty() || cv.fast_final.empty()) {
        cv.verdicts.push_back(make_verdict("sampler_ks", std::nan(""), 0.0, tol.ks_p_min, false, "runs failed"));
        return cv;
    }
    cv.ks = stats::ks_two_sample(cv.naive_final, cv.fast_final);
    cv.verdicts.push_back(
        make_verdict("sampler_ks", cv.ks.p_value, 0.0, tol.ks_p_min, cv.ks.p_value > tol.ks_p_min, "p > p_min"));
    return cv;
}

inline nlohmann::json summary_to_json(const stats::Summary& s) {
    return {{"mean", s.mean}, {"median", s.median}, {"q25", s.q25}, {"q75", s.q75}};
}

inline nlohmann::json verdict_to_json(const Verdict& v) {
    return {{"name", v.name},         {"observed", v.observed}, {"target", v.target},
            {"tolerance", v.tolerance}, {"rule", v.rule},         {"passed", v.passed},
            {"informational", v.informational}};
}

inline nlohmann::json cross_validation_to_json(const CrossValidation& cv) {
    nlohmann::json j;
    j["frozen"] = {{"d", cv.frozen.d},
                   {"draws", cv.frozen.draws},
                   {"classes", cv.frozen.classes},
                   {"observed", cv.frozen.observed},
                   {"expected", cv.frozen.expected},
                   {"chi2", cv.frozen.test.statistic},
                   {"dof", cv.frozen.test.dof},
                   {"p_value", cv.frozen.test.p_value}};
    j["ks"] = {{"statistic", cv.ks.statistic}, {"p_value", cv.ks.p_value}};
    j["naive_final_M_over_n"] = cv.naive_final;
    j["fast_final_M_over_n"] = cv.fast_final;
    j["verdicts"] = nlohmann::json::array();
    for (const auto& v : cv.verdicts) {
        j["verdicts"].push_back(verdict_to_json(v));
    }
    return j;
}

/// JSON form of a report. `jobs` is deliberately absent so that the
/// document does not depend on parallelism.
inline nlohmann::json report_to_json(const EnsembleReport& r, const std::string& embedded_config = {}) {
    nlohmann::json j;
    j["version"] = version;
    if (!embedded_config.empty()) {
        j["config"] = embedded_config;
    }
    const auto [lo, hi] = resolved_window(r.spec);
    j["spec"] = {{"params", params_to_json(r.spec.params)},
                 {"replicates", r.spec.replicates},
                 {"checkpoint_ratio", r.spec.checkpoint_ratio},
                 {"tracked_degrees", r.spec.tracked_degrees},
                 {"window", {lo, hi}},
                 {"stream_offset", r.spec.stream_offset}};
    j["prediction"] = prediction_to_json(r.prediction);
    j["completed_replicates"] = r.completed_replicates;
    j["partial"] = r.partial;
    j["failures"] = r.failures;
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : r.checkpoints) {
        nlohmann::json fr = nlohmann::json::array();
        for (const auto& s : c.class_fraction) {
            fr.push_back(summary_to_json(s));
        }
        cps.push_back({{"n", c.n},
                       {"M_over_n", summary_to_json(c.max_over_n)},
                       {"M_over_n_exponent", summary_to_json(c.max_over_power)},
                       {"D_over_n", summary_to_json(c.weight_over_n)},
                       {"N_over_n", fr}});
    }
    j["checkpoints"] = cps;
    if (r.growth_fit) {
        j["growth_fit"] = {{"slope", r.growth_fit->slope},
                           {"intercept", r.growth_fit->intercept},
                           {"slope_stderr", r.growth_fit->slope_stderr},
                           {"points", r.growth_fit->points}};
    } else {
        j["growth_fit"] = {{"error", r.fit_error}};
    }
    j["verdicts"] = nlohmann::json::array();
    for (const auto& v : r.verdicts) {
        j["verdicts"].push_back(verdict_to_json(v));
    }
    j["all_passed"] = r.all_passed();
    return j;
}

/// Aligned-column text rendering of a report.
inline std::string report_to_text(const EnsembleReport& r) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "regime %s  exponent %.6g  constant %.6g  E[m] %.6g  E[m^alpha] %.6g\n",
                  to_string(r.prediction.regime), r.prediction.exponent, r.prediction.constant, r.prediction.em,
                  r.prediction.em_alpha);
    os << buf;
    std::snprintf(buf, sizeof buf, "replicates %llu/%llu%s\n",
                  static_cast<unsigned long long>(r.completed_replicates),
                  static_cast<unsigned long long>(r.spec.replicates), r.partial ? "  (partial)" : "");
    os << buf;
    std::snprintf(buf, sizeof buf, "%12s %12s %12s %12s %12s\n", "n", "med M/n", "med M/n^e", "mean D/n", "IQR M/n");
    os << buf;
    for (const auto& c : r.checkpoints) {
        std::snprintf(buf, sizeof buf, "%12llu %12.6f %12.6f %12.6f %12.6f\n", static_cast<unsigned long long>(c.n),
                      c.max_over_n.median, c.max_over_power.median, c.weight_over_n.mean,
                      c.max_over_n.q75 - c.max_over_n.q25);
        os << buf;
    }
    if (r.growth_fit) {
        std::snprintf(buf, sizeof buf, "log-log slope %.6f +- %.6f over %zu points\n", r.growth_fit->slope,
                      r.growth_fit->slope_stderr, r.growth_fit->points);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "%-26s %12s %12s %12s  %s\n", "verdict", "observed", "target", "tolerance",
                  "result");
    os << buf;
    for (const auto& v : r.verdicts) {
        std::snprintf(buf, sizeof buf, "%-26s %12.6g %12.6g %12.6g  %s\n", v.name.c_str(), v.observed, v.target,
                      v.tolerance, v.informational ? (v.passed ? "info-ok" : "info-off") : (v.passed ? "PASS" : "FAIL"));
        os << buf;
    }
    return os.str();
}

/// 64-bit FNV-1a, rendered as 16 hex digits; names run directories.
inline std::string content_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace pachoice
