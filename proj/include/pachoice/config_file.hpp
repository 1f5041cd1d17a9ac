#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <string_view>
#include <vector>

#include "pachoice/harness.hpp"
#include "pachoice/model_config.hpp"
#include "pachoice/trace_io.hpp"

namespace pachoice {

/// Configuration problem, anchored to a source line when one exists.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& message)
        : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                                      : source + ": " + message),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

namespace detail {

struct SchemaKey {
    const char* section;
    const char* key;
    const char* fallback; // nullptr: no default
};

// Order here is the order of the resolved configuration text.
inline const std::vector<SchemaKey>& config_schema() {
    static const std::vector<SchemaKey> schema = {
        {"model", "alpha", nullptr},
        {"model", "gamma", nullptr},
        {"model", "c_d", "1"},
        {"model", "d_rounding", "round"},
        {"model", "sampler", "fast"},
        {"m_dist", "kind", nullptr},
        {"m_dist", "value", nullptr},
        {"m_dist", "pmf", nullptr},
        {"m_dist", "beta", nullptr},
        {"m_dist", "k_min", nullptr},
        {"m_dist", "allow_infinite_second_moment", "false"},
        {"run", "seed", nullptr},
        {"run", "horizon", nullptr},
        {"run", "replicates", "1"},
        {"run", "checkpoint_ratio", "1.1"},
        {"run", "track_degrees", "1,2,3"},
        {"run", "window_lo", "0"},
        {"run", "window_hi", "0"},
        {"verify", "exponent_tol", nullptr},
        {"verify", "critical_tol", nullptr},
        {"verify", "supercritical_threshold", nullptr},
        {"verify", "constant_rel_tol", nullptr},
        {"verify", "chi2_p_min", nullptr},
        {"verify", "ks_p_min", nullptr},
        {"verify", "degree_fraction_tol", nullptr},
        {"verify", "weight_rel_tol", nullptr},
        {"verify", "cross_validate", nullptr},
        {"verify", "cv_horizon", nullptr},
        {"verify", "cv_replicates", nullptr},
        {"verify", "cv_draws", nullptr},
        {"sweep", "mode", nullptr},
        {"sweep", "alpha", nullptr},
        {"sweep", "gamma", nullptr},
        {"sweep", "c_d", nullptr},
        {"sweep", "m_law", nullptr},
    };
    return schema;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(s);
    while (std::getline(is, cell, sep)) {
        cell = trim(cell);
        if (!cell.empty()) {
            out.push_back(cell);
        }
    }
    return out;
}

} // namespace detail

/// Parses `kind(args)` law strings: `deterministic(2)`, `pmf(1:0.5,2:0.5)`,
/// `zeta(3.5)` or `zeta(3.5,2)`.
inline MDistribution parse_m_law(const std::string& text) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw std::invalid_argument("m law '" + text + "' is not of the form kind(args)");
    }
    const std::string kind = detail::trim(text.substr(0, open));
    const std::string args = text.substr(open + 1, close - open - 1);
    if (kind == "deterministic") {
        return MDistribution::deterministic(parse_u64(detail::trim(args)));
    }
    if (kind == "pmf") {
        std::vector<MDistribution::pmf_entry> entries;
        for (const auto& item : detail::split_list(args, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                throw std::invalid_argument("pmf entry '" + item + "' is not value:probability");
            }
            entries.emplace_back(parse_u64(detail::trim(item.substr(0, colon))),
                                 parse_double(detail::trim(item.substr(colon + 1))));
        }
        return MDistribution::finite_pmf(std::move(entries));
    }
    if (kind == "zeta") {
        const auto parts = detail::split_list(args, ',');
        if (parts.empty() || parts.size() > 2) {
            throw std::invalid_argument("zeta law takes (beta) or (beta,k_min)");
        }
        return MDistribution::zeta(parse_double(parts[0]), parts.size() == 2 ? parse_u64(parts[1]) : 1);
    }
    throw std::invalid_argument("unknown m law kind '" + kind + "'");
}

/// Key-value configuration with sections [model], [m_dist], [run], and the
/// optional [verify] and [sweep]. Keys are addressed as `section.key`.
/// Unknown sections or keys and repeated keys are errors.
class Config {
public:
    struct Value {
        std::string text;
        int line = 0; // 0: default or command-line override
    };

    static Config parse(std::string_view text, std::string source = "config") {
        Config cfg;
        cfg.source_ = std::move(source);
        std::string section;
        std::istringstream is{std::string(text)};
        std::string raw;
        int line_no = 0;
        while (std::getline(is, raw)) {
            ++line_no;
            std::string line = detail::trim(raw);
            if (const auto hash = line.find(" #"); hash != std::string::npos) {
                line = detail::trim(line.substr(0, hash));
            }
            if (line.empty() || line[0] == '#' || line[0] == ';') {
                continue;
            }
            if (line.front() == '[') {
                if (line.back() != ']') {
                    throw ConfigError(cfg.source_, line_no, "unterminated section header");
                }
                section = detail::trim(line.substr(1, line.size() - 2));
                if (!known_section(section)) {
                    throw ConfigError(cfg.source_, line_no, "unknown section [" + section + "]");
                }
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(cfg.source_, line_no, "expected `key = value`");
            }
            if (section.empty()) {
                throw ConfigError(cfg.source_, line_no, "key outside of any section");
            }
            const std::string key = section + "." + detail::trim(line.substr(0, eq));
            if (!known_key(key)) {
                throw ConfigError(cfg.source_, line_no, "unknown key '" + key + "'");
            }
            if (cfg.values_.count(key)) {
                throw ConfigError(cfg.source_, line_no,
                                  "key '" + key + "' repeats line " + std::to_string(cfg.values_[key].line));
            }
            cfg.values_[key] = Value{detail::trim(line.substr(eq + 1)), line_no};
        }
        return cfg;
    }

    static Config load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError(path, 0, "cannot open configuration file");
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    /// `section.key=value`; the key must belong to the schema.
    void apply_override(std::string_view assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("--set", 0, "override '" + std::string(assignment) + "' is not key=value");
        }
        const std::string key = detail::trim(assignment.substr(0, eq));
        if (!known_key(key)) {
            throw ConfigError("--set", 0, "unknown key '" + key + "'");
        }
        values_[key] = Value{detail::trim(assignment.substr(eq + 1)), 0};
    }

    void set(const std::string& key, std::string value) { apply_override(key + "=" + value); }
    void erase(const std::string& key) { values_.erase(key); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    bool has_section(const std::string& section) const {
        return std::any_of(values_.begin(), values_.end(),
                           [&](const auto& kv) { return kv.first.rfind(section + ".", 0) == 0; });
    }

    const std::string& source() const noexcept { return source_; }

    /// Explicit value, else the schema default, else nullopt.
    std::optional<Value> find(const std::string& key) const {
        if (const auto it = values_.find(key); it != values_.end()) {
            return it->second;
        }
        for (const auto& s : detail::config_schema()) {
            if (key == std::string(s.section) + "." + s.key && s.fallback) {
                return Value{s.fallback, 0};
            }
        }
        return std::nullopt;
    }

    Value require(const std::string& key) const {
        if (auto v = find(key)) {
            return *v;
        }
        throw ConfigError(source_, 0, "missing required key '" + key + "'");
    }

    template <class F>
    std::invoke_result_t<F, const std::string&> convert(const std::string& key, F&& f) const {
        const Value v = require(key);
        try {
            return f(v.text);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(source_, v.line, "key '" + key + "': " + e.what());
        }
    }

    std::string get_string(const std::string& key) const { return require(key).text; }

    double get_double(const std::string& key) const {
        return convert(key, [](const std::string& s) { return parse_double(s); });
    }

    std::uint64_t get_u64(const std::string& key) const {
        return convert(key, [](const std::string& s) { return parse_u64(s); });
    }

    bool get_bool(const std::string& key) const {
        return convert(key, [](const std::string& s) {
            if (s == "true") {
                return true;
            }
            if (s == "false") {
                return false;
            }
            throw std::invalid_argument("expected true or false, got '" + s + "'");
        });
    }

    std::vector<double> get_double_list(const std::string& key) const {
        return convert(key, [](const std::string& s) {
            std::vector<double> out;
            for (const auto& item : detail::split_list(s, ',')) {
                out.push_back(parse_double(item));
            }
            return out;
        });
    }

    /// Canonical text of every explicit or defaulted key in schema order.
    /// Parsing it back yields the same configuration.
    std::string resolved_text() const {
        std::ostringstream os;
        std::string current;
        for (const auto& s : detail::config_schema()) {
            const std::string key = std::string(s.section) + "." + s.key;
            const auto v = find(key);
            if (!v) {
                continue;
            }
            if (current != s.section) {
                os << (current.empty() ? "" : "\n") << "[" << s.section << "]\n";
                current = s.section;
            }
            os << s.key << " = " << v->text << "\n";
        }
        return os.str();
    }

private:
    static bool known_section(const std::string& s) {
        return s == "model" || s == "m_dist" || s == "run" || s == "verify" || s == "sweep";
    }
    static bool known_key(const std::string& key) {
        const auto& schema = detail::config_schema();
        return std::any_of(schema.begin(), schema.end(),
                           [&](const auto& s) { return key == std::string(s.section) + "." + s.key; });
    }

    std::string source_ = "config";
    std::map<std::string, Value> values_;
};

inline MDistribution load_m_dist(const Config& cfg) {
    const auto kind = cfg.require("m_dist.kind");
    try {
        if (kind.text == "deterministic") {
            return MDistribution::deterministic(cfg.get_u64("m_dist.value"));
        }
        if (kind.text == "pmf") {
            return parse_m_law("pmf(" + cfg.get_string("m_dist.pmf") + ")");
        }
        if (kind.text == "zeta") {
            const std::uint64_t k_min = cfg.has("m_dist.k_min") ? cfg.get_u64("m_dist.k_min") : 1;
            return MDistribution::zeta(cfg.get_double("m_dist.beta"), k_min);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(cfg.source(), kind.line, std::string("[m_dist]: ") + e.what());
    }
    throw ConfigError(cfg.source(), kind.line, "m_dist.kind must be deterministic, pmf or zeta");
}

/// Replaces the [m_dist] keys with the ones describing `law`.
inline void set_m_law(Config& cfg, const std::string& law) {
    const MDistribution d = parse_m_law(law);
    for (const char* k : {"m_dist.kind", "m_dist.value", "m_dist.pmf", "m_dist.beta", "m_dist.k_min"}) {
        cfg.erase(k);
    }
    switch (d.kind()) {
    case MDistribution::Kind::Deterministic:
        cfg.set("m_dist.kind", "deterministic");
        cfg.set("m_dist.value", std::to_string(d.deterministic_value()));
        break;
    case MDistribution::Kind::FinitePMF: {
        std::string pmf;
        for (const auto& [k, p] : d.pmf_entries()) {
            pmf += (pmf.empty() ? "" : ",") + std::to_string(k) + ":" + format_double(p);
        }
        cfg.set("m_dist.kind", "pmf");
        cfg.set("m_dist.pmf", pmf);
        break;
    }
    case MDistribution::Kind::Zeta:
        cfg.set("m_dist.kind", "zeta");
        cfg.set("m_dist.beta", format_double(d.beta()));
        cfg.set("m_dist.k_min", std::to_string(d.k_min()));
        break;
    }
}

inline ModelParams load_model_params(const Config& cfg) {
    ModelParams p;
    p.alpha = cfg.get_double("model.alpha");
    p.gamma = cfg.get_double("model.gamma");
    p.c_d = cfg.get_double("model.c_d");
    const auto rounding = cfg.require("model.d_rounding");
    if (rounding.text == "round") {
        p.d_rounding = DRounding::Round;
    } else if (rounding.text == "ceil") {
        p.d_rounding = DRounding::Ceil;
    } else if (rounding.text == "real") {
        p.d_rounding = DRounding::RealExponent;
    } else {
        throw ConfigError(cfg.source(), rounding.line, "model.d_rounding must be round, ceil or real");
    }
    const auto sampler = cfg.require("model.sampler");
    if (sampler.text == "fast") {
        p.sampler_mode = SamplerMode::FastClass;
    } else if (sampler.text == "naive") {
        p.sampler_mode = SamplerMode::Naive;
    } else {
        throw ConfigError(cfg.source(), sampler.line, "model.sampler must be fast or naive");
    }
    p.m_dist = load_m_dist(cfg);
    p.allow_infinite_second_moment = cfg.get_bool("m_dist.allow_infinite_second_moment");
    p.seed = cfg.get_u64("run.seed");
    p.horizon = cfg.get_u64("run.horizon");
    if (const auto report = validate(p); !report.ok()) {
        std::string msg = "invalid model:";
        for (const auto& v : report.violations) {
            msg += " " + v + ";";
        }
        msg.pop_back();
        throw ConfigError(cfg.source(), cfg.require("model.alpha").line, msg);
    }
    return p;
}

inline EnsembleSpec load_ensemble_spec(const Config& cfg, unsigned jobs = 1) {
    EnsembleSpec spec;
    spec.params = load_model_params(cfg);
    spec.replicates = cfg.get_u64("run.replicates");
    spec.checkpoint_ratio = cfg.get_double("run.checkpoint_ratio");
    spec.tracked_degrees.clear();
    for (const double k : cfg.get_double_list("run.track_degrees")) {
        if (!(k >= 1.0) || k != std::floor(k)) {
            throw ConfigError(cfg.source(), cfg.require("run.track_degrees").line,
                              "run.track_degrees must list positive integers");
        }
        spec.tracked_degrees.push_back(static_cast<degree_t>(k));
    }
    spec.window_lo = cfg.get_u64("run.window_lo");
    spec.window_hi = cfg.get_u64("run.window_hi");
    spec.jobs = jobs;
    try {
        validate_spec(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(cfg.source(), cfg.require("run.replicates").line, e.what());
    }
    if (!(spec.checkpoint_ratio > 1.0)) {
        throw ConfigError(cfg.source(), cfg.require("run.checkpoint_ratio").line, "run.checkpoint_ratio must exceed 1");
    }
    return spec;
}

/// Tolerances for `verify`. The five core keys are mandatory.
inline Tolerances load_tolerances(const Config& cfg) {
    Tolerances t;
    t.exponent_tol = cfg.get_double("verify.exponent_tol");
    t.critical_tol = cfg.get_double("verify.critical_tol");
    t.supercritical_threshold = cfg.get_double("verify.supercritical_threshold");
    t.chi2_p_min = cfg.get_double("verify.chi2_p_min");
    t.ks_p_min = cfg.get_double("verify.ks_p_min");
    if (cfg.has("verify.constant_rel_tol")) {
        t.constant_rel_tol = cfg.get_double("verify.constant_rel_tol");
    }
    if (cfg.has("verify.degree_fraction_tol")) {
        t.degree_fraction_tol = cfg.get_double("verify.degree_fraction_tol");
    }
    if (cfg.has("verify.weight_rel_tol")) {
        t.weight_rel_tol = cfg.get_double("verify.weight_rel_tol");
    }
    return t;
}

struct CrossValidationSettings {
    bool enabled = false;
    std::uint64_t horizon = 10000;
    std::uint64_t replicates = 50;
    std::uint64_t draws = 100000;
};

inline CrossValidationSettings load_cross_validation(const Config& cfg) {
    CrossValidationSettings s;
    if (cfg.has("verify.cross_validate")) {
        s.enabled = cfg.get_bool("verify.cross_validate");
    }
    if (cfg.has("verify.cv_horizon")) {
        s.horizon = cfg.get_u64("verify.cv_horizon");
    }
    if (cfg.has("verify.cv_replicates")) {
        s.replicates = cfg.get_u64("verify.cv_replicates");
    }
    if (cfg.has("verify.cv_draws")) {
        s.draws = cfg.get_u64("verify.cv_draws");
    }
    return s;
}

struct SweepGrid {
    std::string mode = "verify";
    std::vector<double> alphas;
    std::vector<double> gammas;
    std::vector<double> c_ds;
    std::vector<std::string> m_laws;
};

/// Grid axes absent from [sweep] keep the base configuration's value.
inline SweepGrid load_sweep(const Config& cfg) {
    SweepGrid g;
    if (cfg.has("sweep.mode")) {
        const auto mode = cfg.require("sweep.mode");
        if (mode.text != "verify" && mode.text != "simulate") {
            throw ConfigError(cfg.source(), mode.line, "sweep.mode must be verify or simulate");
        }
        g.mode = mode.text;
    }
    if (cfg.has("sweep.alpha")) {
        g.alphas = cfg.get_double_list("sweep.alpha");
    }
    if (cfg.has("sweep.gamma")) {
        g.gammas = cfg.get_double_list("sweep.gamma");
    }
    if (cfg.has("sweep.c_d")) {
        g.c_ds = cfg.get_double_list("sweep.c_d");
    }
    if (cfg.has("sweep.m_law")) {
        g.m_laws = detail::split_list(cfg.get_string("sweep.m_law"), ';');
    }
    if (g.alphas.empty() && g.gammas.empty() && g.c_ds.empty() && g.m_laws.empty()) {
        throw ConfigError(cfg.source(), 0, "sweep grid is empty: set at least one of sweep.alpha, sweep.gamma, "
                                           "sweep.c_d, sweep.m_law");
    }
    return g;
}

} // namespace pachoice
