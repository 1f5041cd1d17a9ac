#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "pachoice/growth_engine.hpp"
#include "pachoice/theory.hpp"
#include "pachoice/version.hpp"

namespace pachoice {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return x;
}

inline std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a non-negative integer: '" + s + "'");
    }
    return x;
}

inline void write_commented(std::ostream& os, const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        os << "# " << line << "\n";
    }
}

/// CSV with columns n,M,L,D,edges,N_<k>... . Leading `#` lines carry the
/// artifact version and the resolved configuration that produced the trace.
inline void write_trace_csv(std::ostream& os, const RunTrace& trace, const std::string& embedded_config = {}) {
    os << "# pachoice " << version << "\n";
    os << "# stream " << trace.stream << (trace.partial ? " partial: " + trace.error : std::string{}) << "\n";
    if (!embedded_config.empty()) {
        write_commented(os, embedded_config);
    }
    os << "n,M,L,D,edges";
    for (const degree_t k : trace.tracked_degrees) {
        os << ",N_" << k;
    }
    os << "\n";
    for (const auto& row : trace.rows) {
        os << row.n << ',' << row.max_degree << ',' << row.count_at_max << ',' << format_double(row.total_weight)
           << ',' << row.edges;
        for (const auto c : row.class_counts) {
            os << ',' << c;
        }
        os << "\n";
    }
}

/// Reads the rows and tracked degrees back. Parameters are not recovered
/// from the comment block; the caller supplies them.
inline RunTrace read_trace_csv(std::istream& is, const ModelParams& params, std::uint64_t stream = 0) {
    RunTrace trace;
    trace.params = params;
    trace.stream = stream;
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream cs(s);
        while (std::getline(cs, cell, ',')) {
            out.push_back(cell);
        }
        return out;
    };
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            if (line.find(" partial: ") != std::string::npos) {
                trace.partial = true;
                trace.error = line.substr(line.find(" partial: ") + 10);
            }
            continue;
        }
        const auto cells = split(line);
        if (!header_seen) {
            if (cells.size() < 5 || cells[0] != "n" || cells[1] != "M" || cells[2] != "L" || cells[3] != "D" ||
                cells[4] != "edges") {
                throw std::runtime_error("trace line " + std::to_string(line_no) + ": unexpected header");
            }
            for (std::size_t i = 5; i < cells.size(); ++i) {
                if (cells[i].rfind("N_", 0) != 0) {
                    throw std::runtime_error("trace line " + std::to_string(line_no) + ": bad column " + cells[i]);
                }
                trace.tracked_degrees.push_back(parse_u64(cells[i].substr(2)));
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != 5 + trace.tracked_degrees.size()) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": wrong column count");
        }
        try {
            TraceRow row;
            row.n = parse_u64(cells[0]);
            row.max_degree = parse_u64(cells[1]);
            row.count_at_max = parse_u64(cells[2]);
            row.total_weight = parse_double(cells[3]);
            row.edges = parse_u64(cells[4]);
            for (std::size_t i = 5; i < cells.size(); ++i) {
                row.class_counts.push_back(parse_u64(cells[i]));
            }
            trace.rows.push_back(std::move(row));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header_seen) {
        throw std::runtime_error("trace has no header row");
    }
    return trace;
}

inline nlohmann::json params_to_json(const ModelParams& p) {
    return {
        {"alpha", p.alpha},
        {"gamma", p.gamma},
        {"c_d", p.c_d},
        {"m_dist", p.m_dist.describe()},
        {"sampler", to_string(p.sampler_mode)},
        {"d_rounding", to_string(p.d_rounding)},
        {"seed", p.seed},
        {"horizon", p.horizon},
        {"allow_infinite_second_moment", p.allow_infinite_second_moment},
    };
}

inline nlohmann::json prediction_to_json(const Prediction& p) {
    nlohmann::json j = {
        {"regime", to_string(p.regime)},
        {"em", p.em},
        {"em_alpha", p.em_alpha},
        {"exponent", p.exponent},
        {"constant", p.constant},
        {"constant_formula", p.constant_formula},
        {"tail_condition_ok", p.tail_condition_ok},
    };
    if (p.alt_constant) {
        j["alt_constant"] = *p.alt_constant;
        j["alt_constant_formula"] = p.alt_constant_formula;
    } else {
        j["alt_constant"] = nullptr;
    }
    return j;
}

/// Final-state summary of one run with the matching predictions.
inline nlohmann::json run_summary_json(const RunTrace& trace, const Prediction& prediction) {
    nlohmann::json j;
    j["version"] = version;
    j["params"] = params_to_json(trace.params);
    j["seed"] = trace.params.seed;
    j["stream"] = trace.stream;
    j["partial"] = trace.partial;
    if (trace.partial) {
        j["error"] = trace.error;
    }
    j["prediction"] = prediction_to_json(prediction);
    if (!trace.rows.empty()) {
        const auto& last = trace.rows.back();
        const double n = static_cast<double>(last.n);
        nlohmann::json fin = {
            {"n", last.n},
            {"M", last.max_degree},
            {"L", last.count_at_max},
            {"D", last.total_weight},
            {"edges", last.edges},
            {"M_over_n", static_cast<double>(last.max_degree) / n},
            {"M_over_n_exponent", static_cast<double>(last.max_degree) / std::pow(n, prediction.exponent)},
            {"D_over_n", last.total_weight / n},
            {"D_over_n_rel_error", last.total_weight / n / prediction.em_alpha - 1.0},
        };
        nlohmann::json fractions = nlohmann::json::object();
        for (std::size_t i = 0; i < trace.tracked_degrees.size(); ++i) {
            fractions[std::to_string(trace.tracked_degrees[i])] = static_cast<double>(last.class_counts[i]) / n;
        }
        fin["N_over_n"] = fractions;
        j["final"] = fin;
    }
    return j;
}

} // namespace pachoice
