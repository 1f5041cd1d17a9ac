#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pachoice/degree_class_index.hpp"
#include "pachoice/model_config.hpp"

namespace pachoice {

enum class Regime { Subcritical, Critical, Supercritical };

inline const char* to_string(Regime r) {
    switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Critical: return "critical";
    case Regime::Supercritical: return "supercritical";
    }
    return "?";
}

/// Trichotomy on alpha + gamma against 1, with |alpha + gamma - 1| <= 1e-12
/// counted as critical.
inline Regime classify_regime(double alpha, double gamma) {
    const double s = alpha + gamma;
    if (std::abs(s - 1.0) <= 1e-12) {
        return Regime::Critical;
    }
    return s < 1.0 ? Regime::Subcritical : Regime::Supercritical;
}

struct SublinearConstants {
    /// (c_d E m (1-alpha) / (gamma E m^alpha))^(1/(1-alpha)); the lower-bound
    /// constant and the one used as the headline prediction.
    double x_star = 0.0;
    /// ((E m)^(1-gamma) (1-alpha) / (gamma E m^alpha))^(1/(1-alpha)); the
    /// upper-bound constant. Equal to x_star when c_d = 1 and m == 1.
    double upper_constant = 0.0;
};

inline SublinearConstants predict_x_star(const ModelParams& p) {
    if (classify_regime(p.alpha, p.gamma) != Regime::Subcritical) {
        throw std::domain_error("x* is defined only for alpha + gamma < 1");
    }
    const double em = p.m_dist.mean();
    const double em_alpha = p.m_dist.moment_alpha(p.alpha);
    const double e = 1.0 / (1.0 - p.alpha);
    SublinearConstants c;
    c.x_star = std::pow(p.c_d * em * (1.0 - p.alpha) / (p.gamma * em_alpha), e);
    c.upper_constant = std::pow(std::pow(em, 1.0 - p.gamma) * (1.0 - p.alpha) / (p.gamma * em_alpha), e);
    return c;
}

/// g(x) = 1 - exp(-c_d x^alpha / E m^alpha) - x.
inline double critical_drift(double x, double alpha, double c_d, double em_alpha) {
    return -std::expm1(-c_d * std::pow(x, alpha) / em_alpha) - x;
}

/// Positive root of critical_drift by bisection on [2^-j, 1], where 2^-j is
/// the first power of two (j >= 1) at which the drift is positive. The
/// bracket is refined until its width is below 1e-12 relative to its upper
/// end, so tiny roots (alpha near 1, small c_d) keep full precision.
inline double find_critical_root(double alpha, double c_d, double em_alpha) {
    double lo = 0.5;
    int halvings = 0;
    while (!(critical_drift(lo, alpha, c_d, em_alpha) > 0.0)) {
        lo *= 0.5;
        if (++halvings > 1060 || lo == 0.0) {
            throw std::runtime_error("no positive bracket for the critical root");
        }
    }
    double hi = 1.0;
    if (!(critical_drift(hi, alpha, c_d, em_alpha) < 0.0)) {
        throw std::runtime_error("critical drift is not negative at 1");
    }
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (critical_drift(mid, alpha, c_d, em_alpha) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double predict_rho_star(const ModelParams& p) {
    if (classify_regime(p.alpha, p.gamma) != Regime::Critical) {
        throw std::domain_error("rho* is defined only for alpha + gamma = 1");
    }
    return find_critical_root(p.alpha, p.c_d, p.m_dist.moment_alpha(p.alpha));
}

struct Prediction {
    Regime regime = Regime::Subcritical;
    double em = 0.0;
    double em_alpha = 0.0;
    /// M(n) grows like constant * n^exponent.
    double exponent = 1.0;
    double constant = 0.0;
    std::optional<double> alt_constant;
    bool tail_condition_ok = true;
    /// Formula behind `constant`, human readable.
    std::string constant_formula;
    std::string alt_constant_formula;
};

inline Prediction predict(const ModelParams& p) {
    Prediction out;
    out.regime = classify_regime(p.alpha, p.gamma);
    out.em = p.m_dist.mean();
    out.em_alpha = p.m_dist.moment_alpha(p.alpha);
    out.tail_condition_ok = p.m_dist.tail_condition(p.alpha, p.gamma);
    switch (out.regime) {
    case Regime::Subcritical: {
        const auto c = predict_x_star(p);
        out.exponent = p.gamma / (1.0 - p.alpha);
        out.constant = c.x_star;
        out.alt_constant = c.upper_constant;
        out.constant_formula = "(c_d*E[m]*(1-alpha)/(gamma*E[m^alpha]))^(1/(1-alpha))";
        out.alt_constant_formula = "(E[m]^(1-gamma)*(1-alpha)/(gamma*E[m^alpha]))^(1/(1-alpha))";
        break;
    }
    case Regime::Critical:
        out.exponent = 1.0;
        out.constant = predict_rho_star(p);
        out.constant_formula = "root of 1-exp(-c_d*x^alpha/E[m^alpha])-x in (0,1]";
        break;
    case Regime::Supercritical:
        out.exponent = 1.0;
        out.constant = out.em;
        out.constant_formula = "E[m]";
        break;
    }
    return out;
}

/// Law of the degree of one attachment target given the frozen index:
/// Pr(k) = (D(k)/D)^d - (D(k-1)/D)^d over occupied classes, ascending.
/// Prefix weights are re-summed from the class counts.
inline std::vector<std::pair<degree_t, double>> attachment_class_pmf(const DegreeClassIndex& index, double d) {
    if (index.vertex_count() == 0) {
        throw std::invalid_argument("attachment pmf of an empty index");
    }
    if (!(d >= 1.0)) {
        throw std::invalid_argument("sample size must be >= 1");
    }
    const auto classes = index.classes();
    std::vector<double> prefix;
    prefix.reserve(classes.size());
    long double acc = 0.0L;
    for (const auto& [k, c] : classes) {
        acc += static_cast<long double>(c) * std::pow(static_cast<long double>(k), index.alpha());
        prefix.push_back(static_cast<double>(acc));
    }
    const double total = prefix.back();
    std::vector<std::pair<degree_t, double>> pmf;
    pmf.reserve(classes.size());
    double below = 0.0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const double cdf = i + 1 == classes.size() ? 1.0 : std::pow(prefix[i] / total, d);
        pmf.emplace_back(classes[i].first, cdf - below);
        below = cdf;
    }
    return pmf;
}

struct DriftBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Bounds on E[M(n+1) - M(n) | G_n]:
///   lower = E m (1 - (1 - M^alpha / D)^d)
///   upper = E m (1 - (1 - L M^alpha / D)^d), clamped to [0, E m].
inline DriftBounds drift_bounds(const DegreeClassIndex& index, double d, double em) {
    if (index.vertex_count() == 0) {
        throw std::invalid_argument("drift bounds of an empty index");
    }
    const double top = index.weight_of_degree(index.max_degree());
    const double total = index.total_weight();
    auto bound = [&](double share) {
        if (share >= 1.0) {
            return em;
        }
        return std::clamp(em * (1.0 - std::pow(1.0 - share, d)), 0.0, em);
    };
    DriftBounds b;
    b.lower = bound(top / total);
    b.upper = index.count_at_max() == 1 ? b.lower : bound(top * static_cast<double>(index.count_at_max()) / total);
    return b;
}

} // namespace pachoice
