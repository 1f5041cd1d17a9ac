#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pachoice/rng.hpp"

namespace pachoice {

namespace detail {

/// Sum of k^-p over k >= k_min for p > 1, +inf otherwise.
///
/// Direct summation over the first `direct_terms` values, then an
/// Euler-Maclaurin tail carried to the f''' term. The first omitted term is
/// bounded by p(p+1)(p+2)(p+3)(p+4) K^{-p-5} / 30240, which for K >= 4096 is
/// far below 1e-12 relative for every p > 1.
inline double power_sum(double p, std::uint64_t k_min) {
    if (!(p > 1.0)) {
        return std::numeric_limits<double>::infinity();
    }
    constexpr std::uint64_t direct_terms = 4096;
    const std::uint64_t k_end = k_min + direct_terms;
    long double direct = 0.0L;
    // Smallest terms first.
    for (std::uint64_t k = k_end; k-- > k_min;) {
        direct += std::pow(static_cast<long double>(k), -static_cast<long double>(p));
    }
    const long double K = static_cast<long double>(k_end);
    const long double lp = p;
    const long double f = std::pow(K, -lp);
    const long double integral = K * f / (lp - 1.0L);
    const long double d1 = -lp * f / K;
    const long double d3 = -lp * (lp + 1.0L) * (lp + 2.0L) * f / (K * K * K);
    const long double tail = integral + f / 2.0L - d1 / 12.0L + d3 / 720.0L;
    return static_cast<double>(direct + tail);
}

} // namespace detail

/// Law of the number of edges m drawn by each arriving vertex.
///
/// Three families: a point mass, a finite pmf, and a discrete power law
/// Pr(m = k) = k^-beta / zeta(beta, k_min) for k >= k_min. Construction
/// validates structure and caches E m and E m^2; E m^alpha depends on the
/// model exponent and is evaluated on demand. Instances are immutable and
/// cheap to copy (sampling tables are shared).
class MDistribution {
public:
    enum class Kind { Deterministic, FinitePMF, Zeta };
    using value_type = std::uint64_t;
    using pmf_entry = std::pair<value_type, double>;

    static MDistribution deterministic(value_type k) {
        if (k < 1) {
            throw std::invalid_argument("deterministic m must be >= 1");
        }
        MDistribution d;
        d.kind_ = Kind::Deterministic;
        d.value_ = k;
        d.mean_ = static_cast<double>(k);
        d.second_moment_ = d.mean_ * d.mean_;
        return d;
    }

    static MDistribution finite_pmf(std::vector<pmf_entry> entries) {
        if (entries.empty()) {
            throw std::invalid_argument("pmf must have at least one entry");
        }
        std::sort(entries.begin(), entries.end());
        double total = 0.0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& [k, p] = entries[i];
            if (k < 1) {
                throw std::invalid_argument("pmf support must be >= 1");
            }
            if (i > 0 && entries[i - 1].first == k) {
                throw std::invalid_argument("pmf lists value " + std::to_string(k) + " twice");
            }
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw std::invalid_argument("pmf probabilities must be finite and non-negative");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            std::ostringstream os;
            os.precision(17);
            os << "pmf probabilities sum to " << total << ", expected 1 within 1e-12";
            throw std::invalid_argument(os.str());
        }
        MDistribution d;
        d.kind_ = Kind::FinitePMF;
        d.pmf_ = std::make_shared<std::vector<pmf_entry>>(std::move(entries));
        auto cdf = std::make_shared<std::vector<double>>();
        double acc = 0.0;
        double mean = 0.0;
        double second = 0.0;
        for (const auto& [k, p] : *d.pmf_) {
            acc += p;
            cdf->push_back(acc);
            mean += p * static_cast<double>(k);
            second += p * static_cast<double>(k) * static_cast<double>(k);
        }
        d.cdf_ = std::move(cdf);
        d.mean_ = mean;
        d.second_moment_ = second;
        return d;
    }

    /// Discrete power law on {k_min, k_min+1, ...}; requires beta > 1.
    static MDistribution zeta(double beta, value_type k_min = 1) {
        if (!(beta > 1.0) || !std::isfinite(beta)) {
            throw std::invalid_argument("zeta law needs beta > 1 to be normalizable");
        }
        if (k_min < 1) {
            throw std::invalid_argument("zeta k_min must be >= 1");
        }
        MDistribution d;
        d.kind_ = Kind::Zeta;
        d.beta_ = beta;
        d.k_min_ = k_min;
        d.normalizer_ = detail::power_sum(beta, k_min);
        d.mean_ = detail::power_sum(beta - 1.0, k_min) / d.normalizer_;
        d.second_moment_ = detail::power_sum(beta - 2.0, k_min) / d.normalizer_;

        auto cdf = std::make_shared<std::vector<double>>();
        cdf->reserve(zeta_table_size);
        long double acc = 0.0L;
        for (value_type i = 0; i < zeta_table_size; ++i) {
            const auto k = static_cast<long double>(k_min + i);
            acc += std::pow(k, -static_cast<long double>(beta));
            cdf->push_back(static_cast<double>(acc / d.normalizer_));
        }
        d.cdf_ = std::move(cdf);
        return d;
    }

    Kind kind() const noexcept { return kind_; }
    value_type deterministic_value() const noexcept { return value_; }
    const std::vector<pmf_entry>& pmf_entries() const {
        static const std::vector<pmf_entry> empty;
        return pmf_ ? *pmf_ : empty;
    }
    double beta() const noexcept { return beta_; }
    value_type k_min() const noexcept { return k_min_; }

    double mean() const noexcept { return mean_; }
    double second_moment() const noexcept { return second_moment_; }
    bool mean_finite() const noexcept { return std::isfinite(mean_); }
    bool second_moment_finite() const noexcept { return std::isfinite(second_moment_); }

    /// E m^alpha. Exact for finite laws; the zeta series is summed with an
    /// analytic tail (absolute error well below 1e-12).
    double moment_alpha(double alpha) const {
        switch (kind_) {
        case Kind::Deterministic:
            return std::pow(static_cast<double>(value_), alpha);
        case Kind::FinitePMF: {
            double s = 0.0;
            for (const auto& [k, p] : *pmf_) {
                s += p * std::pow(static_cast<double>(k), alpha);
            }
            return s;
        }
        case Kind::Zeta:
            return detail::power_sum(beta_ - alpha, k_min_) / normalizer_;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// Pr(m = k).
    double pmf(value_type k) const {
        switch (kind_) {
        case Kind::Deterministic:
            return k == value_ ? 1.0 : 0.0;
        case Kind::FinitePMF:
            for (const auto& [v, p] : *pmf_) {
                if (v == k) {
                    return p;
                }
            }
            return 0.0;
        case Kind::Zeta:
            return k < k_min_ ? 0.0 : std::pow(static_cast<double>(k), -beta_) / normalizer_;
        }
        return 0.0;
    }

    /// Whether Pr(m = k) <= c k^{-b} holds for some b > 1 + (1 - alpha)/gamma.
    bool tail_condition(double alpha, double gamma) const noexcept {
        if (kind_ != Kind::Zeta) {
            return true;
        }
        return beta_ > 1.0 + (1.0 - alpha) / gamma;
    }

    template <class Rng>
    value_type sample(Rng& rng) const {
        switch (kind_) {
        case Kind::Deterministic:
            return value_;
        case Kind::FinitePMF: {
            const double u = uniform01(rng);
            const auto it = std::upper_bound(cdf_->begin(), cdf_->end(), u);
            const auto i = std::min<std::size_t>(
                static_cast<std::size_t>(it - cdf_->begin()), pmf_->size() - 1);
            return (*pmf_)[i].first;
        }
        case Kind::Zeta:
            return sample_zeta(rng);
        }
        return 1;
    }

    /// Compact textual form, e.g. `deterministic(2)`, `pmf(1:0.5,2:0.5)`,
    /// `zeta(3.5,1)`.
    /// Parseable text form with shortest round-trip numbers, e.g. "pmf(1:0.5,2:0.5)".
    std::string describe() const {
        auto num = [](double x) {
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, x);
            return std::string(buf, res.ptr);
        };
        std::ostringstream os;
        switch (kind_) {
        case Kind::Deterministic:
            os << "deterministic(" << value_ << ")";
            break;
        case Kind::FinitePMF: {
            os << "pmf(";
            bool first = true;
            for (const auto& [k, p] : *pmf_) {
                os << (first ? "" : ",") << k << ":" << num(p);
                first = false;
            }
            os << ")";
            break;
        }
        case Kind::Zeta:
            os << "zeta(" << num(beta_) << "," << k_min_ << ")";
            break;
        }
        return os.str();
    }

private:
    static constexpr value_type zeta_table_size = 1 << 16;

    MDistribution() = default;

    // Table inversion for the head; the tail k >= K is drawn by rejection
    // from floor(Y), Y continuous Pareto on [K, inf) with density ~ y^-beta.
    // Acceptance k^-beta / (C * int_k^{k+1} y^-beta dy), C = (1 + 1/K)^beta.
    template <class Rng>
    value_type sample_zeta(Rng& rng) const {
        const double u = uniform01(rng);
        if (u < cdf_->back()) {
            const auto it = std::upper_bound(cdf_->begin(), cdf_->end(), u);
            return k_min_ + static_cast<value_type>(it - cdf_->begin());
        }
        const double K = static_cast<double>(k_min_ + zeta_table_size);
        const double c = std::pow(1.0 + 1.0 / K, beta_);
        for (;;) {
            const double v = uniform_open01(rng);
            const double y = K * std::pow(v, -1.0 / (beta_ - 1.0));
            if (!(y < 9.0e18)) {
                continue;
            }
            const double k = std::floor(y);
            const double mass = (std::pow(k, 1.0 - beta_) - std::pow(k + 1.0, 1.0 - beta_)) / (beta_ - 1.0);
            if (uniform01(rng) * c * mass <= std::pow(k, -beta_)) {
                return static_cast<value_type>(k);
            }
        }
    }

    Kind kind_ = Kind::Deterministic;
    value_type value_ = 1;
    std::shared_ptr<const std::vector<pmf_entry>> pmf_;
    std::shared_ptr<const std::vector<double>> cdf_;
    double beta_ = 0.0;
    value_type k_min_ = 1;
    double normalizer_ = 1.0;
    double mean_ = 1.0;
    double second_moment_ = 1.0;
};

enum class SamplerMode { Naive, FastClass };
enum class DRounding { Round, Ceil, RealExponent };

inline const char* to_string(SamplerMode m) { return m == SamplerMode::Naive ? "naive" : "fast"; }
inline const char* to_string(DRounding r) {
    switch (r) {
    case DRounding::Round: return "round";
    case DRounding::Ceil: return "ceil";
    case DRounding::RealExponent: return "real";
    }
    return "round";
}

struct ModelParams {
    double alpha = 0.5;
    double gamma = 0.5;
    double c_d = 1.0;
    MDistribution m_dist = MDistribution::deterministic(1);
    SamplerMode sampler_mode = SamplerMode::FastClass;
    DRounding d_rounding = DRounding::Round;
    std::uint64_t seed = 0;
    std::uint64_t horizon = 1000;
    /// Permit E m^2 = inf (exploratory runs outside the proven range).
    bool allow_infinite_second_moment = false;
};

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool tail_condition_ok = true;
    bool second_moment_finite = true;

    bool ok() const noexcept { return violations.empty(); }
};

inline ValidationReport validate(const ModelParams& p) {
    ValidationReport r;
    auto violate = [&](std::string s) { r.violations.push_back(std::move(s)); };
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
        violate("alpha must lie in (0, 1)");
    }
    if (!(p.gamma > 0.0 && p.gamma < 1.0)) {
        violate("gamma must lie in (0, 1)");
    }
    if (!(p.c_d > 0.0) || !std::isfinite(p.c_d)) {
        violate("c_d must be positive");
    }
    if (p.horizon < 2) {
        violate("horizon must be >= 2");
    }
    if (p.d_rounding == DRounding::RealExponent && p.sampler_mode != SamplerMode::FastClass) {
        violate("real-valued sample size requires the fast sampler");
    }
    if (!p.m_dist.mean_finite()) {
        violate("E m is infinite");
    }
    r.second_moment_finite = p.m_dist.second_moment_finite();
    if (!r.second_moment_finite) {
        if (p.allow_infinite_second_moment) {
            r.warnings.push_back("E m^2 is infinite; predictions may not apply");
        } else {
            violate("E m^2 is infinite (zeta law needs beta > 3)");
        }
    }
    if (p.gamma > 0.0 && p.gamma < 1.0 && p.alpha > 0.0 && p.alpha < 1.0) {
        r.tail_condition_ok = p.m_dist.tail_condition(p.alpha, p.gamma);
        if (!r.tail_condition_ok) {
            std::ostringstream os;
            os << "tail exponent beta = " << p.m_dist.beta() << " does not exceed 1 + (1 - alpha)/gamma = "
               << 1.0 + (1.0 - p.alpha) / p.gamma << "; max-degree predictions are unreliable";
            r.warnings.push_back(os.str());
        }
    }
    return r;
}

/// Sample size d_n = c_d n^gamma under the configured rounding, never below 1.
inline double sample_size(const ModelParams& p, std::uint64_t n) {
    const double raw = p.c_d * std::pow(static_cast<double>(n), p.gamma);
    switch (p.d_rounding) {
    case DRounding::Round:
        return std::max(1.0, std::round(raw));
    case DRounding::Ceil:
        return std::max(1.0, std::ceil(raw));
    case DRounding::RealExponent:
        return std::max(1.0, raw);
    }
    return 1.0;
}

inline double m_moment_alpha(const MDistribution& dist, double alpha) { return dist.moment_alpha(alpha); }

template <class Rng>
std::uint64_t m_sample(const MDistribution& dist, Rng& rng) {
    return dist.sample(rng);
}

} // namespace pachoice
