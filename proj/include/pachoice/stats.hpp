#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace pachoice::stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) {
        throw std::invalid_argument("mean of empty sample");
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Quantile with linear interpolation between order statistics (R type 7).
inline double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) {
        throw std::invalid_argument("quantile of empty sample");
    }
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

struct Summary {
    double mean = 0.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

inline Summary summarize(const std::vector<double>& xs) {
    return {mean(xs), quantile(xs, 0.5), quantile(xs, 0.25), quantile(xs, 0.75)};
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("least squares needs >= 2 paired points");
    }
    const double n = static_cast<double>(x.size());
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("least squares with constant abscissa");
    }
    LinearFit fit;
    fit.points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            ssr += r * r;
        }
        fit.slope_stderr = std::sqrt(ssr / (n - 2.0) / sxx);
    }
    return fit;
}

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
};

/// Pearson goodness of fit. Adjacent cells are pooled until every pooled
/// cell expects at least `min_expected` counts; expected[i] are
/// probabilities and are scaled by the observed total.
inline ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> probabilities,
                                       double min_expected = 5.0) {
    if (observed.size() != probabilities.size() || observed.empty()) {
        throw std::invalid_argument("chi-square needs matching non-empty cells");
    }
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    std::vector<double> obs;
    std::vector<double> exp;
    double o = 0.0;
    double e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o += observed[i];
        e += probabilities[i] * total;
        if (e >= min_expected) {
            obs.push_back(o);
            exp.push_back(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (exp.empty()) {
            obs.push_back(o);
            exp.push_back(e);
        } else {
            obs.back() += o;
            exp.back() += e;
        }
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (exp[i] > 0.0) {
            r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
        } else if (obs[i] > 0.0) {
            r.statistic = std::numeric_limits<double>::infinity();
        }
    }
    if (obs.size() < 2) {
        r.dof = 0;
        r.p_value = 1.0;
        return r;
    }
    r.dof = obs.size() - 1;
    if (!std::isfinite(r.statistic)) {
        r.p_value = 0.0;
        return r;
    }
    const boost::math::chi_squared dist(static_cast<double>(r.dof));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

/// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
inline double kolmogorov_survival(double lambda) {
    if (lambda < 1e-3) {
        return 1.0;
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-17 * std::abs(sum)) {
            break;
        }
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic distribution and
/// Stephens' small-sample correction lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("KS test needs non-empty samples");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) {
            ++i;
        }
        while (j < b.size() && b[j] == x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    KsResult r;
    r.statistic = d;
    r.p_value = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
    return r;
}

} // namespace pachoice::stats
