#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pachoice/model_config.hpp"
#include "pachoice/stats.hpp"

using namespace pachoice;

namespace {

ModelParams base(double alpha, double gamma, MDistribution m) {
    ModelParams p;
    p.alpha = alpha;
    p.gamma = gamma;
    p.c_d = 1.0;
    p.m_dist = std::move(m);
    return p;
}

} // namespace

TEST(Validate, DeterministicSatisfiesEverything) {
    const auto r = validate(base(0.5, 0.25, MDistribution::deterministic(1)));
    EXPECT_TRUE(r.ok());
    EXPECT_TRUE(r.tail_condition_ok);
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Validate, ZetaWithInfiniteSecondMomentIsAViolation) {
    const auto r = validate(base(0.5, 0.5, MDistribution::zeta(2.5)));
    ASSERT_FALSE(r.ok());
    EXPECT_FALSE(r.second_moment_finite);
    EXPECT_NE(r.violations.front().find("E m^2"), std::string::npos);
}

TEST(Validate, OverridePermitsInfiniteSecondMoment) {
    auto p = base(0.5, 0.5, MDistribution::zeta(2.5));
    p.allow_infinite_second_moment = true;
    const auto r = validate(p);
    EXPECT_TRUE(r.ok());
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Validate, ZetaTailConditionEvaluatedDirectly) {
    // 3.5 > 1 + (1 - 0.5)/0.5 = 2.
    const auto r = validate(base(0.5, 0.5, MDistribution::zeta(3.5)));
    EXPECT_TRUE(r.ok());
    EXPECT_TRUE(r.tail_condition_ok);
    // 3.5 < 1 + (1 - 0.2)/0.3 = 3.67: simulation allowed, predictions flagged.
    const auto weak = validate(base(0.2, 0.3, MDistribution::zeta(3.5)));
    EXPECT_TRUE(weak.ok());
    EXPECT_FALSE(weak.tail_condition_ok);
    EXPECT_EQ(weak.warnings.size(), 1u);
}

TEST(Validate, ParameterRanges) {
    auto p = base(1.0, 0.5, MDistribution::deterministic(1));
    EXPECT_FALSE(validate(p).ok());
    p = base(0.5, 0.0, MDistribution::deterministic(1));
    EXPECT_FALSE(validate(p).ok());
    p = base(0.5, 0.5, MDistribution::deterministic(1));
    p.c_d = 0.0;
    EXPECT_FALSE(validate(p).ok());
    p.c_d = 1.0;
    p.horizon = 1;
    EXPECT_FALSE(validate(p).ok());
}

TEST(Validate, RealExponentNeedsFastSampler) {
    auto p = base(0.5, 0.5, MDistribution::deterministic(1));
    p.d_rounding = DRounding::RealExponent;
    p.sampler_mode = SamplerMode::Naive;
    EXPECT_FALSE(validate(p).ok());
    p.sampler_mode = SamplerMode::FastClass;
    EXPECT_TRUE(validate(p).ok());
}

TEST(MDistribution, MalformedConstructionThrows) {
    EXPECT_THROW(MDistribution::deterministic(0), std::invalid_argument);
    EXPECT_THROW(MDistribution::finite_pmf({}), std::invalid_argument);
    EXPECT_THROW(MDistribution::finite_pmf({{1, 0.5}, {2, 0.4}}), std::invalid_argument);
    EXPECT_THROW(MDistribution::finite_pmf({{0, 1.0}}), std::invalid_argument);
    EXPECT_THROW(MDistribution::finite_pmf({{1, 0.5}, {1, 0.5}}), std::invalid_argument);
    EXPECT_THROW(MDistribution::zeta(1.0), std::invalid_argument);
}

TEST(SampleSize, WorkedValues) {
    auto p = base(0.5, 0.5, MDistribution::deterministic(1));
    EXPECT_EQ(sample_size(p, 100), 10.0);
    for (auto mode : {DRounding::Round, DRounding::Ceil, DRounding::RealExponent}) {
        p.d_rounding = mode;
        EXPECT_EQ(sample_size(p, 1), 1.0);
    }
    p = base(0.5, 0.25, MDistribution::deterministic(1));
    p.c_d = 0.3;
    EXPECT_EQ(sample_size(p, 2), 1.0); // 0.357 clamps to 1
    p.d_rounding = DRounding::Ceil;
    EXPECT_EQ(sample_size(p, 2), 1.0);
    p.c_d = 2.0;
    p.d_rounding = DRounding::RealExponent;
    EXPECT_DOUBLE_EQ(sample_size(p, 16), 4.0);
    EXPECT_DOUBLE_EQ(sample_size(p, 17), 2.0 * std::pow(17.0, 0.25));
}

TEST(SampleSize, PropertyAtLeastOneIntegralAndMonotone) {
    const std::vector<double> cds{0.05, 0.3, 1.0, 2.5};
    const std::vector<double> gammas{0.1, 0.25, 0.5, 0.9};
    for (const double c : cds) {
        for (const double g : gammas) {
            for (auto mode : {DRounding::Round, DRounding::Ceil, DRounding::RealExponent}) {
                auto p = base(0.5, g, MDistribution::deterministic(1));
                p.c_d = c;
                p.d_rounding = mode;
                double prev = 0.0;
                for (std::uint64_t n = 1; n < 5000; n += 1 + n / 7) {
                    const double d = sample_size(p, n);
                    ASSERT_GE(d, 1.0);
                    ASSERT_GE(d, prev);
                    if (mode != DRounding::RealExponent) {
                        ASSERT_EQ(d, std::floor(d));
                    }
                    prev = d;
                }
            }
        }
    }
}

TEST(MomentAlpha, WorkedValues) {
    EXPECT_NEAR(m_moment_alpha(MDistribution::deterministic(2), 0.5), 1.414214, 1e-6);
    EXPECT_EQ(m_moment_alpha(MDistribution::deterministic(1), 0.3), 1.0);
    EXPECT_EQ(m_moment_alpha(MDistribution::deterministic(1), 0.9), 1.0);
    EXPECT_NEAR(m_moment_alpha(MDistribution::finite_pmf({{1, 0.5}, {4, 0.5}}), 0.5), 1.5, 1e-15);
    const auto three = MDistribution::finite_pmf({{1, 0.5}, {2, 0.3}, {3, 0.2}});
    EXPECT_NEAR(m_moment_alpha(three, 0.5), 0.5 + 0.3 * std::sqrt(2.0) + 0.2 * std::sqrt(3.0), 1e-15);
}

TEST(MomentAlpha, ZetaMatchesBruteForceSeries) {
    // Reference values: mpmath.zeta(s, k_min) ratios.
    const auto z = MDistribution::zeta(3.5);
    EXPECT_NEAR(z.mean(), 1.19059814936177, 1e-12);
    EXPECT_NEAR(z.moment_alpha(0.5), 1.06685077818944, 1e-12);
    EXPECT_NEAR(z.second_moment(), 2.31853805451503, 1e-11);
    const auto z2 = MDistribution::zeta(3.5, 2);
    EXPECT_NEAR(z2.mean(), 2.69452250199705, 1e-12);
    EXPECT_NEAR(z2.moment_alpha(0.5), 1.59434022994105, 1e-12);
    // Independent brute-force series.
    for (const double beta : {3.2, 4.0, 6.0}) {
        for (const double alpha : {0.2, 0.7}) {
            const double expected = oracle::brute_power_sum(beta - alpha, 1) / oracle::brute_power_sum(beta, 1);
            EXPECT_NEAR(MDistribution::zeta(beta).moment_alpha(alpha), expected, 1e-10) << beta << " " << alpha;
        }
    }
    EXPECT_FALSE(MDistribution::zeta(3.0).second_moment_finite());
    EXPECT_FALSE(MDistribution::zeta(2.0).mean_finite());
}

TEST(MomentAlpha, JensenBoundHoldsForEveryFamily) {
    const std::vector<MDistribution> laws{
        MDistribution::deterministic(1), MDistribution::deterministic(7),
        MDistribution::finite_pmf({{1, 0.5}, {2, 0.3}, {3, 0.2}}), MDistribution::finite_pmf({{1, 0.9}, {50, 0.1}}),
        MDistribution::zeta(3.5), MDistribution::zeta(4.0, 3)};
    for (const auto& m : laws) {
        for (double a = 0.05; a < 1.0; a += 0.1) {
            EXPECT_LE(m.moment_alpha(a), m.mean() * (1.0 + 1e-15)) << m.describe() << " alpha " << a;
        }
    }
}

TEST(MSample, DeterministicIgnoresStream) {
    auto rng = make_stream(1, 2);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(m_sample(MDistribution::deterministic(3), rng), 3u);
    }
}

TEST(MSample, PmfMeanWithinCltBand) {
    const auto m = MDistribution::finite_pmf({{1, 0.5}, {2, 0.5}});
    auto rng = make_stream(42, 0);
    double s = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
        s += static_cast<double>(m_sample(m, rng));
    }
    EXPECT_NEAR(s / draws, 1.5, 0.01);
}

TEST(MSample, ZetaMeanWithinOnePercent) {
    // zeta(3)/zeta(4), from mpmath.
    const double expected = 1.11062653532615;
    const auto m = MDistribution::zeta(4.0, 1);
    auto rng = make_stream(7, 0);
    double s = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
        s += static_cast<double>(m_sample(m, rng));
    }
    EXPECT_NEAR(s / draws / expected, 1.0, 0.01);
}

TEST(MSample, HistogramMatchesPmfChiSquare) {
    const std::vector<MDistribution> laws{MDistribution::finite_pmf({{1, 0.5}, {2, 0.3}, {3, 0.2}}),
                                          MDistribution::zeta(3.5), MDistribution::zeta(4.0, 2)};
    std::uint64_t stream = 0;
    for (const auto& m : laws) {
        auto rng = make_stream(2024, stream++);
        std::map<std::uint64_t, double> hist;
        const int draws = 1000000;
        for (int i = 0; i < draws; ++i) {
            hist[m_sample(m, rng)] += 1.0;
        }
        std::vector<double> obs;
        std::vector<double> prob;
        const std::uint64_t top = hist.rbegin()->first;
        double covered = 0.0;
        for (std::uint64_t k = 1; k <= top; ++k) {
            obs.push_back(hist.count(k) ? hist[k] : 0.0);
            prob.push_back(m.pmf(k));
            covered += m.pmf(k);
        }
        prob.back() += 1.0 - covered; // the unobserved tail joins the last cell
        const auto r = stats::chi_square_test(obs, prob);
        EXPECT_GT(r.p_value, 0.001) << m.describe() << " chi2 " << r.statistic << " dof " << r.dof;
    }
}

TEST(MSample, ZetaTailBeyondTableIsReached) {
    // beta = 1.5 puts ~0.6% of the mass past the 65536-entry table.
    const auto m = MDistribution::zeta(1.5);
    auto rng = make_stream(9, 9);
    int beyond = 0;
    for (int i = 0; i < 200000; ++i) {
        if (m_sample(m, rng) > 65536) {
            ++beyond;
        }
    }
    double head = 0.0;
    for (std::uint64_t k = 1; k <= 65536; ++k) {
        head += m.pmf(k);
    }
    EXPECT_NEAR(beyond / 200000.0, 1.0 - head, 0.0015);
}
