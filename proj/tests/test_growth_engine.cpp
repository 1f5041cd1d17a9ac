#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pachoice/growth_engine.hpp"
#include "pachoice/theory.hpp"

using namespace pachoice;

namespace {

ModelParams params_with(MDistribution m, SamplerMode mode = SamplerMode::FastClass) {
    ModelParams p;
    p.alpha = 0.5;
    p.gamma = 0.5;
    p.c_d = 1.0;
    p.m_dist = std::move(m);
    p.sampler_mode = mode;
    p.seed = 11;
    p.horizon = 1000;
    return p;
}

DegreeClassIndex index_of(const std::vector<degree_t>& degrees, double alpha) {
    DegreeClassIndex index(alpha);
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        index.add_vertex(i, degrees[i]);
    }
    return index;
}

} // namespace

TEST(GrowthEngine, InitialGraph) {
    GrowthEngine g(params_with(MDistribution::deterministic(2)));
    EXPECT_EQ(g.vertex_count(), 2u);
    EXPECT_EQ(g.index().degree(0), 2u);
    EXPECT_EQ(g.index().degree(1), 2u);
    EXPECT_NEAR(g.index().total_weight(), 2.828427, 1e-6);
    EXPECT_EQ(g.index().max_degree(), 2u);
    EXPECT_EQ(g.index().count_at_max(), 2u);
    EXPECT_EQ(g.step_count(), 1u);
    EXPECT_EQ(g.edge_count(), 2u);

    GrowthEngine one(params_with(MDistribution::deterministic(1)));
    EXPECT_EQ(one.index().total_weight(), 2.0);
    EXPECT_EQ(one.index().count_at_max(), 2u);
}

TEST(GrowthEngine, InitialDegreesShareOneDraw) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto p = params_with(MDistribution::finite_pmf({{1, 0.5}, {2, 0.3}, {3, 0.2}}));
        p.seed = seed;
        GrowthEngine g(p);
        EXPECT_EQ(g.index().degree(0), g.index().degree(1));
    }
}

TEST(GrowthEngine, RejectsInvalidParameters) {
    auto p = params_with(MDistribution::zeta(2.5));
    EXPECT_THROW(GrowthEngine{p}, std::invalid_argument);
}

TEST(Sampler, NaiveTwoClassFrequency) {
    const auto index = index_of({1, 2}, 0.5);
    auto rng = make_stream(100, 0);
    int high = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        high += sample_target_naive(index, 2, rng) == 1 ? 1 : 0;
    }
    EXPECT_NEAR(high / static_cast<double>(draws), 0.828427, 0.004);
}

TEST(Sampler, TiedMaximaSplitEvenly) {
    const auto index = index_of({2, 2}, 0.5);
    auto rng = make_stream(100, 1);
    int first = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        first += sample_target_naive(index, 3, rng) == 0 ? 1 : 0;
    }
    EXPECT_NEAR(first / static_cast<double>(draws), 0.5, 0.01);
}

TEST(Sampler, NaiveTieBreakAmongEqualCandidatesIsUniform) {
    // Three vertices of degree 3 and one of degree 1: whichever degree-3
    // vertices appear, each should be returned with probability 1/3 overall.
    const auto index = index_of({3, 3, 3, 1}, 0.5);
    auto rng = make_stream(100, 2);
    std::vector<double> hits(4, 0.0);
    for (int i = 0; i < 90000; ++i) {
        hits[sample_target_naive(index, 4, rng)] += 1.0;
    }
    for (int v = 0; v < 3; ++v) {
        EXPECT_NEAR(hits[v] / 90000.0, (1.0 - hits[3] / 90000.0) / 3.0, 0.01);
    }
}

TEST(Sampler, FastClassWorkedValues) {
    const auto index = index_of({1, 2}, 0.5);
    EXPECT_EQ(fast_class_from_uniform(index, 2.0, 0.9), 2u);
    EXPECT_EQ(fast_class_from_uniform(index, 2.0, 1e-12), 1u);
    // Class 1 exactly when D u^(1/2) < D(1) = 1.
    const double boundary = std::pow(1.0 / index.total_weight(), 2.0);
    EXPECT_EQ(fast_class_from_uniform(index, 2.0, boundary * 0.999), 1u);
    EXPECT_EQ(fast_class_from_uniform(index, 2.0, boundary * 1.001), 2u);
    EXPECT_EQ(fast_class_from_uniform(index, 2.0, std::nextafter(1.0, 0.0)), 2u);
}

TEST(Sampler, RejectsZeroSampleSize) {
    const auto index = index_of({1, 2}, 0.5);
    auto rng = make_stream(1, 0);
    EXPECT_THROW(sample_target_naive(index, 0, rng), std::invalid_argument);
    EXPECT_THROW(sample_target_fast(index, 0.5, rng), std::invalid_argument);
}

TEST(Sampler, ClosedFormMatchesEnumerationOnRandomStates) {
    auto rng = make_stream(31337, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const double alpha = 0.05 + 0.9 * uniform01(rng);
        const std::size_t n = 1 + uniform_index(rng, 5);
        std::vector<degree_t> degrees(n);
        for (auto& k : degrees) {
            k = 1 + uniform_index(rng, 3);
        }
        const int d = 1 + static_cast<int>(uniform_index(rng, 3));
        const auto index = index_of(degrees, alpha);
        const auto expected = oracle::enumerate_attachment_pmf(degrees, alpha, d);
        const auto got = attachment_class_pmf(index, d);
        ASSERT_EQ(got.size(), expected.size());
        for (const auto& [k, p] : got) {
            EXPECT_NEAR(p, expected.at(k), 1e-12) << "trial " << trial << " class " << k;
        }
    }
}

TEST(Sampler, FastAndNaiveAgreeOnFrozenState) {
    const auto index = index_of({1, 1, 1, 2, 2, 3, 5, 5, 8}, 0.4);
    auto rng = make_stream(8, 8);
    std::map<degree_t, double> naive;
    std::map<degree_t, double> fast;
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) {
        naive[index.degree(sample_target_naive(index, 3, rng))] += 1.0;
        fast[index.degree(sample_target_fast(index, 3.0, rng))] += 1.0;
    }
    for (const auto& [k, p] : attachment_class_pmf(index, 3.0)) {
        EXPECT_NEAR(naive[k] / draws, p, 0.005) << k;
        EXPECT_NEAR(fast[k] / draws, p, 0.005) << k;
    }
}

TEST(GrowthEngine, SingleStepWithUnitEdges) {
    for (auto mode : {SamplerMode::Naive, SamplerMode::FastClass}) {
        GrowthEngine g(params_with(MDistribution::deterministic(1), mode));
        const auto& out = g.step();
        EXPECT_EQ(g.vertex_count(), 3u);
        EXPECT_EQ(g.step_count(), 2u);
        EXPECT_EQ(out.m_drawn, 1u);
        ASSERT_EQ(out.targets.size(), 1u);
        EXPECT_LT(out.targets[0].first, 2u);
        EXPECT_EQ(out.targets[0].second, 1u);
        EXPECT_EQ(g.index().degree(out.targets[0].first), 2u);
        EXPECT_EQ(g.index().degree(2), 1u);
        EXPECT_EQ(g.index().max_degree(), 2u);
        EXPECT_EQ(g.index().count_at_max(), 1u);
    }
}

TEST(GrowthEngine, TargetsSelectedAgainstFrozenState) {
    // From two vertices of degree 2 with m = 2, both targets are chosen
    // before either degree changes, so both record degree 2 even when the
    // same vertex is drawn twice.
    int collisions = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto p = params_with(MDistribution::deterministic(2));
        p.seed = seed;
        GrowthEngine g(p);
        const auto& out = g.step();
        ASSERT_EQ(out.targets.size(), 2u);
        EXPECT_EQ(out.targets[0].second, 2u);
        EXPECT_EQ(out.targets[1].second, 2u);
        if (out.targets[0].first == out.targets[1].first) {
            ++collisions;
            EXPECT_EQ(g.index().degree(out.targets[0].first), 4u);
        }
        EXPECT_EQ(g.index().degree_sum(), 8u);
    }
    EXPECT_GT(collisions, 0);
}

TEST(GrowthEngine, HandshakeAndInvariantsEveryStep) {
    const std::vector<MDistribution> laws{MDistribution::deterministic(1), MDistribution::deterministic(3),
                                          MDistribution::finite_pmf({{1, 0.5}, {2, 0.3}, {3, 0.2}}),
                                          MDistribution::zeta(3.5)};
    for (const auto& m : laws) {
        for (auto mode : {SamplerMode::Naive, SamplerMode::FastClass}) {
            GrowthEngine g(params_with(m, mode));
            degree_t prev_max = g.index().max_degree();
            std::uint64_t m_sum = g.edge_count();
            while (g.step_count() < 1000) {
                const auto& out = g.step();
                m_sum += out.m_drawn;
                const auto& idx = g.index();
                ASSERT_EQ(idx.degree_sum(), 2 * g.edge_count());
                ASSERT_EQ(g.edge_count(), m_sum);
                ASSERT_EQ(idx.vertex_count(), g.step_count() + 1);
                ASSERT_GE(idx.max_degree(), prev_max);
                ASSERT_GE(idx.count_at_max(), 1u);
                ASSERT_LE(idx.max_degree(), m_sum);
                ASSERT_LE(idx.total_weight(), static_cast<double>(idx.degree_sum()) * (1.0 + 1e-12));
                ASSERT_EQ(out.max_degree, idx.max_degree());
                prev_max = idx.max_degree();
            }
        }
    }
}

TEST(GrowthEngine, SameSeedAndStreamReproduce) {
    auto p = params_with(MDistribution::finite_pmf({{1, 0.5}, {2, 0.5}}));
    p.horizon = 3000;
    const auto a = run(p, {});
    const auto b = run(p, {});
    EXPECT_EQ(a.rows, b.rows);
    RunOptions other;
    other.stream = 1;
    EXPECT_NE(run(p, other).rows, a.rows);
}

TEST(GrowthEngine, TotalWeightPerVertexWithUnitEdges) {
    auto p = params_with(MDistribution::deterministic(1));
    p.horizon = 10000;
    const auto t = run(p, {});
    const double ratio = t.rows.back().total_weight / static_cast<double>(t.rows.back().n);
    EXPECT_GE(ratio, 0.9);
    EXPECT_LE(ratio, 1.1);
}

TEST(GrowthEngine, RealExponentSampleSize) {
    auto p = params_with(MDistribution::deterministic(1));
    p.d_rounding = DRounding::RealExponent;
    p.c_d = 0.7;
    p.horizon = 2000;
    const auto t = run(p, {});
    EXPECT_FALSE(t.partial);
    EXPECT_EQ(t.rows.back().n, 2000u);
}

TEST(Checkpoints, GeometricGrid) {
    const auto c = geometric_checkpoints(1000, 1.1);
    EXPECT_EQ(c.front(), 1u);
    EXPECT_EQ(c.back(), 1000u);
    for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_GT(c[i], c[i - 1]);
    }
    const auto coarse = geometric_checkpoints(100, 10.0);
    EXPECT_EQ(coarse, (std::vector<std::uint64_t>{1, 10, 100}));
    EXPECT_THROW(geometric_checkpoints(10, 1.0), std::invalid_argument);
}

TEST(RunTrace, RowsFollowCheckpoints) {
    auto p = params_with(MDistribution::deterministic(1));
    p.horizon = 500;
    RunOptions opts;
    opts.tracked_degrees = {1, 2};
    const auto t = run(p, opts);
    const auto c = geometric_checkpoints(500, 1.1);
    ASSERT_EQ(t.rows.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(t.rows[i].n, c[i]);
        EXPECT_EQ(t.rows[i].class_counts.size(), 2u);
        EXPECT_EQ(t.rows[i].edges, t.rows[i].n);
    }
    EXPECT_EQ(t.rows.front().class_counts[0], 2u);
}
