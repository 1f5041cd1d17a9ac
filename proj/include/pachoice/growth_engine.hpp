#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pachoice/degree_class_index.hpp"
#include "pachoice/model_config.hpp"
#include "pachoice/rng.hpp"

namespace pachoice {

/// Draws d candidates i.i.d. with Pr(v) = deg(v)^alpha / D and returns one of
/// the candidates of maximal degree, ties broken uniformly over the tied
/// candidates. O(d log M).
template <class Rng>
vertex_id sample_target_naive(const DegreeClassIndex& index, std::uint64_t d, Rng& rng) {
    if (d < 1) {
        throw std::invalid_argument("sample size must be >= 1");
    }
    const double total = index.total_weight();
    degree_t best = 0;
    vertex_id chosen = 0;
    std::uint64_t ties = 0;
    for (std::uint64_t j = 0; j < d; ++j) {
        const degree_t k = index.class_at_weight(uniform01(rng) * total);
        const vertex_id v = index.uniform_vertex_in_class(k, rng);
        if (k > best) {
            best = k;
            chosen = v;
            ties = 1;
        } else if (k == best) {
            ++ties;
            if (uniform_index(rng, ties) == 0) {
                chosen = v;
            }
        }
    }
    return chosen;
}

/// Class of the maximum of d weight-proportional draws, by inverting
/// Pr(class <= k) = (D(k)/D)^d at the uniform variate u in (0, 1).
inline degree_t fast_class_from_uniform(const DegreeClassIndex& index, double d, double u) {
    const double w = index.total_weight() * std::pow(u, 1.0 / d);
    return index.class_at_weight(w);
}

/// Same law as sample_target_naive in O(log M): the maximal class is drawn
/// through its closed-form CDF and the vertex uniformly inside it. Accepts a
/// real sample size d >= 1.
template <class Rng>
vertex_id sample_target_fast(const DegreeClassIndex& index, double d, Rng& rng) {
    if (!(d >= 1.0)) {
        throw std::invalid_argument("sample size must be >= 1");
    }
    const degree_t k = fast_class_from_uniform(index, d, uniform_open01(rng));
    return index.uniform_vertex_in_class(k, rng);
}

struct StepOutcome {
    std::uint64_t m_drawn = 0;
    /// (target, its degree when selected); repeats are allowed.
    std::vector<std::pair<vertex_id, degree_t>> targets;
    degree_t max_degree = 0;
    std::uint64_t count_at_max = 0;
};

/// One realization of the growing graph G_1, G_2, ...
///
/// G_1 is two vertices joined by m_1 edges. Step n -> n+1 draws m_{n+1},
/// selects that many targets against the frozen G_n (sample size d_{n+1}),
/// then applies the degree increments and inserts v_{n+1} with degree
/// m_{n+1}.
class GrowthEngine {
public:
    explicit GrowthEngine(ModelParams params, std::uint64_t stream = 0)
        : params_(std::move(params)), rng_(make_stream(params_.seed, stream)), index_(params_.alpha) {
        if (const auto report = validate(params_); !report.ok()) {
            throw std::invalid_argument("invalid model parameters: " + report.violations.front());
        }
        const std::uint64_t m1 = params_.m_dist.sample(rng_);
        index_.add_vertex(0, m1);
        index_.add_vertex(1, m1);
        step_ = 1;
        edges_ = m1;
        outcome_.max_degree = index_.max_degree();
        outcome_.count_at_max = index_.count_at_max();
    }

    const ModelParams& params() const noexcept { return params_; }
    const DegreeClassIndex& index() const noexcept { return index_; }
    std::uint64_t step_count() const noexcept { return step_; }
    std::uint64_t vertex_count() const noexcept { return index_.vertex_count(); }
    std::uint64_t edge_count() const noexcept { return edges_; }
    const StepOutcome& last_outcome() const noexcept { return outcome_; }

    const StepOutcome& step() {
        const std::uint64_t m = params_.m_dist.sample(rng_);
        const double d = sample_size(params_, step_ + 1);
        outcome_.m_drawn = m;
        outcome_.targets.clear();
        for (std::uint64_t i = 0; i < m; ++i) {
            const vertex_id v = params_.sampler_mode == SamplerMode::FastClass
                                    ? sample_target_fast(index_, d, rng_)
                                    : sample_target_naive(index_, static_cast<std::uint64_t>(d), rng_);
            outcome_.targets.emplace_back(v, index_.degree(v));
        }
        for (const auto& target : outcome_.targets) {
            index_.increment_degree(target.first);
        }
        ++step_;
        index_.add_vertex(step_, m);
        edges_ += m;
        outcome_.max_degree = index_.max_degree();
        outcome_.count_at_max = index_.count_at_max();
        return outcome_;
    }

private:
    ModelParams params_;
    rng_engine rng_;
    DegreeClassIndex index_;
    std::uint64_t step_ = 0;
    std::uint64_t edges_ = 0;
    StepOutcome outcome_;
};

/// Step indices 1 = n_0 < n_1 < ... <= horizon with n_i ~ ratio^i; the
/// horizon is always included.
inline std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t horizon, double ratio = 1.1) {
    if (!(ratio > 1.0)) {
        throw std::invalid_argument("checkpoint ratio must exceed 1");
    }
    std::vector<std::uint64_t> out{1};
    for (int i = 1;; ++i) {
        const double x = std::round(std::pow(ratio, i));
        if (x >= static_cast<double>(horizon)) {
            break;
        }
        const auto n = static_cast<std::uint64_t>(x);
        if (n > out.back()) {
            out.push_back(n);
        }
    }
    if (out.back() != horizon) {
        out.push_back(horizon);
    }
    return out;
}

struct TraceRow {
    std::uint64_t n = 0;
    degree_t max_degree = 0;
    std::uint64_t count_at_max = 0;
    double total_weight = 0.0;
    std::uint64_t edges = 0;
    /// N_k(n) for each tracked degree, in RunTrace::tracked_degrees order.
    std::vector<std::uint64_t> class_counts;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct RunTrace {
    ModelParams params;
    std::uint64_t stream = 0;
    std::vector<degree_t> tracked_degrees;
    std::vector<TraceRow> rows;
    bool partial = false;
    std::string error;
};

struct RunOptions {
    std::vector<degree_t> tracked_degrees{1, 2, 3};
    double checkpoint_ratio = 1.1;
    std::uint64_t stream = 0;
};

inline TraceRow snapshot_row(const GrowthEngine& engine, const std::vector<degree_t>& tracked) {
    TraceRow row;
    const auto& index = engine.index();
    row.n = engine.step_count();
    row.max_degree = index.max_degree();
    row.count_at_max = index.count_at_max();
    row.total_weight = index.total_weight();
    row.edges = engine.edge_count();
    row.class_counts.reserve(tracked.size());
    for (const degree_t k : tracked) {
        row.class_counts.push_back(index.count(k));
    }
    return row;
}

/// Grows one graph to params.horizon, recording geometric checkpoints.
/// Allocation failure ends the run early with `partial` set.
inline RunTrace run(const ModelParams& params, const RunOptions& options = {}) {
    RunTrace trace;
    trace.params = params;
    trace.stream = options.stream;
    trace.tracked_degrees = options.tracked_degrees;
    const auto checkpoints = geometric_checkpoints(params.horizon, options.checkpoint_ratio);
    trace.rows.reserve(checkpoints.size());
    try {
        GrowthEngine engine(params, options.stream);
        for (const std::uint64_t target : checkpoints) {
            while (engine.step_count() < target) {
                engine.step();
            }
            trace.rows.push_back(snapshot_row(engine, trace.tracked_degrees));
        }
    } catch (const std::bad_alloc&) {
        trace.partial = true;
        trace.error = "out of memory";
    }
    return trace;
}

} // namespace pachoice
