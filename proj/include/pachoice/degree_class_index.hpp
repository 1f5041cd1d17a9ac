#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pachoice/fenwick_tree.hpp"
#include "pachoice/rng.hpp"

namespace pachoice {

using vertex_id = std::uint64_t;
using degree_t = std::uint64_t;

/// Degree-class decomposition of a graph under the weight k -> k^alpha.
///
/// Keeps the class counts N(k), a Fenwick tree over degree values holding the
/// class weights N(k) k^alpha, the total weight D, the maximum degree M with
/// its multiplicity L, and for each class the list of member vertices. All
/// updates are O(log M); prefix queries and weight inversion are O(log M).
///
/// Vertex ids index dense arrays, so they should be small consecutive
/// integers. The index only knows degrees: adjacency is never stored.
class DegreeClassIndex {
public:
    /// Updates between exact rebuilds of the weight tree and D.
    static constexpr std::uint64_t rebuild_interval = std::uint64_t{1} << 20;

    explicit DegreeClassIndex(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument("alpha must lie in (0, 1)");
        }
        grow_to(16);
    }

    double alpha() const noexcept { return alpha_; }
    double total_weight() const noexcept { return total_weight_; }
    degree_t max_degree() const noexcept { return max_degree_; }
    std::uint64_t count_at_max() const noexcept { return count_at_max_; }
    std::uint64_t vertex_count() const noexcept { return vertex_count_; }
    /// Sum of all degrees (twice the edge count).
    std::uint64_t degree_sum() const noexcept { return degree_sum_; }

    std::uint64_t count(degree_t k) const noexcept { return k < counts_.size() ? counts_[k] : 0; }

    bool contains(vertex_id v) const noexcept { return v < vertex_degree_.size() && vertex_degree_[v] != 0; }

    degree_t degree(vertex_id v) const {
        if (!contains(v)) {
            throw std::out_of_range("unknown vertex " + std::to_string(v));
        }
        return vertex_degree_[v];
    }

    /// k^alpha, memoized for every degree up to the current capacity.
    double weight_of_degree(degree_t k) {
        ensure_capacity(k);
        return pow_[k];
    }
    double weight_of_degree(degree_t k) const {
        return k < pow_.size() ? pow_[k] : std::pow(static_cast<double>(k), alpha_);
    }

    void add_vertex(vertex_id v, degree_t k) {
        if (k < 1) {
            throw std::invalid_argument("vertex degree must be >= 1");
        }
        if (contains(v)) {
            throw std::invalid_argument("duplicate vertex id " + std::to_string(v));
        }
        ensure_capacity(k);
        if (v >= vertex_degree_.size()) {
            const std::size_t n = std::max<std::size_t>(v + 1, vertex_degree_.size() * 2);
            vertex_degree_.resize(n, 0);
            vertex_slot_.resize(n, 0);
        }
        vertex_degree_[v] = k;
        vertex_slot_[v] = registry_[k].size();
        registry_[k].push_back(v);
        ++counts_[k];
        tree_.add(k, pow_[k]);
        total_weight_ += pow_[k];
        ++vertex_count_;
        degree_sum_ += k;
        if (k > max_degree_) {
            max_degree_ = k;
            count_at_max_ = 1;
        } else if (k == max_degree_) {
            ++count_at_max_;
        }
        note_update();
    }

    void increment_degree(vertex_id v) {
        if (!contains(v)) {
            throw std::out_of_range("unknown vertex " + std::to_string(v));
        }
        const degree_t k = vertex_degree_[v];
        ensure_capacity(k + 1);

        // Swap-remove from class k.
        auto& from = registry_[k];
        const std::uint64_t slot = vertex_slot_[v];
        const vertex_id last = from.back();
        from[slot] = last;
        vertex_slot_[last] = slot;
        from.pop_back();

        auto& to = registry_[k + 1];
        vertex_slot_[v] = to.size();
        to.push_back(v);
        vertex_degree_[v] = k + 1;

        --counts_[k];
        ++counts_[k + 1];
        tree_.add(k, -pow_[k]);
        tree_.add(k + 1, pow_[k + 1]);
        total_weight_ += pow_[k + 1] - pow_[k];
        ++degree_sum_;

        if (k == max_degree_) {
            max_degree_ = k + 1;
            count_at_max_ = 1;
        } else if (k + 1 == max_degree_) {
            ++count_at_max_;
        }
        note_update();
    }

    /// D(k) = sum over j <= k of N(j) j^alpha.
    double prefix_weight(degree_t k) const {
        if (k == 0) {
            return 0.0;
        }
        if (k >= max_degree_) {
            return total_weight_;
        }
        return tree_.prefix(k);
    }

    /// The occupied class k with D(k-1) <= w < D(k). Requires 0 <= w < D.
    degree_t find_class_by_weight(double w) const {
        if (!(w >= 0.0 && w < total_weight_)) {
            throw std::out_of_range("weight outside [0, D)");
        }
        return class_at_weight(w);
    }

    /// As find_class_by_weight, but clamps w >= D to the top class. Used by
    /// samplers where rounding can push w onto D itself.
    degree_t class_at_weight(double w) const {
        if (vertex_count_ == 0) {
            throw std::out_of_range("empty index");
        }
        degree_t k = static_cast<degree_t>(tree_.upper_position(w)) + 1;
        if (k > max_degree_) {
            return max_degree_;
        }
        if (counts_[k] != 0) {
            return k;
        }
        // Rounding in the tree can land on an empty class next to a boundary.
        for (degree_t j = k + 1; j <= max_degree_; ++j) {
            if (counts_[j] != 0) {
                return j;
            }
        }
        return max_degree_;
    }

    template <class Rng>
    vertex_id uniform_vertex_in_class(degree_t k, Rng& rng) const {
        if (k >= registry_.size() || registry_[k].empty()) {
            throw std::out_of_range("degree class " + std::to_string(k) + " is empty");
        }
        const auto& members = registry_[k];
        return members[uniform_index(rng, members.size())];
    }

    const std::vector<vertex_id>& class_members(degree_t k) const {
        static const std::vector<vertex_id> empty;
        return k < registry_.size() ? registry_[k] : empty;
    }

    /// Occupied classes as (degree, count), ascending in degree.
    std::vector<std::pair<degree_t, std::uint64_t>> classes() const {
        std::vector<std::pair<degree_t, std::uint64_t>> out;
        for (degree_t k = 1; k <= max_degree_ && k < counts_.size(); ++k) {
            if (counts_[k] != 0) {
                out.emplace_back(k, counts_[k]);
            }
        }
        return out;
    }

    /// D recomputed from the class counts alone.
    double recompute_total_weight() const {
        long double s = 0.0L;
        for (degree_t k = 1; k <= max_degree_ && k < counts_.size(); ++k) {
            s += static_cast<long double>(counts_[k]) * std::pow(static_cast<long double>(k), alpha_);
        }
        return static_cast<double>(s);
    }

    /// Exact rebuild of the weight tree and D from the class counts.
    void rebuild() {
        std::vector<double> values(counts_.size(), 0.0);
        long double total = 0.0L;
        for (std::size_t k = 1; k < counts_.size(); ++k) {
            values[k] = static_cast<double>(counts_[k]) * pow_[k];
            total += static_cast<long double>(counts_[k]) * pow_[k];
        }
        tree_.assign(values);
        total_weight_ = static_cast<double>(total);
        updates_since_rebuild_ = 0;
    }

    /// Text snapshot: a header line, the exponent, then one `degree count`
    /// line per occupied class.
    void write_snapshot(std::ostream& os) const {
        os << "# degree-class snapshot v1\n";
        os.precision(17);
        os << "alpha " << alpha_ << "\n";
        for (const auto& [k, c] : classes()) {
            os << k << " " << c << "\n";
        }
    }

    /// Rebuilds an index from a snapshot. Vertex ids are reassigned
    /// consecutively in ascending degree order.
    static DegreeClassIndex read_snapshot(std::istream& is) {
        std::string line;
        double alpha = std::numeric_limits<double>::quiet_NaN();
        std::vector<std::pair<degree_t, std::uint64_t>> entries;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') {
                continue;
            }
            std::istringstream ls(line);
            if (line.rfind("alpha", 0) == 0) {
                std::string tag;
                if (!(ls >> tag >> alpha)) {
                    throw std::runtime_error("snapshot line " + std::to_string(line_no) + ": bad alpha");
                }
                continue;
            }
            degree_t k = 0;
            std::uint64_t c = 0;
            if (!(ls >> k >> c) || k < 1) {
                throw std::runtime_error("snapshot line " + std::to_string(line_no) + ": expected `degree count`");
            }
            entries.emplace_back(k, c);
        }
        if (std::isnan(alpha)) {
            throw std::runtime_error("snapshot has no alpha line");
        }
        std::sort(entries.begin(), entries.end());
        DegreeClassIndex index(alpha);
        vertex_id next = 0;
        for (const auto& [k, c] : entries) {
            for (std::uint64_t i = 0; i < c; ++i) {
                index.add_vertex(next++, k);
            }
        }
        return index;
    }

private:
    void ensure_capacity(degree_t k) {
        if (k < counts_.size()) {
            return;
        }
        grow_to(std::max<std::size_t>(k + 1, counts_.size() * 2));
    }

    void grow_to(std::size_t size) {
        const std::size_t old = pow_.size();
        counts_.resize(size, 0);
        registry_.resize(size);
        pow_.resize(size);
        for (std::size_t k = old; k < size; ++k) {
            pow_[k] = std::pow(static_cast<double>(k), alpha_);
        }
        rebuild();
    }

    void note_update() {
        if (++updates_since_rebuild_ >= rebuild_interval) {
            rebuild();
        }
    }

    double alpha_;
    std::vector<std::uint64_t> counts_;
    std::vector<double> pow_;
    FenwickTree<double> tree_;
    std::vector<std::vector<vertex_id>> registry_;
    std::vector<degree_t> vertex_degree_;
    std::vector<std::uint64_t> vertex_slot_;
    double total_weight_ = 0.0;
    degree_t max_degree_ = 0;
    std::uint64_t count_at_max_ = 0;
    std::uint64_t vertex_count_ = 0;
    std::uint64_t degree_sum_ = 0;
    std::uint64_t updates_since_rebuild_ = 0;
};

} // namespace pachoice
