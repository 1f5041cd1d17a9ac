#pragma once

#include <bit>
#include <cstddef>
#include <span>
#include <vector>

namespace pachoice {

/// Binary indexed tree over positions 1..size() (position 0 is unused and
/// always holds zero weight).
template <typename T>
class FenwickTree {
public:
    FenwickTree() = default;
    explicit FenwickTree(std::size_t size) : tree_(size + 1, T{}) {}

    std::size_t size() const noexcept { return tree_.empty() ? 0 : tree_.size() - 1; }

    void add(std::size_t pos, T delta) {
        for (; pos < tree_.size(); pos += pos & (~pos + 1)) {
            tree_[pos] += delta;
        }
    }

    /// Sum of positions 1..pos (clamped to size()).
    T prefix(std::size_t pos) const {
        if (pos >= tree_.size()) {
            pos = size();
        }
        T s{};
        for (; pos > 0; pos &= pos - 1) {
            s += tree_[pos];
        }
        return s;
    }

    /// Largest pos with prefix(pos) <= w, assuming non-negative entries.
    std::size_t upper_position(T w) const {
        std::size_t pos = 0;
        if (tree_.size() <= 1) {
            return 0;
        }
        for (std::size_t step = std::bit_floor(size()); step > 0; step >>= 1) {
            const std::size_t next = pos + step;
            if (next < tree_.size() && tree_[next] <= w) {
                pos = next;
                w -= tree_[next];
            }
        }
        return pos;
    }

    /// Rebuilds from point values; values[0] is ignored. O(n).
    void assign(std::span<const T> values) {
        tree_.assign(values.begin(), values.end());
        if (!tree_.empty()) {
            tree_[0] = T{};
        }
        for (std::size_t i = 1; i < tree_.size(); ++i) {
            const std::size_t parent = i + (i & (~i + 1));
            if (parent < tree_.size()) {
                tree_[parent] += tree_[i];
            }
        }
    }

private:
    std::vector<T> tree_;
};

} // namespace pachoice
