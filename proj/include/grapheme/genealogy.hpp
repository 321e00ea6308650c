#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grapheme/state.hpp"

namespace grapheme {

inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

/// 1 - exp(-r), with the infinite marker mapped to 1.
inline double transformed_distance(double r) {
    if (r < 0 || std::isnan(r)) {
        throw std::domain_error("transformed_distance: negative distance");
    }
    if (std::isinf(r)) return 1.0;
    return -std::expm1(-r);
}

/// Ancestry of every lineage ever alive. A lineage continues after giving
/// birth; the split time of two lineages is therefore the birth time of
/// the earlier-born of the two children hanging off their lowest common
/// ancestor (or the birth of the single child when one lineage is an
/// ancestor of the other). Distances are twice the time back to that split.
///
/// Distinct roots have no common ancestor inside the forest. By default
/// they are treated as split at time 0 (distance 2t); a pasted initial
/// distance matrix over the initial roots is added on top of that, and
/// unrelated roots can alternatively be declared infinitely far apart.
class GenealogyForest {
public:
    struct Lineage {
        std::uint64_t id = 0;
        LineageSlot parent = kNoLineage;
        double birth_time = 0.0;
        std::uint32_t depth = 0;
        bool alive = true;
        std::int32_t root_key = -1;
    };

    GenealogyForest() = default;

    /// n alive roots born at `time`, occupying slots 0..n-1, with root keys
    /// 0..n-1 so a pasted initial distance matrix can refer to them.
    static GenealogyForest with_roots(std::size_t n, double time = 0.0) {
        GenealogyForest f;
        for (std::size_t i = 0; i < n; ++i) {
            f.add_root(time, static_cast<std::int32_t>(i));
        }
        return f;
    }

    /// Square matrix over root keys added to the 2t base distance of
    /// distinct roots. Must be symmetric with zero diagonal.
    void set_initial_distances(std::vector<std::vector<double>> matrix) {
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            if (matrix[i].size() != matrix.size()) throw std::invalid_argument("initial distances not square");
            if (matrix[i][i] != 0.0) throw std::invalid_argument("initial distances need a zero diagonal");
            for (std::size_t j = 0; j < i; ++j) {
                if (matrix[i][j] != matrix[j][i] || matrix[i][j] < 0) {
                    throw std::invalid_argument("initial distances must be symmetric and nonnegative");
                }
            }
        }
        initial_ = std::move(matrix);
    }

    void set_unrelated_roots_infinite(bool v) { unrelated_infinite_ = v; }
    bool unrelated_roots_infinite() const { return unrelated_infinite_; }

    LineageSlot add_root(double time, std::int32_t root_key = -1) {
        Lineage l;
        l.id = next_id_++;
        l.birth_time = time;
        l.root_key = root_key;
        nodes_.push_back(l);
        ++alive_;
        return static_cast<LineageSlot>(nodes_.size() - 1);
    }

    LineageSlot add_child(LineageSlot parent, double time) {
        check(parent);
        if (time < nodes_[parent].birth_time) {
            throw std::invalid_argument("child born before its parent");
        }
        Lineage l;
        l.id = next_id_++;
        l.parent = parent;
        l.birth_time = time;
        l.depth = nodes_[parent].depth + 1;
        nodes_.push_back(l);
        ++alive_;
        return static_cast<LineageSlot>(nodes_.size() - 1);
    }

    void kill(LineageSlot s) {
        check(s);
        if (nodes_[s].alive) {
            nodes_[s].alive = false;
            --alive_;
        }
    }

    /// Time of the most recent common ancestor, or nullopt-like NaN when
    /// the two lineages sit in different trees.
    double split_time(LineageSlot i, LineageSlot j) const {
        check(i);
        check(j);
        if (i == j) return std::numeric_limits<double>::infinity();
        LineageSlot a = i, b = j;
        double below_a = std::numeric_limits<double>::infinity();
        double below_b = below_a;
        while (nodes_[a].depth > nodes_[b].depth) {
            below_a = nodes_[a].birth_time;
            a = nodes_[a].parent;
        }
        while (nodes_[b].depth > nodes_[a].depth) {
            below_b = nodes_[b].birth_time;
            b = nodes_[b].parent;
        }
        while (a != b) {
            if (nodes_[a].parent == kNoLineage) {
                return std::numeric_limits<double>::quiet_NaN();
            }
            below_a = nodes_[a].birth_time;
            below_b = nodes_[b].birth_time;
            a = nodes_[a].parent;
            b = nodes_[b].parent;
        }
        return std::min(below_a, below_b);
    }

    /// Genealogical distance at time t: 2 (t - split time) or, across
    /// trees, the root convention described on the class.
    double distance(LineageSlot i, LineageSlot j, double t) const {
        if (i == j) {
            check(i);
            return 0.0;
        }
        const double split = split_time(i, j);
        if (!std::isnan(split)) {
            return 2.0 * (t - split);
        }
        const auto ka = nodes_[root_of(i)].root_key;
        const auto kb = nodes_[root_of(j)].root_key;
        const bool pasted = ka >= 0 && kb >= 0 && static_cast<std::size_t>(ka) < initial_.size() &&
                            static_cast<std::size_t>(kb) < initial_.size();
        if (pasted) {
            return 2.0 * t + initial_[ka][kb];
        }
        if (unrelated_infinite_) return kInfiniteDistance;
        return 2.0 * t;
    }

    std::vector<std::vector<double>> distance_matrix(std::span<const LineageSlot> slots, double t) const {
        const std::size_t m = slots.size();
        std::vector<std::vector<double>> r(m, std::vector<double>(m, 0.0));
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a + 1; b < m; ++b) {
                r[a][b] = r[b][a] = distance(slots[a], slots[b], t);
            }
        }
        return r;
    }

    LineageSlot root_of(LineageSlot s) const {
        check(s);
        while (nodes_[s].parent != kNoLineage) s = nodes_[s].parent;
        return s;
    }

    /// Mark-and-sweep: drops every lineage without a living descendant.
    /// With `compress` set, dead lineages with exactly one retained child
    /// are spliced out; the child inherits the spliced node's birth time
    /// (and root key), which leaves every distance between retained
    /// lineages unchanged. Returns old slot -> new slot (kNoLineage when
    /// removed); slot order is preserved.
    std::vector<LineageSlot> prune(bool compress = true) {
        const std::size_t size = nodes_.size();
        std::vector<char> marked(size, 0);
        for (std::size_t s = 0; s < size; ++s) {
            if (!nodes_[s].alive) continue;
            LineageSlot v = static_cast<LineageSlot>(s);
            while (v != kNoLineage && !marked[v]) {
                marked[v] = 1;
                v = nodes_[v].parent;
            }
        }
        std::vector<std::uint32_t> kept_children(size, 0);
        for (std::size_t s = 0; s < size; ++s) {
            if (marked[s] && nodes_[s].parent != kNoLineage) ++kept_children[nodes_[s].parent];
        }

        std::vector<LineageSlot> remap(size, kNoLineage);
        std::vector<Lineage> out;
        out.reserve(size);
        // Parent slots are always smaller than child slots, so a single
        // forward pass sees every parent's fate before its children.
        std::vector<char> spliced(size, 0);
        std::vector<LineageSlot> new_parent(size, kNoLineage);
        std::vector<double> birth(size, 0.0);
        std::vector<std::int32_t> key(size, -1);
        for (std::size_t s = 0; s < size; ++s) {
            if (!marked[s]) continue;
            const Lineage& l = nodes_[s];
            const LineageSlot p = l.parent;
            if (p != kNoLineage && spliced[p]) {
                new_parent[s] = new_parent[p];
                birth[s] = birth[p];
                key[s] = key[p];
            } else {
                new_parent[s] = p == kNoLineage ? kNoLineage : remap[p];
                birth[s] = l.birth_time;
                key[s] = l.root_key;
            }
            if (compress && !l.alive && kept_children[s] == 1) {
                spliced[s] = 1;
                continue;
            }
            Lineage copy = l;
            copy.parent = new_parent[s];
            copy.birth_time = birth[s];
            copy.root_key = copy.parent == kNoLineage ? key[s] : -1;
            copy.depth = copy.parent == kNoLineage ? 0 : out[copy.parent].depth + 1;
            remap[s] = static_cast<LineageSlot>(out.size());
            out.push_back(copy);
        }
        nodes_ = std::move(out);
        return remap;
    }

    /// One line per lineage: "id parent_id birth_time", parent -1 for roots.
    void export_parent_array(std::ostream& os) const {
        os.precision(17);
        for (const auto& l : nodes_) {
            os << l.id << ' ';
            if (l.parent == kNoLineage) {
                os << -1;
            } else {
                os << nodes_[l.parent].id;
            }
            os << ' ' << l.birth_time << '\n';
        }
    }

    const Lineage& lineage(LineageSlot s) const {
        check(s);
        return nodes_[s];
    }
    std::size_t size() const { return nodes_.size(); }
    std::size_t alive_count() const { return alive_; }

    /// Structural checks: parents precede children, births are ordered.
    std::vector<std::string> validate() const {
        std::vector<std::string> out;
        std::size_t alive = 0;
        for (std::size_t s = 0; s < nodes_.size(); ++s) {
            const auto& l = nodes_[s];
            if (l.alive) ++alive;
            if (l.parent == kNoLineage) {
                if (l.depth != 0) out.push_back("root with nonzero depth");
                continue;
            }
            if (l.parent >= s) out.push_back("parent slot not before child (cycle risk)");
            else if (nodes_[l.parent].birth_time > l.birth_time) out.push_back("child born before parent");
            else if (nodes_[l.parent].depth + 1 != l.depth) out.push_back("depth mismatch");
        }
        if (alive != alive_) out.push_back("alive counter out of sync");
        return out;
    }

private:
    void check(LineageSlot s) const {
        if (s >= nodes_.size()) {
            throw std::out_of_range("unknown lineage " + std::to_string(s));
        }
    }

    std::vector<Lineage> nodes_;
    std::vector<std::vector<double>> initial_;
    bool unrelated_infinite_ = false;
    std::uint64_t next_id_ = 0;
    std::size_t alive_ = 0;
};

}  // namespace grapheme
