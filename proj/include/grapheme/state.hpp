#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace grapheme {

using VertexId = std::uint64_t;
using ComponentId = std::uint64_t;
using LineageSlot = std::uint32_t;

inline constexpr LineageSlot kNoLineage = static_cast<LineageSlot>(-1);

/// Vertex mark: a never-reused fresh label (atomless sources) or an index
/// into a finite table of atoms.
struct TypeLabel {
    enum class Kind : std::uint8_t { Fresh, Atom };

    Kind kind = Kind::Fresh;
    std::uint64_t value = 0;

    static TypeLabel fresh(std::uint64_t v) { return {Kind::Fresh, v}; }
    static TypeLabel atom(std::uint64_t v) { return {Kind::Atom, v}; }

    bool is_atom() const { return kind == Kind::Atom; }

    friend bool operator==(const TypeLabel&, const TypeLabel&) = default;
    friend auto operator<=>(const TypeLabel&, const TypeLabel&) = default;

    std::string to_string() const { return (is_atom() ? "atom:" : "fresh:") + std::to_string(value); }

    static TypeLabel parse(const std::string& text) {
        const auto colon = text.find(':');
        if (colon == std::string::npos) {
            throw std::invalid_argument("type label without kind prefix: " + text);
        }
        const auto kind = text.substr(0, colon);
        const auto value = std::stoull(text.substr(colon + 1));
        if (kind == "atom") return atom(value);
        if (kind == "fresh") return fresh(value);
        throw std::invalid_argument("unknown type label kind: " + kind);
    }
};

struct TypeLabelHash {
    std::size_t operator()(const TypeLabel& t) const noexcept {
        return std::hash<std::uint64_t>{}(t.value * 2 + (t.is_atom() ? 1 : 0));
    }
};

/// Unordered vertex pair stored with the smaller id first.
struct VertexPair {
    VertexId a = 0;
    VertexId b = 0;

    static VertexPair of(VertexId x, VertexId y) { return x < y ? VertexPair{x, y} : VertexPair{y, x}; }

    friend bool operator==(const VertexPair&, const VertexPair&) = default;
    friend auto operator<=>(const VertexPair&, const VertexPair&) = default;
};

struct VertexPairHash {
    std::size_t operator()(const VertexPair& p) const noexcept {
        std::uint64_t h = p.a * 0x9E3779B97F4A7C15ULL;
        h ^= p.b + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
        return std::hash<std::uint64_t>{}(h);
    }
};

/// Edge set with O(1) insert, erase, membership and uniform pick.
class EdgeSet {
public:
    bool contains(VertexId x, VertexId y) const { return index_.count(VertexPair::of(x, y)) != 0; }

    bool insert(VertexId x, VertexId y) {
        if (x == y) {
            throw std::invalid_argument("self-loop");
        }
        const auto p = VertexPair::of(x, y);
        if (!index_.emplace(p, edges_.size()).second) {
            return false;
        }
        edges_.push_back(p);
        adjacency_[p.a].insert(p.b);
        adjacency_[p.b].insert(p.a);
        return true;
    }

    bool erase(VertexId x, VertexId y) {
        const auto p = VertexPair::of(x, y);
        auto it = index_.find(p);
        if (it == index_.end()) {
            return false;
        }
        const std::size_t pos = it->second;
        index_.erase(it);
        if (pos + 1 != edges_.size()) {
            edges_[pos] = edges_.back();
            index_[edges_[pos]] = pos;
        }
        edges_.pop_back();
        detach(p.a, p.b);
        detach(p.b, p.a);
        return true;
    }

    /// Removes every edge incident to v; returns how many were removed.
    std::size_t erase_incident(VertexId v) {
        auto it = adjacency_.find(v);
        if (it == adjacency_.end()) {
            return 0;
        }
        std::vector<VertexId> neighbours(it->second.begin(), it->second.end());
        for (VertexId u : neighbours) {
            erase(v, u);
        }
        return neighbours.size();
    }

    std::vector<VertexId> neighbours(VertexId v) const {
        auto it = adjacency_.find(v);
        if (it == adjacency_.end()) return {};
        std::vector<VertexId> out(it->second.begin(), it->second.end());
        std::sort(out.begin(), out.end());
        return out;
    }

    std::size_t size() const { return edges_.size(); }
    bool empty() const { return edges_.empty(); }
    const VertexPair& at(std::size_t i) const { return edges_[i]; }

    std::vector<VertexPair> sorted() const {
        auto out = edges_;
        std::sort(out.begin(), out.end());
        return out;
    }

    void clear() {
        edges_.clear();
        index_.clear();
        adjacency_.clear();
    }

private:
    void detach(VertexId from, VertexId to) {
        auto it = adjacency_.find(from);
        it->second.erase(to);
        if (it->second.empty()) {
            adjacency_.erase(it);
        }
    }

    std::vector<VertexPair> edges_;
    std::unordered_map<VertexPair, std::size_t, VertexPairHash> index_;
    std::unordered_map<VertexId, std::unordered_set<VertexId>> adjacency_;
};

/// Finite grapheme at one time point. Vertices live in dense slots; the
/// slot-aligned vectors all have num_vertices() entries. Components are
/// stored as a partition (component_of); in the pure regime the connection
/// function is "same component", in the edge-flip regime it is "same
/// component and edge present".
struct GraphemeState {
    double time = 0.0;
    std::vector<VertexId> vertex_ids;
    std::vector<TypeLabel> type_label;
    std::vector<ComponentId> component_of;
    std::vector<double> weights;
    std::vector<LineageSlot> lineage_of;
    std::map<ComponentId, double> founder_time;
    bool flip_regime = false;
    bool marked = true;
    EdgeSet edges_present;

    // Counters so identifiers are never reused within a run.
    VertexId next_vertex_id = 0;
    ComponentId next_component_id = 0;
    std::uint64_t next_fresh_label = 0;

    std::size_t num_vertices() const { return vertex_ids.size(); }

    bool connected(std::size_t i, std::size_t j) const {
        if (i == j) return true;
        if (component_of[i] != component_of[j]) return false;
        return !flip_regime || edges_present.contains(vertex_ids[i], vertex_ids[j]);
    }

    std::map<ComponentId, double> component_masses() const {
        std::map<ComponentId, double> mass;
        for (std::size_t i = 0; i < num_vertices(); ++i) {
            mass[component_of[i]] += weights[i];
        }
        return mass;
    }

    std::map<ComponentId, std::size_t> component_sizes() const {
        std::map<ComponentId, std::size_t> size;
        for (ComponentId c : component_of) {
            ++size[c];
        }
        return size;
    }

    std::size_t num_components() const { return founder_time.size(); }

    std::size_t slot_of(VertexId id) const {
        auto it = std::find(vertex_ids.begin(), vertex_ids.end(), id);
        if (it == vertex_ids.end()) {
            throw std::out_of_range("unknown vertex id " + std::to_string(id));
        }
        return static_cast<std::size_t>(it - vertex_ids.begin());
    }

    void set_uniform_weights() {
        const double w = vertex_ids.empty() ? 0.0 : 1.0 / static_cast<double>(vertex_ids.size());
        weights.assign(vertex_ids.size(), w);
    }
};

/// n singleton components, each with its own fresh type, uniform weights.
/// Lineage slots are 0..n-1 (matching GenealogyForest::with_roots(n)).
inline GraphemeState singletons(std::size_t n, double time = 0.0) {
    GraphemeState s;
    s.time = time;
    for (std::size_t i = 0; i < n; ++i) {
        s.vertex_ids.push_back(s.next_vertex_id++);
        s.type_label.push_back(TypeLabel::fresh(s.next_fresh_label++));
        const ComponentId c = s.next_component_id++;
        s.component_of.push_back(c);
        s.founder_time[c] = time;
        s.lineage_of.push_back(static_cast<LineageSlot>(i));
    }
    s.set_uniform_weights();
    return s;
}

/// State whose components have the given sizes (vertices numbered in
/// block order), uniform weights, one fresh type per block.
inline GraphemeState from_partition(const std::vector<std::size_t>& block_sizes, double time = 0.0) {
    GraphemeState s;
    s.time = time;
    LineageSlot lineage = 0;
    for (std::size_t size : block_sizes) {
        const ComponentId c = s.next_component_id++;
        const TypeLabel type = TypeLabel::fresh(s.next_fresh_label++);
        s.founder_time[c] = time;
        for (std::size_t k = 0; k < size; ++k) {
            s.vertex_ids.push_back(s.next_vertex_id++);
            s.type_label.push_back(type);
            s.component_of.push_back(c);
            s.lineage_of.push_back(lineage++);
        }
    }
    s.set_uniform_weights();
    return s;
}

/// Adds every within-component edge and switches the state to the
/// edge-flip regime.
inline void complete_within_components(GraphemeState& s) {
    s.flip_regime = true;
    for (std::size_t i = 0; i < s.num_vertices(); ++i) {
        for (std::size_t j = i + 1; j < s.num_vertices(); ++j) {
            if (s.component_of[i] == s.component_of[j]) {
                s.edges_present.insert(s.vertex_ids[i], s.vertex_ids[j]);
            }
        }
    }
}

struct Violation {
    std::string invariant;
    std::vector<VertexId> vertices;
    std::string detail;
};

inline std::vector<Violation> validate(const GraphemeState& s) {
    std::vector<Violation> out;
    const std::size_t n = s.num_vertices();
    auto sized = [n](std::size_t k) { return k == n; };
    if (!sized(s.type_label.size()) || !sized(s.component_of.size()) || !sized(s.weights.size()) ||
        !sized(s.lineage_of.size())) {
        out.push_back({"shape", {}, "slot-aligned vectors differ in length"});
        return out;
    }
    if (s.time < 0 || !std::isfinite(s.time)) {
        out.push_back({"time", {}, "time must be finite and nonnegative"});
    }

    std::unordered_set<VertexId> seen;
    for (VertexId id : s.vertex_ids) {
        if (!seen.insert(id).second) out.push_back({"unique-ids", {id}, "duplicate vertex id"});
    }

    if (n > 0) {
        double total = 0.0;
        std::vector<VertexId> bad;
        for (std::size_t i = 0; i < n; ++i) {
            total += s.weights[i];
            if (!(s.weights[i] > 0.0)) bad.push_back(s.vertex_ids[i]);
        }
        if (!bad.empty()) out.push_back({"weights-positive", bad, "nonpositive sampling weight"});
        if (std::abs(total - 1.0) > 1e-12) {
            out.push_back({"weights-sum", {}, "weights sum to " + std::to_string(total)});
        }
    }

    // Partition: every vertex's component must be registered, and every
    // registered component must be nonempty.
    std::map<ComponentId, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) members[s.component_of[i]].push_back(i);
    for (const auto& [c, slots] : members) {
        if (!s.founder_time.count(c)) {
            std::vector<VertexId> ids;
            for (auto i : slots) ids.push_back(s.vertex_ids[i]);
            out.push_back({"partition", ids, "component " + std::to_string(c) + " has no founder record"});
        }
    }
    for (const auto& [c, t] : s.founder_time) {
        if (!members.count(c)) {
            out.push_back({"partition", {}, "empty component " + std::to_string(c) + " still registered"});
        }
        if (t > s.time + 1e-12 || t < 0) {
            out.push_back({"founder-time", {}, "component " + std::to_string(c) + " founded outside [0, time]"});
        }
    }

    if (s.marked) {
        for (const auto& [c, slots] : members) {
            const TypeLabel& first = s.type_label[slots.front()];
            std::vector<VertexId> mixed;
            for (auto i : slots) {
                if (!(s.type_label[i] == first)) mixed.push_back(s.vertex_ids[i]);
            }
            if (!mixed.empty()) {
                mixed.insert(mixed.begin(), s.vertex_ids[slots.front()]);
                out.push_back({"type-coherence", mixed, "component " + std::to_string(c) + " mixes types"});
            }
        }
    }

    if (!s.flip_regime && !s.edges_present.empty()) {
        out.push_back({"edge-regime", {}, "explicit edges outside the flip regime"});
    }
    if (s.flip_regime) {
        std::unordered_map<VertexId, std::size_t> slot;
        for (std::size_t i = 0; i < n; ++i) slot[s.vertex_ids[i]] = i;
        for (std::size_t e = 0; e < s.edges_present.size(); ++e) {
            const auto& p = s.edges_present.at(e);
            auto ia = slot.find(p.a);
            auto ib = slot.find(p.b);
            if (ia == slot.end() || ib == slot.end()) {
                out.push_back({"edge-endpoints", {p.a, p.b}, "edge to a vertex not in the state"});
            } else if (s.component_of[ia->second] != s.component_of[ib->second]) {
                out.push_back({"edge-within-component", {p.a, p.b}, "edge crosses components"});
            }
        }
    }
    return out;
}

/// Sub-graph pattern on at most eight vertices.
struct SubgraphPattern {
    int vertex_count = 0;
    std::vector<std::pair<int, int>> edges;

    SubgraphPattern() = default;
    SubgraphPattern(int m, std::vector<std::pair<int, int>> e) : vertex_count(m), edges(std::move(e)) {
        if (m < 1 || m > 8) throw std::invalid_argument("pattern size must be in [1, 8]");
        for (auto [i, j] : edges) {
            if (i == j) throw std::invalid_argument("pattern self-loop");
            if (i < 0 || j < 0 || i >= m || j >= m) throw std::invalid_argument("pattern index out of range");
        }
    }

    static SubgraphPattern edge() { return {2, {{0, 1}}}; }
    static SubgraphPattern path2() { return {3, {{0, 1}, {1, 2}}}; }
    static SubgraphPattern triangle() { return {3, {{0, 1}, {1, 2}, {0, 2}}}; }

    /// Connected components as (vertex count, edge count) pairs.
    std::vector<std::pair<int, int>> component_shapes() const {
        std::vector<int> root(vertex_count);
        std::iota(root.begin(), root.end(), 0);
        std::function<int(int)> find = [&](int x) { return root[x] == x ? x : root[x] = find(root[x]); };
        for (auto [i, j] : edges) root[find(i)] = find(j);
        std::map<int, std::pair<int, int>> shape;
        for (int v = 0; v < vertex_count; ++v) ++shape[find(v)].first;
        for (auto [i, j] : edges) ++shape[find(i)].second;
        std::vector<std::pair<int, int>> out;
        for (auto& [r, s] : shape) out.push_back(s);
        return out;
    }
};

/// Block step function on [0,1]^2: blocks laid out in size order from 0,
/// intensity inside a block, zero across blocks and on the dust remainder.
struct StepGraphon {
    std::vector<double> block_weights;
    double intra_block_intensity = 1.0;
    double inter_block_intensity = 0.0;

    double dust() const {
        return std::max(0.0, 1.0 - std::accumulate(block_weights.begin(), block_weights.end(), 0.0));
    }

    bool well_formed() const {
        if (intra_block_intensity < 0 || intra_block_intensity > 1) return false;
        if (inter_block_intensity < 0 || inter_block_intensity > 1) return false;
        double total = 0;
        for (std::size_t i = 0; i < block_weights.size(); ++i) {
            if (!(block_weights[i] > 0)) return false;
            if (i > 0 && block_weights[i] > block_weights[i - 1]) return false;
            total += block_weights[i];
        }
        return total <= 1.0 + 1e-12;
    }
};

/// Size-ordered component masses plus the within-component edge intensity.
inline StepGraphon empirical_graphon(const GraphemeState& s) {
    StepGraphon g;
    for (const auto& [c, m] : s.component_masses()) g.block_weights.push_back(m);
    std::sort(g.block_weights.begin(), g.block_weights.end(), std::greater<>());
    g.intra_block_intensity = 1.0;
    if (s.flip_regime) {
        std::size_t pairs = 0;
        for (const auto& [c, k] : s.component_sizes()) pairs += k * (k - 1) / 2;
        if (pairs > 0) {
            g.intra_block_intensity = static_cast<double>(s.edges_present.size()) / static_cast<double>(pairs);
        }
    }
    return g;
}

}  // namespace grapheme
