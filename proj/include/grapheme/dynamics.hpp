#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "grapheme/errors.hpp"
#include "grapheme/genealogy.hpp"
#include "grapheme/rng.hpp"
#include "grapheme/state.hpp"

namespace grapheme {

/// Label source for immigrants: atomless (every draw is a new label) or a
/// finite table of atom weights.
struct ThetaSource {
    std::vector<double> atom_weights;  // empty = atomless

    bool atomless() const { return atom_weights.empty(); }

    std::uint64_t draw_atom(Rng& rng) const { return draw_index(atom_weights, rng); }

    static std::uint64_t draw_index(const std::vector<double>& w, Rng& rng) {
        double total = 0;
        for (double x : w) total += x;
        double u = rng.uniform() * total;
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            if (u < w[i]) return i;
            u -= w[i];
        }
        return w.size() - 1;
    }
};

/// Mutation kernel: atomless (fresh label each time) or a row-stochastic
/// table over atoms. Vertices carrying a fresh label draw uniformly among
/// the atoms under a table kernel.
struct MutationKernel {
    std::vector<std::vector<double>> transition;

    bool atomless() const { return transition.empty(); }
};

enum class SizeMode { Fixed, Variable };

struct DynamicsParams {
    double d = 0.0;        // resampling rate per unordered pair
    double b = 0.0;        // birth/death rate per vertex (b/2 each)
    double c = 0.0;        // emigration rate per vertex (and immigration)
    ThetaSource theta;
    double m_mut = 0.0;    // mutation rate per vertex
    MutationKernel kernel;
    double s_sel = 0.0;    // selection: rate s/n per unordered pair
    std::vector<double> fitness;  // per atom, in (0, 1]
    double fresh_fitness = 1.0;
    double a_plus = 0.0;   // per eligible non-edge
    double a_minus = 0.0;  // per present edge
    SizeMode size_mode = SizeMode::Fixed;
    /// Total immigration rate in variable-size mode is c * immigration_reference.
    double immigration_reference = 0.0;

    bool flip_regime() const { return a_plus > 0 || a_minus > 0; }

    double fitness_of(const TypeLabel& t) const {
        if (t.is_atom() && t.value < fitness.size()) return fitness[t.value];
        return fresh_fitness;
    }

    void validate() const {
        const std::array<double, 7> rates{d, b, c, m_mut, s_sel, a_plus, a_minus};
        bool any = false;
        for (double r : rates) {
            if (!(r >= 0) || !std::isfinite(r)) throw ConfigError("rates must be finite and nonnegative");
            any = any || r > 0;
        }
        if (!any) throw ConfigError("at least one rate must be positive");
        if (size_mode == SizeMode::Fixed && b > 0) {
            throw ConfigError("fixed size mode requires b = 0");
        }
        for (double w : theta.atom_weights) {
            if (!(w >= 0)) throw ConfigError("theta atom weights must be nonnegative");
        }
        if (!theta.atomless()) {
            double total = 0;
            for (double w : theta.atom_weights) total += w;
            if (!(total > 0)) throw ConfigError("theta atom weights must not all vanish");
        }
        for (double f : fitness) {
            if (!(f > 0 && f <= 1)) throw ConfigError("fitness values must lie in (0, 1]");
        }
        if (!(fresh_fitness > 0 && fresh_fitness <= 1)) throw ConfigError("fresh fitness must lie in (0, 1]");
        for (const auto& row : kernel.transition) {
            if (row.size() != kernel.transition.size()) throw ConfigError("mutation table must be square");
        }
    }
};

/// DW diffusion-limit scaling: per-vertex birth/death rate b * n0 and an
/// immigration reference of n0, so that N / n0 is the total-mass process.
inline DynamicsParams with_dw_scaling(DynamicsParams p, std::size_t n0) {
    p.b *= static_cast<double>(n0);
    p.size_mode = SizeMode::Variable;
    p.immigration_reference = static_cast<double>(n0);
    return p;
}

enum class EventKind : std::uint8_t {
    FVResample,
    Birth,
    Death,
    ImmigrationSwap,
    Immigration,
    Emigration,
    Mutation,
    SelectionResample,
    EdgeOn,
    EdgeOff,
};

inline constexpr std::size_t kNumEventKinds = 10;

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::FVResample: return "fv-resample";
        case EventKind::Birth: return "birth";
        case EventKind::Death: return "death";
        case EventKind::ImmigrationSwap: return "immigration-swap";
        case EventKind::Immigration: return "immigration";
        case EventKind::Emigration: return "emigration";
        case EventKind::Mutation: return "mutation";
        case EventKind::SelectionResample: return "selection-resample";
        case EventKind::EdgeOn: return "edge-on";
        case EventKind::EdgeOff: return "edge-off";
    }
    return "unknown";
}

inline EventKind event_kind_from_string(const std::string& s) {
    for (std::size_t k = 0; k < kNumEventKinds; ++k) {
        if (s == to_string(static_cast<EventKind>(k))) return static_cast<EventKind>(k);
    }
    throw std::invalid_argument("unknown event kind " + s);
}

/// One applied jump. For resampling events participants are
/// (winner, loser); immigration events list (removed, added) or (added).
struct Event {
    EventKind kind = EventKind::FVResample;
    std::vector<VertexId> participants;
    double time = 0.0;
};

/// Per-category rates in the fixed order used for event selection.
struct RateBreakdown {
    std::array<double, kNumEventKinds> by_kind{};

    double total() const {
        double t = 0;
        for (double r : by_kind) t += r;
        return t;
    }
    double operator[](EventKind k) const { return by_kind[static_cast<std::size_t>(k)]; }
};

inline RateBreakdown rate_breakdown(std::size_t n, std::size_t same_component_pairs, std::size_t edges,
                                    const DynamicsParams& p) {
    RateBreakdown r;
    const double nn = static_cast<double>(n);
    const double pairs = nn * (nn - 1) / 2;
    auto set = [&r](EventKind k, double v) { r.by_kind[static_cast<std::size_t>(k)] = v; };
    set(EventKind::FVResample, p.d * pairs);
    set(EventKind::Birth, 0.5 * p.b * nn);
    set(EventKind::Death, 0.5 * p.b * nn);
    if (p.size_mode == SizeMode::Fixed) {
        set(EventKind::ImmigrationSwap, p.c * nn);
    } else {
        set(EventKind::Emigration, p.c * nn);
        set(EventKind::Immigration, p.c * p.immigration_reference);
    }
    set(EventKind::Mutation, p.m_mut * nn);
    set(EventKind::SelectionResample, n > 0 ? p.s_sel / nn * pairs : 0.0);
    if (p.flip_regime()) {
        set(EventKind::EdgeOn, p.a_plus * static_cast<double>(same_component_pairs - edges));
        set(EventKind::EdgeOff, p.a_minus * static_cast<double>(edges));
    }
    return r;
}

inline std::size_t same_component_pairs(const GraphemeState& s) {
    std::size_t pairs = 0;
    for (const auto& [c, k] : s.component_sizes()) pairs += k * (k - 1) / 2;
    return pairs;
}

/// Sum of all event rates in `state` under `params`.
inline double total_rate(const GraphemeState& state, const DynamicsParams& params) {
    return rate_breakdown(state.num_vertices(), same_component_pairs(state), state.edges_present.size(), params)
        .total();
}

/// Exact event-driven simulator. Owns one state and its genealogy and keeps
/// the category counts needed for O(1) rate evaluation up to date.
///
/// Random numbers are consumed in a fixed order per step: holding time,
/// category, participants, then any coin or label draw of the event.
class Simulator {
public:
    Simulator(GraphemeState state, GenealogyForest forest, DynamicsParams params)
        : state_(std::move(state)), forest_(std::move(forest)), params_(std::move(params)) {
        params_.validate();
        if (params_.flip_regime()) state_.flip_regime = true;
        if (params_.size_mode == SizeMode::Variable && params_.immigration_reference <= 0) {
            params_.immigration_reference = static_cast<double>(state_.num_vertices());
        }
        auto problems = grapheme::validate(state_);
        if (!problems.empty()) {
            throw ConfigError("initial state invalid: " + problems.front().invariant + " " + problems.front().detail);
        }
        for (LineageSlot l : state_.lineage_of) {
            if (l >= forest_.size() || !forest_.lineage(l).alive) {
                throw ConfigError("initial state refers to a lineage that is not alive in the forest");
            }
        }
        rebuild_index();
    }

    RateBreakdown rates() const {
        return rate_breakdown(state_.num_vertices(), same_pairs_, state_.edges_present.size(), params_);
    }
    double total_rate() const { return rates().total(); }

    /// Advances by one event; nullopt when the total rate is zero.
    std::optional<Event> step(Rng& rng) { return step_until(std::numeric_limits<double>::infinity(), rng); }

    /// Like step, but stops at `horizon` without an event when the next
    /// holding time would overshoot it (the clock is then set to horizon).
    std::optional<Event> step_until(double horizon, Rng& rng) {
        const RateBreakdown r = rates();
        const double total = r.total();
        if (!(total > 0)) {
            return std::nullopt;
        }
        const double t_next = state_.time + exponential(rng, total);
        if (t_next > horizon) {
            state_.time = horizon;
            return std::nullopt;
        }
        state_.time = t_next;
        double u = rng.uniform() * total;
        std::size_t kind = 0;
        for (; kind + 1 < kNumEventKinds; ++kind) {
            if (u < r.by_kind[kind]) break;
            u -= r.by_kind[kind];
        }
        while (r.by_kind[kind] <= 0) --kind;  // guards the rounding edge at u == total
        Event e = draw_and_apply(static_cast<EventKind>(kind), rng);
        after_event();
        return e;
    }

    /// Runs until `horizon` or until no event can happen; returns the
    /// number of events applied.
    std::size_t advance_to(double horizon, Rng& rng) {
        std::size_t count = 0;
        while (state_.time < horizon) {
            if (!step_until(horizon, rng)) {
                if (state_.time < horizon) state_.time = horizon;
                break;
            }
            ++count;
        }
        return count;
    }

    // Scripted events: participants are given explicitly, the clock jumps
    // to `time` (which must not run backwards).

    Event resample(VertexId winner, VertexId loser, double time, EventKind kind = EventKind::FVResample) {
        set_clock(time);
        apply_resample(slot(winner), slot(loser));
        after_event();
        return {kind, {winner, loser}, time};
    }

    Event birth(VertexId parent, double time) {
        set_clock(time);
        const VertexId child = apply_birth(slot(parent));
        after_event();
        return {EventKind::Birth, {parent, child}, time};
    }

    Event death(VertexId v, double time, EventKind kind = EventKind::Death) {
        set_clock(time);
        remove_vertex(slot(v));
        after_event();
        return {kind, {v}, time};
    }

    Event immigrate(TypeLabel label, double time) {
        set_clock(time);
        const VertexId added = add_immigrant(label);
        after_event();
        return {EventKind::Immigration, {added}, time};
    }

    Event mutate(VertexId v, TypeLabel label, double time) {
        set_clock(time);
        apply_mutation(slot(v), label);
        after_event();
        return {EventKind::Mutation, {v}, time};
    }

    Event set_edge(VertexId x, VertexId y, bool on, double time) {
        set_clock(time);
        if (!state_.flip_regime) throw std::logic_error("edge events need the flip regime");
        const std::size_t sx = slot(x), sy = slot(y);
        if (state_.component_of[sx] != state_.component_of[sy]) {
            throw std::invalid_argument("edges only exist within a component");
        }
        if (on) {
            state_.edges_present.insert(x, y);
        } else {
            state_.edges_present.erase(x, y);
        }
        after_event();
        return {on ? EventKind::EdgeOn : EventKind::EdgeOff, {x, y}, time};
    }

    TypeLabel fresh_label() { return TypeLabel::fresh(state_.next_fresh_label++); }

    /// Current state with materialised sampling weights.
    const GraphemeState& state() {
        if (weights_stale_) {
            state_.set_uniform_weights();
            weights_stale_ = false;
        }
        return state_;
    }
    const GenealogyForest& forest() const { return forest_; }
    const DynamicsParams& params() const { return params_; }
    double time() const { return state_.time; }
    std::size_t num_vertices() const { return state_.num_vertices(); }
    std::size_t same_pairs() const { return same_pairs_; }
    std::uint64_t events_applied() const { return events_; }

    std::size_t component_size(ComponentId c) const {
        auto it = members_.find(c);
        return it == members_.end() ? 0 : it->second.size();
    }

    void set_prune_every(std::uint64_t every) { prune_every_ = every; }

    void prune_genealogy() {
        const auto remap = forest_.prune(true);
        for (auto& l : state_.lineage_of) l = remap[l];
    }

    /// Genealogical distance between two vertices at the current time.
    double distance(VertexId x, VertexId y) const {
        return forest_.distance(state_.lineage_of[slot(x)], state_.lineage_of[slot(y)], state_.time);
    }

    std::size_t slot(VertexId id) const {
        auto it = id_slot_.find(id);
        if (it == id_slot_.end()) throw std::out_of_range("unknown vertex id " + std::to_string(id));
        return it->second;
    }

private:
    void set_clock(double time) {
        if (time < state_.time) throw std::invalid_argument("scripted event goes back in time");
        state_.time = time;
    }

    void after_event() {
        ++events_;
        if (prune_every_ > 0 && events_ % prune_every_ == 0) prune_genealogy();
    }

    void rebuild_index() {
        members_.clear();
        type_comp_.clear();
        id_slot_.clear();
        pos_.assign(state_.num_vertices(), 0);
        same_pairs_ = 0;
        for (std::size_t i = 0; i < state_.num_vertices(); ++i) {
            auto& m = members_[state_.component_of[i]];
            same_pairs_ += m.size();
            pos_[i] = static_cast<std::uint32_t>(m.size());
            m.push_back(static_cast<std::uint32_t>(i));
            type_comp_[state_.type_label[i]] = state_.component_of[i];
            id_slot_[state_.vertex_ids[i]] = i;
        }
    }

    Event draw_and_apply(EventKind kind, Rng& rng) {
        const std::size_t n = state_.num_vertices();
        const double now = state_.time;
        switch (kind) {
            case EventKind::FVResample:
            case EventKind::SelectionResample: {
                std::size_t x = rng.below(n);
                std::size_t y = rng.below(n - 1);
                if (y >= x) ++y;
                bool x_wins;
                if (kind == EventKind::FVResample) {
                    x_wins = rng.uniform() < 0.5;
                } else {
                    const double fx = params_.fitness_of(state_.type_label[x]);
                    const double fy = params_.fitness_of(state_.type_label[y]);
                    x_wins = rng.uniform() * (fx + fy) < fx;
                }
                const std::size_t w = x_wins ? x : y;
                const std::size_t l = x_wins ? y : x;
                Event e{kind, {state_.vertex_ids[w], state_.vertex_ids[l]}, now};
                apply_resample(w, l);
                return e;
            }
            case EventKind::Birth: {
                const std::size_t p = rng.below(n);
                const VertexId parent = state_.vertex_ids[p];
                const VertexId child = apply_birth(p);
                return {kind, {parent, child}, now};
            }
            case EventKind::Death:
            case EventKind::Emigration: {
                const std::size_t v = rng.below(n);
                Event e{kind, {state_.vertex_ids[v]}, now};
                remove_vertex(v);
                return e;
            }
            case EventKind::ImmigrationSwap: {
                const std::size_t v = rng.below(n);
                const VertexId removed = state_.vertex_ids[v];
                const TypeLabel label = draw_immigrant_label(rng);
                // The newcomer joins before the emigrant leaves, so a type
                // class that is only being refreshed keeps its founder.
                const VertexId added = add_immigrant(label);
                remove_vertex(slot(removed));
                return {kind, {removed, added}, now};
            }
            case EventKind::Immigration: {
                const VertexId added = add_immigrant(draw_immigrant_label(rng));
                return {kind, {added}, now};
            }
            case EventKind::Mutation: {
                const std::size_t v = rng.below(n);
                const VertexId id = state_.vertex_ids[v];
                apply_mutation(v, draw_mutant_label(state_.type_label[v], rng));
                return {kind, {id}, now};
            }
            case EventKind::EdgeOn: {
                for (;;) {
                    const std::size_t a = rng.below(n);
                    const auto& m = members_.at(state_.component_of[a]);
                    const std::size_t k = m.size();
                    if (k < 2) continue;
                    std::size_t j = rng.below(k - 1);
                    if (j >= pos_[a]) ++j;
                    // Thinning by (k-1)/(n-1) makes the ordered pair uniform
                    // over all same-component pairs.
                    if (rng.below(n - 1) >= k - 1) continue;
                    const VertexId va = state_.vertex_ids[a];
                    const VertexId vb = state_.vertex_ids[m[j]];
                    if (state_.edges_present.contains(va, vb)) continue;
                    state_.edges_present.insert(va, vb);
                    return {kind, {va, vb}, now};
                }
            }
            case EventKind::EdgeOff: {
                const auto p = state_.edges_present.at(rng.below(state_.edges_present.size()));
                state_.edges_present.erase(p.a, p.b);
                return {kind, {p.a, p.b}, now};
            }
        }
        throw std::logic_error("unhandled event kind");
    }

    TypeLabel draw_immigrant_label(Rng& rng) {
        if (params_.theta.atomless()) return fresh_label();
        return TypeLabel::atom(params_.theta.draw_atom(rng));
    }

    TypeLabel draw_mutant_label(const TypeLabel& current, Rng& rng) {
        if (params_.kernel.atomless()) return fresh_label();
        const auto& table = params_.kernel.transition;
        if (!current.is_atom() || current.value >= table.size()) {
            return TypeLabel::atom(rng.below(table.size()));
        }
        return TypeLabel::atom(ThetaSource::draw_index(table[current.value], rng));
    }

    void apply_resample(std::size_t w, std::size_t l) {
        if (w == l) throw std::invalid_argument("resampling needs two distinct vertices");
        const LineageSlot old = state_.lineage_of[l];
        state_.lineage_of[l] = forest_.add_child(state_.lineage_of[w], state_.time);
        forest_.kill(old);
        if (state_.component_of[w] == state_.component_of[l]) {
            return;
        }
        if (state_.flip_regime) state_.edges_present.erase_incident(state_.vertex_ids[l]);
        leave_component(l);
        state_.type_label[l] = state_.type_label[w];
        enter_component(l, state_.component_of[w]);
        connect_to_component(l);
    }

    VertexId apply_birth(std::size_t p) {
        const LineageSlot lineage = forest_.add_child(state_.lineage_of[p], state_.time);
        const std::size_t v = append_vertex(state_.type_label[p], lineage);
        enter_component(v, state_.component_of[p]);
        connect_to_component(v);
        return state_.vertex_ids[v];
    }

    VertexId add_immigrant(TypeLabel label) {
        const LineageSlot lineage = forest_.add_root(state_.time);
        const std::size_t v = append_vertex(label, lineage);
        join_type(v, label);
        connect_to_component(v);
        return state_.vertex_ids[v];
    }

    void apply_mutation(std::size_t v, TypeLabel label) {
        if (label == state_.type_label[v]) return;
        if (state_.flip_regime) state_.edges_present.erase_incident(state_.vertex_ids[v]);
        leave_component(v);
        state_.type_label[v] = label;
        join_type(v, label);
        connect_to_component(v);
    }

    std::size_t append_vertex(TypeLabel label, LineageSlot lineage) {
        const VertexId id = state_.next_vertex_id++;
        state_.vertex_ids.push_back(id);
        state_.type_label.push_back(label);
        state_.component_of.push_back(0);
        state_.lineage_of.push_back(lineage);
        state_.weights.push_back(0.0);
        pos_.push_back(0);
        const std::size_t v = state_.num_vertices() - 1;
        id_slot_[id] = v;
        weights_stale_ = true;
        return v;
    }

    void remove_vertex(std::size_t v) {
        const VertexId id = state_.vertex_ids[v];
        if (state_.flip_regime) state_.edges_present.erase_incident(id);
        leave_component(v);
        forest_.kill(state_.lineage_of[v]);
        id_slot_.erase(id);
        const std::size_t last = state_.num_vertices() - 1;
        if (v != last) {
            state_.vertex_ids[v] = state_.vertex_ids[last];
            state_.type_label[v] = state_.type_label[last];
            state_.component_of[v] = state_.component_of[last];
            state_.lineage_of[v] = state_.lineage_of[last];
            state_.weights[v] = state_.weights[last];
            pos_[v] = pos_[last];
            members_.at(state_.component_of[v])[pos_[v]] = static_cast<std::uint32_t>(v);
            id_slot_[state_.vertex_ids[v]] = v;
        }
        state_.vertex_ids.pop_back();
        state_.type_label.pop_back();
        state_.component_of.pop_back();
        state_.lineage_of.pop_back();
        state_.weights.pop_back();
        pos_.pop_back();
        weights_stale_ = true;
    }

    void join_type(std::size_t v, const TypeLabel& label) {
        auto it = type_comp_.find(label);
        if (it != type_comp_.end()) {
            enter_component(v, it->second);
            return;
        }
        const ComponentId c = state_.next_component_id++;
        state_.founder_time[c] = state_.time;
        type_comp_[label] = c;
        enter_component(v, c);
    }

    void enter_component(std::size_t v, ComponentId c) {
        auto& m = members_[c];
        same_pairs_ += m.size();
        pos_[v] = static_cast<std::uint32_t>(m.size());
        m.push_back(static_cast<std::uint32_t>(v));
        state_.component_of[v] = c;
    }

    void leave_component(std::size_t v) {
        const ComponentId c = state_.component_of[v];
        auto it = members_.find(c);
        auto& m = it->second;
        const std::uint32_t p = pos_[v];
        m[p] = m.back();
        pos_[m[p]] = p;
        m.pop_back();
        same_pairs_ -= m.size();
        if (m.empty()) {
            members_.erase(it);
            state_.founder_time.erase(c);
            type_comp_.erase(state_.type_label[v]);
        }
    }

    void connect_to_component(std::size_t v) {
        if (!state_.flip_regime) return;
        const VertexId id = state_.vertex_ids[v];
        for (std::uint32_t u : members_.at(state_.component_of[v])) {
            if (u != v) state_.edges_present.insert(id, state_.vertex_ids[u]);
        }
    }

    GraphemeState state_;
    GenealogyForest forest_;
    DynamicsParams params_;

    std::unordered_map<ComponentId, std::vector<std::uint32_t>> members_;
    std::vector<std::uint32_t> pos_;
    std::unordered_map<TypeLabel, ComponentId, TypeLabelHash> type_comp_;
    std::unordered_map<VertexId, std::size_t> id_slot_;
    std::size_t same_pairs_ = 0;
    bool weights_stale_ = false;
    std::uint64_t events_ = 0;
    std::uint64_t prune_every_ = 10000;
};

/// Single step on a state/forest pair: (state', forest', event). Builds a
/// temporary simulator, so it costs O(n); use Simulator for long runs.
struct StepResult {
    GraphemeState state;
    GenealogyForest forest;
    std::optional<Event> event;
};

inline StepResult step(GraphemeState state, GenealogyForest forest, const DynamicsParams& params, Rng& rng) {
    Simulator sim(std::move(state), std::move(forest), params);
    sim.set_prune_every(0);
    auto e = sim.step(rng);
    return {sim.state(), sim.forest(), std::move(e)};
}

/// Summary statistics of a state at one time point.
struct Snapshot {
    double time = 0.0;
    std::size_t num_vertices = 0;
    std::size_t num_components = 0;
    StepGraphon graphon;
    double sum_w2 = 0.0;  // edge density of the block graphon, sum of squared masses
    double sum_w3 = 0.0;
    double max_weight = 0.0;
    /// Fraction of unordered vertex pairs that are connected (exact, i.e.
    /// sampling without replacement under uniform weights).
    double connected_pair_fraction = 0.0;
    /// Present edges over same-component pairs (1 outside the flip regime).
    double present_edge_fraction = 1.0;
};

inline Snapshot take_snapshot(const GraphemeState& s) {
    Snapshot snap;
    snap.time = s.time;
    snap.num_vertices = s.num_vertices();
    snap.num_components = s.num_components();
    snap.graphon = empirical_graphon(s);
    for (double w : snap.graphon.block_weights) {
        snap.sum_w2 += w * w;
        snap.sum_w3 += w * w * w;
        snap.max_weight = std::max(snap.max_weight, w);
    }
    snap.present_edge_fraction = snap.graphon.intra_block_intensity;
    const double n = static_cast<double>(s.num_vertices());
    if (s.num_vertices() >= 2) {
        const double pairs = n * (n - 1) / 2;
        double connected = 0;
        if (s.flip_regime) {
            connected = static_cast<double>(s.edges_present.size());
        } else {
            for (const auto& [c, k] : s.component_sizes()) connected += static_cast<double>(k * (k - 1) / 2);
        }
        snap.connected_pair_fraction = connected / pairs;
    }
    return snap;
}

struct RunOptions {
    double horizon = 1.0;
    double snapshot_interval = 0.0;  // 0: only initial and final snapshots
    bool record_events = false;
    std::uint64_t prune_every = 10000;
    /// Optional observers, called in trajectory order.
    std::function<void(const Event&)> on_event;
    std::function<void(const GraphemeState&)> on_snapshot;
};

enum class Termination { Horizon, Absorbed };

struct TrajectoryRecord {
    std::vector<Event> events;
    std::vector<Snapshot> snapshots;
    Termination termination = Termination::Horizon;
    std::uint64_t event_count = 0;
    GraphemeState final_state;
    GenealogyForest final_forest;
};

/// Repeats exact steps until the horizon or until no event can happen.
/// Snapshots are taken at start + k * interval for every such time up to
/// the horizon.
inline TrajectoryRecord run(GraphemeState initial, GenealogyForest forest, const DynamicsParams& params,
                            const RunOptions& options, Rng& rng) {
    if (!(options.horizon > 0)) throw ConfigError("horizon must be positive");
    if (options.snapshot_interval < 0) throw ConfigError("snapshot interval must be nonnegative");
    TrajectoryRecord rec;
    Simulator sim(std::move(initial), std::move(forest), params);
    sim.set_prune_every(options.prune_every);
    const double start = sim.time();
    const double end = start + options.horizon;
    const double interval = options.snapshot_interval > 0 ? options.snapshot_interval : options.horizon;

    std::size_t k = 0;
    double next_snap = start;
    auto snapshot_now = [&](double t) {
        GraphemeState view = sim.state();
        view.time = t;
        rec.snapshots.push_back(take_snapshot(view));
        if (options.on_snapshot) options.on_snapshot(view);
        ++k;
        next_snap = start + static_cast<double>(k) * interval;
    };

    // Holding times are memoryless, so stopping the clock at each snapshot
    // time and redrawing afterwards leaves the law of the path unchanged.
    for (;;) {
        const double target = std::min(next_snap, end);
        auto e = sim.step_until(target, rng);
        if (e) {
            ++rec.event_count;
            if (options.on_event) options.on_event(*e);
            if (options.record_events) rec.events.push_back(std::move(*e));
            continue;
        }
        if (sim.total_rate() <= 0) {
            if (sim.time() < end) rec.termination = Termination::Absorbed;
            while (next_snap <= end * (1 + 1e-15)) snapshot_now(next_snap);
            break;
        }
        if (next_snap <= end * (1 + 1e-15) && sim.time() >= next_snap) snapshot_now(next_snap);
        if (sim.time() >= end) {
            if (next_snap <= end * (1 + 1e-15)) snapshot_now(next_snap);
            break;
        }
    }
    rec.final_state = sim.state();
    rec.final_state.time = std::max(rec.final_state.time, end);
    if (rec.termination == Termination::Absorbed) rec.final_state.time = sim.time();
    rec.final_forest = sim.forest();
    return rec;
}

}  // namespace grapheme
