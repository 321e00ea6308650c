#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grapheme/dynamics.hpp"
#include "grapheme/errors.hpp"
#include "grapheme/monomial.hpp"
#include "grapheme/parallel.hpp"
#include "grapheme/rng.hpp"

namespace grapheme {

/// Fresh cemetery labels live far above anything a forward run hands out,
/// so they never coincide with a type of the initial grapheme.
inline constexpr std::uint64_t kCemeteryLabelBase = std::uint64_t{1} << 62;

struct CoalescentEvent {
    enum class Kind { Merge, Cemetery };
    Kind kind = Kind::Merge;
    double time = 0.0;
    std::vector<std::size_t> members;  // merged block, or block sent to the cemetery
    std::size_t active_after = 0;
    std::optional<TypeLabel> label;
};

inline const char* to_string(CoalescentEvent::Kind k) { return k == CoalescentEvent::Kind::Merge ? "merge" : "cemetery"; }

/// Partition of {0..n-1} with cemetery flags. Pairs in different blocks
/// are at distance 2s at dual time s; a merged pair keeps the distance it
/// had when it merged.
struct CoalescentState {
    std::size_t n = 0;
    double time = 0.0;
    std::vector<std::vector<std::size_t>> blocks;  // members sorted ascending
    std::vector<char> in_cemetery;
    std::vector<TypeLabel> cemetery_label;
    std::vector<double> merge_time;  // n x n row-major, +inf while unmerged
    std::vector<CoalescentEvent> history;
    std::uint64_t next_fresh = kCemeteryLabelBase;

    static CoalescentState singletons(std::size_t n) {
        CoalescentState c;
        c.n = n;
        for (std::size_t i = 0; i < n; ++i) c.blocks.push_back({i});
        c.in_cemetery.assign(n, 0);
        c.cemetery_label.assign(n, TypeLabel{});
        c.merge_time.assign(n * n, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) c.merge_time[i * n + i] = 0.0;
        return c;
    }

    std::size_t active_count() const {
        return static_cast<std::size_t>(std::count(in_cemetery.begin(), in_cemetery.end(), 0));
    }

    std::size_t block_of(std::size_t i) const {
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (std::binary_search(blocks[b].begin(), blocks[b].end(), i)) return b;
        }
        throw std::out_of_range("index outside the coalescent");
    }

    /// Block index of every element.
    std::vector<std::size_t> block_index() const {
        std::vector<std::size_t> out(n);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            for (std::size_t i : blocks[b]) out[i] = b;
        }
        return out;
    }

    double distance(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        return 2.0 * std::min(time, merge_time[i * n + j]);
    }

    DistanceMatrix distance_matrix() const {
        DistanceMatrix r(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) r[i][j] = r[j][i] = distance(i, j);
        }
        return r;
    }

    /// Dual time spent with each active-block count: the path needed for
    /// Feynman-Kac weights.
    double integral_active_pairs() const {
        double total = 0, last = 0;
        std::size_t active = n;
        for (const auto& e : history) {
            total += (e.time - last) * static_cast<double>(active * (active - (active > 0))) / 2.0;
            last = e.time;
            active = e.active_after;
        }
        total += (time - last) * static_cast<double>(active * (active - (active > 0))) / 2.0;
        return total;
    }

    std::vector<std::string> validate() const {
        std::vector<std::string> out;
        std::vector<int> seen(n, 0);
        for (const auto& b : blocks) {
            if (b.empty()) out.push_back("empty block");
            for (std::size_t i : b) {
                if (i >= n) out.push_back("index out of range");
                else ++seen[i];
            }
            if (!std::is_sorted(b.begin(), b.end())) out.push_back("block not sorted");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (seen[i] != 1) out.push_back("blocks do not partition the index set");
        }
        if (in_cemetery.size() != blocks.size() || cemetery_label.size() != blocks.size()) {
            out.push_back("per-block flags out of sync");
        }
        const auto idx = block_index();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double m = merge_time[i * n + j];
                if (m != merge_time[j * n + i]) out.push_back("merge times not symmetric");
                if ((idx[i] == idx[j]) != std::isfinite(m)) out.push_back("merge times disagree with blocks");
            }
        }
        return out;
    }

    void merge(std::size_t a, std::size_t b, double now) {
        if (a > b) std::swap(a, b);
        for (std::size_t i : blocks[a]) {
            for (std::size_t j : blocks[b]) merge_time[i * n + j] = merge_time[j * n + i] = now;
        }
        blocks[a].insert(blocks[a].end(), blocks[b].begin(), blocks[b].end());
        std::sort(blocks[a].begin(), blocks[a].end());
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(b));
        in_cemetery.erase(in_cemetery.begin() + static_cast<std::ptrdiff_t>(b));
        cemetery_label.erase(cemetery_label.begin() + static_cast<std::ptrdiff_t>(b));
        history.push_back({CoalescentEvent::Kind::Merge, now, blocks[a], active_count(), std::nullopt});
    }

    void bury(std::size_t block, TypeLabel label, double now) {
        in_cemetery[block] = 1;
        cemetery_label[block] = label;
        history.push_back({CoalescentEvent::Kind::Cemetery, now, blocks[block], active_count(), label});
    }
};

namespace detail {

inline std::size_t nth_active(const CoalescentState& c, std::size_t k) {
    for (std::size_t b = 0; b < c.blocks.size(); ++b) {
        if (!c.in_cemetery[b] && k-- == 0) return b;
    }
    throw std::logic_error("active block index out of range");
}

inline TypeLabel cemetery_draw(CoalescentState& c, const ThetaSource& theta, Rng& rng) {
    if (theta.atomless()) return TypeLabel::fresh(c.next_fresh++);
    return TypeLabel::atom(theta.draw_atom(rng));
}

}  // namespace detail

/// Advances the dual: active blocks merge pairwise at rate d, each active
/// block jumps to the cemetery at rate c with a label drawn from theta.
/// Stops at dual time `until` (or earlier when nothing can happen; the
/// clock is still set to `until` if that is finite).
inline void coalescent_advance(CoalescentState& c, double d, double cem, const ThetaSource& theta, double until,
                               Rng& rng) {
    for (;;) {
        const std::size_t k = c.active_count();
        const double merge_rate = d * static_cast<double>(k * (k - (k > 0))) / 2.0;
        const double bury_rate = cem * static_cast<double>(k);
        const double total = merge_rate + bury_rate;
        if (!(total > 0)) break;
        const double next = c.time + exponential(rng, total);
        if (next > until) break;
        c.time = next;
        if (rng.uniform() * total < merge_rate) {
            std::size_t x = rng.below(k);
            std::size_t y = rng.below(k - 1);
            if (y >= x) ++y;
            c.merge(detail::nth_active(c, x), detail::nth_active(c, y), c.time);
        } else {
            const std::size_t b = detail::nth_active(c, rng.below(k));
            c.bury(b, detail::cemetery_draw(c, theta, rng), c.time);
        }
    }
    if (std::isfinite(until)) c.time = std::max(c.time, until);
}

inline CoalescentState coalescent_run(std::size_t n, double d, double cem, const ThetaSource& theta, double horizon,
                                      Rng& rng) {
    if (n < 1) throw ConfigError("coalescent needs n >= 1");
    if (!(d >= 0) || !(cem >= 0)) throw ConfigError("coalescent rates must be nonnegative");
    if (!(d > 0) && !(cem > 0)) throw ConfigError("coalescent needs d > 0 or c > 0");
    auto c = CoalescentState::singletons(n);
    coalescent_advance(c, d, cem, theta, horizon, rng);
    return c;
}

/// Piecewise-constant, right-continuous path (forward total mass).
struct MassPath {
    std::vector<double> times;   // increasing, times[0] is the start
    std::vector<double> values;  // positive

    double at(double t) const {
        auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return values.front();
        return values[static_cast<std::size_t>(it - times.begin()) - 1];
    }
};

/// Dual of the conditioned DW process: at dual time s the pair merge rate is
/// b / mass(T - s). Time-varying rates are handled by thinning against the
/// smallest mass on the path, which is exact.
inline CoalescentState coalescent_run_inhomogeneous(std::size_t n, double b, const MassPath& mass, double horizon,
                                                    Rng& rng) {
    if (mass.times.empty() || mass.times.size() != mass.values.size()) throw ConfigError("mass path is empty");
    double min_mass = std::numeric_limits<double>::infinity();
    for (double v : mass.values) {
        if (!(v > 0)) throw ConfigError("mass path must stay positive; condition on survival");
        min_mass = std::min(min_mass, v);
    }
    const double forward_end = mass.times.front() + horizon;
    auto c = CoalescentState::singletons(n);
    const double bound = b / min_mass;
    for (;;) {
        const std::size_t k = c.active_count();
        const double total = bound * static_cast<double>(k * (k - (k > 0))) / 2.0;
        if (!(total > 0)) break;
        const double next = c.time + exponential(rng, total);
        if (next > horizon) break;
        c.time = next;
        const double actual = b / mass.at(forward_end - c.time);
        if (rng.uniform() * bound >= actual) continue;
        std::size_t x = rng.below(k);
        std::size_t y = rng.below(k - 1);
        if (y >= x) ++y;
        c.merge(detail::nth_active(c, x), detail::nth_active(c, y), c.time);
    }
    c.time = horizon;
    return c;
}

/// exp(multiplier * b * integral of the number of active block pairs).
inline double fk_weight(const CoalescentState& path, double b, double multiplier = 1.0) {
    return std::exp(multiplier * b * path.integral_active_pairs());
}

/// What H needs to know about m sampled vertices of the initial grapheme.
struct GraphemeSample {
    DistanceMatrix r;
    ConnectionMatrix h;
    std::vector<TypeLabel> types;  // optional: enables cemetery/initial type matches
};

namespace detail {

/// h^C and r^C (without the dual's own distances) for one sample.
inline double phi_of_composition(const GraphemeSample& u, const CoalescentState& dual, const MonomialSpec& spec,
                                  const std::vector<std::size_t>& block, const std::vector<std::size_t>& rep,
                                  const DistanceMatrix& dual_r) {
    const std::size_t m = dual.n;
    ConnectionMatrix hc(m, std::vector<std::uint8_t>(m, 1));
    DistanceMatrix rc(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const std::size_t bi = block[i], bj = block[j];
            std::uint8_t conn;
            double extra = 0;
            if (bi == bj) {
                conn = 1;
            } else if (!dual.in_cemetery[bi] && !dual.in_cemetery[bj]) {
                conn = u.h[rep[i]][rep[j]];
                extra = u.r[rep[i]][rep[j]];
            } else if (dual.in_cemetery[bi] && dual.in_cemetery[bj]) {
                conn = dual.cemetery_label[bi] == dual.cemetery_label[bj];
            } else {
                const std::size_t live = dual.in_cemetery[bi] ? rep[j] : rep[i];
                const TypeLabel& dead = dual.in_cemetery[bi] ? dual.cemetery_label[bi] : dual.cemetery_label[bj];
                conn = !u.types.empty() && u.types[live] == dead;
            }
            hc[i][j] = hc[j][i] = conn;
            rc[i][j] = rc[j][i] = extra + dual_r[i][j];
        }
    }
    const double ph = spec.phi_h(hc);
    return ph == 0 ? 0.0 : ph * spec.phi_r(rc);
}

inline std::vector<std::size_t> representatives(const CoalescentState& dual, const std::vector<std::size_t>& block) {
    std::vector<std::size_t> rep(dual.n);
    for (std::size_t i = 0; i < dual.n; ++i) rep[i] = dual.blocks[block[i]].front();
    return rep;
}

}  // namespace detail

/// H(u, C) = phi_r(r^C(u) + r') * phi_h(h^C): element i reads the sampled
/// vertex of its block's smallest index. Two blocks are connected when
/// both are active and their sampled vertices are connected, when both sit
/// in the cemetery with equal labels, or when one cemetery label equals the
/// other block's sampled type.
inline double duality_H(const GraphemeSample& sample, const CoalescentState& dual, const MonomialSpec& spec) {
    spec.validate();
    if (spec.m != dual.n || sample.r.size() != dual.n || sample.h.size() != dual.n ||
        (!sample.types.empty() && sample.types.size() != dual.n)) {
        throw std::invalid_argument("duality_H: dimension mismatch");
    }
    const auto block = dual.block_index();
    return detail::phi_of_composition(sample, dual, spec, block, detail::representatives(dual, block),
                                      dual.distance_matrix());
}

/// Exact E_u[H(u, C)] for u an m-sample without replacement from the
/// initial state, whose distances are given by r0 (n x n).
inline double duality_H_exhaustive(const GraphemeState& g0, const DistanceMatrix& r0, const ConnectionMatrix& h0,
                                   const CoalescentState& dual, const MonomialSpec& spec) {
    spec.validate();
    if (spec.m != dual.n) throw std::invalid_argument("duality_H: dimension mismatch");
    const auto block = dual.block_index();
    // Only active blocks read the initial grapheme.
    std::vector<std::size_t> active_blocks;
    std::vector<std::size_t> slot_of_block(dual.blocks.size(), 0);
    for (std::size_t b = 0; b < dual.blocks.size(); ++b) {
        if (!dual.in_cemetery[b]) {
            slot_of_block[b] = active_blocks.size();
            active_blocks.push_back(b);
        }
    }
    const std::size_t m = dual.n;
    // The sample handed to the composition is indexed by element; every
    // element of an active block reads the same initial vertex.
    GraphemeSample u{DistanceMatrix(m, std::vector<double>(m, 0.0)),
                     ConnectionMatrix(m, std::vector<std::uint8_t>(m, 1)), std::vector<TypeLabel>(m)};
    const auto rep = detail::representatives(dual, block);
    const auto dual_r = dual.distance_matrix();
    double total = 0;
    for_each_ordered_sample(g0.weights, active_blocks.size(), [&](const std::vector<std::size_t>& picks, double p) {
        for (std::size_t i = 0; i < m; ++i) {
            if (dual.in_cemetery[block[i]]) continue;
            const std::size_t vi = picks[slot_of_block[block[i]]];
            u.types[i] = g0.type_label[vi];
            for (std::size_t j = 0; j < m; ++j) {
                if (dual.in_cemetery[block[j]]) continue;
                const std::size_t vj = picks[slot_of_block[block[j]]];
                u.r[i][j] = r0[vi][vj];
                u.h[i][j] = h0[vi][vj];
            }
        }
        total += p * detail::phi_of_composition(u, dual, spec, block, rep, dual_r);
    });
    return total;
}

struct DualityReport {
    double lhs = 0, se_lhs = 0;
    double rhs = 0, se_rhs = 0;
    double z = 0;
    std::size_t replicas = 0;
};

inline double pooled_z(double a, double se_a, double b, double se_b) {
    const double se = std::sqrt(se_a * se_a + se_b * se_b);
    if (se == 0) return a == b ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), a - b);
    return (a - b) / se;
}

inline std::pair<double, double> mean_and_se(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double var = x.size() > 1 ? ss / (n - 1) : 0.0;
    return {mean, std::sqrt(var / n)};
}

/// RNG purposes used by check_duality, so both sides are reproducible per replica.
inline constexpr std::uint64_t kForwardPurpose = 1;
inline constexpr std::uint64_t kDualPurpose = 2;

/// Monte-Carlo check of E[H(G_t, C_0)] = E[H(G_0, C_t)] for resampling plus
/// immigration dynamics. Forward replicas evaluate the monomial exactly on
/// G_t; dual replicas evaluate H exactly over samples of G_0.
inline DualityReport check_duality(const GraphemeState& g0, const GenealogyForest& f0, const DynamicsParams& params,
                                   const MonomialSpec& spec, double t, std::size_t replicas, std::uint64_t seed,
                                   unsigned workers = 1) {
    params.validate();
    spec.validate();
    if (params.b > 0 || params.m_mut > 0 || params.s_sel > 0 || params.flip_regime() ||
        params.size_mode != SizeMode::Fixed) {
        throw ConfigError("duality check supports resampling and immigration only");
    }
    if (replicas < 2) throw ConfigError("duality check needs at least 2 replicas");
    if (!(t >= 0)) throw ConfigError("duality check needs t >= 0");
    if (spec.m > g0.num_vertices()) throw ConfigError("sample size exceeds number of vertices");

    const DistanceMatrix r0 = all_distances(g0, f0);
    const ConnectionMatrix h0 = all_connections(g0);
    std::vector<double> lhs(replicas), rhs(replicas);

    parallel_for(replicas, workers, [&](std::size_t k) {
        auto rng = replica_rng(seed, k, kForwardPurpose);
        Simulator sim(g0, f0, params);
        if (t > 0) sim.advance_to(g0.time + t, rng);
        const auto& s = sim.state();
        lhs[k] = exhaustive_monomial(spec, s.weights, all_distances(s, sim.forest()), all_connections(s));
    });

    // Dual side: E_u[phi_r(r^C) phi_h(h^C)] depends on the dual only through
    // its block pattern, so the exhaustive sums are cached when phi_r
    // factorizes over additive distances.
    std::vector<CoalescentState> duals(replicas);
    for (std::size_t k = 0; k < replicas; ++k) {
        auto rng = replica_rng(seed, k, kDualPurpose);
        duals[k] = coalescent_run(spec.m, params.d, params.c, params.theta, t, rng);
    }
    std::map<std::string, double> cache;
    auto pattern_key = [](const CoalescentState& c) {
        std::string key;
        const auto block = c.block_index();
        for (std::size_t i = 0; i < c.n; ++i) {
            const std::size_t b = block[i];
            key += std::to_string(c.blocks[b].front());
            if (c.in_cemetery[b]) {
                // Fresh cemetery labels match nothing, so their values are irrelevant.
                const auto& label = c.cemetery_label[b];
                key += label.is_atom() ? "*" + label.to_string() : "*fresh";
            }
            key += ';';
        }
        return key;
    };
    for (std::size_t k = 0; k < replicas; ++k) {
        const auto& c = duals[k];
        const std::string key = pattern_key(c);
        auto it = cache.find(key);
        if (it == cache.end()) {
            // Evaluate with dual distances removed; they contribute the
            // separate factor phi_r(r') below.
            CoalescentState frozen = c;
            frozen.time = 0;
            it = cache.emplace(key, duality_H_exhaustive(g0, r0, h0, frozen, spec)).first;
        }
        rhs[k] = it->second * spec.phi_r(c.distance_matrix());
    }

    DualityReport rep;
    rep.replicas = replicas;
    std::tie(rep.lhs, rep.se_lhs) = mean_and_se(lhs);
    std::tie(rep.rhs, rep.se_rhs) = mean_and_se(rhs);
    rep.z = pooled_z(rep.lhs, rep.se_lhs, rep.rhs, rep.se_rhs);
    return rep;
}

/// Equilibrium grapheme read off the dual run until every block has jumped
/// to the cemetery: blocks sharing a cemetery label form one component.
inline GraphemeState equilibrium_dual_grapheme(std::size_t n, double d, double cem, const ThetaSource& theta, Rng& rng) {
    if (!(cem > 0)) throw ConfigError("equilibrium_dual_grapheme requires c > 0");
    if (n < 1) throw ConfigError("equilibrium_dual_grapheme needs n >= 1");
    auto c = CoalescentState::singletons(n);
    coalescent_advance(c, d, cem, theta, std::numeric_limits<double>::infinity(), rng);
    if (c.active_count() != 0 || c.history.size() > 2 * n) {
        throw RuntimeFailure("dual run did not reach the cemetery");
    }
    GraphemeState s;
    s.vertex_ids.resize(n);
    s.type_label.resize(n);
    s.component_of.resize(n);
    s.lineage_of.resize(n);
    std::map<TypeLabel, ComponentId> comp_of_label;
    for (std::size_t b = 0; b < c.blocks.size(); ++b) {
        const TypeLabel label = c.cemetery_label[b];
        auto [it, inserted] = comp_of_label.emplace(label, s.next_component_id);
        if (inserted) {
            s.founder_time[s.next_component_id] = 0.0;
            ++s.next_component_id;
        }
        for (std::size_t i : c.blocks[b]) {
            s.type_label[i] = label;
            s.component_of[i] = it->second;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        s.vertex_ids[i] = i;
        s.lineage_of[i] = static_cast<LineageSlot>(i);
    }
    s.next_vertex_id = n;
    s.next_fresh_label = c.next_fresh;
    s.set_uniform_weights();
    return s;
}

}  // namespace grapheme
