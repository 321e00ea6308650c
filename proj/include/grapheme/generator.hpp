#pragma once

#include <cmath>
#include <vector>

#include "grapheme/coalescent.hpp"
#include "grapheme/dynamics.hpp"
#include "grapheme/monomial.hpp"
#include "grapheme/parallel.hpp"

namespace grapheme {

/// Pure-regime state as matrices: enough to evaluate monomials and to apply
/// jumps without the simulator.
struct MatrixState {
    DistanceMatrix r;
    std::vector<TypeLabel> types;
    std::vector<double> weights;

    ConnectionMatrix connections() const {
        const std::size_t n = types.size();
        ConnectionMatrix h(n, std::vector<std::uint8_t>(n, 1));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) h[i][j] = h[j][i] = types[i] == types[j];
        }
        return h;
    }

    double value(const MonomialSpec& spec) const { return exhaustive_monomial(spec, weights, r, connections()); }
};

inline MatrixState matrix_state(const GraphemeState& s, const GenealogyForest& f) {
    return {all_distances(s, f), s.type_label, s.weights};
}

/// Exact (L Phi)(G) of the fixed-size pure dynamics (resampling, selection,
/// immigration, mutation) at finite n, by enumerating every jump:
///   resampling: k replaces l at rate d/2 for each ordered pair;
///   selection: k replaces l at rate (s/n) chi_k / (chi_k + chi_l);
///   immigration: l becomes a new root with a theta label at rate c;
///   mutation: l takes a new label at rate m;
/// plus -2 sum lambda_ij Phi from all distances growing at speed 2.
inline double analytic_generator(const GraphemeState& s, const GenealogyForest& f, const DynamicsParams& p,
                                 const MonomialSpec& spec) {
    p.validate();
    if (p.size_mode != SizeMode::Fixed || p.flip_regime()) {
        throw ConfigError("analytic generator covers the fixed-size pure regime");
    }
    const MatrixState base = matrix_state(s, f);
    const std::size_t n = base.types.size();
    const double phi0 = base.value(spec);
    double out = -2.0 * spec.lambda_sum() * phi0;

    auto replaced = [&](std::size_t k, std::size_t l) {
        MatrixState m = base;
        m.types[l] = m.types[k];
        for (std::size_t j = 0; j < n; ++j) m.r[l][j] = m.r[j][l] = m.r[k][j];
        m.r[l][k] = m.r[k][l] = 0.0;
        m.r[l][l] = 0.0;
        return m.value(spec) - phi0;
    };
    auto relabelled = [&](std::size_t l, const TypeLabel& label, bool new_root) {
        MatrixState m = base;
        m.types[l] = label;
        if (new_root) {
            const double r_new = f.unrelated_roots_infinite() ? kInfiniteDistance : 2.0 * s.time;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != l) m.r[l][j] = m.r[j][l] = r_new;
            }
        }
        return m.value(spec) - phi0;
    };
    // A label nobody carries.
    TypeLabel fresh = TypeLabel::fresh(s.next_fresh_label);
    for (const auto& t : base.types) {
        if (!t.is_atom() && t.value >= fresh.value) fresh.value = t.value + 1;
    }

    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            if (k == l) continue;
            double rate = p.d / 2.0;
            if (p.s_sel > 0) {
                const double ck = p.fitness_of(base.types[k]), cl = p.fitness_of(base.types[l]);
                rate += p.s_sel / static_cast<double>(n) * ck / (ck + cl);
            }
            if (rate > 0) out += rate * replaced(k, l);
        }
    }
    if (p.c > 0) {
        for (std::size_t l = 0; l < n; ++l) {
            if (p.theta.atomless()) {
                out += p.c * relabelled(l, fresh, true);
            } else {
                double total = 0;
                for (double w : p.theta.atom_weights) total += w;
                for (std::size_t a = 0; a < p.theta.atom_weights.size(); ++a) {
                    if (p.theta.atom_weights[a] <= 0) continue;
                    out += p.c * p.theta.atom_weights[a] / total * relabelled(l, TypeLabel::atom(a), true);
                }
            }
        }
    }
    if (p.m_mut > 0) {
        for (std::size_t l = 0; l < n; ++l) {
            if (p.kernel.atomless()) {
                out += p.m_mut * relabelled(l, fresh, false);
                continue;
            }
            const auto& table = p.kernel.transition;
            const TypeLabel& cur = base.types[l];
            const bool row = cur.is_atom() && cur.value < table.size();
            double total = 0;
            if (row) {
                for (double w : table[cur.value]) total += w;
            }
            for (std::size_t a = 0; a < table.size(); ++a) {
                const double prob = row ? table[cur.value][a] / total : 1.0 / static_cast<double>(table.size());
                if (prob <= 0 || TypeLabel::atom(a) == cur) continue;
                out += p.m_mut * prob * relabelled(l, TypeLabel::atom(a), false);
            }
        }
    }
    return out;
}

/// Delta with P(at least two events in Delta) equal to `two_event_prob`
/// at the state's total rate (solves 1 - e^-x (1 + x) = q for x = rate * Delta).
inline double generator_step(double total_rate, double two_event_prob) {
    double lo = 0, hi = 10;
    for (int i = 0; i < 200; ++i) {
        const double x = 0.5 * (lo + hi);
        ((1 - std::exp(-x) * (1 + x)) < two_event_prob ? lo : hi) = x;
    }
    return lo / total_rate;
}

struct GeneratorComparison {
    double analytic = 0.0;
    double mc = 0.0;
    double se = 0.0;
    double z = 0.0;
};

/// (E[Phi(G_Delta)] - Phi(G_0)) / Delta by exact simulation, against the
/// analytic generator, for several monomials sharing the same runs.
inline std::vector<GeneratorComparison> compare_generator(const GraphemeState& g0, const GenealogyForest& f0,
                                                          const DynamicsParams& p,
                                                          const std::vector<MonomialSpec>& specs, double delta,
                                                          std::size_t replicas, std::uint64_t seed,
                                                          unsigned workers = 1) {
    const MatrixState base = matrix_state(g0, f0);
    std::vector<double> phi0(specs.size()), quiet(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
        phi0[k] = base.value(specs[k]);
        // Without events distances just grow by 2 Delta.
        quiet[k] = phi0[k] * std::exp(-2.0 * specs[k].lambda_sum() * delta);
    }
    std::vector<std::vector<double>> diff(specs.size(), std::vector<double>(replicas));
    parallel_for(replicas, workers, [&](std::size_t r) {
        auto rng = replica_rng(seed, r);
        Simulator sim(g0, f0, p);
        sim.set_prune_every(0);
        sim.advance_to(g0.time + delta, rng);
        if (sim.events_applied() == 0) {
            for (std::size_t k = 0; k < specs.size(); ++k) diff[k][r] = (quiet[k] - phi0[k]) / delta;
            return;
        }
        const MatrixState m = matrix_state(sim.state(), sim.forest());
        for (std::size_t k = 0; k < specs.size(); ++k) diff[k][r] = (m.value(specs[k]) - phi0[k]) / delta;
    });
    std::vector<GeneratorComparison> out;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        GeneratorComparison c;
        c.analytic = analytic_generator(g0, f0, p, specs[k]);
        std::tie(c.mc, c.se) = mean_and_se(diff[k]);
        c.z = pooled_z(c.mc, c.se, c.analytic, 0.0);
        out.push_back(c);
    }
    return out;
}

}  // namespace grapheme
