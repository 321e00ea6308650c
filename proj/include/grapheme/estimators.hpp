#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "grapheme/coalescent.hpp"
#include "grapheme/errors.hpp"
#include "grapheme/genealogy.hpp"
#include "grapheme/monomial.hpp"
#include "grapheme/rng.hpp"
#include "grapheme/state.hpp"

namespace grapheme {

/// m x m adjacency of a without-replacement sample (zero diagonal) and the
/// sampled vertex ids in sampling order.
struct ConnectionMatrixSample {
    ConnectionMatrix matrix;
    std::vector<VertexId> vertex_ids;

    /// Class of the matrix as a bit string over pairs (i < j), row-major.
    std::uint64_t code() const {
        std::uint64_t c = 0;
        int bit = 0;
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            for (std::size_t j = i + 1; j < matrix.size(); ++j, ++bit) {
                if (matrix[i][j]) c |= std::uint64_t{1} << bit;
            }
        }
        return c;
    }
};

/// Successive sampling without replacement proportional to weights.
inline std::vector<std::size_t> sample_without_replacement(const std::vector<double>& weights, std::size_t m,
                                                           Rng& rng) {
    const std::size_t n = weights.size();
    if (m > n) throw ConfigError("sample size exceeds number of vertices");
    std::vector<std::size_t> out;
    out.reserve(m);
    const bool uniform = std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights[0]; });
    if (uniform) {
        // Partial Fisher-Yates over a lazily materialised permutation.
        std::vector<std::pair<std::size_t, std::size_t>> swapped;
        auto at = [&](std::size_t i) {
            for (auto& [k, v] : swapped) {
                if (k == i) return v;
            }
            return i;
        };
        auto set = [&](std::size_t i, std::size_t v) {
            for (auto& [k, old] : swapped) {
                if (k == i) {
                    old = v;
                    return;
                }
            }
            swapped.emplace_back(i, v);
        };
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + rng.below(n - i);
            const std::size_t vj = at(j), vi = at(i);
            out.push_back(vj);
            set(j, vi);
            set(i, vj);
        }
        return out;
    }
    std::vector<char> used(n, 0);
    double left = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        double u = rng.uniform() * left;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            pick = i;
            if (u < weights[i]) break;
            u -= weights[i];
        }
        used[pick] = 1;
        left -= weights[pick];
        out.push_back(pick);
    }
    return out;
}

/// Independent draws proportional to weights (with replacement).
inline std::vector<std::size_t> sample_with_replacement(const std::vector<double>& weights, std::size_t m, Rng& rng) {
    std::vector<std::size_t> out;
    out.reserve(m);
    const bool uniform = std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights[0]; });
    for (std::size_t k = 0; k < m; ++k) {
        if (uniform) {
            out.push_back(rng.below(weights.size()));
        } else {
            out.push_back(ThetaSource::draw_index(weights, rng));
        }
    }
    return out;
}

inline ConnectionMatrixSample sample_connection_matrix(const GraphemeState& s, std::size_t m, Rng& rng) {
    if (m > s.num_vertices()) throw ConfigError("sample size exceeds number of vertices");
    const auto slots = sample_without_replacement(s.weights, m, rng);
    ConnectionMatrixSample out;
    out.matrix = connection_matrix(s, slots);
    for (std::size_t i = 0; i < m; ++i) out.matrix[i][i] = 0;
    for (std::size_t v : slots) out.vertex_ids.push_back(s.vertex_ids[v]);
    return out;
}

enum class EstimateMode { MonteCarlo, Exhaustive, WithReplacement, Closed };

inline const char* to_string(EstimateMode m) {
    switch (m) {
        case EstimateMode::MonteCarlo: return "without-replacement-mc";
        case EstimateMode::Exhaustive: return "without-replacement-exact";
        case EstimateMode::WithReplacement: return "with-replacement-mc";
        case EstimateMode::Closed: return "closed-form";
    }
    return "unknown";
}

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t num_samples = 0;
    EstimateMode mode = EstimateMode::MonteCarlo;
};

/// Monte-Carlo mean of phi_h(h) phi_r(r) over independent m-samples drawn
/// without replacement.
inline Estimate estimate_monomial(const GraphemeState& s, const GenealogyForest& f, const MonomialSpec& spec,
                                  std::size_t num_samples, Rng& rng) {
    spec.validate();
    if (spec.m > s.num_vertices()) throw ConfigError("sample size exceeds number of vertices");
    if (num_samples < 2) throw ConfigError("estimate_monomial needs at least 2 samples");
    const bool need_r = spec.has_distance_part();
    double sum = 0, sum2 = 0;
    DistanceMatrix r(spec.m, std::vector<double>(spec.m, 0.0));
    for (std::size_t k = 0; k < num_samples; ++k) {
        const auto slots = sample_without_replacement(s.weights, spec.m, rng);
        const auto h = connection_matrix(s, slots);
        double v = spec.phi_h(h);
        if (v != 0 && need_r) {
            for (std::size_t a = 0; a < spec.m; ++a) {
                for (std::size_t b = a + 1; b < spec.m; ++b) {
                    r[a][b] = r[b][a] = f.distance(s.lineage_of[slots[a]], s.lineage_of[slots[b]], s.time);
                }
            }
            v *= spec.phi_r(r);
        }
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(num_samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1));
    return {mean, std::sqrt(var / n), num_samples, EstimateMode::MonteCarlo};
}

/// Exact value over all ordered m-tuples (at most 1e6 of them).
inline Estimate estimate_monomial_exhaustive(const GraphemeState& s, const GenealogyForest& f,
                                             const MonomialSpec& spec) {
    if (ordered_tuple_count(s.num_vertices(), spec.m) > kExhaustiveLimit) {
        throw ConfigError("exhaustive evaluation infeasible: more than 1e6 ordered tuples");
    }
    const DistanceMatrix r = spec.has_distance_part() ? all_distances(s, f) : DistanceMatrix{};
    const auto h = all_connections(s);
    if (r.empty()) {
        const DistanceMatrix zero(s.num_vertices(), std::vector<double>(s.num_vertices(), 0.0));
        return {exhaustive_monomial(spec, s.weights, zero, h), 0.0, 0, EstimateMode::Exhaustive};
    }
    return {exhaustive_monomial(spec, s.weights, r, h), 0.0, 0, EstimateMode::Exhaustive};
}

/// Homomorphism density estimate with i.i.d. vertices drawn by weight. A
/// repeated vertex reads h(u, u) = 1, the value of its own block.
inline Estimate subgraph_density(const GraphemeState& s, const SubgraphPattern& pattern, std::size_t num_samples,
                                 Rng& rng) {
    if (static_cast<std::size_t>(pattern.vertex_count) > s.num_vertices()) {
        throw ConfigError("pattern has more vertices than the state");
    }
    if (num_samples < 2) throw ConfigError("subgraph_density needs at least 2 samples");
    std::size_t hits = 0;
    for (std::size_t k = 0; k < num_samples; ++k) {
        const auto u = sample_with_replacement(s.weights, static_cast<std::size_t>(pattern.vertex_count), rng);
        bool all = true;
        for (auto [i, j] : pattern.edges) {
            if (!s.connected(u[static_cast<std::size_t>(i)], u[static_cast<std::size_t>(j)])) {
                all = false;
                break;
            }
        }
        hits += all;
    }
    const double n = static_cast<double>(num_samples);
    const double p = static_cast<double>(hits) / n;
    return {p, std::sqrt(p * (1 - p) / (n - 1)), num_samples, EstimateMode::WithReplacement};
}

/// Homomorphism density of a block graphon by sampling W-random graphs:
/// points fall in block i with probability w_i (dust otherwise), and each
/// pattern edge is present independently with the graphon value at its
/// endpoints. Unbiased for t(F, W), diagonal blocks included.
inline Estimate subgraph_density(const StepGraphon& g, const SubgraphPattern& pattern, std::size_t num_samples,
                                 Rng& rng) {
    if (!g.well_formed()) throw ConfigError("subgraph_density: malformed step graphon");
    if (num_samples < 2) throw ConfigError("subgraph_density needs at least 2 samples");
    std::vector<double> cells = g.block_weights;
    cells.push_back(g.dust());
    const std::size_t dust_cell = cells.size() - 1;
    std::vector<std::size_t> cell(static_cast<std::size_t>(pattern.vertex_count));
    std::size_t hits = 0;
    for (std::size_t k = 0; k < num_samples; ++k) {
        for (auto& c : cell) c = ThetaSource::draw_index(cells, rng);
        bool all = true;
        for (auto [i, j] : pattern.edges) {
            const std::size_t a = cell[static_cast<std::size_t>(i)], b = cell[static_cast<std::size_t>(j)];
            const double w = a == dust_cell || b == dust_cell ? 0.0
                             : a == b                       ? g.intra_block_intensity
                                                            : g.inter_block_intensity;
            if (!(rng.uniform() < w)) {
                all = false;
                break;
            }
        }
        hits += all;
    }
    const double n = static_cast<double>(num_samples);
    const double p = static_cast<double>(hits) / n;
    return {p, std::sqrt(p * (1 - p) / (n - 1)), num_samples, EstimateMode::WithReplacement};
}

/// t(F, W) for a block graphon: each connected component of F with v
/// vertices and e edges contributes sum_i w_i^v p^e (an isolated vertex
/// contributes 1).
inline double exact_block_density(const StepGraphon& g, const SubgraphPattern& pattern) {
    double out = 1.0;
    for (auto [v, e] : pattern.component_shapes()) {
        if (v == 1) continue;
        double s = 0;
        for (double w : g.block_weights) s += std::pow(w, v);
        out *= s * std::pow(g.intra_block_intensity, e);
    }
    return out;
}

/// Symmetric step function on a partition of [0, 1] into cells.
struct StepFunction {
    std::vector<double> widths;
    std::vector<std::vector<double>> values;

    /// Blocks in size order, then one dust cell of value 0.
    static StepFunction from_graphon(const StepGraphon& g) {
        StepFunction f;
        f.widths = g.block_weights;
        const double dust = g.dust();
        if (dust > 1e-15) f.widths.push_back(dust);
        const std::size_t k = f.widths.size();
        f.values.assign(k, std::vector<double>(k, g.inter_block_intensity));
        for (std::size_t i = 0; i < g.block_weights.size(); ++i) f.values[i][i] = g.intra_block_intensity;
        if (dust > 1e-15) {
            for (std::size_t i = 0; i < k; ++i) f.values[k - 1][i] = f.values[i][k - 1] = 0.0;
        }
        return f;
    }

    std::vector<double> breakpoints() const {
        std::vector<double> b{0.0};
        for (double w : widths) b.push_back(b.back() + w);
        return b;
    }

    double value_at(double x, double y) const {
        const auto b = breakpoints();
        auto cell = [&](double z) {
            auto it = std::upper_bound(b.begin(), b.end(), z);
            std::size_t i = static_cast<std::size_t>(it - b.begin());
            return std::min(i == 0 ? 0 : i - 1, widths.size() - 1);
        };
        return values[cell(x)][cell(y)];
    }
};

inline constexpr std::size_t kMaxCutCells = 15;

/// Labeled cut norm of g1 - g2 on their common refinement. For each subset S
/// of cells the best T takes the cells with positive (or negative) column
/// sums, so the 2^k x 2^k search costs 2^k k^2.
inline double cut_norm_step(const StepFunction& g1, const StepFunction& g2) {
    std::vector<double> cuts = g1.breakpoints();
    const auto b2 = g2.breakpoints();
    cuts.insert(cuts.end(), b2.begin(), b2.end());
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> grid;
    for (double c : cuts) {
        if (grid.empty() || c - grid.back() > 1e-12) grid.push_back(c);
    }
    if (grid.back() < 1.0 - 1e-12) grid.push_back(1.0);
    const std::size_t k = grid.size() - 1;
    if (k > kMaxCutCells) throw ConfigError("cut norm: more than 15 cells on the common grid");
    std::vector<double> width(k), mid(k);
    for (std::size_t i = 0; i < k; ++i) {
        width[i] = grid[i + 1] - grid[i];
        mid[i] = 0.5 * (grid[i] + grid[i + 1]);
    }
    std::vector<std::vector<double>> diff(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            diff[i][j] = width[i] * width[j] * (g1.value_at(mid[i], mid[j]) - g2.value_at(mid[i], mid[j]));
        }
    }
    double best = 0;
    std::vector<double> col(k);
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        std::fill(col.begin(), col.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            if (!(mask >> i & 1u)) continue;
            for (std::size_t j = 0; j < k; ++j) col[j] += diff[i][j];
        }
        double pos = 0, neg = 0;
        for (double c : col) (c > 0 ? pos : neg) += c;
        best = std::max({best, pos, -neg});
    }
    return best;
}

inline double cut_norm_step(const StepGraphon& g1, const StepGraphon& g2) {
    return cut_norm_step(StepFunction::from_graphon(g1), StepFunction::from_graphon(g2));
}

struct CutDistanceBounds {
    double lower = 0.0;          // counting lemma, invariant under rearrangement
    double labeled_upper = 0.0;  // labeled cut norm of the size-ordered layouts; NaN if too many cells
};

/// Bounds on the cut distance between block graphons: |t(F,U) - t(F,W)| <=
/// e(F) d(U, W) for edge, 2-path, triangle and 3-star gives the lower bound.
inline CutDistanceBounds cut_distance_bounds(const StepGraphon& g1, const StepGraphon& g2) {
    CutDistanceBounds out;
    const std::vector<SubgraphPattern> patterns{SubgraphPattern::edge(), SubgraphPattern::path2(),
                                                SubgraphPattern::triangle(),
                                                SubgraphPattern(4, {{0, 1}, {0, 2}, {0, 3}})};
    for (const auto& f : patterns) {
        const double gap = std::abs(exact_block_density(g1, f) - exact_block_density(g2, f));
        out.lower = std::max(out.lower, gap / static_cast<double>(f.edges.size()));
    }
    try {
        out.labeled_upper = cut_norm_step(g1, g2);
    } catch (const ConfigError&) {
        out.labeled_upper = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
};

/// Asymptotic Kolmogorov distribution tail with Stephens' small-sample
/// correction of the argument.
inline double kolmogorov_p_value(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3) return 1.0;
    double sum = 0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

/// Two-sided one-sample Kolmogorov-Smirnov test.
inline TestResult ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, kolmogorov_p_value(d, sample.size()), 0.0};
}

/// Pearson goodness of fit; cells with zero expected probability must be empty.
inline TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probabilities) {
    if (observed.size() != probabilities.size() || observed.size() < 2) {
        throw std::invalid_argument("chi_square_gof: need matching tables with at least two cells");
    }
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    double stat = 0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = total * probabilities[i];
        if (e <= 0) {
            if (observed[i] > 0) return {std::numeric_limits<double>::infinity(), 0.0, 0.0};
            continue;
        }
        stat += (observed[i] - e) * (observed[i] - e) / e;
        ++cells;
    }
    const double dof = static_cast<double>(cells) - 1;
    return {stat, dof > 0 ? boost::math::gamma_q(dof / 2, stat / 2) : 1.0, dof};
}

/// Pearson test that the rows of a contingency table share one distribution.
inline TestResult chi_square_homogeneity(const std::vector<std::vector<double>>& table) {
    if (table.size() < 2) throw std::invalid_argument("chi_square_homogeneity: need two rows");
    const std::size_t cols = table[0].size();
    std::vector<double> col_sum(cols, 0.0), row_sum(table.size(), 0.0);
    double total = 0;
    for (std::size_t r = 0; r < table.size(); ++r) {
        if (table[r].size() != cols) throw std::invalid_argument("chi_square_homogeneity: ragged table");
        for (std::size_t c = 0; c < cols; ++c) {
            col_sum[c] += table[r][c];
            row_sum[r] += table[r][c];
            total += table[r][c];
        }
    }
    double stat = 0;
    std::size_t used_cols = 0;
    for (std::size_t c = 0; c < cols; ++c) {
        if (col_sum[c] <= 0) continue;
        ++used_cols;
        for (std::size_t r = 0; r < table.size(); ++r) {
            const double e = row_sum[r] * col_sum[c] / total;
            stat += (table[r][c] - e) * (table[r][c] - e) / e;
        }
    }
    const double dof = static_cast<double>((table.size() - 1) * (used_cols > 0 ? used_cols - 1 : 0));
    return {stat, dof > 0 ? boost::math::gamma_q(dof / 2, stat / 2) : 1.0, dof};
}

}  // namespace grapheme
