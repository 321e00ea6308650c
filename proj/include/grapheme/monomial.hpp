#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "grapheme/errors.hpp"
#include "grapheme/genealogy.hpp"
#include "grapheme/state.hpp"

namespace grapheme {

using DistanceMatrix = std::vector<std::vector<double>>;
using ConnectionMatrix = std::vector<std::vector<std::uint8_t>>;

/// Test function on m sampled vertices:
///   phi_h(h) = prod_{(i,j) in A} h_ij * prod_{(i,j) in B} (1 - h_ij)
///   phi_r(r) = exp(-sum_{i<j} lambda_ij r_ij)
/// Indices are 0-based. An empty A, B and lambda give the constant 1.
struct MonomialSpec {
    std::size_t m = 2;
    std::vector<std::pair<std::size_t, std::size_t>> connected;
    std::vector<std::pair<std::size_t, std::size_t>> disconnected;
    std::vector<std::vector<double>> lambda;  // empty or m x m symmetric
    std::string name;

    void validate() const {
        if (m < 1) throw ConfigError("monomial needs m >= 1");
        auto check_pair = [&](std::pair<std::size_t, std::size_t> p) {
            if (p.first == p.second || p.first >= m || p.second >= m) {
                throw ConfigError("monomial pair out of range in " + name);
            }
        };
        for (auto p : connected) check_pair(p);
        for (auto p : disconnected) check_pair(p);
        if (lambda.empty()) return;
        if (lambda.size() != m) throw ConfigError("lambda matrix has wrong size");
        for (std::size_t i = 0; i < m; ++i) {
            if (lambda[i].size() != m) throw ConfigError("lambda matrix has wrong size");
            for (std::size_t j = 0; j < m; ++j) {
                if (!(lambda[i][j] >= 0) || lambda[i][j] != lambda[j][i]) {
                    throw ConfigError("lambda must be symmetric and nonnegative");
                }
            }
        }
    }

    bool has_distance_part() const {
        for (const auto& row : lambda) {
            for (double v : row) {
                if (v != 0) return true;
            }
        }
        return false;
    }

    template <class H>
    double phi_h(const H& h) const {
        for (auto [i, j] : connected) {
            if (!h[i][j]) return 0.0;
        }
        for (auto [i, j] : disconnected) {
            if (h[i][j]) return 0.0;
        }
        return 1.0;
    }

    template <class R>
    double phi_r(const R& r) const {
        if (lambda.empty()) return 1.0;
        double exponent = 0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                if (lambda[i][j] == 0) continue;
                if (std::isinf(r[i][j])) return 0.0;
                exponent += lambda[i][j] * r[i][j];
            }
        }
        return std::exp(-exponent);
    }

    /// Sum of the lambda entries over i < j: the rate at which phi_r decays
    /// when every distance grows at unit speed.
    double lambda_sum() const {
        double s = 0;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            for (std::size_t j = i + 1; j < lambda.size(); ++j) s += lambda[i][j];
        }
        return s;
    }

    void set_lambda(std::size_t i, std::size_t j, double v) {
        if (lambda.empty()) lambda.assign(m, std::vector<double>(m, 0.0));
        lambda[i][j] = lambda[j][i] = v;
    }

    static MonomialSpec constant(std::size_t m) {
        MonomialSpec s;
        s.m = m;
        s.name = "one";
        return s;
    }

    /// Text form, e.g. "m=3 h=12,13 nh=23 r=12:0.5". Pair digits are
    /// 1-based vertex indices (so m <= 9).
    static MonomialSpec parse(const std::string& text) {
        MonomialSpec s;
        s.name = text;
        std::istringstream in(text);
        std::string token;
        bool have_m = false;
        std::vector<std::string> pending;
        while (in >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) throw ConfigError("bad monomial token: " + token);
            const auto key = token.substr(0, eq);
            const auto value = token.substr(eq + 1);
            if (key == "m") {
                s.m = std::stoul(value);
                have_m = true;
            } else {
                pending.push_back(token);
            }
        }
        if (!have_m) throw ConfigError("monomial needs m=...");
        auto pair_of = [&](const std::string& p) {
            if (p.size() != 2 || p[0] < '1' || p[0] > '9' || p[1] < '1' || p[1] > '9') {
                throw ConfigError("bad index pair: " + p);
            }
            return std::make_pair(static_cast<std::size_t>(p[0] - '1'), static_cast<std::size_t>(p[1] - '1'));
        };
        for (const auto& t : pending) {
            const auto eq = t.find('=');
            const auto key = t.substr(0, eq);
            std::stringstream items(t.substr(eq + 1));
            std::string item;
            while (std::getline(items, item, ',')) {
                if (key == "h") {
                    s.connected.push_back(pair_of(item));
                } else if (key == "nh") {
                    s.disconnected.push_back(pair_of(item));
                } else if (key == "r") {
                    const auto colon = item.find(':');
                    if (colon == std::string::npos) throw ConfigError("distance term needs pair:lambda");
                    const auto p = pair_of(item.substr(0, colon));
                    if (p.first >= s.m || p.second >= s.m) throw ConfigError("distance pair out of range");
                    s.set_lambda(p.first, p.second, std::stod(item.substr(colon + 1)));
                } else {
                    throw ConfigError("unknown monomial key: " + key);
                }
            }
        }
        s.validate();
        return s;
    }
};

/// Connection matrix of the listed vertex slots (diagonal 1).
inline ConnectionMatrix connection_matrix(const GraphemeState& s, const std::vector<std::size_t>& slots) {
    ConnectionMatrix h(slots.size(), std::vector<std::uint8_t>(slots.size(), 1));
    for (std::size_t a = 0; a < slots.size(); ++a) {
        for (std::size_t b = a + 1; b < slots.size(); ++b) {
            h[a][b] = h[b][a] = s.connected(slots[a], slots[b]) ? 1 : 0;
        }
    }
    return h;
}

/// Genealogical distances of every pair of vertices at the state's time.
inline DistanceMatrix all_distances(const GraphemeState& s, const GenealogyForest& f) {
    return f.distance_matrix(s.lineage_of, s.time);
}

inline ConnectionMatrix all_connections(const GraphemeState& s) {
    std::vector<std::size_t> slots(s.num_vertices());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    return connection_matrix(s, slots);
}

inline double ordered_tuple_count(std::size_t n, std::size_t k) {
    double count = 1;
    for (std::size_t i = 0; i < k; ++i) count *= static_cast<double>(n - i);
    return k > n ? 0.0 : count;
}

inline constexpr double kExhaustiveLimit = 1e6;

/// Calls fn(indices, probability) for every ordered k-tuple of distinct
/// indices, with the probability of drawing it by successive sampling
/// without replacement proportional to `weights`.
inline void for_each_ordered_sample(const std::vector<double>& weights, std::size_t k,
                                    const std::function<void(const std::vector<std::size_t>&, double)>& fn) {
    const std::size_t n = weights.size();
    if (k > n) throw ConfigError("sample size exceeds number of vertices");
    if (ordered_tuple_count(n, k) > kExhaustiveLimit) {
        throw ConfigError("exhaustive evaluation infeasible: more than 1e6 ordered tuples");
    }
    std::vector<std::size_t> idx(k);
    std::vector<char> used(n, 0);
    std::function<void(std::size_t, double, double)> rec = [&](std::size_t depth, double prob, double left) {
        if (depth == k) {
            fn(idx, prob);
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i] || weights[i] <= 0) continue;
            used[i] = 1;
            idx[depth] = i;
            rec(depth + 1, prob * weights[i] / left, left - weights[i]);
            used[i] = 0;
        }
    };
    rec(0, 1.0, 1.0);
}

/// Exact expectation of the monomial over an m-sample without replacement
/// from a state described by its full distance and connection matrices.
inline double exhaustive_monomial(const MonomialSpec& spec, const std::vector<double>& weights,
                                  const DistanceMatrix& r, const ConnectionMatrix& h) {
    spec.validate();
    double total = 0;
    std::vector<std::vector<double>> rs(spec.m, std::vector<double>(spec.m, 0.0));
    ConnectionMatrix hs(spec.m, std::vector<std::uint8_t>(spec.m, 1));
    const bool need_r = spec.has_distance_part();
    for_each_ordered_sample(weights, spec.m, [&](const std::vector<std::size_t>& u, double p) {
        for (std::size_t a = 0; a < spec.m; ++a) {
            for (std::size_t b = a + 1; b < spec.m; ++b) {
                hs[a][b] = hs[b][a] = h[u[a]][u[b]];
                if (need_r) rs[a][b] = rs[b][a] = r[u[a]][u[b]];
            }
        }
        const double ph = spec.phi_h(hs);
        if (ph != 0) total += p * ph * spec.phi_r(rs);
    });
    return total;
}

}  // namespace grapheme
