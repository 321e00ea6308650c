#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "grapheme/errors.hpp"
#include "grapheme/rng.hpp"
#include "grapheme/state.hpp"

namespace grapheme {

/// Size-ordered weights plus the mass left after truncation.
struct WeightVector {
    std::vector<double> weights;
    double remainder = 0.0;

    double sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

    bool well_formed() const {
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] < 0) return false;
            if (i > 0 && weights[i] > weights[i - 1]) return false;
        }
        return remainder >= 0 && sum() <= 1.0 + 1e-12;
    }

    static WeightVector sorted(std::vector<double> w, double remainder = 0.0) {
        std::sort(w.begin(), w.end(), std::greater<>());
        return {std::move(w), remainder};
    }
};

/// Stick breaking with Beta(1, theta) fractions, truncated after k sticks.
inline WeightVector gem_sample(double theta, std::size_t k, Rng& rng) {
    if (!(theta > 0)) throw ConfigError("gem_sample needs theta > 0");
    if (k < 1) throw ConfigError("gem_sample needs k >= 1");
    boost::random::beta_distribution<double> beta(1.0, theta);
    std::vector<double> w;
    w.reserve(k);
    double left = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double v = beta(rng);
        w.push_back(left * v);
        left *= 1.0 - v;
    }
    return WeightVector::sorted(std::move(w), left);
}

struct MoranGammaSample {
    double total_mass = 0.0;
    WeightVector weights;
};

/// Gamma subordinator at its equilibrium: total mass Gamma(shape theta_total,
/// rate c_over_b), independent Poisson-Dirichlet(theta_total) proportions
/// (size-ordered stick breaking, k sticks).
inline MoranGammaSample moran_gamma_sample(double theta_total, double c_over_b, Rng& rng, std::size_t k = 200) {
    if (!(theta_total > 0) || !(c_over_b > 0)) throw ConfigError("moran_gamma_sample needs positive parameters");
    boost::random::gamma_distribution<double> gamma(theta_total, 1.0 / c_over_b);
    MoranGammaSample out;
    out.total_mass = gamma(rng);
    out.weights = gem_sample(theta_total, k, rng);
    return out;
}

/// Sum of squared weights; the truncation remainder counts as dust.
inline double edge_density(const WeightVector& w) {
    double s = 0;
    for (double x : w.weights) s += x * x;
    return s;
}

struct ComponentAge {
    double age = 0.0;
    double mass = 0.0;
    std::size_t size = 0;
};

inline std::map<ComponentId, ComponentAge> component_ages(const GraphemeState& s) {
    std::map<ComponentId, ComponentAge> out;
    for (std::size_t i = 0; i < s.num_vertices(); ++i) {
        auto& a = out[s.component_of[i]];
        a.mass += s.weights[i];
        ++a.size;
    }
    for (auto& [c, a] : out) {
        auto it = s.founder_time.find(c);
        if (it == s.founder_time.end()) throw std::invalid_argument("component without founder time");
        a.age = s.time - it->second;
    }
    return out;
}

/// Unordered pairs and triples inside one component, as fractions of all
/// pairs and triples (the without-replacement versions of sum w^2 and sum w^3,
/// unbiased under uniform weights).
struct ClusterFractions {
    double pairs = 0.0;
    double triples = 0.0;
};

inline ClusterFractions cluster_fractions(const GraphemeState& s) {
    const double n = static_cast<double>(s.num_vertices());
    ClusterFractions f;
    for (const auto& [c, k] : s.component_sizes()) {
        const double x = static_cast<double>(k);
        f.pairs += x * (x - 1);
        f.triples += x * (x - 1) * (x - 2);
    }
    f.pairs = n >= 2 ? f.pairs / (n * (n - 1)) : 0.0;
    f.triples = n >= 3 ? f.triples / (n * (n - 1) * (n - 2)) : 0.0;
    return f;
}

struct FrequencyPath {
    std::vector<double> times;
    std::vector<double> values;
    bool hit_zero = false;
    double hit_zero_time = 0.0;
    bool hit_one = false;  // reported; the upper boundary is not reachable in the limit
};

/// Euler-Maruyama for dX = -c X dt + sqrt(d X (1 - X)) dW, absorbed at 0
/// (and stopped, with a flag, if it reaches 1). Every `record_every`-th
/// point is kept.
inline FrequencyPath frequency_diffusion(double c, double d, double x0, double dt, double horizon, Rng& rng,
                                         std::size_t record_every = 1) {
    if (!(dt > 0)) throw ConfigError("frequency_diffusion needs dt > 0");
    if (dt * (c + d) > 0.1) throw ConfigError("dt too large: dt * (c + d) must not exceed 0.1");
    if (!(x0 >= 0 && x0 <= 1)) throw ConfigError("x0 must lie in [0, 1]");
    if (record_every == 0) record_every = 1;
    boost::random::normal_distribution<double> normal;
    FrequencyPath p;
    double x = x0, t = 0;
    p.times.push_back(0);
    p.values.push_back(x);
    if (x == 0) p.hit_zero = true;
    const std::size_t steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    const double sq = std::sqrt(dt);
    for (std::size_t i = 1; i <= steps && !p.hit_zero && !p.hit_one; ++i) {
        x += -c * x * dt + std::sqrt(d * x * (1 - x)) * sq * normal(rng);
        t = static_cast<double>(i) * dt;
        if (x <= 0) {
            x = 0;
            p.hit_zero = true;
            p.hit_zero_time = t;
        } else if (x >= 1) {
            x = 1;
            p.hit_one = true;
        }
        if (i % record_every == 0 || p.hit_zero || p.hit_one || i == steps) {
            p.times.push_back(t);
            p.values.push_back(x);
        }
    }
    if (x0 == 0) {
        // Absorbing start: the path stays at zero up to the horizon.
        p.times.push_back(horizon);
        p.values.push_back(0.0);
    }
    return p;
}

}  // namespace grapheme
