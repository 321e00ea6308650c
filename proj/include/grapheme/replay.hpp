#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "grapheme/dynamics.hpp"

namespace grapheme {

/// Scripted replay of the dynamic social network walk-through: three
/// unrelated individuals, two influence (resampling) events, an unconnected
/// newcomer and a newcomer joining the first component.
struct ReplayStep {
    double event_time = 0.0;
    double observed_at = 0.0;
    std::string description;
    std::vector<std::set<int>> components;  // 1-based individual labels
    std::vector<int> labels;                // label of each row/column below
    std::vector<std::vector<double>> transformed;
};

struct ReplayResult {
    std::vector<ReplayStep> steps;
};

/// Initial individuals are pairwise infinitely far apart (transformed
/// distance 1). Tables are read half a time unit after each event, so a
/// vertex that just joined sits at distance 2 * 0.5 = 1 from the vertex it
/// joined through, i.e. at transformed distance 1 - e^-1.
inline ReplayResult replay_social_network_example(double observation_lag = 0.5) {
    auto forest = GenealogyForest::with_roots(3);
    forest.set_unrelated_roots_infinite(true);
    DynamicsParams params;
    params.d = 1.0;
    params.size_mode = SizeMode::Variable;
    Simulator sim(singletons(3), std::move(forest), params);

    // Vertex ids 0, 1, 2 are x1, x2, x3; newcomers get ids 3 and 4.
    auto label_of = [](VertexId id) { return static_cast<int>(id) + 1; };
    ReplayResult result;
    auto record = [&](double event_time, std::string what) {
        ReplayStep step;
        step.event_time = event_time;
        step.observed_at = event_time + observation_lag;
        step.description = std::move(what);
        const auto& s = sim.state();
        std::map<ComponentId, std::set<int>> comps;
        std::vector<std::pair<int, LineageSlot>> rows;
        for (std::size_t i = 0; i < s.num_vertices(); ++i) {
            comps[s.component_of[i]].insert(label_of(s.vertex_ids[i]));
            rows.emplace_back(label_of(s.vertex_ids[i]), s.lineage_of[i]);
        }
        std::sort(rows.begin(), rows.end());
        for (auto& [c, members] : comps) step.components.push_back(members);
        std::sort(step.components.begin(), step.components.end(),
                  [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
        for (auto& [label, lineage] : rows) step.labels.push_back(label);
        step.transformed.assign(rows.size(), std::vector<double>(rows.size(), 0.0));
        for (std::size_t a = 0; a < rows.size(); ++a) {
            for (std::size_t b = 0; b < rows.size(); ++b) {
                step.transformed[a][b] =
                    transformed_distance(sim.forest().distance(rows[a].second, rows[b].second, step.observed_at));
            }
        }
        result.steps.push_back(std::move(step));
    };

    record(0.0, "three unrelated individuals");
    sim.resample(0, 1, 1.0);
    record(1.0, "x1 influences x2");
    sim.resample(0, 2, 2.0);
    record(2.0, "x1 influences x3");
    sim.immigrate(sim.fresh_label(), 3.0);
    record(3.0, "x4 joins without connections");
    sim.birth(0, 4.0);
    record(4.0, "x5 joins through x1");
    return result;
}

}  // namespace grapheme
