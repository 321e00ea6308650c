#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grapheme/coalescent.hpp"
#include "grapheme/dynamics.hpp"
#include "grapheme/equilibria.hpp"
#include "grapheme/errors.hpp"
#include "grapheme/estimators.hpp"
#include "grapheme/monomial.hpp"

namespace grapheme {

inline constexpr const char* kSchemaVersion = "grapheme-v1";

using Json = nlohmann::ordered_json;

/// Shortest decimal form that round-trips; "inf"/"-inf"/"nan" otherwise.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, const std::string& what) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw ConfigError("bad number for " + what + ": '" + text + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    std::uint64_t v = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        throw ConfigError("bad unsigned integer for " + what + ": '" + text + "'");
    }
    return v;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    return out;
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_double(item, what));
    if (out.empty()) throw ConfigError("empty list for " + what);
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class InitialKind { Singletons, Partition, Snapshot };

struct InitialSpec {
    InitialKind kind = InitialKind::Singletons;
    std::vector<std::size_t> blocks;  // partition block sizes
    std::string path;                 // snapshot file
};

enum class Scaling { None, DW };

struct RunConfig {
    std::string mode;
    DynamicsParams params;
    Scaling scaling = Scaling::None;
    std::size_t n0 = 0;
    InitialSpec initial;
    double horizon = 1.0;
    double snapshot_interval = 0.0;
    std::size_t replicas = 1;
    std::uint64_t seed = 1;
    bool record_events = true;
    std::uint64_t prune_every = 10000;

    // Mode-specific keys.
    std::vector<MonomialSpec> monomials;
    double t = 1.0;                   // duality-check time
    std::size_t num_samples = 10000;  // estimate
    double burn_in = 0.0;             // equilibrium-check
    double fk_multiplier = 1.0;
    double x0 = 0.5;                  // freq-diffusion
    double dt = 1e-3;
    std::size_t gem_sticks = 50;
    double z_threshold = 4.0;

    /// Raw key/value pairs in file order, echoed into output headers.
    std::vector<std::pair<std::string, std::string>> raw;

    DynamicsParams effective_params() const {
        return scaling == Scaling::DW ? with_dw_scaling(params, n0) : params;
    }
};

/// Parses the flat key-value grammar:
///   line    := blank | comment | key '=' value
///   comment := '#' anything
/// Keys are case-sensitive; every key except `monomial` may appear once.
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::map<std::string, std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
        }
        if (key != "monomial" && !seen.emplace(key, value).second) throw ConfigError("duplicate key: " + key);
        cfg.raw.emplace_back(key, value);

        auto& p = cfg.params;
        auto num = [&] { return parse_double(value, key); };
        auto count = [&] { return static_cast<std::size_t>(parse_u64(value, key)); };
        if (key == "mode") cfg.mode = value;
        else if (key == "n0") cfg.n0 = count();
        else if (key == "d") p.d = num();
        else if (key == "b") p.b = num();
        else if (key == "c") p.c = num();
        else if (key == "theta") {
            if (value == "atomless") p.theta.atom_weights.clear();
            else p.theta.atom_weights = parse_double_list(value, key);
        } else if (key == "m_mut") p.m_mut = num();
        else if (key == "kernel") {
            p.kernel.transition.clear();
            if (value != "atomless") {
                for (const auto& row : split(value, ';')) p.kernel.transition.push_back(parse_double_list(row, key));
            }
        } else if (key == "s_sel") p.s_sel = num();
        else if (key == "fitness") p.fitness = parse_double_list(value, key);
        else if (key == "fresh_fitness") p.fresh_fitness = num();
        else if (key == "a_plus") p.a_plus = num();
        else if (key == "a_minus") p.a_minus = num();
        else if (key == "size_mode") {
            if (value == "fixed") p.size_mode = SizeMode::Fixed;
            else if (value == "variable") p.size_mode = SizeMode::Variable;
            else throw ConfigError("size_mode must be fixed or variable");
        } else if (key == "scaling") {
            if (value == "none") cfg.scaling = Scaling::None;
            else if (value == "dw") cfg.scaling = Scaling::DW;
            else throw ConfigError("scaling must be none or dw");
        } else if (key == "horizon") cfg.horizon = num();
        else if (key == "snapshot_interval") cfg.snapshot_interval = num();
        else if (key == "replicas") cfg.replicas = count();
        else if (key == "seed") cfg.seed = parse_u64(value, key);
        else if (key == "initial") {
            if (value == "singletons") {
                cfg.initial.kind = InitialKind::Singletons;
            } else if (value.rfind("partition:", 0) == 0) {
                cfg.initial.kind = InitialKind::Partition;
                cfg.initial.blocks.clear();
                for (const auto& b : split(value.substr(10), ',')) {
                    const auto size = parse_u64(b, key);
                    if (size == 0) throw ConfigError("partition blocks must be nonempty");
                    cfg.initial.blocks.push_back(size);
                }
            } else if (value.rfind("snapshot:", 0) == 0) {
                cfg.initial.kind = InitialKind::Snapshot;
                cfg.initial.path = trim(value.substr(9));
            } else {
                throw ConfigError("initial must be singletons, partition:<sizes> or snapshot:<path>");
            }
        } else if (key == "record_events") {
            if (value != "true" && value != "false") throw ConfigError("record_events must be true or false");
            cfg.record_events = value == "true";
        } else if (key == "prune_every") cfg.prune_every = parse_u64(value, key);
        else if (key == "monomial") cfg.monomials.push_back(MonomialSpec::parse(value));
        else if (key == "t") cfg.t = num();
        else if (key == "num_samples") cfg.num_samples = count();
        else if (key == "burn_in") cfg.burn_in = num();
        else if (key == "fk_multiplier") cfg.fk_multiplier = num();
        else if (key == "x0") cfg.x0 = num();
        else if (key == "dt") cfg.dt = num();
        else if (key == "gem_sticks") cfg.gem_sticks = count();
        else if (key == "z_threshold") cfg.z_threshold = num();
        else throw ConfigError("unknown config key: " + key);
    }
    if (cfg.initial.kind == InitialKind::Partition && seen.count("n0")) {
        std::size_t total = 0;
        for (auto b : cfg.initial.blocks) total += b;
        if (total != cfg.n0) throw ConfigError("partition sizes do not add up to n0");
    }
    if (cfg.initial.kind == InitialKind::Partition && !seen.count("n0")) {
        cfg.n0 = 0;
        for (auto b : cfg.initial.blocks) cfg.n0 += b;
    }
    if (cfg.replicas < 1) throw ConfigError("replicas must be at least 1");
    if (!(cfg.horizon > 0)) throw ConfigError("horizon must be positive");
    if (cfg.snapshot_interval < 0) throw ConfigError("snapshot_interval must be nonnegative");
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return parse_config(in);
}

inline Json config_echo(const RunConfig& cfg) {
    Json j = Json::object();
    for (const auto& [k, v] : cfg.raw) {
        if (k == "monomial") {
            if (!j.contains("monomial")) j["monomial"] = Json::array();
            j["monomial"].push_back(v);
        } else {
            j[k] = v;
        }
    }
    return j;
}

// ---------------------------------------------------------------------------
// Snapshot and trajectory records (JSON Lines)

inline Json snapshot_record(const GraphemeState& s) {
    Json j;
    j["kind"] = "snapshot";
    j["time"] = s.time;
    Json vertices = Json::array();
    for (std::size_t i = 0; i < s.num_vertices(); ++i) {
        vertices.push_back({{"id", s.vertex_ids[i]}, {"type", s.type_label[i].to_string()},
                            {"component", s.component_of[i]}});
    }
    j["vertices"] = std::move(vertices);
    if (s.flip_regime) {
        Json edges = Json::array();
        for (const auto& e : s.edges_present.sorted()) edges.push_back({e.a, e.b});
        j["edges"] = std::move(edges);
    }
    j["weights"] = s.weights;
    Json founders = Json::array();
    for (const auto& [c, t] : s.founder_time) founders.push_back({{"component", c}, {"founder_time", t}});
    j["components"] = std::move(founders);
    const Snapshot snap = take_snapshot(s);
    j["stats"] = {{"num_vertices", snap.num_vertices},
                  {"num_components", snap.num_components},
                  {"sum_w2", snap.sum_w2},
                  {"sum_w3", snap.sum_w3},
                  {"max_weight", snap.max_weight},
                  {"connected_pair_fraction", snap.connected_pair_fraction},
                  {"present_edge_fraction", snap.present_edge_fraction}};
    return j;
}

/// Rebuilds a state from a snapshot record. Genealogy is not part of the
/// record; the caller starts a fresh forest with one root per vertex.
inline GraphemeState state_from_snapshot(const Json& j) {
    try {
        if (j.at("kind") != "snapshot") throw ConfigError("record is not a snapshot");
        GraphemeState s;
        s.time = j.at("time").get<double>();
        const auto& vs = j.at("vertices");
        for (std::size_t i = 0; i < vs.size(); ++i) {
            const auto& v = vs[i];
            s.vertex_ids.push_back(v.at("id").get<VertexId>());
            s.type_label.push_back(TypeLabel::parse(v.at("type").get<std::string>()));
            s.component_of.push_back(v.at("component").get<ComponentId>());
            s.lineage_of.push_back(static_cast<LineageSlot>(i));
        }
        s.weights = j.at("weights").get<std::vector<double>>();
        if (j.contains("components")) {
            for (const auto& c : j["components"]) {
                s.founder_time[c.at("component").get<ComponentId>()] = c.at("founder_time").get<double>();
            }
        } else {
            for (auto c : s.component_of) s.founder_time.emplace(c, s.time);
        }
        if (j.contains("edges")) {
            s.flip_regime = true;
            for (const auto& e : j["edges"]) s.edges_present.insert(e.at(0).get<VertexId>(), e.at(1).get<VertexId>());
        }
        for (auto id : s.vertex_ids) s.next_vertex_id = std::max(s.next_vertex_id, id + 1);
        for (auto c : s.component_of) s.next_component_id = std::max(s.next_component_id, c + 1);
        for (const auto& [c, t] : s.founder_time) s.next_component_id = std::max(s.next_component_id, c + 1);
        for (const auto& t : s.type_label) {
            if (!t.is_atom() && t.value < kCemeteryLabelBase) {
                s.next_fresh_label = std::max(s.next_fresh_label, t.value + 1);
            }
        }
        auto problems = validate(s);
        if (!problems.empty()) throw ConfigError("snapshot state invalid: " + problems.front().invariant);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed snapshot record: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("malformed snapshot record: ") + e.what());
    }
}

inline Json event_record(const Event& e) {
    return {{"kind", "event"}, {"time", e.time}, {"event", to_string(e.kind)}, {"participants", e.participants}};
}

inline Json coalescent_event_record(const CoalescentEvent& e) {
    Json j{{"kind", "coalescent-event"},
           {"time", e.time},
           {"event", to_string(e.kind)},
           {"members", e.members},
           {"active_after", e.active_after}};
    if (e.label) j["label"] = e.label->to_string();
    return j;
}

inline Json header_record(const std::string& mode, const Json& config, std::uint64_t seed,
                          std::optional<std::uint64_t> replica = std::nullopt) {
    Json j{{"kind", "header"}, {"schema", kSchemaVersion}, {"mode", mode}, {"seed", seed}};
    if (replica) j["replica"] = *replica;
    j["config"] = config;
    return j;
}

/// Writes one compact JSON object per line.
class JsonlWriter {
public:
    explicit JsonlWriter(std::ostream& os) : os_(os) {}
    void write(const Json& j) { os_ << j.dump() << '\n'; }

private:
    std::ostream& os_;
};

/// Reads a JSON Lines file whose first record is a header with the current
/// schema version.
inline std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::vector<Json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("malformed JSON line in " + path.string() + ": " + e.what());
        }
    }
    if (out.empty() || !out.front().contains("schema")) throw ConfigError(path.string() + " has no header record");
    if (out.front()["schema"] != kSchemaVersion) {
        throw ConfigError("schema mismatch in " + path.string() + ": " + out.front()["schema"].dump());
    }
    return out;
}

/// Last snapshot record of a trajectory file.
inline GraphemeState load_snapshot(const std::filesystem::path& path) {
    const auto records = read_jsonl(path);
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        if (it->value("kind", "") == "snapshot") return state_from_snapshot(*it);
    }
    throw ConfigError("no snapshot record in " + path.string());
}

struct InitialState {
    GraphemeState state;
    GenealogyForest forest;
};

inline InitialState build_initial(const RunConfig& cfg) {
    InitialState out;
    switch (cfg.initial.kind) {
        case InitialKind::Singletons:
            if (cfg.n0 < 1) throw ConfigError("n0 must be at least 1");
            out.state = singletons(cfg.n0);
            break;
        case InitialKind::Partition:
            out.state = from_partition(cfg.initial.blocks);
            break;
        case InitialKind::Snapshot:
            out.state = load_snapshot(cfg.initial.path);
            break;
    }
    out.forest = GenealogyForest::with_roots(out.state.num_vertices(), out.state.time);
    if (cfg.params.flip_regime() && !out.state.flip_regime) complete_within_components(out.state);
    return out;
}

// ---------------------------------------------------------------------------
// CSV

/// First line of every CSV file: "# schema=grapheme-v1 ...".
inline std::string csv_schema_line(std::optional<std::uint64_t> seed = std::nullopt) {
    std::string s = std::string("# schema=") + kSchemaVersion;
    if (seed) s += " seed=" + std::to_string(*seed);
    return s;
}

inline const std::vector<std::string>& stats_columns() {
    static const std::vector<std::string> cols{"time",       "num_vertices",           "num_components",
                                               "sum_w2",     "sum_w3",                 "max_weight",
                                               "connected_pair_fraction", "present_edge_fraction"};
    return cols;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

inline void write_stats_header(std::ostream& os, std::uint64_t seed) {
    os << csv_schema_line(seed) << '\n';
    write_csv_row(os, stats_columns());
}

inline void write_stats_row(std::ostream& os, const Snapshot& s) {
    write_csv_row(os, {format_double(s.time), std::to_string(s.num_vertices), std::to_string(s.num_components),
                       format_double(s.sum_w2), format_double(s.sum_w3), format_double(s.max_weight),
                       format_double(s.connected_pair_fraction), format_double(s.present_edge_fraction)});
}

/// Splits one CSV line; double-quoted cells may contain commas.
inline std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.emplace_back();
        } else if (ch != '\r') {
            out.back() += ch;
        }
    }
    if (quoted) throw ConfigError("unterminated quote in CSV line");
    return out;
}

struct CsvTable {
    std::string schema_line;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ConfigError("missing column " + name);
        return static_cast<std::size_t>(it - header.begin());
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# schema=", 0) != 0) {
        throw ConfigError(path.string() + " lacks a schema line");
    }
    t.schema_line = line;
    const auto version = split(line.substr(9), ' ').front();
    if (version != kSchemaVersion) throw ConfigError("schema mismatch in " + path.string() + ": " + version);
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = csv_split(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
        } else {
            if (cells.size() != t.header.size()) throw ConfigError("ragged row in " + path.string());
            t.rows.push_back(std::move(cells));
        }
    }
    if (t.header.empty()) throw ConfigError(path.string() + " has no header row");
    return t;
}

inline void write_estimate_header(std::ostream& os, std::uint64_t seed) {
    os << csv_schema_line(seed) << '\n';
    write_csv_row(os, {"name", "mode", "mean", "se", "num_samples", "seed"});
}

inline void write_estimate_row(std::ostream& os, const std::string& name, const Estimate& e, std::uint64_t seed) {
    write_csv_row(os, {'"' + name + '"', to_string(e.mode), format_double(e.mean), format_double(e.se),
                       std::to_string(e.num_samples), std::to_string(seed)});
}

inline void write_duality_header(std::ostream& os, std::uint64_t seed) {
    os << csv_schema_line(seed) << '\n';
    write_csv_row(os, {"name", "t", "lhs", "se_lhs", "rhs", "se_rhs", "z", "replicas"});
}

inline void write_duality_row(std::ostream& os, const std::string& name, double t, const DualityReport& r) {
    write_csv_row(os, {'"' + name + '"', format_double(t), format_double(r.lhs), format_double(r.se_lhs),
                       format_double(r.rhs), format_double(r.se_rhs), format_double(r.z),
                       std::to_string(r.replicas)});
}

/// GEM sampler output: one weight vector per row, padded to `k` columns,
/// plus the truncation remainder.
inline void write_gem_csv(std::ostream& os, const std::vector<WeightVector>& rows, std::size_t k, double theta,
                          std::uint64_t seed) {
    os << csv_schema_line(seed) << " theta=" << format_double(theta) << '\n';
    std::vector<std::string> header;
    for (std::size_t i = 1; i <= k; ++i) header.push_back("w" + std::to_string(i));
    header.push_back("remainder");
    write_csv_row(os, header);
    for (const auto& w : rows) {
        std::vector<std::string> cells;
        for (std::size_t i = 0; i < k; ++i) cells.push_back(format_double(i < w.weights.size() ? w.weights[i] : 0.0));
        cells.push_back(format_double(w.remainder));
        write_csv_row(os, cells);
    }
}

/// Forest export: schema line, then "id parent_id birth_time" per lineage.
inline void write_forest(std::ostream& os, const GenealogyForest& f) {
    os << "# schema=" << kSchemaVersion << " columns=id,parent_id,birth_time\n";
    f.export_parent_array(os);
}

// ---------------------------------------------------------------------------
// Aggregation of replica statistics

struct Tolerance {
    double target = 0.0;
    double max_abs_z = 3.0;
};

struct SummaryRow {
    std::string statistic;
    std::size_t replicas = 0;
    std::size_t observations = 0;
    double mean = 0.0;
    double se = 0.0;
    std::optional<Tolerance> tolerance;
    double z = 0.0;
    bool pass = true;
};

struct AggregateOptions {
    double from_time = 0.0;  // rows with time < from_time are ignored
    std::map<std::string, Tolerance> tolerances;
};

/// Pools per-replica stats files. Each replica contributes the mean of its
/// rows (time >= from_time) and the standard error of that mean; replicas
/// are weighted equally, so the pooled se is sqrt(sum se_i^2) / k. The
/// operation is commutative in the replica order.
inline std::vector<SummaryRow> aggregate(const std::vector<CsvTable>& tables, const AggregateOptions& opt = {}) {
    if (tables.empty()) throw ConfigError("aggregate needs at least one replica file");
    const auto& header = tables.front().header;
    for (const auto& t : tables) {
        if (t.schema_line.substr(0, 9 + std::string(kSchemaVersion).size()) !=
            tables.front().schema_line.substr(0, 9 + std::string(kSchemaVersion).size())) {
            throw ConfigError("aggregate: schema mismatch between replica files");
        }
        if (t.header != header) throw ConfigError("aggregate: replica files have different columns");
    }
    const bool has_time = std::find(header.begin(), header.end(), "time") != header.end();
    std::vector<SummaryRow> out;
    for (std::size_t col = 0; col < header.size(); ++col) {
        if (header[col] == "time") continue;
        SummaryRow row;
        row.statistic = header[col];
        row.replicas = tables.size();
        double se2 = 0;
        for (const auto& t : tables) {
            std::vector<double> x;
            for (const auto& r : t.rows) {
                if (has_time && parse_double(r[t.column("time")], "time") < opt.from_time) continue;
                x.push_back(parse_double(r[col], header[col]));
            }
            if (x.empty()) throw ConfigError("aggregate: a replica has no rows after from_time");
            const auto [m, se] = mean_and_se(x);
            row.mean += m;
            se2 += se * se;
            row.observations += x.size();
        }
        const double k = static_cast<double>(tables.size());
        row.mean /= k;
        row.se = std::sqrt(se2) / k;
        if (auto it = opt.tolerances.find(row.statistic); it != opt.tolerances.end()) {
            row.tolerance = it->second;
            row.z = pooled_z(row.mean, row.se, it->second.target, 0.0);
            row.pass = std::abs(row.z) <= it->second.max_abs_z;
        }
        out.push_back(row);
    }
    return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << csv_schema_line() << '\n';
    write_csv_row(os, {"statistic", "replicas", "observations", "mean", "se", "target", "z", "pass"});
    for (const auto& r : rows) {
        write_csv_row(os, {r.statistic, std::to_string(r.replicas), std::to_string(r.observations),
                           format_double(r.mean), format_double(r.se),
                           r.tolerance ? format_double(r.tolerance->target) : "",
                           r.tolerance ? format_double(r.z) : "", r.pass ? "pass" : "fail"});
    }
}

}  // namespace grapheme
