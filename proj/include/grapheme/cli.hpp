#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grapheme/io.hpp"
#include "grapheme/parallel.hpp"
#include "grapheme/replay.hpp"

namespace grapheme {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitAssert = 3 };

/// Verbosity from GRAPHEME_LOG: quiet, error, warn (default), info, debug.
class Log {
public:
    enum Level { Quiet, Error, Warn, Info, Debug };

    explicit Log(std::ostream& os) : os_(os) {
        const char* env = std::getenv("GRAPHEME_LOG");
        const std::string v = env ? env : "warn";
        if (v == "quiet") level_ = Quiet;
        else if (v == "error") level_ = Error;
        else if (v == "info") level_ = Info;
        else if (v == "debug") level_ = Debug;
        else level_ = Warn;
    }

    void error(const std::string& m) { emit(Error, "error", m); }
    void warn(const std::string& m) { emit(Warn, "warn", m); }
    void info(const std::string& m) { emit(Info, "info", m); }
    void debug(const std::string& m) { emit(Debug, "debug", m); }

private:
    void emit(Level l, const char* tag, const std::string& m) {
        if (level_ >= l) os_ << "[grapheme " << tag << "] " << m << '\n';
    }
    std::ostream& os_;
    Level level_ = Warn;
};

struct CliOptions {
    std::string mode;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    std::string out_dir = "grapheme-out";
    bool assert_mode = false;
    unsigned workers = 0;
    std::vector<std::string> inputs;  // aggregate
    double from_time = 0.0;           // aggregate
    std::vector<std::string> tolerances;
};

namespace cli_detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw RuntimeFailure("cannot write " + p.string());
    return os;
}

inline std::string replica_name(const std::string& stem, std::size_t r, const std::string& ext) {
    std::ostringstream os;
    os << stem << "_r" << std::setw(4) << std::setfill('0') << r << ext;
    return os.str();
}

inline std::vector<MonomialSpec> monomials_or_default(const RunConfig& cfg) {
    if (!cfg.monomials.empty()) return cfg.monomials;
    return {MonomialSpec::parse("m=2 h=12")};
}

struct Context {
    RunConfig cfg;
    CliOptions opt;
    std::filesystem::path out;
    std::ostream& stdout_;
    Log& log;
};

inline int simulate(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const DynamicsParams params = cfg.effective_params();
    const InitialState init = build_initial(cfg);
    const Json echo = config_echo(cfg);
    std::vector<std::filesystem::path> stats_files(cfg.replicas);
    std::vector<std::string> endings(cfg.replicas);
    parallel_for(cfg.replicas, ctx.opt.workers, [&](std::size_t r) {
        auto rng = replica_rng(cfg.seed, r, kForwardPurpose);
        auto traj = open_out(ctx.out / replica_name("trajectory", r, ".jsonl"));
        stats_files[r] = ctx.out / replica_name("stats", r, ".csv");
        auto stats = open_out(stats_files[r]);
        JsonlWriter writer(traj);
        writer.write(header_record("simulate", echo, cfg.seed, r));
        write_stats_header(stats, cfg.seed);
        RunOptions ro;
        ro.horizon = cfg.horizon;
        ro.snapshot_interval = cfg.snapshot_interval;
        ro.prune_every = cfg.prune_every;
        if (cfg.record_events) ro.on_event = [&](const Event& e) { writer.write(event_record(e)); };
        ro.on_snapshot = [&](const GraphemeState& s) {
            writer.write(snapshot_record(s));
            write_stats_row(stats, take_snapshot(s));
        };
        const auto rec = run(init.state, init.forest, params, ro, rng);
        auto forest = open_out(ctx.out / replica_name("forest", r, ".txt"));
        write_forest(forest, rec.final_forest);
        endings[r] = std::to_string(rec.event_count) + " events, " +
                     (rec.termination == Termination::Absorbed ? "absorbed" : "reached horizon");
    });
    for (std::size_t r = 0; r < cfg.replicas; ++r) ctx.log.info("replica " + std::to_string(r) + ": " + endings[r]);
    std::vector<CsvTable> tables;
    for (const auto& f : stats_files) tables.push_back(read_csv(f));
    const auto summary = aggregate(tables);
    auto os = open_out(ctx.out / "summary.csv");
    write_summary_csv(os, summary);
    ctx.stdout_ << "simulate: " << cfg.replicas << " replica(s) written to " << ctx.out.string() << '\n';
    for (const auto& row : summary) {
        ctx.stdout_ << "  " << row.statistic << " mean " << format_double(row.mean) << " se "
                    << format_double(row.se) << '\n';
    }
    return kExitOk;
}

inline int duality_check(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const DynamicsParams params = cfg.effective_params();
    const InitialState init = build_initial(cfg);
    const auto specs = monomials_or_default(cfg);
    auto csv = open_out(ctx.out / "duality.csv");
    write_duality_header(csv, cfg.seed);
    bool failed = false;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        // Distinct monomials use distinct master seeds so their errors are independent.
        const auto rep = check_duality(init.state, init.forest, params, specs[k], cfg.t, cfg.replicas,
                                       cfg.seed + 7919 * k, ctx.opt.workers);
        write_duality_row(csv, specs[k].name, cfg.t, rep);
        const bool bad = !(std::abs(rep.z) <= cfg.z_threshold);
        failed = failed || bad;
        ctx.stdout_ << (bad ? "FAIL " : "ok   ") << specs[k].name << ": forward " << format_double(rep.lhs)
                    << " +- " << format_double(rep.se_lhs) << ", dual " << format_double(rep.rhs) << " +- "
                    << format_double(rep.se_rhs) << ", z = " << format_double(rep.z) << '\n';
    }
    // One dual path for inspection.
    std::size_t m = 2;
    for (const auto& s : specs) m = std::max(m, s.m);
    auto rng = replica_rng(cfg.seed, 0, kDualPurpose);
    const auto dual = coalescent_run(m, params.d, params.c, params.theta, cfg.t, rng);
    auto traj = open_out(ctx.out / "dual_trajectory.jsonl");
    JsonlWriter writer(traj);
    writer.write(header_record("duality-check", config_echo(cfg), cfg.seed));
    for (const auto& e : dual.history) writer.write(coalescent_event_record(e));
    if (failed && ctx.opt.assert_mode) {
        ctx.log.error("duality check: |z| above " + format_double(cfg.z_threshold));
        return kExitAssert;
    }
    return kExitOk;
}

inline int equilibrium_check(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const DynamicsParams params = cfg.effective_params();
    if (!(params.c > 0)) throw ConfigError("equilibrium-check needs c > 0");
    if (params.b > 0 || params.flip_regime() || params.size_mode != SizeMode::Fixed) {
        throw ConfigError("equilibrium-check covers the fixed-size resampling plus immigration regime");
    }
    const InitialState init = build_initial(cfg);
    const std::size_t n = init.state.num_vertices();
    const double burn_in = cfg.burn_in > 0 ? cfg.burn_in : cfg.horizon;
    const std::size_t R = cfg.replicas;
    std::vector<ClusterFractions> fwd(R), dual(R);
    parallel_for(R, ctx.opt.workers, [&](std::size_t r) {
        auto rng = replica_rng(cfg.seed, r, kForwardPurpose);
        RunOptions ro;
        ro.horizon = burn_in;
        ro.prune_every = cfg.prune_every;
        fwd[r] = cluster_fractions(run(init.state, init.forest, params, ro, rng).final_state);
        auto drng = replica_rng(cfg.seed, r, kDualPurpose);
        dual[r] = cluster_fractions(equilibrium_dual_grapheme(n, params.d, params.c, params.theta, drng));
    });
    auto column = [](const std::vector<ClusterFractions>& v, bool pairs) {
        std::vector<double> x;
        for (const auto& f : v) x.push_back(pairs ? f.pairs : f.triples);
        return mean_and_se(x);
    };
    const auto [fp, fp_se] = column(fwd, true);
    const auto [ft, ft_se] = column(fwd, false);
    const auto [dp, dp_se] = column(dual, true);
    const auto [dt3, dt_se] = column(dual, false);

    auto csv = open_out(ctx.out / "equilibrium.csv");
    csv << csv_schema_line(cfg.seed) << '\n';
    write_csv_row(csv, {"statistic", "forward", "se_forward", "reference", "se_reference", "z"});
    bool failed = false;
    auto report = [&](const std::string& name, double a, double sa, double b, double sb) {
        const double z = pooled_z(a, sa, b, sb);
        const bool bad = !(std::abs(z) <= cfg.z_threshold);
        failed = failed || bad;
        write_csv_row(csv, {name, format_double(a), format_double(sa), format_double(b), format_double(sb),
                            format_double(z)});
        ctx.stdout_ << (bad ? "FAIL " : "ok   ") << name << ": " << format_double(a) << " +- " << format_double(sa)
                    << " vs " << format_double(b) << " +- " << format_double(sb) << ", z = " << format_double(z)
                    << '\n';
    };
    report("pair_fraction_vs_dual", fp, fp_se, dp, dp_se);
    report("triple_fraction_vs_dual", ft, ft_se, dt3, dt_se);
    const bool pure = params.theta.atomless() && params.m_mut == 0 && params.s_sel == 0;
    double theta_hat = 0;
    if (pure) {
        report("pair_fraction_vs_closed_form", fp, fp_se, params.d / (params.d + 2 * params.c), 0.0);
        theta_hat = 1.0 / fp - 1.0;
        report("triple_fraction_vs_fitted_prediction", ft, ft_se, 2.0 / ((1 + theta_hat) * (2 + theta_hat)), 0.0);
    }
    if (pure && theta_hat > 0) {
        std::vector<WeightVector> rows;
        auto grng = replica_rng(cfg.seed, 0, 3);
        for (std::size_t r = 0; r < R; ++r) rows.push_back(gem_sample(theta_hat, cfg.gem_sticks, grng));
        auto gem = open_out(ctx.out / "gem.csv");
        write_gem_csv(gem, rows, cfg.gem_sticks, theta_hat, cfg.seed);
    }
    if (failed && ctx.opt.assert_mode) return kExitAssert;
    return kExitOk;
}

inline int estimate(Context& ctx) {
    const auto& cfg = ctx.cfg;
    InitialState init = build_initial(cfg);
    GraphemeState state = init.state;
    GenealogyForest forest = init.forest;
    const DynamicsParams& p = cfg.params;
    const bool frozen = p.d == 0 && p.b == 0 && p.c == 0 && p.m_mut == 0 && p.s_sel == 0 && p.a_plus == 0 &&
                        p.a_minus == 0;
    if (!frozen) {
        auto rng = replica_rng(cfg.seed, 0, kForwardPurpose);
        RunOptions ro;
        ro.horizon = cfg.horizon;
        ro.prune_every = cfg.prune_every;
        auto rec = run(state, forest, cfg.effective_params(), ro, rng);
        state = std::move(rec.final_state);
        forest = std::move(rec.final_forest);
    }
    auto csv = open_out(ctx.out / "estimates.csv");
    write_estimate_header(csv, cfg.seed);
    auto rng = replica_rng(cfg.seed, 0, 4);
    for (const auto& spec : monomials_or_default(cfg)) {
        const auto mc = estimate_monomial(state, forest, spec, cfg.num_samples, rng);
        write_estimate_row(csv, spec.name, mc, cfg.seed);
        ctx.stdout_ << spec.name << ": " << to_string(mc.mode) << " " << format_double(mc.mean) << " +- "
                    << format_double(mc.se);
        if (ordered_tuple_count(state.num_vertices(), spec.m) <= kExhaustiveLimit) {
            const auto ex = estimate_monomial_exhaustive(state, forest, spec);
            write_estimate_row(csv, spec.name, ex, cfg.seed);
            ctx.stdout_ << ", exact " << format_double(ex.mean);
        }
        ctx.stdout_ << '\n';
    }
    return kExitOk;
}

inline int freq_diffusion(Context& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<char> hit(cfg.replicas);
    std::vector<double> final_value(cfg.replicas);
    const auto record_every = static_cast<std::size_t>(std::max(1.0, std::round(0.01 / cfg.dt)));
    std::optional<FrequencyPath> first;
    parallel_for(cfg.replicas, ctx.opt.workers, [&](std::size_t r) {
        auto rng = replica_rng(cfg.seed, r, 5);
        auto path = frequency_diffusion(cfg.params.c, cfg.params.d, cfg.x0, cfg.dt, cfg.horizon, rng, record_every);
        hit[r] = path.hit_zero;
        final_value[r] = path.values.back();
        if (r == 0) first = std::move(path);
    });
    std::vector<double> h(hit.begin(), hit.end());
    const auto [frac, se] = mean_and_se(h);
    const auto [mean_final, se_final] = mean_and_se(final_value);
    auto csv = open_out(ctx.out / "freq_diffusion.csv");
    csv << csv_schema_line(cfg.seed) << '\n';
    write_csv_row(csv, {"c", "d", "x0", "dt", "horizon", "replicas", "hit_zero_fraction", "se", "mean_final",
                        "se_mean_final"});
    write_csv_row(csv, {format_double(cfg.params.c), format_double(cfg.params.d), format_double(cfg.x0),
                        format_double(cfg.dt), format_double(cfg.horizon), std::to_string(cfg.replicas),
                        format_double(frac), format_double(se), format_double(mean_final),
                        format_double(se_final)});
    auto path_csv = open_out(ctx.out / "freq_path_r0000.csv");
    path_csv << csv_schema_line(cfg.seed) << '\n';
    write_csv_row(path_csv, {"time", "x"});
    for (std::size_t i = 0; i < first->times.size(); ++i) {
        write_csv_row(path_csv, {format_double(first->times[i]), format_double(first->values[i])});
    }
    ctx.stdout_ << "hit-zero fraction " << format_double(frac) << " +- " << format_double(se) << " (c/d = "
                << format_double(cfg.params.c / cfg.params.d) << ")\n";
    return kExitOk;
}

inline int replay_example(Context& ctx) {
    const auto result = replay_social_network_example();
    auto csv = open_out(ctx.out / "replay.csv");
    csv << csv_schema_line() << '\n';
    write_csv_row(csv, {"step", "event_time", "observed_at", "x", "y", "transformed_distance"});
    for (std::size_t k = 0; k < result.steps.size(); ++k) {
        const auto& st = result.steps[k];
        ctx.stdout_ << "step " << k + 1 << " (t = " << format_double(st.event_time) << "): " << st.description
                    << "\n  components:";
        for (const auto& comp : st.components) {
            ctx.stdout_ << " {";
            bool first = true;
            for (int v : comp) {
                ctx.stdout_ << (first ? "" : ",") << v;
                first = false;
            }
            ctx.stdout_ << '}';
        }
        ctx.stdout_ << "\n  transformed distances at t = " << format_double(st.observed_at) << ":\n";
        for (std::size_t i = 0; i < st.labels.size(); ++i) {
            ctx.stdout_ << "   ";
            for (std::size_t j = 0; j < st.labels.size(); ++j) {
                ctx.stdout_ << ' ' << std::fixed << std::setprecision(4) << st.transformed[i][j];
                if (i < j) {
                    write_csv_row(csv, {std::to_string(k + 1), format_double(st.event_time),
                                        format_double(st.observed_at), std::to_string(st.labels[i]),
                                        std::to_string(st.labels[j]), format_double(st.transformed[i][j])});
                }
            }
            ctx.stdout_ << std::defaultfloat << '\n';
        }
    }
    return kExitOk;
}

inline int aggregate_mode(Context& ctx) {
    if (ctx.opt.inputs.empty()) throw ConfigError("aggregate needs at least one input file");
    std::vector<CsvTable> tables;
    for (const auto& f : ctx.opt.inputs) tables.push_back(read_csv(f));
    AggregateOptions ao;
    ao.from_time = ctx.opt.from_time;
    for (const auto& t : ctx.opt.tolerances) {
        // statistic=target or statistic=target:max_abs_z
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("tolerance must be statistic=target[:max_abs_z]");
        Tolerance tol;
        const auto rest = t.substr(eq + 1);
        const auto colon = rest.find(':');
        tol.target = parse_double(rest.substr(0, colon), "tolerance target");
        if (colon != std::string::npos) tol.max_abs_z = parse_double(rest.substr(colon + 1), "tolerance z");
        ao.tolerances[t.substr(0, eq)] = tol;
    }
    const auto rows = aggregate(tables, ao);
    auto os = open_out(ctx.out / "summary.csv");
    write_summary_csv(os, rows);
    bool failed = false;
    for (const auto& r : rows) {
        ctx.stdout_ << r.statistic << ": " << format_double(r.mean) << " +- " << format_double(r.se);
        if (r.tolerance) ctx.stdout_ << " (z = " << format_double(r.z) << ", " << (r.pass ? "pass" : "fail") << ')';
        ctx.stdout_ << '\n';
        failed = failed || !r.pass;
    }
    return failed && ctx.opt.assert_mode ? kExitAssert : kExitOk;
}

}  // namespace cli_detail

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Log log(err);
    CliOptions opt;
    CLI::App app{"Simulation and verification of grapheme-valued dynamics"};
    app.set_help_flag("-h,--help");
    std::string positional_mode;
    app.add_option("mode_positional", positional_mode,
                   "simulate | duality-check | equilibrium-check | estimate | freq-diffusion | replay-example | aggregate");
    app.add_option("--mode", opt.mode, "Mode name (alternative to the positional form)");
    app.add_option("--config", opt.config_path, "Flat key-value configuration file");
    app.add_option("--seed", opt.seed, "Master seed (overrides the config)");
    app.add_option("--replicas", opt.replicas, "Replica count (overrides the config)");
    app.add_option("--out", opt.out_dir, "Output directory");
    app.add_flag("--assert", opt.assert_mode, "Exit with code 3 when a check fails");
    app.add_option("--workers", opt.workers, "Worker threads (0: available parallelism)");
    app.add_option("--input", opt.inputs, "Replica stats files for aggregate")->expected(1, -1);
    app.add_option("--from-time", opt.from_time, "aggregate: ignore rows before this time");
    app.add_option("--tolerance", opt.tolerances, "aggregate: statistic=target[:max_abs_z]");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "grapheme: " << e.what() << '\n';
        return kExitConfig;
    }
    if (opt.mode.empty()) opt.mode = positional_mode;
    if (!positional_mode.empty() && positional_mode != opt.mode) {
        err << "grapheme: conflicting modes '" << positional_mode << "' and '" << opt.mode << "'\n";
        return kExitConfig;
    }
    static const std::vector<std::string> kModes{"simulate",       "duality-check",  "equilibrium-check", "estimate",
                                                 "freq-diffusion", "replay-example", "aggregate"};
    try {
        if (!opt.mode.empty() && std::find(kModes.begin(), kModes.end(), opt.mode) == kModes.end()) {
            throw ConfigError("unknown mode: " + opt.mode);
        }
        RunConfig cfg;
        const bool needs_config = opt.mode != "replay-example" && opt.mode != "aggregate";
        if (needs_config) {
            if (opt.config_path.empty()) throw ConfigError("mode " + opt.mode + " needs --config");
            cfg = load_config(opt.config_path);
        } else if (!opt.config_path.empty()) {
            cfg = load_config(opt.config_path);
        }
        if (opt.mode.empty()) opt.mode = cfg.mode;
        if (opt.mode.empty()) throw ConfigError("no mode given");
        if (std::find(kModes.begin(), kModes.end(), opt.mode) == kModes.end()) {
            throw ConfigError("unknown mode: " + opt.mode);
        }
        if (!cfg.mode.empty() && cfg.mode != opt.mode) {
            log.warn("config mode '" + cfg.mode + "' overridden by '" + opt.mode + "'");
        }
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.replicas) {
            if (*opt.replicas < 1) throw ConfigError("--replicas must be at least 1");
            cfg.replicas = *opt.replicas;
        }
        std::filesystem::path out_dir(opt.out_dir);
        std::filesystem::create_directories(out_dir);
        cli_detail::Context ctx{cfg, opt, out_dir, out, log};
        log.info("mode " + opt.mode + ", seed " + std::to_string(cfg.seed) + ", replicas " +
                 std::to_string(cfg.replicas));
        if (opt.mode == "simulate") return cli_detail::simulate(ctx);
        if (opt.mode == "duality-check") return cli_detail::duality_check(ctx);
        if (opt.mode == "equilibrium-check") return cli_detail::equilibrium_check(ctx);
        if (opt.mode == "estimate") return cli_detail::estimate(ctx);
        if (opt.mode == "freq-diffusion") return cli_detail::freq_diffusion(ctx);
        if (opt.mode == "replay-example") return cli_detail::replay_example(ctx);
        if (opt.mode == "aggregate") return cli_detail::aggregate_mode(ctx);
        throw ConfigError("unknown mode: " + opt.mode);
    } catch (const ConfigError& e) {
        err << "grapheme: configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "grapheme: runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace grapheme
