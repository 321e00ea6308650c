#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "grapheme/cli.hpp"

using namespace grapheme;
namespace fs = std::filesystem;

namespace {

fs::path workdir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    auto dir = fs::temp_directory_path() / "grapheme_cli_test" / info->name();
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "grapheme");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kFv =
    "n0 = 25\nd = 1\nc = 0.3\ntheta = atomless\nhorizon = 2\nsnapshot_interval = 0.25\nreplicas = 3\nseed = 5\n";

}  // namespace

TEST(Cli, SimulateWritesTrajectoryAndStats) {
    const auto dir = workdir();
    const auto cfg = write_file(dir / "fv.conf", kFv);
    const auto r = cli({"simulate", "--config", cfg.string(), "--out", (dir / "out").string(), "--workers", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto records = read_jsonl(dir / "out" / "trajectory_r0000.jsonl");
    EXPECT_EQ(records.front()["kind"], "header");
    EXPECT_EQ(records.front()["schema"], "grapheme-v1");
    std::size_t snaps = 0, events = 0;
    double last = -1;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const double t = records[i]["time"];
        EXPECT_GE(t, last);
        last = t;
        snaps += records[i]["kind"] == "snapshot";
        events += records[i]["kind"] == "event";
    }
    EXPECT_EQ(snaps, 9u);
    EXPECT_GT(events, 0u);
    const auto stats = read_csv(dir / "out" / "stats_r0002.csv");
    EXPECT_EQ(stats.rows.size(), 9u);
    for (const auto& row : stats.rows) EXPECT_EQ(row[stats.column("num_vertices")], "25");
    EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "forest_r0001.txt"));
}

TEST(Cli, DeterministicAcrossRerunsAndWorkerCounts) {
    const auto dir = workdir();
    const auto cfg = write_file(dir / "fv.conf", kFv);
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", (dir / "a").string(), "--workers", "1"}).code, 0);
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", (dir / "b").string(), "--workers", "1"}).code, 0);
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", (dir / "c").string(), "--workers", "3"}).code, 0);
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename();
        EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / name)) << name;
        EXPECT_EQ(slurp(entry.path()), slurp(dir / "c" / name)) << name;
    }
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", (dir / "d").string(), "--seed", "6"}).code, 0);
    EXPECT_NE(slurp(dir / "a" / "trajectory_r0000.jsonl"), slurp(dir / "d" / "trajectory_r0000.jsonl"));
}

TEST(Cli, ReplicaStreamsAreUncorrelated) {
    // Paired final statistics of replicas 2k and 2k+1: correlation 0 within 3 se.
    const auto dir = workdir();
    const auto cfg = write_file(dir / "fv.conf", "n0 = 10\nd = 1\nc = 0.5\nhorizon = 1\nreplicas = 400\n"
                                                 "record_events = false\nseed = 12\n");
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", dir.string(), "--workers", "2"}).code, 0);
    std::vector<double> x, y;
    for (std::size_t r = 0; r < 400; r += 2) {
        auto last = [&](std::size_t k) {
            const auto t = read_csv(dir / cli_detail::replica_name("stats", k, ".csv"));
            return parse_double(t.rows.back()[t.column("connected_pair_fraction")], "v");
        };
        x.push_back(last(r));
        y.push_back(last(r + 1));
    }
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(n));
}

TEST(Cli, DualityCheckAssertContract) {
    const auto dir = workdir();
    const std::string body =
        "n0 = 10\nd = 1\nc = 0.5\ninitial = partition:4,3,3\nt = 0.5\nreplicas = 2000\nseed = 3\n"
        "monomial = m=2 h=12\nmonomial = m=2 r=12:1\n";
    const auto ok = write_file(dir / "ok.conf", body);
    auto r = cli({"duality-check", "--config", ok.string(), "--out", (dir / "a").string(), "--assert"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    const auto table = read_csv(dir / "a" / "duality.csv");
    ASSERT_EQ(table.rows.size(), 2u);
    for (const char* col : {"lhs", "se_lhs", "rhs", "se_rhs", "z"}) EXPECT_NO_THROW(table.column(col));
    const auto records = read_jsonl(dir / "a" / "dual_trajectory.jsonl");
    for (std::size_t i = 1; i < records.size(); ++i) EXPECT_EQ(records[i]["kind"], "coalescent-event");
    // A zero tolerance turns any nonzero z into an assertion failure.
    const auto strict = write_file(dir / "strict.conf", body + "z_threshold = 0\n");
    r = cli({"duality-check", "--config", strict.string(), "--out", (dir / "b").string(), "--assert"});
    EXPECT_EQ(r.code, 3);
    r = cli({"duality-check", "--config", strict.string(), "--out", (dir / "c").string()});
    EXPECT_EQ(r.code, 0);
}

TEST(Cli, ReplayExamplePrintsWorkedDistances) {
    const auto dir = workdir();
    const auto r = cli({"--mode", "replay-example", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("{1,2,3,5} {4}"), std::string::npos) << r.out;
    std::ostringstream v;
    v << std::fixed << std::setprecision(4) << 1 - std::exp(-1.0);
    EXPECT_NE(r.out.find(v.str()), std::string::npos);
    const auto t = read_csv(dir / "replay.csv");
    bool found = false;
    for (const auto& row : t.rows) {
        found = found || std::abs(parse_double(row[t.column("transformed_distance")], "d") - (1 - std::exp(-1.0))) < 1e-12;
    }
    EXPECT_TRUE(found);
}

TEST(Cli, EstimateAndEquilibriumAndDiffusionModes) {
    const auto dir = workdir();
    const auto est = write_file(dir / "est.conf", "initial = partition:5,3,2\nmonomial = m=3 h=12,13,23\n"
                                                  "num_samples = 5000\nseed = 4\n");
    auto r = cli({"estimate", "--config", est.string(), "--out", (dir / "e").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = read_csv(dir / "e" / "estimates.csv");
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.header, (std::vector<std::string>{"name", "mode", "mean", "se", "num_samples", "seed"}));
    // Exact value: (5*4*3 + 3*2*1) / (10*9*8).
    EXPECT_NEAR(parse_double(t.rows[1][2], "mean"), 66.0 / 720.0, 1e-12);

    const auto eq = write_file(dir / "eq.conf", "n0 = 30\nd = 1\nc = 0.5\nburn_in = 10\nreplicas = 60\nseed = 2\n");
    r = cli({"equilibrium-check", "--config", eq.string(), "--out", (dir / "q").string(), "--assert"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_TRUE(fs::exists(dir / "q" / "gem.csv"));

    const auto fd = write_file(dir / "fd.conf", "c = 2\nd = 1\nx0 = 0.2\ndt = 0.001\nhorizon = 3\nreplicas = 50\n");
    r = cli({"freq-diffusion", "--config", fd.string(), "--out", (dir / "f").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "f" / "freq_diffusion.csv"));
}

TEST(Cli, AggregateMode) {
    const auto dir = workdir();
    const auto cfg = write_file(dir / "fv.conf", kFv);
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", dir.string()}).code, 0);
    std::vector<std::string> args{"aggregate", "--out", (dir / "agg").string(), "--input"};
    for (int r = 0; r < 3; ++r) args.push_back((dir / cli_detail::replica_name("stats", r, ".csv")).string());
    args.insert(args.end(), {"--tolerance", "num_vertices=25", "--assert"});
    auto r = cli(args);
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    args.back() = "--tolerance";
    args.insert(args.end(), {"num_vertices=24", "--assert"});
    r = cli(args);
    EXPECT_EQ(r.code, 3);
}

TEST(Cli, ExitCodesForBadInput) {
    const auto dir = workdir();
    EXPECT_EQ(cli({"simulate"}).code, 1);
    EXPECT_EQ(cli({"no-such-mode"}).code, 1);
    EXPECT_EQ(cli({"simulate", "--config", (dir / "missing.conf").string()}).code, 1);
    const auto bad = write_file(dir / "bad.conf", "n0 = 10\nb = 1\nhorizon = 1\n");  // fixed size with b > 0
    EXPECT_EQ(cli({"simulate", "--config", bad.string(), "--out", dir.string()}).code, 1);
    EXPECT_EQ(cli({"simulate", "--bogus-flag"}).code, 1);
    const auto cfg = write_file(dir / "fv.conf", kFv);
    const auto blocked = write_file(dir / "not_a_dir", "x");
    const auto r = cli({"simulate", "--config", cfg.string(), "--out", (blocked / "sub").string()});
    EXPECT_EQ(r.code, 2) << r.err;
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, ExecutableMatchesInProcessRun) {
    const auto dir = workdir();
    const auto cfg = write_file(dir / "fv.conf", kFv);
    const std::string cmd = std::string(GRAPHEME_CLI_PATH) + " simulate --config " + cfg.string() + " --out " +
                            (dir / "bin").string() + " > /dev/null";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    ASSERT_EQ(cli({"simulate", "--config", cfg.string(), "--out", (dir / "lib").string()}).code, 0);
    EXPECT_EQ(slurp(dir / "bin" / "trajectory_r0001.jsonl"), slurp(dir / "lib" / "trajectory_r0001.jsonl"));
    const std::string bad = std::string(GRAPHEME_CLI_PATH) + " simulate 2> /dev/null";
    EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 1);
}
