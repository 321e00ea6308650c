// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// pass/fail criterion fails. Seeds are fixed so every run is reproducible.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "grapheme/cli.hpp"
#include "grapheme/coalescent.hpp"
#include "grapheme/dynamics.hpp"
#include "grapheme/equilibria.hpp"
#include "grapheme/estimators.hpp"
#include "grapheme/generator.hpp"

using namespace grapheme;

namespace {

struct Verdict {
    bool pass = true;
    bool exploratory = false;
    std::string summary;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

std::string pm(double mean, double se) { return fmt(mean, 5) + " +- " + fmt(se, 2); }

std::vector<double> component_of_vec(const std::vector<std::pair<double, double>>& v, bool first) {
    std::vector<double> out;
    for (const auto& p : v) out.push_back(first ? p.first : p.second);
    return out;
}

// --- 1 -------------------------------------------------------------------
Verdict transient_pair_duality() {
    const std::size_t n = 100, R = 400;
    DynamicsParams p;
    p.d = 1;
    std::vector<double> frac(R);
    for (std::size_t r = 0; r < R; ++r) {
        auto rng = replica_rng(101, r);
        RunOptions ro;
        ro.horizon = 0.7;
        frac[r] = run(singletons(n), GenealogyForest::with_roots(n), p, ro, rng).snapshots.back().connected_pair_fraction;
    }
    const auto [m, se] = mean_and_se(frac);
    const double target = 1 - std::exp(-0.7);
    const double z = (m - target) / se;
    const double pairs = static_cast<double>(R * n * (n - 1) / 2);
    return {std::abs(z) <= 3 && pairs >= 2e4, false,
            "pair fraction " + pm(m, se) + " vs 1-e^-0.7 = " + fmt(target, 5) + ", z = " + fmt(z, 3) + " over " +
                fmt(pairs, 3) + " pair observations (" + std::to_string(R) + " replicas)"};
}

// --- 2 and 4 share the forward runs ---------------------------------------
struct EquilibriumRuns {
    std::vector<std::pair<double, double>> forward;  // per replica (pair, triple) means after burn-in
    std::vector<std::pair<double, double>> dual;
    double d = 1, c = 0.5;
};

const EquilibriumRuns& equilibrium_runs() {
    static const EquilibriumRuns runs = [] {
        EquilibriumRuns e;
        const std::size_t n = 300, R = 60, Rd = 4000;
        DynamicsParams p;
        p.d = e.d;
        p.c = e.c;
        for (std::size_t r = 0; r < R; ++r) {
            auto rng = replica_rng(202, r, kForwardPurpose);
            double pair = 0, triple = 0;
            int k = 0;
            RunOptions ro;
            ro.horizon = 40;
            ro.snapshot_interval = 4;
            ro.on_snapshot = [&](const GraphemeState& s) {
                if (s.time < 20 - 1e-9) return;  // burn-in
                const auto f = cluster_fractions(s);
                pair += f.pairs;
                triple += f.triples;
                ++k;
            };
            run(singletons(n), GenealogyForest::with_roots(n), p, ro, rng);
            e.forward.emplace_back(pair / k, triple / k);
        }
        for (std::size_t r = 0; r < Rd; ++r) {
            auto rng = replica_rng(202, r, kDualPurpose);
            const auto f = cluster_fractions(equilibrium_dual_grapheme(n, p.d, p.c, p.theta, rng));
            e.dual.emplace_back(f.pairs, f.triples);
        }
        return e;
    }();
    return runs;
}

Verdict equilibrium_pair_connection() {
    const auto& e = equilibrium_runs();
    const auto [fm, fse] = mean_and_se(component_of_vec(e.forward, true));
    const auto [dm, dse] = mean_and_se(component_of_vec(e.dual, true));
    const double target = e.d / (e.d + 2 * e.c);
    const double z_target = (fm - target) / fse;
    const double z_dual = pooled_z(fm, fse, dm, dse);
    return {std::abs(z_target) <= 3 && std::abs(z_dual) <= 3, false,
            "forward " + pm(fm, fse) + " vs d/(d+2c) = " + fmt(target) + " (z = " + fmt(z_target, 3) +
                "); dual " + pm(dm, dse) + " (z = " + fmt(z_dual, 3) + ")"};
}

Verdict gem_cross_moment() {
    const auto& e = equilibrium_runs();
    const auto P = component_of_vec(e.forward, true);
    const auto T = component_of_vec(e.forward, false);
    const auto [pm_, pse] = mean_and_se(P);
    const auto [tm, tse] = mean_and_se(T);
    const double theta_hat = 1 / pm_ - 1;
    const double closed = 2 / ((1 + theta_hat) * (2 + theta_hat));
    // GEM Monte Carlo oracle for E[sum w^3] at the fitted theta.
    auto rng = replica_rng(404, 0);
    std::vector<double> w3(100000);
    for (auto& v : w3) {
        const auto w = gem_sample(theta_hat, 120, rng);
        v = 0;
        for (double x : w.weights) v += x * x * x;
    }
    const auto [gm, gse] = mean_and_se(w3);
    // Delta method: the prediction g(P) = 2P^2 / (1 + P) moves with the fitted pair mean.
    const double slope = (2 * pm_ * pm_ + 4 * pm_) / ((1 + pm_) * (1 + pm_));
    std::vector<double> resid(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) resid[i] = T[i] - slope * P[i];
    const double se_diff = std::hypot(mean_and_se(resid).second, gse);
    const double z = (tm - gm) / se_diff;
    const double z_oracle = (gm - closed) / gse;
    return {std::abs(z) <= 3 && std::abs(z_oracle) <= 3, false,
            "theta_hat = " + fmt(theta_hat) + ", simulated third moment " + pm(tm, tse) + " vs GEM " +
                pm(gm, gse) + " (z = " + fmt(z, 3) + "); GEM vs 2/((1+t)(2+t)) = " + fmt(closed, 5) +
                " (z = " + fmt(z_oracle, 3) + ")"};
}

// --- 3 -------------------------------------------------------------------
struct Setup {
    GraphemeState g0;
    GenealogyForest f0;
};

Setup battery_setup(bool atomic) {
    Setup s;
    const std::vector<std::size_t> blocks{10, 8, 6, 4, 2};
    s.g0 = from_partition(blocks);
    if (atomic) {
        std::size_t v = 0;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            for (std::size_t k = 0; k < blocks[b]; ++k) s.g0.type_label[v++] = TypeLabel::atom(b);
        }
    }
    const std::size_t n = s.g0.num_vertices();
    s.f0 = GenealogyForest::with_roots(n);
    std::vector<std::vector<double>> r0(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) r0[i][j] = s.g0.component_of[i] == s.g0.component_of[j] ? 0.4 : 1.2;
        }
    }
    s.f0.set_initial_distances(r0);
    return s;
}

Verdict duality_battery(std::string& details) {
    struct Case {
        char setup;
        double t;
        const char* spec;
    };
    const std::vector<Case> cases{
        {'A', 0.3, "m=2 h=12"},           {'A', 1.0, "m=2 h=12"},
        {'A', 0.5, "m=2 r=12:1"},         {'A', 0.5, "m=3 h=12,13,23"},
        {'A', 1.0, "m=3 h=12 nh=13"},     {'A', 2.0, "m=3 r=12:0.5,13:0.5,23:0.5"},
        {'B', 0.3, "m=2 h=12"},           {'B', 1.0, "m=3 h=12,13"},
        {'B', 0.5, "m=2 h=12 r=12:0.5"},  {'B', 2.0, "m=3 nh=12,13,23"},
        {'C', 0.5, "m=3 h=12 r=13:1"},    {'C', 1.0, "m=2 nh=12 r=12:0.3"},
    };
    const Setup atomless = battery_setup(false), atomic = battery_setup(true);
    int above3 = 0, above45 = 0;
    std::ostringstream os;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto& c = cases[k];
        DynamicsParams p;
        p.d = 1;
        p.c = c.setup == 'C' ? 0.0 : 0.5;
        if (c.setup == 'B') p.theta.atom_weights = {0.4, 0.1, 0.2, 0.2, 0.1};
        const Setup& s = c.setup == 'B' ? atomic : atomless;
        const auto rep = check_duality(s.g0, s.f0, p, MonomialSpec::parse(c.spec), c.t, 4000, 3000 + k);
        above3 += std::abs(rep.z) > 3;
        above45 += std::abs(rep.z) > 4.5;
        os << "    " << c.setup << " t=" << c.t << " [" << c.spec << "] forward " << pm(rep.lhs, rep.se_lhs)
           << " dual " << pm(rep.rhs, rep.se_rhs) << " z = " << fmt(rep.z, 3) << '\n';
    }
    details = os.str();
    return {above3 <= 1 && above45 == 0, false,
            std::to_string(above3) + " of 12 |z| > 3, " + std::to_string(above45) + " above 4.5"};
}

// --- 5 -------------------------------------------------------------------
Verdict pruned_edge_equilibrium() {
    const std::size_t n = 200, R = 5;
    DynamicsParams p;
    p.d = 1;
    p.a_plus = 1;
    p.a_minus = 3;
    double present = 0, pairs = 0;
    std::vector<double> per_replica;
    for (std::size_t r = 0; r < R; ++r) {
        auto g = singletons(n);
        complete_within_components(g);
        auto rng = replica_rng(505, r);
        RunOptions ro;
        ro.horizon = 30;
        ro.snapshot_interval = 2;
        double rp = 0, rq = 0;
        ro.on_snapshot = [&](const GraphemeState& s) {
            if (s.time < 20 - 1e-9) return;
            double same = 0;
            for (const auto& [c, k] : s.component_sizes()) same += static_cast<double>(k * (k - 1) / 2);
            rp += static_cast<double>(s.edges_present.size());
            rq += same;
        };
        run(g, GenealogyForest::with_roots(n), p, ro, rng);
        present += rp;
        pairs += rq;
        per_replica.push_back(rp / rq);
    }
    const double frac = present / pairs;
    return {std::abs(frac - 0.25) <= 0.02 && pairs >= 1e4, false,
            "within-component present-edge fraction " + fmt(frac, 5) + " (target 0.25 +- 0.02) over " +
                fmt(pairs, 3) + " pair observations"};
}

// --- 6 -------------------------------------------------------------------
Verdict trivial_equilibrium() {
    const std::size_t n = 50, R = 200;
    DynamicsParams p;
    p.d = 1;
    std::size_t single = 0;
    std::vector<double> fix_times;
    for (std::size_t r = 0; r < R; ++r) {
        auto rng = replica_rng(606, r);
        Simulator sim(singletons(n), GenealogyForest::with_roots(n), p);
        while (sim.state().num_components() > 1 && sim.time() < 20) sim.step(rng);
        if (sim.state().num_components() == 1 && sim.time() <= 20) {
            ++single;
            fix_times.push_back(sim.time());
        }
    }
    std::vector<double> absorb(20000);
    for (std::size_t r = 0; r < absorb.size(); ++r) {
        auto rng = replica_rng(607, r);
        const auto c = coalescent_run(n, p.d, 0.0, p.theta, std::numeric_limits<double>::infinity(), rng);
        absorb[r] = c.history.back().time;
    }
    const auto [am, ase] = mean_and_se(absorb);
    const double target = 2 / p.d * (1 - 1.0 / n);
    const double z = (am - target) / ase;
    const auto [fm, fse] = mean_and_se(fix_times);
    return {single >= 198 && std::abs(z) <= 3, false,
            std::to_string(single) + "/200 single component by t = 20; dual absorption time " + pm(am, ase) +
                " vs (2/d)(1-1/n) = " + fmt(target, 5) + " (z = " + fmt(z, 3) + "); forward fixation time " +
                pm(fm, fse) + " (reported)"};
}

// --- 7 -------------------------------------------------------------------
Verdict generator_consistency(std::string& details) {
    const std::vector<std::size_t> blocks{8, 5, 4, 2, 1};
    auto g0 = from_partition(blocks);
    std::size_t v = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t k = 0; k < blocks[b]; ++k) g0.type_label[v++] = TypeLabel::atom(b);
    }
    const std::size_t n = g0.num_vertices();
    auto f0 = GenealogyForest::with_roots(n);
    std::vector<std::vector<double>> r0(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) r0[i][j] = g0.component_of[i] == g0.component_of[j] ? 0.4 : 1.2;
        }
    }
    f0.set_initial_distances(r0);
    DynamicsParams p;
    p.d = 0.5;
    p.c = 0.5;
    p.theta.atom_weights = {0.4, 0.1, 0.2, 0.2, 0.1};
    p.m_mut = 0.3;
    p.s_sel = 1.0;
    p.fitness = {1.0, 0.5, 0.8, 0.3, 0.9};
    const std::vector<MonomialSpec> specs{
        MonomialSpec::parse("m=2 h=12"),           MonomialSpec::parse("m=3 h=12,13,23"),
        MonomialSpec::parse("m=3 h=12 nh=13,23"),  MonomialSpec::parse("m=2 r=12:1"),
        MonomialSpec::parse("m=3 r=12:0.5,13:0.5,23:0.5"), MonomialSpec::parse("m=3 h=12 r=13:1")};
    const double rate = Simulator(g0, f0, p).total_rate();
    // P(>= 2 events) is about 1.2e-5 here, far below the 1% ceiling, so the
    // O(Delta) bias stays well inside the Monte-Carlo error.
    const double delta = generator_step(rate, 1.25e-5);
    const double x = rate * delta;
    const double two = 1 - std::exp(-x) * (1 + x);
    const auto res = compare_generator(g0, f0, p, specs, delta, 400000, 707);
    bool ok = two < 0.01;
    std::ostringstream os;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        ok = ok && std::abs(res[k].z) <= 3;
        os << "    [" << specs[k].name << "] analytic " << fmt(res[k].analytic, 6) << " MC " << pm(res[k].mc, res[k].se)
           << " z = " << fmt(res[k].z, 3) << '\n';
    }
    details = os.str();
    return {ok, false, "6 monomials at n = 20, Delta = " + fmt(delta, 3) + ", P(>=2 events) = " + fmt(two, 3)};
}

// --- 8 -------------------------------------------------------------------
bool ultrametric(const std::vector<std::vector<double>>& r, std::size_t i, std::size_t j, std::size_t k) {
    const double tol = 1e-9;
    return r[i][k] <= std::max(r[i][j], r[j][k]) + tol && r[i][j] <= std::max(r[i][k], r[k][j]) + tol &&
           r[j][k] <= std::max(r[j][i], r[i][k]) + tol;
}

std::vector<double> code_table(const std::vector<std::uint64_t>& codes, std::size_t cells) {
    std::vector<double> t(cells, 0.0);
    for (auto c : codes) t[c] += 1;
    return t;
}

Verdict invariant_suites(std::string& details) {
    std::ostringstream os;
    bool ok = true;
    // Ultrametricity over 1e4 random triples of a resampling-immigration-mutation state.
    {
        DynamicsParams p;
        p.d = 1;
        p.c = 0.3;
        p.m_mut = 0.2;
        auto rng = replica_rng(808, 0);
        RunOptions ro;
        ro.horizon = 3;
        const auto rec = run(singletons(80), GenealogyForest::with_roots(80), p, ro, rng);
        const auto r = all_distances(rec.final_state, rec.final_forest);
        std::size_t bad = 0;
        for (int k = 0; k < 10000; ++k) {
            const auto u = sample_without_replacement(rec.final_state.weights, 3, rng);
            bad += !ultrametric(r, u[0], u[1], u[2]);
        }
        std::size_t bad_dual = 0;
        for (int k = 0; k < 200; ++k) {
            const auto c = coalescent_run(12, 1.0, 0.3, ThetaSource{}, 1.5, rng);
            const auto m = c.distance_matrix();
            for (std::size_t a = 0; a < 12; ++a)
                for (std::size_t b = a + 1; b < 12; ++b)
                    for (std::size_t e = b + 1; e < 12; ++e) bad_dual += !ultrametric(m, a, b, e);
        }
        os << "    ultrametricity: " << bad << " violations in 1e4 forward triples, " << bad_dual
           << " in 44000 dual triples\n";
        ok = ok && bad == 0 && bad_dual == 0;
    }
    // Exchangeability and m -> m+1 consistency of sampled connection matrices (flip regime).
    {
        DynamicsParams p;
        p.d = 1;
        p.c = 0.5;
        p.a_plus = 1;
        p.a_minus = 1;
        auto g = singletons(60);
        complete_within_components(g);
        auto rng = replica_rng(809, 0);
        RunOptions ro;
        ro.horizon = 4;
        const auto state = run(g, GenealogyForest::with_roots(60), p, ro, rng).final_state;
        const std::size_t K = 20000;
        std::vector<std::uint64_t> plain, permuted, restricted;
        for (std::size_t k = 0; k < K; ++k) plain.push_back(sample_connection_matrix(state, 3, rng).code());
        for (std::size_t k = 0; k < K; ++k) {
            auto s = sample_connection_matrix(state, 3, rng);
            ConnectionMatrixSample q;
            q.matrix = s.matrix;
            const std::size_t perm[3] = {1, 2, 0};
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) q.matrix[i][j] = s.matrix[perm[i]][perm[j]];
            permuted.push_back(q.code());
        }
        for (std::size_t k = 0; k < K; ++k) {
            auto s = sample_connection_matrix(state, 4, rng);
            ConnectionMatrixSample q;
            q.matrix.assign(3, std::vector<std::uint8_t>(3, 0));
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) q.matrix[i][j] = s.matrix[i][j];
            restricted.push_back(q.code());
        }
        const auto ex = chi_square_homogeneity({code_table(plain, 8), code_table(permuted, 8)});
        const auto cons = chi_square_homogeneity({code_table(plain, 8), code_table(restricted, 8)});
        os << "    exchangeability chi2 = " << fmt(ex.statistic) << " (dof " << ex.dof << ", p = " << fmt(ex.p_value)
           << "); m->m+1 chi2 = " << fmt(cons.statistic) << " (dof " << cons.dof << ", p = " << fmt(cons.p_value)
           << ")\n";
        ok = ok && ex.p_value > 0.01 && cons.p_value > 0.01 && ex.dof >= 1 && cons.dof >= 1;
    }
    // Transitivity in the pure regime and fixed-size conservation.
    {
        DynamicsParams p;
        p.d = 1;
        p.c = 0.4;
        p.theta.atom_weights = {0.5, 0.3, 0.2};
        p.m_mut = 0.2;
        p.kernel.transition = {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.2, 0.2, 0.6}};
        p.s_sel = 0.5;
        p.fitness = {1.0, 0.7, 0.4};
        auto rng = replica_rng(810, 0);
        Simulator sim(singletons(60), GenealogyForest::with_roots(60), p);
        std::size_t size_changes = 0, intransitive = 0, invalid = 0;
        for (int k = 0; k < 20000; ++k) {
            sim.step(rng);
            size_changes += sim.state().num_vertices() != 60;
            if (k % 2000 == 0) invalid += !validate(sim.state()).empty();
        }
        for (int k = 0; k < 10000; ++k) {
            const auto s = sample_connection_matrix(sim.state(), 3, rng);
            const auto& h = s.matrix;
            intransitive += (h[0][1] && h[1][2] && !h[0][2]) || (h[0][1] && h[0][2] && !h[1][2]) ||
                            (h[0][2] && h[1][2] && !h[0][1]);
        }
        os << "    transitivity: " << intransitive << " intransitive of 1e4 triples; size changes in 2e4 events: "
           << size_changes << "; invalid states: " << invalid << '\n';
        ok = ok && intransitive == 0 && size_changes == 0 && invalid == 0;
    }
    // Determinism: byte-identical reruns through the command-line entry point.
    {
        namespace fs = std::filesystem;
        const auto dir = fs::temp_directory_path() / "grapheme_acceptance_determinism";
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "fv.conf") << "n0 = 40\nd = 1\nc = 0.4\nm_mut = 0.1\nhorizon = 3\n"
                                          "snapshot_interval = 0.5\nreplicas = 2\nseed = 99\n";
        auto invoke = [&](const std::string& out) {
            const std::string cfg = (dir / "fv.conf").string(), o = (dir / out).string();
            const char* argv[] = {"grapheme", "simulate", "--config", cfg.c_str(), "--out", o.c_str(), "--workers", "1"};
            std::ostringstream sink;
            return run_cli(8, argv, sink, sink);
        };
        bool same = invoke("a") == 0 && invoke("b") == 0;
        std::size_t files = 0;
        for (const auto& entry : fs::directory_iterator(dir / "a")) {
            std::ifstream x(entry.path(), std::ios::binary), y(dir / "b" / entry.path().filename(), std::ios::binary);
            std::stringstream sx, sy;
            sx << x.rdbuf();
            sy << y.rdbuf();
            same = same && sx.str() == sy.str();
            ++files;
        }
        os << "    determinism: " << files << " output files " << (same ? "byte-identical" : "DIFFER") << '\n';
        ok = ok && same && files > 0;
    }
    details = os.str();
    return {ok, false, "ultrametricity, exchangeability, m->m+1 consistency, transitivity, conservation, determinism"};
}

// --- 9 -------------------------------------------------------------------
// Exact triangle density of a uniformly weighted state with h(u, u) = 1.
double exact_triangle_density(const GraphemeState& s) {
    const std::size_t n = s.num_vertices();
    std::vector<std::vector<std::uint64_t>> nb(n, std::vector<std::uint64_t>((n + 63) / 64, 0));
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (s.connected(u, v)) nb[u][v / 64] |= std::uint64_t{1} << (v % 64);
    double total = 0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) {
            if (!s.connected(u, v)) continue;
            for (std::size_t w = 0; w < nb[u].size(); ++w) total += std::popcount(nb[u][w] & nb[v][w]);
        }
    const double nn = static_cast<double>(n);
    return total / (nn * nn * nn);
}

Verdict subgraph_density_estimator() {
    auto frozen = from_partition({500, 300, 200});
    auto rng = replica_rng(909, 0);
    const auto tri = SubgraphPattern::triangle();
    const auto full = subgraph_density(frozen, tri, 200000, rng);
    const double exact_full = exact_block_density(empirical_graphon(frozen), tri);
    const double z1 = (full.mean - 0.16) / full.se;
    // Flip intensity p = 0.5 on the frozen block structure.
    const double p = 0.5;
    auto graphon = empirical_graphon(frozen);
    graphon.intra_block_intensity = p;
    const auto half = subgraph_density(graphon, tri, 400000, rng);
    const double z2 = (half.mean - p * p * p * 0.16) / half.se;
    // One realized edge set with that intensity, against its own exact density.
    auto realized = frozen;
    complete_within_components(realized);
    for (const auto& e : realized.edges_present.sorted()) {
        if (rng.uniform() >= p) realized.edges_present.erase(e.a, e.b);
    }
    const auto on_graph = subgraph_density(realized, tri, 400000, rng);
    const double exact_graph = exact_triangle_density(realized);
    const double z3 = (on_graph.mean - exact_graph) / on_graph.se;
    return {std::abs(z1) <= 3 && std::abs(z2) <= 3 && std::abs(z3) <= 3 && std::abs(exact_full - 0.16) < 1e-12, false,
            "triangle density " + pm(full.mean, full.se) + " vs 0.16 (z = " + fmt(z1, 3) + "); p = 0.5: " +
                pm(half.mean, half.se) + " vs p^3 * 0.16 = 0.02 (z = " + fmt(z2, 3) + "); realized edge set " +
                pm(on_graph.mean, on_graph.se) + " vs its exact " + fmt(exact_graph, 5) + " (z = " + fmt(z3, 3) + ")"};
}

// --- 10 ------------------------------------------------------------------
Verdict dw_total_mass_shape() {
    const std::size_t n0 = 100, R = 500;
    DynamicsParams raw;
    raw.b = 1;
    raw.c = 1;
    raw.size_mode = SizeMode::Variable;
    const DynamicsParams p = with_dw_scaling(raw, n0);
    std::vector<double> x(R);
    for (std::size_t r = 0; r < R; ++r) {
        auto rng = replica_rng(1010, r);
        RunOptions ro;
        ro.horizon = 10;
        ro.record_events = false;
        const auto rec = run(singletons(n0), GenealogyForest::with_roots(n0), p, ro, rng);
        x[r] = static_cast<double>(rec.final_state.num_vertices()) / static_cast<double>(n0);
    }
    double mean = 0, var = 0;
    for (double v : x) mean += v / R;
    for (double v : x) var += (v - mean) * (v - mean) / (R - 1);
    const double shape = mean * mean / var, rate = mean / var;
    const auto fitted = ks_statistic(x, [&](double v) { return v <= 0 ? 0.0 : boost::math::gamma_p(shape, rate * v); });
    const double k0 = 2 * raw.c / raw.b;
    const auto unfitted = ks_statistic(x, [&](double v) { return v <= 0 ? 0.0 : boost::math::gamma_p(k0, k0 * v); });
    return {fitted.p_value > 0.01, false,
            "fitted Gamma(shape " + fmt(shape) + ", rate " + fmt(rate) + "): KS D = " + fmt(fitted.statistic) +
                ", p = " + fmt(fitted.p_value) + "; reported only: Gamma(2c/b, 2c/b) p = " + fmt(unfitted.p_value)};
}

// --- 11 ------------------------------------------------------------------
Verdict frequency_diffusion_report(std::string& details) {
    const std::vector<double> ratios{0.5, 1, 2, 4};
    const std::vector<double> dts{0.02, 0.01, 0.005, 0.0025};
    const std::size_t paths = 400;
    std::ostringstream os;
    os << "    hit-zero fraction by t = 5 from x0 = 0.5, d = 1 (" << paths << " paths per cell)\n";
    os << "    c/d   ";
    for (double dt : dts) os << "  dt=" << dt;
    os << "   max refinement shift\n";
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        os << "    " << ratios[i] << "  ";
        std::vector<double> frac;
        for (std::size_t j = 0; j < dts.size(); ++j) {
            std::size_t hits = 0;
            for (std::size_t r = 0; r < paths; ++r) {
                auto rng = replica_rng(1111 + i, r, j);
                hits += frequency_diffusion(ratios[i], 1.0, 0.5, dts[j], 5.0, rng, 1000000).hit_zero;
            }
            frac.push_back(static_cast<double>(hits) / paths);
            os << "  " << fmt(frac.back(), 3);
        }
        double shift = 0;
        for (std::size_t j = 1; j < frac.size(); ++j) shift = std::max(shift, std::abs(frac[j] - frac[j - 1]));
        os << "   " << fmt(shift, 3) << '\n';
    }
    details = os.str();
    return {true, true, "hit-zero fractions tabulated for c/d in {0.5, 1, 2, 4} with dt refinement"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        std::function<Verdict(std::string&)> fn;
    };
    auto plain = [](Verdict (*f)()) { return [f](std::string&) { return f(); }; };
    const std::vector<Criterion> criteria{
        {1, plain(transient_pair_duality)},     {2, plain(equilibrium_pair_connection)},
        {3, duality_battery},                   {4, plain(gem_cross_moment)},
        {5, plain(pruned_edge_equilibrium)},    {6, plain(trivial_equilibrium)},
        {7, generator_consistency},             {8, invariant_suites},
        {9, plain(subgraph_density_estimator)}, {10, plain(dw_total_mass_shape)},
        {11, frequency_diffusion_report},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string details;
        Verdict v;
        try {
            v = c.fn(details);
        } catch (const std::exception& e) {
            v = {false, false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = v.exploratory ? "REPORT" : v.pass ? "PASS" : "FAIL";
        std::cout << "criterion " << c.id << " [PRIMARY" << (v.exploratory ? ", exploratory" : "") << "] " << tag
                  << ": " << v.summary << " (" << fmt(secs, 3) << " s)\n"
                  << details << std::flush;
        failures += !v.pass;
    }
    std::cout << (failures == 0 ? "all pass/fail criteria passed\n" : std::to_string(failures) + " criteria failed\n");
    return failures == 0 ? 0 : 1;
}
