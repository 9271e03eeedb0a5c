// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "support.hpp"
#include "tkm/harness.hpp"
#include "tkm/oracle.hpp"
#include "tkm/tkm.hpp"

namespace fs = std::filesystem;
using namespace tkm;
using tkm::testing::naive_cluster_objective;
using tkm::testing::random_instance;
using tkm::testing::random_unit_direction;
using tkm::testing::random_unit_points;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void run(const std::string& id, const std::string& title, double limit_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > limit_seconds) {
        out.pass = false;
        out.detail += "; over time limit";
    }
    if (!out.pass) {
        ++failures;
    }
    std::printf("[%s] %s %s: %s (%.2fs / %.0fs)\n", out.pass ? "PASS" : "FAIL", id.c_str(), title.c_str(),
                out.detail.c_str(), secs, limit_seconds);
    std::fflush(stdout);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double norm(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Assignment single_cluster(std::size_t n) { return Assignment(std::vector<std::size_t>(n, 0), 1); }

Dataset standardized_blobs(std::size_t n, std::size_t k, double spread, std::uint64_t seed) {
    return standardize(make_blobs(n, k, 2, spread, seed).data);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome gradient_matches_finite_differences() {
    Rng rng(101);
    double worst = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto inst = random_instance(rng, 64, 5, 4);
        const auto& ds = inst.data;
        for (double t : {0.1, 1.0}) {
            for (std::size_t j = 0; j < inst.assignment.k(); ++j) {
                const auto c = inst.centroids.center(j);
                const auto g = tilted_cluster_gradient(ds, inst.assignment, j, c, t, inst.assignment.members(j));
                const auto fd = oracle::finite_diff_gradient(
                    [&](std::span<const double> x) { return naive_cluster_objective(t, ds, inst.assignment, j, x); },
                    c, 1e-5);
                std::vector<double> diff(g.size());
                for (std::size_t m = 0; m < g.size(); ++m) diff[m] = g[m] - fd[m];
                worst = std::max(worst, norm(diff) / norm(g));
            }
        }
    }
    return {worst <= 1e-5, "max relative error " + num(worst)};
}

Outcome small_tilt_reduces_to_sse() {
    Rng rng(102);
    double worst = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto inst = random_instance(rng);
        const double s = sse(inst.data, inst.assignment, inst.centroids);
        const double gap = std::abs(tilted_sse(1e-8, inst.data, inst.assignment, inst.centroids) - s);
        worst = std::max(worst, gap / (1 + s));
    }
    return {worst <= 1e-6, "max |tilted - sse| / (1 + sse) " + num(worst)};
}

Outcome min_cluster_objective_bounded_by_total() {
    Rng rng(103);
    double worst = -1e300;
    for (int rep = 0; rep < 200; ++rep) {
        const auto inst = random_instance(rng);
        for (double t : {0.01, 0.1, 1.0, 10.0}) {
            const double phi = tilted_sse(t, inst.data, inst.assignment, inst.centroids);
            double psi = 1e300;
            for (std::size_t j = 0; j < inst.assignment.k(); ++j) {
                psi = std::min(psi, tilted_cluster_objective(t, inst.data, inst.assignment.members(j),
                                                             inst.centroids.center(j)));
            }
            worst = std::max(worst, psi - phi);
        }
    }
    return {worst <= 1e-12, "max (psi - phi) " + num(worst)};
}

Outcome strong_convexity() {
    Rng rng(104);
    double worst = 1e300;
    for (int rep = 0; rep < 20; ++rep) {
        const auto inst = random_instance(rng);
        const auto& ds = inst.data;
        for (std::size_t j = 0; j < inst.assignment.k(); ++j) {
            const double bound = 2.0 * static_cast<double>(inst.assignment.members(j).size()) /
                                 static_cast<double>(ds.n());
            for (double t : {0.1, 1.0}) {
                for (int dir = 0; dir < 20; ++dir) {
                    const auto u = random_unit_direction(ds.d(), rng);
                    const double curv = oracle::second_difference(
                        [&](std::span<const double> x) {
                            return naive_cluster_objective(t, ds, inst.assignment, j, x);
                        },
                        inst.centroids.center(j), u, 1e-4);
                    worst = std::min(worst, curv - (bound - 1e-3));
                }
            }
        }
    }
    return {worst >= 0, "min (curvature - bound) " + num(worst)};
}

Outcome single_cluster_monotone_in_t() {
    Rng rng(105);
    const auto grid = harness::geometric_grid(1e-3, 10, 30);
    double worst = -1e300;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 5 + rng.below(40), d = 1 + rng.below(4);
        const auto pts = random_unit_points(n, d, rng);
        const auto all = single_cluster(n);
        double prev = -1e300;
        for (double t : grid) {
            const Centroids c(oracle::tilted_centroid_fixed_point(t, pts), 1, d);
            const double phi = tilted_sse(t, pts, all, c);
            worst = std::max(worst, prev - phi);
            prev = phi;
        }
    }
    return {worst <= 1e-10, "max drop between grid points " + num(worst)};
}

Dataset unit_instance(Rng& rng, std::size_t d, bool symmetric) {
    const std::size_t half = 2 + rng.below(10);
    std::vector<double> v;
    if (d == 1) {
        // points are +1 or -1; equal counts make the set symmetric
        const std::size_t minus = symmetric ? half : half + 1 + rng.below(5);
        for (std::size_t i = 0; i < minus; ++i) v.push_back(-1);
        for (std::size_t i = 0; i < half; ++i) v.push_back(1);
        return Dataset(v, v.size(), 1);
    }
    if (symmetric) {
        for (std::size_t i = 0; i < half; ++i) {
            const double a = 2 * std::numbers::pi * rng.uniform();
            for (double s : {1.0, -1.0}) {
                v.push_back(s * std::cos(a));
                v.push_back(s * std::sin(a));
            }
        }
        return Dataset(v, v.size() / 2, 2);
    }
    return random_unit_points(2 * half + 1, 2, rng);
}

Outcome variance_decreases_with_t() {
    Rng rng(106);
    const auto grid = harness::geometric_grid(1e-3, 10, 30);
    double worst_rise = -1e300, weakest_drop = 1e300;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = rep < 10 ? 1 : 2;
        const bool symmetric = rep % 5 == 0;
        const auto pts = unit_instance(rng, d, symmetric);
        std::vector<Centroids> cs;
        for (double t : grid) cs.emplace_back(oracle::tilted_centroid_fixed_point(t, pts), 1, d);
        for (double tau : {0.0, 0.5}) {
            std::vector<double> var;
            for (const auto& c : cs) var.push_back(tilted_mean_var(tau, pts, c.center(0)).variance);
            for (std::size_t i = 1; i < var.size(); ++i) worst_rise = std::max(worst_rise, var[i] - var[i - 1]);
            if (!symmetric) weakest_drop = std::min(weakest_drop, var.front() - var.back());
        }
    }
    return {worst_rise <= 1e-12 && weakest_drop > 1e-9,
            "max rise " + num(worst_rise) + ", smallest overall drop (asymmetric) " + num(weakest_drop)};
}

Outcome sgd_agrees_with_oracle() {
    Rng rng(107);
    double worst = 0;
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 5 + rng.below(30), d = 1 + rng.below(3);
        const auto pts = tkm::testing::random_points(n, d, rng);
        const auto all = single_cluster(n);
        for (double t : {0.5, 1.0}) {
            SolverConfig cfg;
            cfg.k = 1;
            cfg.t = t;
            cfg.eta = 0.01;
            cfg.epochs = 5000;
            cfg.batch_size = n;
            const Centroids start(std::vector<double>(pts.row(0).begin(), pts.row(0).end()), 1, d);
            Rng sgd_rng(rep);
            const auto c = refine_sgd(pts, all, start, cfg, sgd_rng);
            const auto ref = oracle::tilted_centroid_fixed_point(t, pts);
            worst = std::max(worst, std::sqrt(squared_distance(c.center(0), ref)));
        }
    }
    return {worst <= 1e-3, "max distance to oracle " + num(worst)};
}

Outcome descent_trend() {
    const auto ds = standardized_blobs(1000, 3, 1.0, 8);
    SolverConfig cfg;
    std::vector<double> avg(cfg.max_iters, 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        cfg.seed = seed;
        const auto r = solve(ds, cfg);
        if (r.objective_trace.size() != avg.size()) return {false, "trace length " + std::to_string(r.iterations_run)};
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += r.objective_trace[i] / 10;
    }
    const double head = std::accumulate(avg.begin(), avg.begin() + 10, 0.0) / 10;
    const double tail = std::accumulate(avg.end() - 10, avg.end(), 0.0) / 10;
    const double slack = 0.01 * avg.front();
    double worst = -1e300;
    double prev_ma = 1e300;
    for (std::size_t end = 50; end <= avg.size(); ++end) {
        const double ma = std::accumulate(avg.begin() + static_cast<std::ptrdiff_t>(end - 20),
                                          avg.begin() + static_cast<std::ptrdiff_t>(end), 0.0) / 20;
        if (end > 50) worst = std::max(worst, ma - prev_ma);
        prev_ma = ma;
    }
    return {tail <= head && worst <= slack, "first-10 mean " + num(head) + ", last-10 mean " + num(tail) +
                                                ", max moving-average rise " + num(worst) + " (slack " + num(slack) + ")"};
}

Outcome tradeoff_trend() {
    const auto full = standardized_blobs(5000, 4, 3.0, 9);
    const std::vector<double> ts{0.01, 0.05, 0.1, 0.2};
    std::string worst_note;
    double worst_ratio = 0;
    for (std::size_t k = 3; k <= 10; ++k) {
        std::vector<double> s(ts.size()), v(ts.size()), md(ts.size());
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto ds = subsample(full, 1000, 500 + seed);
            for (std::size_t i = 0; i < ts.size(); ++i) {
                SolverConfig cfg;
                cfg.k = k;
                cfg.t = ts[i];
                cfg.seed = seed;
                const auto r = solve(ds, cfg);
                s[i] += r.metrics.sse / 10;
                v[i] += *std::max_element(r.metrics.per_cluster_variance.begin(),
                                          r.metrics.per_cluster_variance.end()) / 10;
                md[i] += *std::max_element(r.metrics.per_cluster_max_distance.begin(),
                                           r.metrics.per_cluster_max_distance.end()) / 10;
            }
        }
        for (std::size_t i = 1; i < ts.size(); ++i) {
            // worst relative move against the expected direction
            const std::pair<double, const char*> moves[] = {{(s[i - 1] - s[i]) / s[i - 1], "sse"},
                                                            {(v[i] - v[i - 1]) / v[i - 1], "max variance"},
                                                            {(md[i] - md[i - 1]) / md[i - 1], "max distance"}};
            for (const auto& [r, name] : moves) {
                if (r > worst_ratio) {
                    worst_ratio = r;
                    worst_note = " (" + std::string(name) + ", k=" + std::to_string(k) + ", t=" + num(ts[i]) + ")";
                }
            }
        }
    }
    return {worst_ratio <= 0.05, "largest move against trend " + num(100 * worst_ratio) + "%" + worst_note};
}

Outcome runtime_linearity() {
    SolverConfig cfg;
    cfg.k = 3;
    const auto rows = harness::runtime_scaling({0, 3, 2, 1.0, 10}, {10000, 20000, 40000}, cfg, 5);
    bool ok = true;
    std::string note;
    for (const auto& r : rows) {
        note += "n=" + std::to_string(r.n) + " " + num(r.seconds) + "s";
        if (r.ratio > 0) {
            note += " (x" + num(r.ratio) + ")";
            ok = ok && r.ratio >= 1.5 && r.ratio <= 3.0;
        }
        note += "; ";
    }
    return {ok, note.substr(0, note.size() - 2)};
}

Outcome cli_is_deterministic() {
    const fs::path dir = fs::path(TKM_TEST_TMPDIR) / "acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto blobs = make_blobs(400, 3, 3, 1.5, 11);
    {
        std::ofstream csv(dir / "points.csv");
        csv << "a,b,c\n";
        for (std::size_t i = 0; i < blobs.data.n(); ++i) {
            csv << harness::fmt(blobs.data(i, 0)) << ',' << harness::fmt(blobs.data(i, 1)) << ','
                << harness::fmt(blobs.data(i, 2)) << '\n';
        }
    }
    std::vector<std::string> outputs;
    for (const char* run_dir : {"run1", "run2"}) {
        const std::string cmd = std::string(TKM_CLUSTER_BIN) + " solve --input " + (dir / "points.csv").string() +
                                " --standardize --k 4 --t 0.2 --seed 42 --iters 100 --out " +
                                (dir / run_dir).string() + " > /dev/null";
        const int status = std::system(cmd.c_str());
        if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "cluster solve failed"};
        outputs.push_back(slurp(dir / run_dir / "result.json"));
    }
    const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
    return {same, same ? "result.json identical (" + std::to_string(outputs[0].size()) + " bytes)"
                       : "result.json differs"};
}

}  // namespace

int main() {
    run("AC1", "gradient vs finite differences", 5, gradient_matches_finite_differences);
    run("AC2", "small-t reduction to SSE", 1, small_tilt_reduces_to_sse);
    run("AC3", "min cluster objective <= tilted SSE", 1, min_cluster_objective_bounded_by_total);
    run("AC4", "strong convexity", 5, strong_convexity);
    run("AC5", "k=1 monotonicity in t", 10, single_cluster_monotone_in_t);
    run("AC6", "variance decreases with t", 10, variance_decreases_with_t);
    run("AC7", "SGD agrees with oracle", 30, sgd_agrees_with_oracle);
    run("AC8", "descent trend", 300, descent_trend);
    run("AC9", "fairness/utility trade-off", 900, tradeoff_trend);
    run("AC10", "runtime linearity", 600, runtime_linearity);
    run("AC11", "CLI determinism", 60, cli_is_deterministic);
    std::printf("%d failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
