#ifndef TKM_HARNESS_HPP
#define TKM_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "data.hpp"
#include "engine.hpp"
#include "metrics.hpp"
#include "rng.hpp"

/**
 * @file harness.hpp
 *
 * @brief Experiment runner: t-sweeps over repeated subsamples, convergence traces,
 * centroid trajectories and runtime scaling. Results go to CSV and JSON files.
 */

namespace tkm::harness {

namespace fs = std::filesystem;
using nlohmann::json;

struct BlobSource {
    std::size_t n = 1000;
    std::size_t k = 3;
    std::size_t d = 2;
    double spread = 1.0;
    std::uint64_t seed = 0;
};

/// Either a CSV file or generated blobs, followed by optional preprocessing.
struct DataSource {
    std::optional<std::string> csv_path;
    BlobSource blobs;
    PreprocessSpec preprocess;
};

struct ExperimentSpec {
    DataSource source;
    /// Rows per subsample; 0 uses the whole dataset without resampling.
    std::size_t sample_size = 1000;
    std::size_t repeats = 10;
    std::vector<std::size_t> ks{3};
    std::vector<double> ts{0.01, 0.05, 0.1, 0.2};
    /// `k`, `t` and `seed` are overwritten per run.
    SolverConfig solver;
    std::uint64_t seed = 0;
    fs::path output_dir = "out";
    bool record_wall_time = true;
    /// 0 picks from CLUSTER_THREADS / hardware concurrency.
    std::size_t threads = 0;
};

struct TraceRow {
    std::size_t iteration = 0;
    std::uint64_t seed = 0;
    double t = 0;
    double objective = 0;
    double wall_ms = 0;
};

/**
 * @brief Per-run seed: splitmix64 chained over (seed, k, bit pattern of t, repeat).
 */
inline std::uint64_t derive_seed(std::uint64_t seed, std::size_t k, double t, std::size_t repeat) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(k));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(t));
    h = mix64(h ^ static_cast<std::uint64_t>(repeat));
    return h;
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
    if (count == 0 || !(lo > 0) || !(hi >= lo)) {
        throw Error("geometric grid needs 0 < lo <= hi and count >= 1");
    }
    if (count == 1) {
        return {lo};
    }
    std::vector<double> out(count);
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo * std::exp(step * static_cast<double>(i));
    }
    out.back() = hi;
    return out;
}

/// Worker count from CLUSTER_THREADS, else hardware concurrency.
inline std::size_t worker_count(std::size_t requested = 0) {
    if (requested > 0) {
        return requested;
    }
    std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CLUSTER_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) {
            return std::min<std::size_t>(static_cast<std::size_t>(v), hw);
        }
    }
    return hw;
}

/// Runs `task(i)` for i in [0, count) on up to `threads` workers. Rethrows the first failure.
template <typename Task>
void parallel_for(std::size_t count, std::size_t threads, Task&& task) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

/// Shortest round-trip decimal form of a double.
inline std::string fmt(double v) {
    return json(v).dump();
}

inline Dataset load_source(const DataSource& src) {
    if (src.csv_path) {
        return load_csv(*src.csv_path, src.preprocess).data;
    }
    const auto& b = src.blobs;
    auto ds = make_blobs(b.n, b.k, b.d, b.spread, b.seed).data;
    return preprocess(ds, src.preprocess);
}

inline json config_to_json(const SolverConfig& cfg) {
    return {{"k", cfg.k},
            {"t", cfg.t},
            {"eta", cfg.eta},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"max_iters", cfg.max_iters},
            {"tol", cfg.tol},
            {"seed", cfg.seed},
            {"method", to_string(cfg.method)},
            {"denominator", to_string(cfg.denominator)}};
}

/**
 * @brief JSON document for one solve: config, centroids, metrics, labels and objective trace.
 * Contains no timings, so it is reproducible byte for byte.
 */
inline json report_to_json(const SolverConfig& cfg, const Dataset& ds, const SolveReport& r) {
    json centroids = json::array();
    for (std::size_t j = 0; j < r.centroids.k(); ++j) {
        const auto c = r.centroids.center(j);
        centroids.push_back(std::vector<double>(c.begin(), c.end()));
    }
    return {{"config", config_to_json(cfg)},
            {"n", ds.n()},
            {"d", ds.d()},
            {"columns", ds.column_names()},
            {"centroids", centroids},
            {"labels", r.assignment.labels()},
            {"iterations_run", r.iterations_run},
            {"objective_trace", r.objective_trace},
            {"empty_reseeds", r.empty_reseeds},
            {"seeding_fallbacks", r.seeding_fallbacks},
            {"metrics",
             {{"sse", r.metrics.sse},
              {"tilted_sse", r.metrics.tilted_sse},
              {"per_cluster_variance", r.metrics.per_cluster_variance},
              {"per_cluster_max_distance", r.metrics.per_cluster_max_distance},
              {"cluster_sizes", r.metrics.cluster_sizes}}}};
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw Error("write failed for '" + path.string() + "'");
    }
}

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error("cannot create output directory '" + dir.string() + "'");
    }
}

inline std::string trace_csv_header() { return "k,t,repeat,seed,iteration,objective,elapsed_ms\n"; }

inline void append_trace(std::string& out, std::size_t k, std::size_t repeat, const std::vector<TraceRow>& rows) {
    for (const auto& row : rows) {
        out += std::to_string(k) + "," + fmt(row.t) + "," + std::to_string(repeat) + "," + std::to_string(row.seed) +
               "," + std::to_string(row.iteration) + "," + fmt(row.objective) + "," + fmt(row.wall_ms) + "\n";
    }
}

inline std::vector<TraceRow> trace_rows(const SolverConfig& cfg, const SolveReport& r, bool record_wall_time) {
    std::vector<TraceRow> rows;
    rows.reserve(r.iterations_run);
    for (std::size_t it = 0; it < r.iterations_run; ++it) {
        rows.push_back({it + 1, cfg.seed, cfg.t, r.objective_trace[it],
                        record_wall_time ? 1000.0 * r.iteration_end_seconds[it] : 0.0});
    }
    return rows;
}

struct RunResult {
    std::size_t k = 0;
    double t = 0;
    std::size_t repeat = 0;
    SolverConfig config;
    SolveReport report;
    json document;
};

/// Mean and population standard deviation.
struct Moments {
    double mean = 0;
    double std = 0;
};

inline Moments moments(const std::vector<double>& xs) {
    Moments m;
    if (xs.empty()) {
        return m;
    }
    for (double x : xs) {
        m.mean += x;
    }
    m.mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) {
        var += (x - m.mean) * (x - m.mean);
    }
    m.std = std::sqrt(var / static_cast<double>(xs.size()));
    return m;
}

/**
 * @brief One aggregated row of `summary.csv`.
 *
 * `rank` is 0 for the scalar metrics (sse, tilted_sse) and 1..k for per-cluster metrics,
 * which are sorted in descending order within each run before averaging.
 */
struct SummaryRow {
    std::size_t k = 0;
    double t = 0;
    std::string metric;
    std::size_t rank = 0;
    Moments value;
    std::size_t runs = 0;
};

inline std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs, const ExperimentSpec& spec) {
    std::vector<SummaryRow> out;
    for (auto k : spec.ks) {
        for (double t : spec.ts) {
            std::vector<const RunResult*> group;
            for (const auto& r : runs) {
                if (r.k == k && r.t == t) {
                    group.push_back(&r);
                }
            }
            auto scalar = [&](const char* name, auto get) {
                std::vector<double> xs;
                for (const auto* r : group) {
                    xs.push_back(get(r->report.metrics));
                }
                out.push_back({k, t, name, 0, moments(xs), group.size()});
            };
            scalar("sse", [](const MetricsBundle& m) { return m.sse; });
            scalar("tilted_sse", [](const MetricsBundle& m) { return m.tilted_sse; });
            auto ranked = [&](const char* name, auto get) {
                std::vector<std::vector<double>> sorted;
                for (const auto* r : group) {
                    auto v = get(r->report.metrics);
                    std::sort(v.begin(), v.end(), std::greater<>());
                    sorted.push_back(std::move(v));
                }
                for (std::size_t rank = 0; rank < k; ++rank) {
                    std::vector<double> xs;
                    for (const auto& v : sorted) {
                        xs.push_back(v[rank]);
                    }
                    out.push_back({k, t, name, rank + 1, moments(xs), group.size()});
                }
            };
            ranked("variance", [](const MetricsBundle& m) { return m.per_cluster_variance; });
            ranked("max_distance", [](const MetricsBundle& m) { return m.per_cluster_max_distance; });
        }
    }
    return out;
}

struct ExperimentResult {
    std::vector<RunResult> runs;
    std::vector<SummaryRow> summary;
};

namespace detail {

inline std::string t_tag(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", t);
    return buf;
}

}  // namespace detail

/**
 * @brief Run every (k, t, repeat) combination and write the report files.
 *
 * Writes `summary.csv`, `trace.csv` and `runs/result_k<k>_t<t>_r<repeat>.json` under
 * `spec.output_dir`. Runs execute on a worker pool; files are written afterwards by the
 * calling thread in a fixed order.
 */
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.repeats == 0 || spec.ks.empty() || spec.ts.empty()) {
        throw Error("experiment needs repeats >= 1 and non-empty k and t lists");
    }
    for (double t : spec.ts) {
        if (!(t >= 0) || !std::isfinite(t)) {
            throw Error("every t must be a finite value >= 0");
        }
    }
    const Dataset full = load_source(spec.source);
    if (spec.sample_size > full.n()) {
        throw Error("sample_size " + std::to_string(spec.sample_size) + " exceeds dataset size " +
                    std::to_string(full.n()));
    }
    ensure_dir(spec.output_dir);
    ensure_dir(spec.output_dir / "runs");

    std::vector<RunResult> runs;
    for (auto k : spec.ks) {
        for (double t : spec.ts) {
            for (std::size_t r = 0; r < spec.repeats; ++r) {
                RunResult rr;
                rr.k = k;
                rr.t = t;
                rr.repeat = r;
                rr.config = spec.solver;
                rr.config.k = k;
                rr.config.t = t;
                rr.config.seed = derive_seed(spec.seed, k, t, r);
                runs.push_back(std::move(rr));
            }
        }
    }

    parallel_for(runs.size(), worker_count(spec.threads), [&](std::size_t idx) {
        auto& rr = runs[idx];
        const Dataset sample = spec.sample_size == 0 ? full : subsample(full, spec.sample_size, rr.config.seed);
        rr.report = solve(sample, rr.config);
        rr.document = report_to_json(rr.config, sample, rr.report);
    });

    std::string trace = trace_csv_header();
    for (const auto& rr : runs) {
        append_trace(trace, rr.k, rr.repeat, trace_rows(rr.config, rr.report, spec.record_wall_time));
        write_text(spec.output_dir / "runs" /
                       ("result_k" + std::to_string(rr.k) + "_t" + detail::t_tag(rr.t) + "_r" +
                        std::to_string(rr.repeat) + ".json"),
                   rr.document.dump(2) + "\n");
    }
    write_text(spec.output_dir / "trace.csv", trace);

    auto summary = summarize(runs, spec);
    std::string text = "k,t,metric,rank,runs,mean,std\n";
    for (const auto& row : summary) {
        text += std::to_string(row.k) + "," + fmt(row.t) + "," + row.metric + "," + std::to_string(row.rank) + "," +
                std::to_string(row.runs) + "," + fmt(row.value.mean) + "," + fmt(row.value.std) + "\n";
    }
    write_text(spec.output_dir / "summary.csv", text);
    return {std::move(runs), std::move(summary)};
}

struct TrajectoryRow {
    double t = 0;
    std::size_t cluster = 0;
    double x = 0;
    double y = 0;
};

/**
 * @brief Final centroids of one solve per t on the grid, same seed throughout.
 *
 * Writes `trajectory.csv` (t, cluster, x, y) when `output_dir` is given. Requires d = 2.
 */
inline std::vector<TrajectoryRow> sweep_t_trajectory(const Dataset& ds, const SolverConfig& base,
                                                     const std::vector<double>& grid,
                                                     const std::optional<fs::path>& output_dir = std::nullopt,
                                                     std::size_t threads = 0) {
    if (ds.d() != 2) {
        throw Error("trajectory sweep needs 2-D data, got d=" + std::to_string(ds.d()));
    }
    std::vector<SolveReport> reports(grid.size());
    parallel_for(grid.size(), worker_count(threads), [&](std::size_t i) {
        SolverConfig cfg = base;
        cfg.t = grid[i];
        reports[i] = solve(ds, cfg);
    });
    std::vector<TrajectoryRow> rows;
    std::string text = "t,cluster,x,y\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = 0; j < reports[i].centroids.k(); ++j) {
            const auto c = reports[i].centroids.center(j);
            rows.push_back({grid[i], j, c[0], c[1]});
            text += fmt(grid[i]) + "," + std::to_string(j) + "," + fmt(c[0]) + "," + fmt(c[1]) + "\n";
        }
    }
    if (output_dir) {
        ensure_dir(*output_dir);
        write_text(*output_dir / "trajectory.csv", text);
    }
    return rows;
}

struct ScalingRow {
    std::size_t n = 0;
    std::size_t batch_size = 0;
    /// Median wall time over the repeats, seconds.
    double seconds = 0;
    /// seconds / previous row's seconds; 0 for the first row.
    double ratio = 0;
};

/**
 * @brief Wall time of `solve` on blobs of each size, with batch size n/50.
 *
 * Timing covers `solve` only; data generation is excluded. Sizes must be ascending.
 * Runs are sequential so timings do not compete for cores.
 */
inline std::vector<ScalingRow> runtime_scaling(const BlobSource& blobs, const std::vector<std::size_t>& sizes,
                                               const SolverConfig& base, std::size_t repeats = 3,
                                               const std::optional<fs::path>& output_dir = std::nullopt) {
    if (sizes.empty() || !std::is_sorted(sizes.begin(), sizes.end())) {
        throw Error("scaling sizes must be a non-empty ascending list");
    }
    repeats = std::max<std::size_t>(1, repeats);
    std::vector<ScalingRow> rows;
    for (auto n : sizes) {
        const auto ds = make_blobs(n, blobs.k, blobs.d, blobs.spread, blobs.seed).data;
        SolverConfig cfg = base;
        cfg.batch_size = std::max<std::size_t>(1, n / 50);
        std::vector<double> times;
        for (std::size_t r = 0; r < repeats; ++r) {
            times.push_back(solve(ds, cfg).wall_time);
        }
        std::sort(times.begin(), times.end());
        ScalingRow row{n, cfg.batch_size, times[times.size() / 2], 0};
        if (!rows.empty()) {
            row.ratio = row.seconds / rows.back().seconds;
        }
        rows.push_back(row);
    }
    if (output_dir) {
        ensure_dir(*output_dir);
        std::string text = "n,batch_size,seconds,ratio\n";
        for (const auto& r : rows) {
            text += std::to_string(r.n) + "," + std::to_string(r.batch_size) + "," + fmt(r.seconds) + "," +
                    fmt(r.ratio) + "\n";
        }
        write_text(*output_dir / "scaling.csv", text);
    }
    return rows;
}

/**
 * @brief Parse an experiment spec from its JSON form.
 *
 * Relative CSV and output paths are resolved against `base_dir`. Example:
 *
 *     {
 *       "dataset": {"csv": "bank.csv", "columns": ["age", "balance"], "standardize": true},
 *       "sample_size": 1000, "repeats": 10, "k": [3, 4, 5], "t": [0.01, 0.05, 0.1, 0.2],
 *       "solver": {"eta": 0.05, "epochs": 5, "batch_size": 100, "max_iters": 500, "method": "tkm"},
 *       "seed": 0, "output_dir": "out"
 *     }
 *
 * Instead of "csv"/"columns", "dataset" may hold "blobs": {"n", "k", "d", "spread", "seed"}.
 */
inline ExperimentSpec parse_experiment_spec(const json& j, const fs::path& base_dir = {}) {
    ExperimentSpec spec;
    try {
        const auto& ds = j.at("dataset");
        if (ds.contains("csv")) {
            fs::path p = ds.at("csv").get<std::string>();
            spec.source.csv_path = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
            spec.source.preprocess.selected_columns = ds.at("columns").get<std::vector<std::string>>();
        } else if (ds.contains("blobs")) {
            const auto& b = ds.at("blobs");
            spec.source.blobs.n = b.value("n", spec.source.blobs.n);
            spec.source.blobs.k = b.value("k", spec.source.blobs.k);
            spec.source.blobs.d = b.value("d", spec.source.blobs.d);
            spec.source.blobs.spread = b.value("spread", spec.source.blobs.spread);
            spec.source.blobs.seed = b.value("seed", spec.source.blobs.seed);
        } else {
            throw Error("dataset needs either \"csv\" or \"blobs\"");
        }
        spec.source.preprocess.standardize = ds.value("standardize", false);
        spec.source.preprocess.unit_normalize = ds.value("unit_normalize", false);

        spec.sample_size = j.value("sample_size", spec.sample_size);
        spec.repeats = j.value("repeats", spec.repeats);
        if (j.contains("k")) {
            spec.ks = j.at("k").is_array() ? j.at("k").get<std::vector<std::size_t>>()
                                           : std::vector<std::size_t>{j.at("k").get<std::size_t>()};
        }
        if (j.contains("t")) {
            spec.ts = j.at("t").is_array() ? j.at("t").get<std::vector<double>>()
                                           : std::vector<double>{j.at("t").get<double>()};
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            auto& cfg = spec.solver;
            cfg.eta = s.value("eta", cfg.eta);
            cfg.epochs = s.value("epochs", cfg.epochs);
            cfg.batch_size = s.value("batch_size", cfg.batch_size);
            cfg.max_iters = s.value("max_iters", cfg.max_iters);
            cfg.tol = s.value("tol", cfg.tol);
            cfg.method = parse_method(s.value("method", to_string(cfg.method)));
            cfg.denominator = parse_denominator(s.value("denominator", to_string(cfg.denominator)));
        }
        spec.seed = j.value("seed", spec.seed);
        fs::path out = j.value("output_dir", std::string("out"));
        spec.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
        spec.record_wall_time = j.value("record_wall_time", true);
        spec.threads = j.value("threads", std::size_t{0});
    } catch (const json::exception& e) {
        throw Error(std::string("invalid experiment config: ") + e.what());
    }
    if (spec.repeats == 0) {
        throw Error("invalid experiment config: repeats must be >= 1");
    }
    return spec;
}

inline ExperimentSpec load_experiment_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config '" + path.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_experiment_spec(j, path.parent_path());
}

}  // namespace tkm::harness

#endif  // TKM_HARNESS_HPP
