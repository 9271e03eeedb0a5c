#ifndef TKM_ENGINE_HPP
#define TKM_ENGINE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "assignment.hpp"
#include "core.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "seeding.hpp"

/**
 * @file engine.hpp
 *
 * @brief Tilted k-means solver and its t = 0 baselines.
 *
 * Each outer iteration assigns every point to its nearest centroid, then refines the
 * centroids: `Method::tkm` and `Method::nf` take `epochs` mini-batch gradient steps on the
 * tilted SSE (`nf` with t = 0), `Method::lloyd` replaces each centroid by its cluster mean.
 */

namespace tkm {

enum class Method { tkm, nf, lloyd };

/// Denominator used by the mini-batch gradient. `full` sums over the whole dataset.
enum class Denominator { full, batch };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::tkm: return "tkm";
        case Method::nf: return "nf";
        case Method::lloyd: return "lloyd";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "tkm") return Method::tkm;
    if (s == "nf") return Method::nf;
    if (s == "lloyd") return Method::lloyd;
    throw Error("unknown method '" + s + "' (expected tkm, nf or lloyd)");
}

inline std::string to_string(Denominator d) { return d == Denominator::full ? "full" : "batch"; }

inline Denominator parse_denominator(const std::string& s) {
    if (s == "full") return Denominator::full;
    if (s == "batch") return Denominator::batch;
    throw Error("unknown denominator '" + s + "' (expected full or batch)");
}

struct SolverConfig {
    std::size_t k = 3;
    double t = 0.1;
    double eta = 0.05;
    std::size_t epochs = 5;
    std::size_t batch_size = 100;
    std::size_t max_iters = 500;
    /// Early stop when the relative objective change over the last 10 iterations drops below this; 0 disables.
    double tol = 0;
    std::uint64_t seed = 0;
    Method method = Method::tkm;
    Denominator denominator = Denominator::full;

    /// Tilt actually used by the solver: `nf` and `lloyd` run at t = 0.
    double effective_t() const { return method == Method::tkm ? t : 0.0; }
};

inline void validate(const SolverConfig& cfg, std::size_t n) {
    if (cfg.k == 0 || cfg.k > n) {
        throw Error("k=" + std::to_string(cfg.k) + " must be in [1, n=" + std::to_string(n) + "]");
    }
    if (!(cfg.t >= 0) || !std::isfinite(cfg.t)) {
        throw Error("t must be a finite value >= 0");
    }
    if (cfg.max_iters == 0) {
        throw Error("max_iters must be >= 1");
    }
    if (!(cfg.tol >= 0)) {
        throw Error("tol must be >= 0");
    }
    if (cfg.method == Method::lloyd) {
        return;
    }
    if (!(cfg.eta > 0) || !std::isfinite(cfg.eta)) {
        throw Error("learning rate eta must be > 0");
    }
    if (cfg.epochs == 0) {
        throw Error("epochs must be >= 1");
    }
    if (cfg.batch_size == 0 || cfg.batch_size > n) {
        throw Error("batch size " + std::to_string(cfg.batch_size) + " must be in [1, n=" + std::to_string(n) + "]");
    }
}

/// Nearest-centroid labels. Ties go to the lowest cluster index.
inline Assignment assign(const Dataset& ds, const Centroids& cs) {
    require_same_dim(ds, cs);
    if (cs.k() == 0) {
        throw Error("cannot assign to an empty centroid set");
    }
    std::vector<std::size_t> labels(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        double best = squared_distance(ds.row(i), cs.center(0));
        std::size_t arg = 0;
        for (std::size_t j = 1; j < cs.k(); ++j) {
            const double f = squared_distance(ds.row(i), cs.center(j));
            if (f < best) {
                best = f;
                arg = j;
            }
        }
        labels[i] = arg;
    }
    return Assignment(std::move(labels), cs.k());
}

namespace detail {

inline std::size_t farthest_row(const Dataset& ds, const Centroids& cs) {
    const auto d2 = d2_distances(ds, cs);
    return static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
}

inline void move_center_to_row(Centroids& cs, std::size_t j, const Dataset& ds, std::size_t row) {
    const auto src = ds.row(row);
    std::copy(src.begin(), src.end(), cs.center(j).begin());
}

}  // namespace detail

/**
 * @brief `assign`, followed by reseeding of empty clusters.
 *
 * Each empty cluster's centroid jumps to the row with the largest current D^2, after which
 * points are reassigned once. `reseeds` is incremented per moved centroid.
 */
inline Assignment assign_with_reseed(const Dataset& ds, Centroids& cs, std::size_t& reseeds) {
    auto a = assign(ds, cs);
    bool moved = false;
    for (std::size_t j = 0; j < cs.k(); ++j) {
        if (a.members(j).empty()) {
            detail::move_center_to_row(cs, j, ds, detail::farthest_row(ds, cs));
            ++reseeds;
            moved = true;
        }
    }
    return moved ? assign(ds, cs) : a;
}

struct CentroidUpdate {
    Centroids centroids;
    /// Clusters that had no members and were reseeded to the farthest row.
    std::size_t empty_reseeds = 0;
};

/// Arithmetic mean of each cluster's members.
inline CentroidUpdate lloyd_update(const Dataset& ds, const Assignment& a, std::size_t k) {
    if (a.n() != ds.n() || a.k() != k) {
        throw Error("assignment does not match dataset/k");
    }
    const std::size_t d = ds.d();
    CentroidUpdate out{Centroids(k, d), 0};
    std::vector<std::size_t> empty;
    for (std::size_t j = 0; j < k; ++j) {
        const auto& mem = a.members(j);
        if (mem.empty()) {
            empty.push_back(j);
            continue;
        }
        auto c = out.centroids.center(j);
        for (auto i : mem) {
            const auto x = ds.row(i);
            for (std::size_t m = 0; m < d; ++m) {
                c[m] += x[m];
            }
        }
        for (auto& v : c) {
            v /= static_cast<double>(mem.size());
        }
    }
    if (empty.empty()) {
        return out;
    }
    // Reseed against the centroids that do have members.
    std::vector<double> filled;
    for (std::size_t j = 0; j < k; ++j) {
        if (!a.members(j).empty()) {
            const auto c = out.centroids.center(j);
            filled.insert(filled.end(), c.begin(), c.end());
        }
    }
    for (auto j : empty) {
        Centroids current(filled, filled.size() / d, d);
        const std::size_t row = detail::farthest_row(ds, current);
        detail::move_center_to_row(out.centroids, j, ds, row);
        const auto r = ds.row(row);
        filled.insert(filled.end(), r.begin(), r.end());
        ++out.empty_reseeds;
    }
    return out;
}

namespace detail {

inline std::vector<double> cluster_gradient(const Dataset& ds, std::span<const std::size_t> members,
                                            std::span<const double> c, double t,
                                            std::span<const std::size_t> batch_members, double outsiders) {
    const std::size_t d = ds.d();
    std::vector<double> g(d, 0.0);
    if (batch_members.empty()) {
        return g;
    }
    double top = 0;
    for (auto i : members) {
        top = std::max(top, t * squared_distance(ds.row(i), c));
    }
    // Z * exp(-top), with non-members contributing exp(0) each
    double z = outsiders * std::exp(-top);
    for (auto i : members) {
        z += std::exp(t * squared_distance(ds.row(i), c) - top);
    }
    for (auto i : batch_members) {
        const auto x = ds.row(i);
        const double w = std::exp(t * squared_distance(x, c) - top);
        for (std::size_t m = 0; m < d; ++m) {
            g[m] += w * 2.0 * (c[m] - x[m]);
        }
    }
    for (auto& v : g) {
        v /= z;
    }
    return g;
}

inline void check_tilt(double t) {
    if (!(t >= 0) || !std::isfinite(t)) {
        throw Error("tilt t must be a finite value >= 0");
    }
}

inline void check_batch_members(const Assignment& a, std::size_t j, std::span<const std::size_t> batch_members) {
    for (auto i : batch_members) {
        if (i >= a.n() || a.label(i) != j) {
            throw Error("batch point " + std::to_string(i) + " is not a member of cluster " + std::to_string(j));
        }
    }
}

}  // namespace detail

/**
 * @brief Mini-batch gradient of the tilted SSE with respect to centroid `j`.
 *
 *     g = sum_{i in B_j} exp(t f(x_i, c)) * 2 (c - x_i) / Z_j,
 *     Z_j = (n - |S_j|) + sum_{i in S_j} exp(t f(x_i, c))
 *
 * `batch_members` must all belong to cluster `j`. With the full cluster as batch this is the
 * exact gradient of `tilted_cluster_objective`. All exponentials are shifted by the largest
 * exponent so no term overflows.
 */
inline std::vector<double> tilted_cluster_gradient(const Dataset& ds, const Assignment& a, std::size_t j,
                                                   std::span<const double> c, double t,
                                                   std::span<const std::size_t> batch_members) {
    detail::check_tilt(t);
    if (j >= a.k() || c.size() != ds.d() || a.n() != ds.n()) {
        throw Error("tilted_cluster_gradient: inconsistent cluster index or dimensions");
    }
    detail::check_batch_members(a, j, batch_members);
    const auto& members = a.members(j);
    return detail::cluster_gradient(ds, members, c, t, batch_members,
                                    static_cast<double>(ds.n() - members.size()));
}

/**
 * @brief Same numerator as `tilted_cluster_gradient`, denominator estimated on the batch:
 * Z = (|B| - |B_j|) + sum_{i in B_j} exp(t f(x_i, c)).
 */
inline std::vector<double> tilted_cluster_gradient_batch_denominator(const Dataset& ds, const Assignment& a,
                                                                     std::size_t j, std::span<const double> c,
                                                                     double t,
                                                                     std::span<const std::size_t> batch_members,
                                                                     std::size_t batch_size) {
    detail::check_tilt(t);
    if (j >= a.k() || c.size() != ds.d() || a.n() != ds.n() || batch_members.size() > batch_size) {
        throw Error("tilted_cluster_gradient: inconsistent cluster index, dimensions or batch size");
    }
    detail::check_batch_members(a, j, batch_members);
    return detail::cluster_gradient(ds, batch_members, c, t, batch_members,
                                    static_cast<double>(batch_size - batch_members.size()));
}

/**
 * @brief `cfg.epochs` mini-batch gradient steps on every centroid, assignment held fixed.
 *
 * Each epoch draws one batch of `cfg.batch_size` rows uniformly without replacement from the
 * whole dataset; cluster `j` steps on the batch rows it owns and is left alone if it owns none.
 * The gradient is not rescaled by n/|B|; `eta` absorbs that factor.
 */
inline Centroids refine_sgd(const Dataset& ds, const Assignment& a, const Centroids& cs, const SolverConfig& cfg,
                            Rng& rng) {
    require_consistent(ds, a, cs);
    if (cfg.method == Method::lloyd) {
        throw Error("refine_sgd needs method tkm or nf");
    }
    if (cfg.batch_size == 0 || cfg.batch_size > ds.n()) {
        throw Error("batch size " + std::to_string(cfg.batch_size) + " must be in [1, n=" + std::to_string(ds.n()) +
                    "]");
    }
    const double t = cfg.effective_t();
    detail::check_tilt(t);
    const std::size_t n = ds.n(), k = cs.k(), d = ds.d();
    Centroids out = cs;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::vector<std::size_t>> batch_of(k);

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        for (std::size_t i = 0; i < cfg.batch_size; ++i) {
            std::swap(perm[i], perm[i + rng.below(n - i)]);
        }
        for (auto& b : batch_of) {
            b.clear();
        }
        for (std::size_t i = 0; i < cfg.batch_size; ++i) {
            batch_of[a.label(perm[i])].push_back(perm[i]);
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (batch_of[j].empty()) {
                continue;
            }
            auto c = out.center(j);
            const double outsiders = cfg.denominator == Denominator::full
                                         ? static_cast<double>(n - a.members(j).size())
                                         : static_cast<double>(cfg.batch_size - batch_of[j].size());
            const auto& z_members = cfg.denominator == Denominator::full ? a.members(j) : batch_of[j];
            const auto g = detail::cluster_gradient(ds, z_members, c, t, batch_of[j], outsiders);
            for (std::size_t m = 0; m < d; ++m) {
                c[m] -= cfg.eta * g[m];
            }
        }
    }
    return out;
}

struct SolveReport {
    Centroids centroids;
    /// Nearest-centroid assignment against the final centroids.
    Assignment assignment;
    /// Tilted SSE after each outer iteration (SSE for Lloyd).
    std::vector<double> objective_trace;
    /// Seconds since solve start at the end of each iteration.
    std::vector<double> iteration_end_seconds;
    std::size_t iterations_run = 0;
    double wall_time = 0;
    MetricsBundle metrics;
    std::size_t empty_reseeds = 0;
    std::size_t seeding_fallbacks = 0;
};

namespace detail {

inline bool window_converged(const std::vector<double>& trace, double tol) {
    constexpr std::size_t window = 10;
    if (tol <= 0 || trace.size() <= window) {
        return false;
    }
    const double now = trace.back();
    const double then = trace[trace.size() - 1 - window];
    const double scale = std::max(std::abs(then), std::numeric_limits<double>::min());
    return std::abs(now - then) / scale < tol;
}

}  // namespace detail

/**
 * @brief Full solve: k-means++ seeding, then alternate assignment and refinement.
 *
 * Runs `cfg.max_iters` iterations unless `cfg.tol > 0` stops it earlier. Single-threaded and
 * deterministic: identical inputs give identical reports apart from timings.
 */
inline SolveReport solve(const Dataset& ds, const SolverConfig& cfg) {
    validate(cfg, ds.n());
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const double t = cfg.effective_t();

    Rng rng(cfg.seed);
    auto seeding = kmeanspp_seed(ds, cfg.k, rng);
    SolveReport report;
    report.seeding_fallbacks = seeding.uniform_fallbacks;
    Centroids cs = std::move(seeding.centroids);

    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const auto a = assign_with_reseed(ds, cs, report.empty_reseeds);
        double objective;
        if (cfg.method == Method::lloyd) {
            auto upd = lloyd_update(ds, a, cfg.k);
            report.empty_reseeds += upd.empty_reseeds;
            cs = std::move(upd.centroids);
            objective = sse(ds, a, cs);
        } else {
            cs = refine_sgd(ds, a, cs, cfg, rng);
            objective = tilted_sse(t, ds, a, cs);
        }
        if (!std::isfinite(objective)) {
            throw Error("objective became non-finite at iteration " + std::to_string(it + 1) +
                        " (learning rate too large?)");
        }
        report.objective_trace.push_back(objective);
        report.iteration_end_seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
        if (detail::window_converged(report.objective_trace, cfg.tol)) {
            break;
        }
    }
    report.iterations_run = report.objective_trace.size();
    report.assignment = assign(ds, cs);
    report.metrics = compute_metrics(t, ds, report.assignment, cs);
    report.centroids = std::move(cs);
    report.wall_time = std::chrono::duration<double>(clock::now() - start).count();
    return report;
}

}  // namespace tkm

#endif  // TKM_ENGINE_HPP
