#ifndef TKM_METRICS_HPP
#define TKM_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "assignment.hpp"
#include "core.hpp"

/**
 * @file metrics.hpp
 *
 * @brief Clustering utility and fairness measurements.
 *
 * Throughout, f(x, c) = ||x - c||^2. The tilted SSE of one cluster is
 *
 *     phi_j(t, c) = (1/t) log( (1/n) sum_{i=1..n} exp(t f(x_i, c) delta_ij) )
 *
 * where non-members contribute exp(0) = 1. At t = 0 it is defined as the cluster's share of the SSE.
 */

namespace tkm {

enum class DistanceKind { squared, euclidean };

/**
 * @brief Per-cluster tilted objective phi_j as a function of the center `c`.
 *
 * `members` are row indices of `ds` belonging to the cluster; `ds.n()` is the n in the
 * 1/n normalization.
 */
inline double tilted_cluster_objective(double t, const Dataset& ds, std::span<const std::size_t> members,
                                       std::span<const double> c) {
    if (t < 0 || std::isnan(t)) {
        throw Error("tilt t must be >= 0");
    }
    const double n = static_cast<double>(ds.n());
    if (members.empty()) {
        return 0.0;
    }
    if (t == 0) {
        double s = 0;
        for (auto i : members) {
            s += squared_distance(ds.row(i), c);
        }
        return s / n;
    }
    double top = 0;
    for (auto i : members) {
        top = std::max(top, t * squared_distance(ds.row(i), c));
    }
    if (top < 50) {
        // log1p/expm1 keep full precision as t -> 0
        double s = 0;
        for (auto i : members) {
            s += std::expm1(t * squared_distance(ds.row(i), c));
        }
        return std::log1p(s / n) / t;
    }
    double s = static_cast<double>(ds.n() - members.size()) * std::exp(-top);
    for (auto i : members) {
        s += std::exp(t * squared_distance(ds.row(i), c) - top);
    }
    return (top + std::log(s) - std::log(n)) / t;
}

/// (1/n) sum of squared distances to the assigned centroid.
inline double sse(const Dataset& ds, const Assignment& a, const Centroids& cs) {
    require_consistent(ds, a, cs);
    double s = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        s += squared_distance(ds.row(i), cs.center(a.label(i)));
    }
    return s / static_cast<double>(ds.n());
}

/// Sum over clusters of the tilted cluster objective; `t == 0` gives `sse`.
inline double tilted_sse(double t, const Dataset& ds, const Assignment& a, const Centroids& cs) {
    require_consistent(ds, a, cs);
    if (t < 0 || std::isnan(t)) {
        throw Error("tilt t must be >= 0");
    }
    if (t == 0) {
        return sse(ds, a, cs);
    }
    double s = 0;
    for (std::size_t j = 0; j < cs.k(); ++j) {
        s += tilted_cluster_objective(t, ds, a.members(j), cs.center(j));
    }
    return s;
}

namespace detail {

inline double member_distance(const Dataset& ds, std::size_t i, std::span<const double> c, DistanceKind kind) {
    const double f = squared_distance(ds.row(i), c);
    return kind == DistanceKind::squared ? f : std::sqrt(f);
}

}  // namespace detail

/**
 * @brief Population variance of member distances to the centroid, per cluster.
 *
 * Squared distances by default; `DistanceKind::euclidean` uses unsquared ones. Empty clusters give 0.
 */
inline std::vector<double> cluster_variances(const Dataset& ds, const Assignment& a, const Centroids& cs,
                                             DistanceKind kind = DistanceKind::squared) {
    require_consistent(ds, a, cs);
    std::vector<double> out(cs.k(), 0.0);
    for (std::size_t j = 0; j < cs.k(); ++j) {
        const auto& mem = a.members(j);
        if (mem.empty()) {
            continue;
        }
        double mean = 0;
        for (auto i : mem) {
            mean += detail::member_distance(ds, i, cs.center(j), kind);
        }
        mean /= static_cast<double>(mem.size());
        double var = 0;
        for (auto i : mem) {
            const double diff = detail::member_distance(ds, i, cs.center(j), kind) - mean;
            var += diff * diff;
        }
        out[j] = var / static_cast<double>(mem.size());
    }
    return out;
}

/// Largest unsquared distance from a member to its centroid, per cluster; 0 when empty.
inline std::vector<double> max_distances(const Dataset& ds, const Assignment& a, const Centroids& cs) {
    require_consistent(ds, a, cs);
    std::vector<double> out(cs.k(), 0.0);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const std::size_t j = a.label(i);
        out[j] = std::max(out[j], squared_distance(ds.row(i), cs.center(j)));
    }
    for (auto& v : out) {
        v = std::sqrt(v);
    }
    return out;
}

/**
 * @brief Softmax of `t * losses`, computed with a max shift.
 */
inline std::vector<double> tilted_weights_from_losses(double t, std::span<const double> losses) {
    if (losses.empty()) {
        throw Error("tilted weights need at least one member");
    }
    if (t < 0 || std::isnan(t)) {
        throw Error("tilt t must be >= 0");
    }
    const double top = t * *std::max_element(losses.begin(), losses.end());
    std::vector<double> w(losses.size());
    double z = 0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        w[i] = std::exp(t * losses[i] - top);
        z += w[i];
    }
    for (auto& v : w) {
        v /= z;
    }
    return w;
}

namespace detail {

inline std::vector<double> losses_to(const Dataset& members, std::span<const double> c) {
    if (members.d() != c.size()) {
        throw Error("dimension mismatch between members and center");
    }
    std::vector<double> f(members.n());
    for (std::size_t i = 0; i < members.n(); ++i) {
        f[i] = squared_distance(members.row(i), c);
    }
    return f;
}

}  // namespace detail

/// Tilted weight of every member point: exp(t f_i) normalized over the members.
inline std::vector<double> tilted_weights(double t, const Dataset& members, std::span<const double> c) {
    const auto f = detail::losses_to(members, c);
    return tilted_weights_from_losses(t, f);
}

struct TiltedMoments {
    double mean = 0;
    double variance = 0;
};

inline TiltedMoments tilted_mean_var_from_losses(double t, std::span<const double> losses) {
    const auto w = tilted_weights_from_losses(t, losses);
    TiltedMoments out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.mean += w[i] * losses[i];
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double diff = losses[i] - out.mean;
        out.variance += w[i] * diff * diff;
    }
    return out;
}

/// Tilted empirical mean and variance of the members' squared distances to `c`.
inline TiltedMoments tilted_mean_var(double t, const Dataset& members, std::span<const double> c) {
    const auto f = detail::losses_to(members, c);
    return tilted_mean_var_from_losses(t, f);
}

struct MetricsBundle {
    double sse = 0;
    double tilted_sse = 0;
    std::vector<double> per_cluster_variance;
    std::vector<double> per_cluster_max_distance;
    std::vector<std::size_t> cluster_sizes;
};

inline MetricsBundle compute_metrics(double t, const Dataset& ds, const Assignment& a, const Centroids& cs,
                                     DistanceKind variance_kind = DistanceKind::squared) {
    return {sse(ds, a, cs), tilted_sse(t, ds, a, cs), cluster_variances(ds, a, cs, variance_kind),
            max_distances(ds, a, cs), a.sizes()};
}

}  // namespace tkm

#endif  // TKM_METRICS_HPP
