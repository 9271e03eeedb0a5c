#ifndef TKM_SEEDING_HPP
#define TKM_SEEDING_HPP

#include <algorithm>
#include <limits>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

/**
 * @file seeding.hpp
 *
 * @brief k-means++ seeding with D^2 sampling.
 */

namespace tkm {

/// For every row, the squared distance to its nearest center.
inline std::vector<double> d2_distances(const Dataset& ds, const Centroids& cs) {
    require_same_dim(ds, cs);
    if (cs.k() == 0) {
        throw Error("d2_distances needs at least one centroid");
    }
    std::vector<double> out(ds.n(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < cs.k(); ++j) {
            out[i] = std::min(out[i], squared_distance(ds.row(i), cs.center(j)));
        }
    }
    return out;
}

/**
 * @brief Draw a row with probability `dist[i] / total`. Rows with zero weight are never drawn.
 *
 * `total` must be the (positive) sum of `dist`.
 */
inline std::size_t sample_d2_row(const std::vector<double>& dist, double total, Rng& rng) {
    const double target = rng.uniform() * total;
    double acc = 0;
    std::size_t last_positive = dist.size();
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0) {
            continue;
        }
        last_positive = i;
        acc += dist[i];
        if (acc > target) {
            return i;
        }
    }
    // rounding can leave acc == total <= target
    return last_positive;
}

struct Seeding {
    Centroids centroids;
    /// Row index of each chosen center, in selection order.
    std::vector<std::size_t> rows;
    /// Number of centers picked by the uniform fallback because all remaining D^2 mass was zero.
    std::size_t uniform_fallbacks = 0;
};

/**
 * @brief Pick `k` rows: the first uniformly, each next one with probability proportional to
 * its current D^2.
 *
 * When duplicates exhaust the D^2 mass before `k` centers exist, the remaining centers are
 * drawn uniformly from rows not yet chosen, and counted in `uniform_fallbacks`.
 */
inline Seeding kmeanspp_seed(const Dataset& ds, std::size_t k, Rng& rng) {
    const std::size_t n = ds.n(), d = ds.d();
    if (k == 0 || k > n) {
        throw Error("k=" + std::to_string(k) + " must be in [1, n=" + std::to_string(n) + "]");
    }
    Seeding out{Centroids(k, d), {}, 0};
    std::vector<bool> chosen(n, false);
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t row) {
        chosen[row] = true;
        out.rows.push_back(row);
        const auto src = ds.row(row);
        std::copy(src.begin(), src.end(), out.centroids.center(out.rows.size() - 1).begin());
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = std::min(dist[i], squared_distance(ds.row(i), src));
        }
    };

    take(rng.below(n));
    while (out.rows.size() < k) {
        double total = 0;
        for (double v : dist) {
            total += v;
        }
        if (total > 0) {
            take(sample_d2_row(dist, total, rng));
        } else {
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) {
                    rest.push_back(i);
                }
            }
            take(rest[rng.below(rest.size())]);
            ++out.uniform_fallbacks;
        }
    }
    return out;
}

}  // namespace tkm

#endif  // TKM_SEEDING_HPP
