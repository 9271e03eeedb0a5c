// Random instance generators and naive reference formulas shared by the test binaries.
#ifndef TKM_TESTS_SUPPORT_HPP
#define TKM_TESTS_SUPPORT_HPP

#include <cmath>
#include <span>
#include <vector>

#include "tkm/assignment.hpp"
#include "tkm/core.hpp"
#include "tkm/rng.hpp"

namespace tkm::testing {

struct Instance {
    Dataset data;
    Assignment assignment;
    Centroids centroids;
};

inline Dataset random_points(std::size_t n, std::size_t d, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n * d);
    for (auto& x : v) {
        x = scale * (2 * rng.uniform() - 1);
    }
    return Dataset(std::move(v), n, d);
}

inline Dataset random_unit_points(std::size_t n, std::size_t d, Rng& rng) {
    std::vector<double> v(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        do {
            s = 0;
            for (std::size_t m = 0; m < d; ++m) {
                v[i * d + m] = rng.normal();
                s += v[i * d + m] * v[i * d + m];
            }
        } while (s < 1e-12);
        for (std::size_t m = 0; m < d; ++m) {
            v[i * d + m] /= std::sqrt(s);
        }
    }
    return Dataset(std::move(v), n, d);
}

/// Random points, random labels (every cluster non-empty) and random centroids.
inline Instance random_instance(Rng& rng, std::size_t max_n = 64, std::size_t max_d = 5, std::size_t max_k = 4) {
    const std::size_t k = 1 + rng.below(max_k);
    const std::size_t n = k + rng.below(max_n - k + 1);
    const std::size_t d = 1 + rng.below(max_d);
    auto data = random_points(n, d, rng);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i < k ? i : rng.below(k);
    }
    std::vector<double> c(k * d);
    for (auto& x : c) {
        x = 2 * rng.uniform() - 1;
    }
    return {std::move(data), Assignment(std::move(labels), k), Centroids(std::move(c), k, d)};
}

/// Tilted cluster objective straight from its definition, log-sum-exp over all n terms.
inline double naive_cluster_objective(double t, const Dataset& ds, const Assignment& a, std::size_t j,
                                      std::span<const double> c) {
    std::vector<double> expo(ds.n());
    double top = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        double f = 0;
        for (std::size_t m = 0; m < ds.d(); ++m) {
            f += (ds(i, m) - c[m]) * (ds(i, m) - c[m]);
        }
        expo[i] = a.label(i) == j ? t * f : 0.0;
        top = std::max(top, expo[i]);
    }
    double s = 0;
    for (double e : expo) {
        s += std::exp(e - top);
    }
    return (top + std::log(s / static_cast<double>(ds.n()))) / t;
}

inline std::vector<double> random_unit_direction(std::size_t d, Rng& rng) {
    std::vector<double> u(d);
    double s = 0;
    do {
        s = 0;
        for (auto& x : u) {
            x = rng.normal();
            s += x * x;
        }
    } while (s < 1e-12);
    for (auto& x : u) {
        x /= std::sqrt(s);
    }
    return u;
}

}  // namespace tkm::testing

#endif  // TKM_TESTS_SUPPORT_HPP
