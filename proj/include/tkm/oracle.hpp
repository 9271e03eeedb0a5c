#ifndef TKM_ORACLE_HPP
#define TKM_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"

/**
 * @file oracle.hpp
 *
 * @brief Reference solvers for validating the engine.
 *
 * Nothing here calls into the engine or metrics headers: the tilted centroid is found by
 * damped fixed-point iteration on the stationarity condition
 *
 *     sum_{x in S} exp(t ||x - c||^2) (x - c) = 0,
 *
 * or by bisection in 1-D, and gradients are checked by central differences.
 */

namespace tkm::oracle {

struct OracleConfig {
    double tol = 1e-12;
    std::size_t max_iters = 200000;
    double fd_step = 1e-5;
};

namespace detail {

/// Weighted mean of the members under exp(t ||x - c||^2) weights, max-shifted.
inline std::vector<double> tilted_average(double t, const Dataset& members, std::span<const double> c) {
    const std::size_t n = members.n(), d = members.d();
    std::vector<double> expo(n);
    double top = -1;
    for (std::size_t i = 0; i < n; ++i) {
        double f = 0;
        for (std::size_t m = 0; m < d; ++m) {
            const double diff = members(i, m) - c[m];
            f += diff * diff;
        }
        expo[i] = t * f;
        top = std::max(top, expo[i]);
    }
    std::vector<double> avg(d, 0.0);
    double z = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(expo[i] - top);
        z += w;
        for (std::size_t m = 0; m < d; ++m) {
            avg[m] += w * members(i, m);
        }
    }
    for (auto& v : avg) {
        v /= z;
    }
    return avg;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t m = 0; m < a.size(); ++m) {
        s += (a[m] - b[m]) * (a[m] - b[m]);
    }
    return std::sqrt(s);
}

}  // namespace detail

/**
 * @brief Residual of the stationarity condition at `c`, normalized by the weight sum.
 *
 * Equals || sum w_i x_i - c || with w the members' tilted weights at `c`.
 */
inline double stationarity_residual(double t, const Dataset& members, std::span<const double> c) {
    return detail::distance(detail::tilted_average(t, members, c), c);
}

/**
 * @brief Tilted centroid of `members` by damped fixed-point iteration.
 *
 * Starts at the arithmetic mean; iterates c <- (1 - lambda) c + lambda * tilted_average(c).
 * A step that does not shrink the residual by at least a factor (1 - 1e-4 lambda) is rejected
 * and lambda halved; lambda doubles back (up to 1) after an accepted step. The residual map has
 * Jacobian -(I + 2t Cov_w), so small enough steps always pass. Throws if the residual is still
 * above `cfg.tol` after `cfg.max_iters` iterations.
 */
inline std::vector<double> tilted_centroid_fixed_point(double t, const Dataset& members,
                                                       const OracleConfig& cfg = {}) {
    if (!(t >= 0)) {
        throw Error("oracle: t must be >= 0");
    }
    const std::size_t d = members.d();
    std::vector<double> c(d, 0.0);
    for (std::size_t i = 0; i < members.n(); ++i) {
        for (std::size_t m = 0; m < d; ++m) {
            c[m] += members(i, m);
        }
    }
    for (auto& v : c) {
        v /= static_cast<double>(members.n());
    }

    double lambda = 1.0;
    auto target = detail::tilted_average(t, members, c);
    double residual = detail::distance(target, c);
    std::vector<double> next(d);
    for (std::size_t it = 0; it < cfg.max_iters && residual > cfg.tol; ++it) {
        for (std::size_t m = 0; m < d; ++m) {
            next[m] = (1 - lambda) * c[m] + lambda * target[m];
        }
        auto next_target = detail::tilted_average(t, members, next);
        const double next_residual = detail::distance(next_target, next);
        if (next_residual > (1 - 1e-4 * lambda) * residual) {
            lambda *= 0.5;
            if (lambda < 1e-15) {
                break;
            }
            continue;
        }
        c.swap(next);
        target.swap(next_target);
        residual = next_residual;
        lambda = std::min(1.0, 2 * lambda);
    }
    if (residual > cfg.tol) {
        throw Error("oracle fixed point did not converge: residual " + std::to_string(residual));
    }
    return c;
}

/**
 * @brief 1-D tilted centroid by bisection on the sign of the stationarity residual.
 *
 * The residual is non-negative at min(members) and non-positive at max(members), and changes
 * sign once because the tilted objective is strictly convex.
 */
inline double tilted_centroid_bisection_1d(double t, std::span<const double> members, const OracleConfig& cfg = {}) {
    if (members.empty()) {
        throw Error("oracle: empty member set");
    }
    if (!(t >= 0)) {
        throw Error("oracle: t must be >= 0");
    }
    auto residual_sign = [&](double c) {
        double top = 0;
        for (double x : members) {
            top = std::max(top, t * (x - c) * (x - c));
        }
        double s = 0;
        for (double x : members) {
            s += std::exp(t * (x - c) * (x - c) - top) * (x - c);
        }
        return s;
    };
    double lo = *std::min_element(members.begin(), members.end());
    double hi = *std::max_element(members.begin(), members.end());
    for (std::size_t it = 0; it < cfg.max_iters && hi - lo > cfg.tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (residual_sign(mid) > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Central-difference gradient of `g` at `c` with step `h`.
template <typename Objective>
std::vector<double> finite_diff_gradient(Objective&& g, std::span<const double> c, double h) {
    if (!(h > 0)) {
        throw Error("oracle: finite-difference step must be > 0");
    }
    std::vector<double> x(c.begin(), c.end());
    std::vector<double> out(c.size());
    for (std::size_t m = 0; m < c.size(); ++m) {
        x[m] = c[m] + h;
        const double up = g(std::span<const double>(x));
        x[m] = c[m] - h;
        const double down = g(std::span<const double>(x));
        x[m] = c[m];
        out[m] = (up - down) / (2 * h);
    }
    return out;
}

/// Second central difference of `g` at `c` along direction `u`.
template <typename Objective>
double second_difference(Objective&& g, std::span<const double> c, std::span<const double> u, double h) {
    std::vector<double> plus(c.begin(), c.end()), minus(c.begin(), c.end());
    for (std::size_t m = 0; m < c.size(); ++m) {
        plus[m] += h * u[m];
        minus[m] -= h * u[m];
    }
    return (g(std::span<const double>(plus)) - 2 * g(c) + g(std::span<const double>(minus))) / (h * h);
}

}  // namespace tkm::oracle

#endif  // TKM_ORACLE_HPP
