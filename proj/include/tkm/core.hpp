#ifndef TKM_CORE_HPP
#define TKM_CORE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

/**
 * @file core.hpp
 *
 * @brief Value types shared by every module: the dataset, the centroid set and the error type.
 */

namespace tkm {

/**
 * @brief Error raised for invalid inputs, I/O failures and solver failures.
 */
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/**
 * @brief Row-major matrix of `n` points by `d` features with named columns.
 *
 * Immutable after construction. All entries are finite, `n >= 1` and `d >= 1`.
 */
class Dataset {
public:
    Dataset(std::vector<double> points, std::size_t n, std::size_t d, std::vector<std::string> column_names)
        : points_(std::move(points)), n_(n), d_(d), names_(std::move(column_names)) {
        if (n_ == 0 || d_ == 0) {
            throw Error("dataset must have at least one row and one column");
        }
        if (points_.size() != n_ * d_) {
            throw Error("dataset buffer size does not match n*d");
        }
        if (names_.size() != d_) {
            throw Error("dataset needs exactly one column name per feature");
        }
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!std::isfinite(points_[i])) {
                throw Error("non-finite value in row " + std::to_string(i / d_) + ", column '" + names_[i % d_] + "'");
            }
        }
    }

    /// Dataset with generated column names `x0, x1, ...`.
    Dataset(std::vector<double> points, std::size_t n, std::size_t d)
        : Dataset(std::move(points), n, d, default_names(d)) {}

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }

    std::span<const double> row(std::size_t i) const { return {points_.data() + i * d_, d_}; }
    double operator()(std::size_t i, std::size_t m) const { return points_[i * d_ + m]; }

    const std::vector<double>& values() const { return points_; }
    const std::vector<std::string>& column_names() const { return names_; }

    static std::vector<std::string> default_names(std::size_t d) {
        std::vector<std::string> out;
        out.reserve(d);
        for (std::size_t m = 0; m < d; ++m) {
            out.push_back("x" + std::to_string(m));
        }
        return out;
    }

private:
    std::vector<double> points_;
    std::size_t n_;
    std::size_t d_;
    std::vector<std::string> names_;
};

/**
 * @brief Ordered list of `k` centers in a `d`-dimensional feature space, stored row-major.
 */
class Centroids {
public:
    Centroids() = default;

    Centroids(std::size_t k, std::size_t d) : centers_(k * d, 0.0), k_(k), d_(d) {}

    Centroids(std::vector<double> centers, std::size_t k, std::size_t d)
        : centers_(std::move(centers)), k_(k), d_(d) {
        if (centers_.size() != k_ * d_) {
            throw Error("centroid buffer size does not match k*d");
        }
    }

    std::size_t k() const { return k_; }
    std::size_t d() const { return d_; }

    std::span<const double> center(std::size_t j) const { return {centers_.data() + j * d_, d_}; }
    std::span<double> center(std::size_t j) { return {centers_.data() + j * d_, d_}; }

    const std::vector<double>& values() const { return centers_; }

    bool all_finite() const {
        for (double v : centers_) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const Centroids&, const Centroids&) = default;

private:
    std::vector<double> centers_;
    std::size_t k_ = 0;
    std::size_t d_ = 0;
};

/// Squared Euclidean distance, f(x, c) = ||x - c||^2.
inline double squared_distance(std::span<const double> x, std::span<const double> c) {
    double out = 0;
    for (std::size_t m = 0; m < x.size(); ++m) {
        const double diff = x[m] - c[m];
        out += diff * diff;
    }
    return out;
}

inline void require_same_dim(const Dataset& ds, const Centroids& cs) {
    if (ds.d() != cs.d()) {
        throw Error("dimension mismatch: dataset has d=" + std::to_string(ds.d()) + ", centroids have d=" +
                    std::to_string(cs.d()));
    }
}

}  // namespace tkm

#endif  // TKM_CORE_HPP
