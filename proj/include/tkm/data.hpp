#ifndef TKM_DATA_HPP
#define TKM_DATA_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

/**
 * @file data.hpp
 *
 * @brief Dataset ingestion, preprocessing, subsampling and synthetic blobs.
 */

namespace tkm {

/**
 * @brief Which columns to keep from a CSV and how to preprocess them.
 *
 * When both flags are set, standardization runs first so the final rows are unit-norm.
 */
struct PreprocessSpec {
    std::vector<std::string> selected_columns;
    bool standardize = false;
    bool unit_normalize = false;
};

struct CsvLoad {
    Dataset data;
    /// Rows dropped because a selected field was missing or non-numeric.
    std::size_t dropped_rows = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline bool parse_double(std::string_view field, double& out) {
    if (field.empty()) {
        return false;
    }
    if (field.front() == '+') {
        field.remove_prefix(1);
    }
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

}  // namespace detail

/// Z-score every column with the population (1/n) standard deviation.
inline Dataset standardize(const Dataset& ds) {
    const std::size_t n = ds.n(), d = ds.d();
    std::vector<double> out(ds.values());
    for (std::size_t m = 0; m < d; ++m) {
        double lo = ds(0, m), hi = ds(0, m), mean = 0;
        for (std::size_t i = 0; i < n; ++i) {
            lo = std::min(lo, ds(i, m));
            hi = std::max(hi, ds(i, m));
            mean += ds(i, m);
        }
        if (lo == hi) {
            throw Error("column '" + ds.column_names()[m] + "' has zero variance, cannot standardize");
        }
        mean /= static_cast<double>(n);
        double var = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = ds(i, m) - mean;
            var += diff * diff;
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            out[i * d + m] = (ds(i, m) - mean) / sd;
        }
    }
    return Dataset(std::move(out), n, d, ds.column_names());
}

/// Scale every row to unit Euclidean norm.
inline Dataset unit_normalize(const Dataset& ds) {
    const std::size_t n = ds.n(), d = ds.d();
    std::vector<double> out(ds.values());
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = ds.row(i);
        // hypot-style scaling keeps tiny/huge rows representable
        double scale = 0;
        for (double v : r) {
            scale = std::max(scale, std::abs(v));
        }
        if (scale == 0) {
            throw Error("row " + std::to_string(i) + " is all zeros, cannot normalize to unit norm");
        }
        double sumsq = 0;
        for (double v : r) {
            sumsq += (v / scale) * (v / scale);
        }
        const double norm = scale * std::sqrt(sumsq);
        for (std::size_t m = 0; m < d; ++m) {
            out[i * d + m] = r[m] / norm;
        }
    }
    return Dataset(std::move(out), n, d, ds.column_names());
}

inline Dataset preprocess(const Dataset& ds, const PreprocessSpec& spec) {
    if (spec.standardize && spec.unit_normalize) {
        return unit_normalize(standardize(ds));
    }
    if (spec.standardize) {
        return standardize(ds);
    }
    if (spec.unit_normalize) {
        return unit_normalize(ds);
    }
    return ds;
}

/**
 * @brief Read the selected columns of a headered, comma-separated file.
 *
 * Rows where any selected field is empty or non-numeric are dropped and counted.
 * Preprocessing from `spec` is applied after loading.
 */
inline CsvLoad load_csv(const std::string& path, const PreprocessSpec& spec) {
    if (spec.selected_columns.empty()) {
        throw Error("no columns selected for '" + path + "'");
    }
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("'" + path + "' has no header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header = detail::split_commas(line);
    std::vector<std::size_t> picks;
    for (const auto& name : spec.selected_columns) {
        const auto it = std::find(header.begin(), header.end(), std::string_view(name));
        if (it == header.end()) {
            throw Error("column '" + name + "' not found in '" + path + "'");
        }
        picks.push_back(static_cast<std::size_t>(it - header.begin()));
    }

    std::vector<double> values;
    std::vector<double> row(picks.size());
    std::size_t n = 0, dropped = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto fields = detail::split_commas(line);
        bool ok = true;
        for (std::size_t m = 0; m < picks.size() && ok; ++m) {
            ok = picks[m] < fields.size() && detail::parse_double(fields[picks[m]], row[m]);
        }
        if (!ok) {
            ++dropped;
            continue;
        }
        values.insert(values.end(), row.begin(), row.end());
        ++n;
    }
    if (n == 0) {
        throw Error("'" + path + "' has no usable rows (" + std::to_string(dropped) + " dropped)");
    }
    Dataset raw(std::move(values), n, picks.size(), spec.selected_columns);
    return {preprocess(raw, spec), dropped};
}

/// Indices of `m` rows drawn uniformly without replacement, in draw order.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, Rng& rng) {
    if (m > n) {
        throw Error("cannot sample " + std::to_string(m) + " rows from " + std::to_string(n));
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
}

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    out.reserve(rows.size() * ds.d());
    for (auto i : rows) {
        const auto r = ds.row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return Dataset(std::move(out), rows.size(), ds.d(), ds.column_names());
}

/// `m` rows sampled uniformly without replacement; reproducible for a fixed seed.
inline Dataset subsample(const Dataset& ds, std::size_t m, std::uint64_t seed) {
    if (m == 0 || m > ds.n()) {
        throw Error("subsample size " + std::to_string(m) + " must be in [1, " + std::to_string(ds.n()) + "]");
    }
    Rng rng(seed);
    return take_rows(ds, sample_indices(ds.n(), m, rng));
}

struct Blobs {
    Dataset data;
    std::vector<std::size_t> labels;
};

/**
 * @brief `k` isotropic Gaussian blobs with centers drawn uniformly in [-10, 10]^d.
 *
 * Blob `j` gets `n / k` points, plus one for the first `n % k` blobs. Points are emitted
 * blob by blob.
 */
inline Blobs make_blobs(std::size_t n, std::size_t k, std::size_t d, double spread, std::uint64_t seed) {
    if (k == 0 || n < k || d == 0) {
        throw Error("make_blobs needs n >= k >= 1 and d >= 1");
    }
    if (!(spread > 0) || !std::isfinite(spread)) {
        throw Error("make_blobs spread must be positive");
    }
    constexpr double box = 10.0;
    Rng rng(seed);
    std::vector<double> centers(k * d);
    for (auto& v : centers) {
        v = -box + 2 * box * rng.uniform();
    }
    std::vector<double> points;
    points.reserve(n * d);
    std::vector<std::size_t> labels;
    labels.reserve(n);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t size = n / k + (j < n % k ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) {
            for (std::size_t m = 0; m < d; ++m) {
                points.push_back(centers[j * d + m] + spread * rng.normal());
            }
            labels.push_back(j);
        }
    }
    return {Dataset(std::move(points), n, d), std::move(labels)};
}

}  // namespace tkm

#endif  // TKM_DATA_HPP
