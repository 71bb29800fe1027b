#pragma once

#include "poisonlab/dataset.hpp"
#include "poisonlab/matrix.hpp"
#include "poisonlab/random.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

namespace testutil {

inline poisonlab::Matrix random_symmetric(std::size_t n, poisonlab::RandomStream& stream,
                                          double lo = -10.0, double hi = 10.0) {
    poisonlab::Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = stream.uniform(lo, hi);
            a.at(i, j) = v;
            a.at(j, i) = v;
        }
    return a;
}

/// Symmetric positive definite: R^T R + n*I.
inline poisonlab::Matrix random_spd(std::size_t n, poisonlab::RandomStream& stream) {
    poisonlab::Matrix r(n, n);
    for (double& v : r.data) v = stream.uniform(-1.0, 1.0);
    poisonlab::Matrix a = poisonlab::multiply(poisonlab::transpose(r), r);
    for (std::size_t i = 0; i < n; ++i) a.at(i, i) += static_cast<double>(n);
    return a;
}

inline double max_abs_diff(const poisonlab::Matrix& a, const poisonlab::Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

/// Column-wise comparison tolerant to per-column sign flips.
inline double direction_mismatch(const poisonlab::Matrix& a, const poisonlab::Matrix& b) {
    double worst = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
        double same = 0.0, flipped = 0.0;
        for (std::size_t i = 0; i < a.rows; ++i) {
            same = std::max(same, std::abs(a.at(i, j) - b.at(i, j)));
            flipped = std::max(flipped, std::abs(a.at(i, j) + b.at(i, j)));
        }
        worst = std::max(worst, std::min(same, flipped));
    }
    return worst;
}

/// Unique scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / ("poisonlab-test-" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Small fast dataset for pipeline tests.
inline poisonlab::Dataset tiny_dataset(std::size_t classes, std::size_t per_class,
                                       std::uint64_t seed, double noise = 0.1,
                                       std::size_t size = 16) {
    poisonlab::RandomStream stream(seed, "dataset");
    return poisonlab::generate(classes, per_class, size, noise, stream);
}

} // namespace testutil
