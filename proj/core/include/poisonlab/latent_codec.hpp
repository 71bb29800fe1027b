#pragma once

#include "poisonlab/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace poisonlab {

/// LDA projection fitted on surrogate latents. directions is d x n; when n
/// exceeds the discriminative capacity (classes - 1), the surplus columns are
/// zero and `usable` records how many are real.
struct LdaProjection {
    Matrix directions;
    std::size_t n = 0;
    std::size_t usable = 0;
    std::uint64_t fingerprint = 0; // hash of the latents/labels it was fit on
};

/// Fits within/between-class scatters on the latent rows and extracts the
/// top-n generalized eigendirections. Every present class needs >= 2 rows.
LdaProjection fit_lda(const Matrix& latents, const std::vector<std::size_t>& labels,
                      std::size_t n);

/// Row-wise projection: (m x d) -> (m x n).
Matrix project(const LdaProjection& p, const Matrix& latents);

/// Per-class means of compressed latents plus their unweighted centroid.
struct ClassMeans {
    Matrix means;                 // num_classes x n, row y = M_y
    std::vector<double> centroid; // c = (1/|Y|) sum_y M_y
};

ClassMeans class_means(const Matrix& compressed, const std::vector<std::size_t>& labels,
                       std::size_t num_classes);

/// Per-class n-bit strings ('0'/'1' characters).
struct ClassEncodingTable {
    std::vector<std::string> bits; // indexed by class id

    std::size_t num_classes() const { return bits.size(); }
    std::size_t n() const { return bits.empty() ? 0 : bits.front().size(); }
};

/// Bit i of B_y is 1 iff (M_y - c)_i > 0; ties fall to 0.
ClassEncodingTable encode_latent(const ClassMeans& m);

/// Groups of >= 2 classes sharing an identical bit string, ordered by first
/// occurrence. Collisions cap the attainable ASR rather than being an error.
std::vector<std::vector<std::size_t>> encoding_collisions(const ClassEncodingTable& t);

/// Text export/import: "class,bits" rows for audit and attack-time lookup.
std::string encoding_table_to_csv(const ClassEncodingTable& t);
ClassEncodingTable encoding_table_from_csv(const std::string& text);

} // namespace poisonlab
