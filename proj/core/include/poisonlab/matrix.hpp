#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace poisonlab {

/// Dense row-major matrix of doubles. Sized for latent-space work (d <= 256),
/// so everything is plain loops, no blocking.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }
    static Matrix identity(std::size_t n);

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

/// Largest absolute entry.
double max_abs(const Matrix& a);

/// true when a is square and |a_ij - a_ji| <= tol for all i, j.
bool is_symmetric(const Matrix& a, double tol);

struct EigenDecomposition {
    std::vector<double> values; // descending
    Matrix vectors;             // orthonormal columns, values[i] <-> column i
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Sweep cap 100,
/// off-diagonal tolerance 1e-12. Eigenvalues sorted descending; each
/// eigenvector's largest-magnitude entry is made positive so downstream
/// encodings are reproducible.
EigenDecomposition sym_eig(const Matrix& a);

/// Ridge that keeps near-singular within-class scatter invertible:
/// 1e-6 * trace(s_w) / d.
double default_ridge(const Matrix& s_w);

/// Top-n generalized eigendirections of (s_w + ridge*I)^-1 * s_b, computed by
/// whitening s_w and running sym_eig in the whitened space. Columns are unit
/// norm, sign-fixed, ordered by descending generalized eigenvalue.
Matrix generalized_eig_directions(const Matrix& s_b, const Matrix& s_w,
                                  std::size_t n, double ridge);

} // namespace poisonlab
