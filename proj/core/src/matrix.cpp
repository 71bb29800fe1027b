#include "poisonlab/matrix.hpp"

#include "poisonlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace poisonlab {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw DimensionError("multiply: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                             " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.data[k * b.cols];
            double* orow = &out.data[i * out.cols];
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionError("add: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionError("subtract: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data) v *= s;
    return out;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows != a.cols) return false;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = i + 1; j < a.cols; ++j)
            if (std::abs(a.at(i, j) - a.at(j, i)) > tol) return false;
    return true;
}

namespace {

constexpr int kJacobiSweepCap = 100;
constexpr double kOffDiagTol = 1e-12;

void fix_column_signs(Matrix& v) {
    for (std::size_t j = 0; j < v.cols; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < v.rows; ++i) {
            const double m = std::abs(v.at(i, j));
            if (m > best) {
                best = m;
                arg = i;
            }
        }
        if (v.at(arg, j) < 0.0)
            for (std::size_t i = 0; i < v.rows; ++i) v.at(i, j) = -v.at(i, j);
    }
}

} // namespace

EigenDecomposition sym_eig(const Matrix& input) {
    if (input.rows != input.cols)
        throw DimensionError("sym_eig: matrix is not square");
    const double sym_tol = 1e-9 * std::max(1.0, max_abs(input));
    if (!is_symmetric(input, sym_tol))
        throw DimensionError("sym_eig: matrix is not symmetric within tolerance");

    const std::size_t n = input.rows;
    Matrix a = input;
    Matrix v = Matrix::identity(n);

    for (int sweep = 0; sweep < kJacobiSweepCap; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a.at(p, q)));
        if (off <= kOffDiagTol) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) <= kOffDiagTol) continue;
                const double app = a.at(p, p);
                const double aqq = a.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                // stable tangent of the rotation angle
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a.at(k, p);
                    const double akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a.at(p, k);
                    const double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p);
                    const double vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a.at(x, x) > a.at(y, y); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a.at(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors.at(i, j) = v.at(i, order[j]);
    }
    fix_column_signs(out.vectors);
    return out;
}

double default_ridge(const Matrix& s_w) {
    double tr = 0.0;
    for (std::size_t i = 0; i < s_w.rows; ++i) tr += s_w.at(i, i);
    return 1e-6 * tr / static_cast<double>(s_w.rows);
}

Matrix generalized_eig_directions(const Matrix& s_b, const Matrix& s_w,
                                  std::size_t n, double ridge) {
    if (s_b.rows != s_b.cols || s_w.rows != s_w.cols || s_b.rows != s_w.rows)
        throw DimensionError("generalized_eig_directions: scatter matrices must be square and same size");
    if (ridge < 0.0) throw ConfigError("generalized_eig_directions: ridge must be >= 0");
    const std::size_t d = s_w.rows;
    if (n > d) throw ConfigError("generalized_eig_directions: n exceeds dimensionality");

    Matrix regularized = s_w;
    for (std::size_t i = 0; i < d; ++i) regularized.at(i, i) += ridge;

    EigenDecomposition ew = sym_eig(regularized);
    const double lead = std::max(1.0, std::abs(ew.values.front()));
    for (double lambda : ew.values) {
        if (lambda <= 1e-12 * lead)
            throw SingularityError(
                "generalized_eig_directions: s_w + ridge*I is not positive definite; "
                "increase the ridge");
    }

    // whitener W = V diag(1/sqrt(lambda)) V^T
    Matrix w(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                sum += ew.vectors.at(i, k) * ew.vectors.at(j, k) / std::sqrt(ew.values[k]);
            w.at(i, j) = sum;
        }
    }

    Matrix t = multiply(multiply(w, s_b), w);
    // symmetrize to guard against rounding drift before Jacobi
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            const double avg = 0.5 * (t.at(i, j) + t.at(j, i));
            t.at(i, j) = avg;
            t.at(j, i) = avg;
        }
    }

    EigenDecomposition et = sym_eig(t);
    Matrix directions(d, n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm2 = 0.0;
        std::vector<double> col(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            double sum = 0.0;
            for (std::size_t k = 0; k < d; ++k) sum += w.at(i, k) * et.vectors.at(k, j);
            col[i] = sum;
            norm2 += sum * sum;
        }
        const double norm = std::sqrt(norm2);
        for (std::size_t i = 0; i < d; ++i)
            directions.at(i, j) = norm > 0.0 ? col[i] / norm : 0.0;
    }
    fix_column_signs(directions);
    return directions;
}

} // namespace poisonlab
