#include "xmodal/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xmodal {

bool Matrix::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> entries) {
    Matrix m;
    m.rows = entries.size();
    m.cols = entries.size() ? entries.begin()->size() : 0;
    m.data.reserve(m.rows * m.cols);
    for (const auto& row : entries) {
        if (row.size() != m.cols)
            throw std::invalid_argument("Matrix::from_rows: ragged row lengths");
        for (double v : row) m.data.push_back(v);
    }
    if (!m.all_finite())
        throw std::invalid_argument("Matrix::from_rows: non-finite entry");
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

void add_scaled(Matrix& dst, const Matrix& src, double scale) {
    if (dst.rows != src.rows || dst.cols != src.cols)
        throw std::invalid_argument("add_scaled: shape mismatch " + std::to_string(dst.rows) +
                                    "x" + std::to_string(dst.cols) + " vs " +
                                    std::to_string(src.rows) + "x" + std::to_string(src.cols));
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += scale * src.data[i];
}

static void check_matmul_shapes(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument(
            "matmul: dimension mismatch, lhs is " + std::to_string(a.rows) + "x" +
            std::to_string(a.cols) + ", rhs is " + std::to_string(b.rows) + "x" +
            std::to_string(b.cols));
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b);
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b);
    Matrix c(a.rows, b.cols);
    const std::int64_t m = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static) if (m >= 16)
    for (std::int64_t i = 0; i < m; ++i) {
        const double* arow = a.row_ptr(static_cast<std::size_t>(i));
        double* crow = c.row_ptr(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

double frobenius_norm_sq(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (x.size() != a.cols)
        throw std::invalid_argument("matvec: matrix is " + std::to_string(a.rows) + "x" +
                                    std::to_string(a.cols) + ", vector has length " +
                                    std::to_string(x.size()));
    std::vector<double> y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += arow[j] * x[j];
        y[i] = s;
    }
    return y;
}

std::vector<double> matvec_transposed(const Matrix& a, const std::vector<double>& g) {
    if (g.size() != a.rows)
        throw std::invalid_argument("matvec_transposed: matrix is " + std::to_string(a.rows) +
                                    "x" + std::to_string(a.cols) + ", vector has length " +
                                    std::to_string(g.size()));
    std::vector<double> y(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double gi = g[i];
        const double* arow = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols; ++j) y[j] += gi * arow[j];
    }
    return y;
}

double Rng::next_normal() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

Matrix uniform_fill(Rng& rng, std::size_t rows, std::size_t cols, double a) {
    if (!(a > 0.0))
        throw std::invalid_argument("uniform_fill: half-width must be positive, got " +
                                    std::to_string(a));
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.next_symmetric(a);
    return m;
}

}  // namespace xmodal
