#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace xmodal {

/// Dense row-major matrix of 64-bit reals. The universal numeric carrier.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // size rows*cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    bool all_finite() const;

    /// Builds from nested lists and rejects non-finite entries.
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> entries);
    static Matrix identity(std::size_t n);
};

bool operator==(const Matrix& a, const Matrix& b);

/// dst += scale * src (shapes must match).
void add_scaled(Matrix& dst, const Matrix& src, double scale);

/// a*b, OpenMP over output rows. Bit-identical to matmul_serial at any
/// thread count: each entry is one serially evaluated dot product.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Serial reference for matmul, kept for tests and the kernel benchmark.
Matrix matmul_serial(const Matrix& a, const Matrix& b);

/// Sum of squared entries.
double frobenius_norm_sq(const Matrix& a);

Matrix transpose(const Matrix& a);

/// y = a*x for a vector x of length a.cols.
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

/// y = a^T*g for a vector g of length a.rows.
std::vector<double> matvec_transposed(const Matrix& a, const std::vector<double>& g);

/// Deterministic 64-bit generator (splitmix64). The state advances by the
/// constant 0x9E3779B97F4A7C15 and the output is a mixed copy of it, so a
/// given seed produces the same stream on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on the open interval (0,1): 53-bit bin centers (k+0.5)/2^53.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on the open interval (-a, a); strictly |x| < a.
    double next_symmetric(double a) { return a * (2.0 * next_unit() - 1.0); }

    /// Standard normal via Box-Muller; consumes two draws per call.
    double next_normal();

    /// Uniform integer in [0, n), unbiased by rejection. n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

  private:
    std::uint64_t state_;
};

/// Matrix with i.i.d. entries uniform on (-a, a), filled in row-major order.
Matrix uniform_fill(Rng& rng, std::size_t rows, std::size_t cols, double a);

}  // namespace xmodal
