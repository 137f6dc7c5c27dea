#include "xmodal/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace xmodal {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kRotationTol = 1e-12;

// One-sided Jacobi on a tall matrix (m >= n), column-major work buffers.
// Orthogonalizes the columns of b against each other; v accumulates the
// right rotations.
struct OneSided {
    std::size_t m, n;
    std::vector<double> b;  // m*n, column-major
    std::vector<double> v;  // n*n, column-major

    explicit OneSided(const Matrix& a) : m(a.rows), n(a.cols), b(m * n), v(n * n, 0.0) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) b[j * m + i] = a(i, j);
        for (std::size_t j = 0; j < n; ++j) v[j * n + j] = 1.0;
    }

    void run() {
        int sweep = 0;
        for (; sweep < kMaxSweeps; ++sweep) {
            bool rotated = false;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    double* bi = &b[i * m];
                    double* bj = &b[j * m];
                    double aii = 0.0, ajj = 0.0, aij = 0.0;
                    for (std::size_t k = 0; k < m; ++k) {
                        aii += bi[k] * bi[k];
                        ajj += bj[k] * bj[k];
                        aij += bi[k] * bj[k];
                    }
                    if (std::abs(aij) <= kRotationTol * std::sqrt(aii * ajj)) continue;
                    rotated = true;
                    const double zeta = (ajj - aii) / (2.0 * aij);
                    const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                     (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = c * t;
                    for (std::size_t k = 0; k < m; ++k) {
                        const double x = bi[k], y = bj[k];
                        bi[k] = c * x - s * y;
                        bj[k] = s * x + c * y;
                    }
                    double* vi = &v[i * n];
                    double* vj = &v[j * n];
                    for (std::size_t k = 0; k < n; ++k) {
                        const double x = vi[k], y = vj[k];
                        vi[k] = c * x - s * y;
                        vj[k] = s * x + c * y;
                    }
                }
            }
            if (!rotated) break;
        }
        if (sweep == kMaxSweeps)
            throw std::runtime_error("svd_thin: no convergence after " +
                                     std::to_string(kMaxSweeps) + " sweeps");
    }
};

SvdResult svd_tall(const Matrix& a) {
    OneSided work(a);
    work.run();
    const std::size_t m = work.m, n = work.n;

    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t k = 0; k < m; ++k) norm += work.b[j * m + k] * work.b[j * m + k];
        s[j] = std::sqrt(norm);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

    SvdResult r;
    r.u = Matrix(m, n);
    r.vt = Matrix(n, n);
    r.s.resize(n);
    for (std::size_t out = 0; out < n; ++out) {
        const std::size_t j = order[out];
        r.s[out] = s[j];
        const double inv = s[j] > 0.0 ? 1.0 / s[j] : 0.0;  // zero column stays zero
        for (std::size_t k = 0; k < m; ++k) r.u(k, out) = work.b[j * m + k] * inv;
        for (std::size_t k = 0; k < n; ++k) r.vt(out, k) = work.v[j * n + k];
    }
    return r;
}

}  // namespace

SvdResult svd_thin(const Matrix& a) {
    if (a.rows == 0 || a.cols == 0)
        throw std::invalid_argument("svd_thin: empty matrix");
    if (!a.all_finite())
        throw std::invalid_argument("svd_thin: non-finite entry");
    if (a.rows >= a.cols) return svd_tall(a);
    // a = (a^T)^T: with a^T = u s vt, a = vt^T s u^T.
    SvdResult t = svd_tall(transpose(a));
    SvdResult r;
    r.s = std::move(t.s);
    r.u = transpose(t.vt);
    r.vt = transpose(t.u);
    return r;
}

SymEig eig_sym(const Matrix& a) {
    if (a.rows != a.cols)
        throw std::invalid_argument("eig_sym: matrix is " + std::to_string(a.rows) + "x" +
                                    std::to_string(a.cols) + ", must be square");
    const std::size_t n = a.rows;
    Matrix w = a;
    Matrix q = Matrix::identity(n);
    const double scale = std::max(1.0, std::sqrt(frobenius_norm_sq(a)));

    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apq = w(p, r);
                if (std::abs(apq) <= kRotationTol * scale) continue;
                rotated = true;
                const double theta = (w(r, r) - w(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double wkp = w(k, p), wkr = w(k, r);
                    w(k, p) = c * wkp - s * wkr;
                    w(k, r) = s * wkp + c * wkr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double wpk = w(p, k), wrk = w(r, k);
                    w(p, k) = c * wpk - s * wrk;
                    w(r, k) = s * wpk + c * wrk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - s * qkr;
                    q(k, r) = s * qkp + c * qkr;
                }
            }
        }
        if (!rotated) break;
    }
    if (sweep == kMaxSweeps)
        throw std::runtime_error("eig_sym: no convergence after " +
                                 std::to_string(kMaxSweeps) + " sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return w(x, x) < w(y, y); });

    SymEig e;
    e.values.resize(n);
    e.vectors = Matrix(n, n);
    for (std::size_t out = 0; out < n; ++out) {
        e.values[out] = w(order[out], order[out]);
        for (std::size_t k = 0; k < n; ++k) e.vectors(k, out) = q(k, order[out]);
    }
    return e;
}

Matrix spd_sqrt(const Matrix& a) {
    if (a.rows != a.cols)
        throw std::invalid_argument("spd_sqrt: matrix is " + std::to_string(a.rows) + "x" +
                                    std::to_string(a.cols) + ", must be square");
    const std::size_t n = a.rows;
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            asym = std::max(asym, std::abs(a(i, j) - a(j, i)));
    const double tol = 1e-10 * std::max(1.0, std::sqrt(frobenius_norm_sq(a)));
    if (asym > tol)
        throw std::invalid_argument("spd_sqrt: matrix not symmetric, max |a_ij - a_ji| = " +
                                    std::to_string(asym));

    SymEig e = eig_sym(a);
    const double min_eig = e.values.empty() ? 0.0 : e.values.front();
    if (min_eig < -1e-10)
        throw std::invalid_argument("spd_sqrt: matrix not positive semi-definite, min eigenvalue = " +
                                    std::to_string(min_eig));
    std::vector<double> root(n);
    for (std::size_t i = 0; i < n; ++i) root[i] = std::sqrt(std::max(0.0, e.values[i]));

    // q * diag(root) * q^T
    Matrix scaled = e.vectors;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= root[j];
    return matmul(scaled, transpose(e.vectors));
}

}  // namespace xmodal
