#include "xmodal/wstats.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "xmodal/svd.hpp"

namespace xmodal {

BatchStats batch_stats(const Matrix& features) {
    if (features.rows == 0)
        throw std::invalid_argument("batch_stats: empty batch");
    const std::size_t n = features.rows, d = features.cols;
    BatchStats st;
    st.n = n;
    st.mean.assign(d, 0.0);
    st.std.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = features(i, j);
            sum += x;
            sum_sq += x * x;
        }
        const double mean = sum / static_cast<double>(n);
        st.mean[j] = mean;
        st.std[j] = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean));
    }
    return st;
}

double w2_simplified(const BatchStats& a, const BatchStats& b) {
    if (a.mean.size() != b.mean.size())
        throw std::invalid_argument("w2_simplified: dimension mismatch, " +
                                    std::to_string(a.mean.size()) + " vs " +
                                    std::to_string(b.mean.size()));
    double mean_gap = 0.0, std_gap = 0.0;
    for (std::size_t j = 0; j < a.mean.size(); ++j) {
        const double dm = a.mean[j] - b.mean[j];
        const double ds = a.std[j] - b.std[j];
        mean_gap += dm * dm;
        std_gap += ds * ds;
    }
    return 0.5 * (mean_gap + std_gap);
}

double w2_full_gaussian(const std::vector<double>& m_a, const Matrix& c_a,
                        const std::vector<double>& m_b, const Matrix& c_b) {
    const std::size_t d = m_a.size();
    if (m_b.size() != d || c_a.rows != d || c_a.cols != d || c_b.rows != d || c_b.cols != d)
        throw std::invalid_argument("w2_full_gaussian: dimension mismatch");

    const Matrix root_b = spd_sqrt(c_b);
    Matrix inner = matmul(matmul(root_b, c_a), root_b);
    // symmetrize away the round-off before the second root
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double v = 0.5 * (inner(i, j) + inner(j, i));
            inner(i, j) = v;
            inner(j, i) = v;
        }
    const Matrix cross = spd_sqrt(inner);

    double val = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double dm = m_a[j] - m_b[j];
        val += dm * dm + c_a(j, j) + c_b(j, j) - 2.0 * cross(j, j);
    }
    return std::max(0.0, val);
}

std::pair<Matrix, Matrix> w2_gradients(const Matrix& batch_a, const Matrix& batch_b,
                                       const W2Config& cfg) {
    if (batch_a.rows == 0 || batch_b.rows == 0)
        throw std::invalid_argument("w2_gradients: empty batch");
    if (batch_a.cols != batch_b.cols)
        throw std::invalid_argument("w2_gradients: dimension mismatch, " +
                                    std::to_string(batch_a.cols) + " vs " +
                                    std::to_string(batch_b.cols));
    const std::size_t d = batch_a.cols;
    const BatchStats sa = batch_stats(batch_a);
    const BatchStats sb = batch_stats(batch_b);

    Matrix grad_a(batch_a.rows, d), grad_b(batch_b.rows, d);
    const double inv_na = 1.0 / static_cast<double>(batch_a.rows);
    const double inv_nb = 1.0 / static_cast<double>(batch_b.rows);
    for (std::size_t j = 0; j < d; ++j) {
        const double dm = sa.mean[j] - sb.mean[j];
        const double ds = sa.std[j] - sb.std[j];
        const double denom_a = std::sqrt(sa.std[j] * sa.std[j] + cfg.epsilon);
        const double denom_b = std::sqrt(sb.std[j] * sb.std[j] + cfg.epsilon);
        for (std::size_t i = 0; i < batch_a.rows; ++i)
            grad_a(i, j) = inv_na * (dm + ds * (batch_a(i, j) - sa.mean[j]) / denom_a);
        for (std::size_t i = 0; i < batch_b.rows; ++i)
            grad_b(i, j) = -inv_nb * (dm + ds * (batch_b(i, j) - sb.mean[j]) / denom_b);
    }
    return {std::move(grad_a), std::move(grad_b)};
}

}  // namespace xmodal
