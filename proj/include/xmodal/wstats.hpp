#pragma once

#include <utility>

#include "xmodal/matrix.hpp"

namespace xmodal {

/// Per-dimension mean and population standard deviation of a feature batch.
struct BatchStats {
    std::vector<double> mean;
    std::vector<double> std;  // population form, divide-by-n
    std::size_t n = 0;
};

struct W2Config {
    double epsilon = 1e-6;  // gradient stabilization constant
};

/// Column means and population standard deviations of an n-by-d batch.
/// The variance radicand (1/n)*sum(x^2) - mean^2 is clamped at zero.
BatchStats batch_stats(const Matrix& features);

/// Simplified squared 2-Wasserstein distance between two batches described
/// by their stats: 0.5*(|mean_a - mean_b|^2 + |std_a - std_b|^2).
double w2_simplified(const BatchStats& a, const BatchStats& b);

/// Closed-form squared 2-Wasserstein distance between full Gaussians:
/// |m_a - m_b|^2 + trace(c_a + c_b - 2*(c_b^{1/2} c_a c_b^{1/2})^{1/2}).
/// Kept as the exact reference the simplified form is checked against.
double w2_full_gaussian(const std::vector<double>& m_a, const Matrix& c_a,
                        const std::vector<double>& m_b, const Matrix& c_b);

/// Analytic gradients of w2_simplified(batch_stats(a), batch_stats(b)) with
/// respect to every batch entry. The per-dimension std in the denominator is
/// stabilized as sqrt(std^2 + epsilon).
std::pair<Matrix, Matrix> w2_gradients(const Matrix& batch_a, const Matrix& batch_b,
                                       const W2Config& cfg);

}  // namespace xmodal
