#pragma once

#include "xmodal/matrix.hpp"

namespace xmodal {

/// Thin SVD a = u * diag(s) * vt with s sorted non-increasing,
/// u m-by-k, vt k-by-n, k = min(m, n).
struct SvdResult {
    Matrix u;
    std::vector<double> s;
    Matrix vt;
};

/// One-sided Jacobi SVD. Sweeps column pairs until every rotation falls
/// below 1e-12 relative to the column norms; capped at 100 sweeps.
SvdResult svd_thin(const Matrix& a);

/// Symmetric eigendecomposition a = vectors * diag(values) * vectors^T,
/// values ascending, eigenvectors in the columns. Cyclic Jacobi.
struct SymEig {
    std::vector<double> values;
    Matrix vectors;
};

SymEig eig_sym(const Matrix& a);

/// Symmetric PSD square root: returns s with s*s ~= a. Eigenvalues in
/// [-1e-10, 0) are clamped to zero; anything lower is rejected.
Matrix spd_sqrt(const Matrix& a);

}  // namespace xmodal
