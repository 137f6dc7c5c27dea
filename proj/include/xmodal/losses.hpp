#pragma once

#include <optional>

#include "xmodal/model.hpp"
#include "xmodal/wstats.hpp"

namespace xmodal {

struct LossWeights {
    double cls_weight = 1.0;      // beta_1
    double dist_weight = 1.0;     // beta_2
    double lowrank_weight = 1e-3; // beta_3
    double ortho_nir = 1e-3;      // lambda_N
    double ortho_vis = 1e-3;      // lambda_V
};

struct LossBreakdown {
    double cls = 0.0;
    double dist = 0.0;
    double low_rank = 0.0;
    double ortho = 0.0;
    double total = 0.0;
};

/// One training sample as the loss sees it.
struct BatchItem {
    std::vector<double> input;
    std::size_t class_index = 0;
    Modality modality = Modality::NIR;
};

/// Numerically stable softmax cross-entropy; grad is p_hat - onehot(label).
std::pair<double, std::vector<double>> softmax_cross_entropy(const std::vector<double>& logits,
                                                             std::size_t label);

/// Subspace-separation penalty lambda*|p^T w|_F^2. The returned gradients
/// are lambda*p*(p^T w) and lambda*w*(p^T w)^T — half the analytic gradient
/// of the value; lambda absorbs the factor 2.
struct OrthoPenalty {
    double value = 0.0;
    Matrix grad_w;
    Matrix grad_p;
};
OrthoPenalty ortho_penalty(const Matrix& w, const Matrix& p, double lambda);

/// Nuclear norm (sum of singular values) and its subgradient u*vt.
std::pair<double, Matrix> nuclear_norm_and_subgradient(const Matrix& m);

/// Distribution loss between two shared-embedding batches of one subject:
/// value is the simplified Wasserstein distance of their stats, gradients
/// come from w2_gradients.
struct WassersteinLoss {
    double value = 0.0;
    Matrix grad_nir;
    Matrix grad_vis;
};
WassersteinLoss wasserstein_loss(const Matrix& shared_nir, const Matrix& shared_vis,
                                 const W2Config& cfg);

/// Classification + distribution objective evaluated on one batch, with the
/// backpropagated gradients of cls_weight*cls + dist_weight*dist over every
/// parameter. Subjects present in one modality only are skipped for the
/// distribution term and counted.
struct DataLoss {
    double cls = 0.0;
    double dist = 0.0;
    ParamGrads grads;
    std::size_t dist_subjects = 0;
    std::size_t dist_skipped = 0;
};
DataLoss data_loss(const std::vector<BatchItem>& items, const ModelParams& params,
                   const LossWeights& weights, const W2Config& cfg);

/// Penalty terms that depend on the parameters alone. Gradients carry their
/// loss weights (lambda for ortho, lowrank_weight for the nuclear rows).
/// The nuclear decomposition is skipped when skip_lowrank_when_unweighted
/// and the weight is zero.
struct ConstraintTerms {
    double ortho_value = 0.0;
    double lowrank_value = 0.0;
    bool lowrank_computed = false;
    std::optional<OrthoPenalty> ortho_grads_nir;  // grads on (shared, unique_nir)
    std::optional<OrthoPenalty> ortho_grads_vis;
    Matrix lowrank_grad_nir;  // lowrank_weight * top rows of u*vt
    Matrix lowrank_grad_vis;
};
ConstraintTerms constraint_terms(const ModelParams& params, const LossWeights& weights,
                                 bool skip_lowrank_when_unweighted);

/// Stacks the classifier matrices class-axis-wise: nir rows above vis rows.
Matrix stack_classifiers(const ClassifierParams& classifier);

/// The full objective: breakdown plus every parameter gradient assembled
/// from the data and constraint parts.
struct TotalLoss {
    LossBreakdown breakdown;
    ParamGrads grads;
    std::size_t dist_subjects = 0;
    std::size_t dist_skipped = 0;
};
TotalLoss total_loss(const std::vector<BatchItem>& items, const ModelParams& params,
                     const LossWeights& weights, const W2Config& cfg);

}  // namespace xmodal
