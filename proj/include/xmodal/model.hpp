#pragma once

#include <cstdint>
#include <utility>

#include "xmodal/matrix.hpp"

namespace xmodal {

enum class Modality : std::uint8_t { NIR, VIS };

inline const char* modality_name(Modality m) { return m == Modality::NIR ? "NIR" : "VIS"; }

/// One maxout-affine layer: y_j = max((wa*x + ba)_j, (wb*x + bb)_j).
struct MaxoutLayer {
    Matrix slice_a, slice_b;              // k-by-in
    std::vector<double> bias_a, bias_b;   // k
};

/// The feature network shared by both modality channels.
struct FeatureNetParams {
    std::vector<MaxoutLayer> layers;  // empty list = identity network
};

/// Projection heads: one shared identity subspace and one unique
/// (modality-specific) subspace per modality, all d-by-p.
struct ProjectionParams {
    Matrix shared;
    Matrix unique_nir;
    Matrix unique_vis;
};

/// Per-modality softmax classifier matrices, both c-by-q with
/// q = d/2 + d (the concatenation of shared embedding and unique feature).
struct ClassifierParams {
    Matrix nir;
    Matrix vis;
};

struct ModelParams {
    FeatureNetParams feature_net;
    ProjectionParams projection;
    ClassifierParams classifier;

    /// Same shapes, all-zero entries. Gradients reuse this layout.
    static ModelParams zeros_like(const ModelParams& p);

    /// In-place update: this += scale * other (matching shapes required).
    void add_scaled(const ModelParams& other, double scale);

    bool all_finite() const;
};

using ParamGrads = ModelParams;

struct ModelConfig {
    std::size_t input_dim = 32;
    std::vector<std::size_t> hidden = {64};
    std::size_t feature_dim = 64;  // p, output of the feature net
    std::size_t proj_dim = 64;     // d, must be even
    std::size_t num_classes = 0;   // c, set from the training split
};

/// Everything needed to replay one sample through the pipeline.
struct ForwardTrace {
    std::vector<std::vector<double>> layer_inputs;   // input to each maxout layer
    std::vector<std::vector<std::uint8_t>> selectors;  // winning slice per unit
    std::vector<double> features;       // feature-net output, length p
    std::vector<double> shared_pre;     // shared projection before maxout, length d
    std::vector<std::uint8_t> shared_selector;  // d/2; 1 = odd index won
    std::vector<double> shared_embed;   // length d/2
    std::vector<double> unique;         // length d
    std::vector<double> logits;         // length c
    Modality modality = Modality::NIR;
};

/// y_j = max of the two affine slices; the selector records the winner
/// (ties go to slice a).
std::pair<std::vector<double>, std::vector<std::uint8_t>> maxout_affine_forward(
    const std::vector<double>& x, const MaxoutLayer& layer);

/// Runs the maxout stack; fills layer_inputs/selectors/features of the trace.
std::vector<double> extract_features(const std::vector<double>& input,
                                     const FeatureNetParams& net, ForwardTrace& trace);

/// Shared head (projection + pairwise maxout) and the modality's unique
/// feature; fills the corresponding trace fields.
void project_features(const std::vector<double>& x, const ProjectionParams& projection,
                      Modality modality, ForwardTrace& trace);

std::vector<double> classify(const std::vector<double>& shared_embed,
                             const std::vector<double>& unique,
                             const ClassifierParams& classifier, Modality modality);

ForwardTrace forward(const std::vector<double>& input, const ModelParams& params,
                     Modality modality);

/// Forward for a whole batch, OpenMP over samples. Inputs are validated
/// against the parameter shapes before the parallel loop.
std::vector<ForwardTrace> forward_batch(const std::vector<std::vector<double>>& inputs,
                                        const std::vector<Modality>& modalities,
                                        const ModelParams& params);

/// Exact reverse-mode gradients of the traced computation. Upstream
/// gradients enter at the logits and at the shared embedding; maxout
/// routes gradient to the selected slice only. Accumulation runs in
/// trace order, so results do not depend on thread count.
ParamGrads backward(const std::vector<ForwardTrace>& traces,
                    const std::vector<std::vector<double>>& grad_logits,
                    const std::vector<std::vector<double>>& grad_shared_embed,
                    const ModelParams& params);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
ModelParams init_params(const ModelConfig& config, Rng& rng);

void validate_config(const ModelConfig& config);

}  // namespace xmodal
