#include "xmodal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "xmodal/svd.hpp"

namespace xmodal {

namespace {

void add_into(Matrix& dst, const Matrix& src) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

std::pair<double, std::vector<double>> softmax_cross_entropy(const std::vector<double>& logits,
                                                             std::size_t label) {
    if (logits.empty() || label >= logits.size())
        throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(logits.size()) +
                                    " classes");
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    std::vector<double> grad(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        grad[i] = std::exp(logits[i] - peak);
        sum += grad[i];
    }
    const double loss = -(logits[label] - peak - std::log(sum));
    for (std::size_t i = 0; i < logits.size(); ++i) grad[i] /= sum;
    grad[label] -= 1.0;
    return {loss, std::move(grad)};
}

OrthoPenalty ortho_penalty(const Matrix& w, const Matrix& p, double lambda) {
    if (w.rows != p.rows || w.cols != p.cols)
        throw std::invalid_argument("ortho_penalty: shape mismatch, w is " +
                                    std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                                    ", p is " + std::to_string(p.rows) + "x" +
                                    std::to_string(p.cols));
    const Matrix gram = matmul(transpose(p), w);  // p^T w
    OrthoPenalty out;
    out.value = lambda * frobenius_norm_sq(gram);
    out.grad_w = matmul(p, gram);
    out.grad_p = matmul(w, transpose(gram));
    for (double& v : out.grad_w.data) v *= lambda;
    for (double& v : out.grad_p.data) v *= lambda;
    return out;
}

std::pair<double, Matrix> nuclear_norm_and_subgradient(const Matrix& m) {
    const SvdResult svd = svd_thin(m);
    double value = 0.0;
    for (double s : svd.s) value += s;
    return {value, matmul(svd.u, svd.vt)};
}

WassersteinLoss wasserstein_loss(const Matrix& shared_nir, const Matrix& shared_vis,
                                 const W2Config& cfg) {
    if (shared_nir.rows == 0 || shared_vis.rows == 0)
        throw std::invalid_argument("wasserstein_loss: empty batch side");
    WassersteinLoss out;
    out.value = w2_simplified(batch_stats(shared_nir), batch_stats(shared_vis));
    auto [ga, gb] = w2_gradients(shared_nir, shared_vis, cfg);
    out.grad_nir = std::move(ga);
    out.grad_vis = std::move(gb);
    return out;
}

Matrix stack_classifiers(const ClassifierParams& classifier) {
    if (classifier.nir.rows != classifier.vis.rows || classifier.nir.cols != classifier.vis.cols)
        throw std::invalid_argument("stack_classifiers: classifier shapes differ");
    Matrix m(2 * classifier.nir.rows, classifier.nir.cols);
    std::copy(classifier.nir.data.begin(), classifier.nir.data.end(), m.data.begin());
    std::copy(classifier.vis.data.begin(), classifier.vis.data.end(),
              m.data.begin() + static_cast<std::ptrdiff_t>(classifier.nir.data.size()));
    return m;
}

DataLoss data_loss(const std::vector<BatchItem>& items, const ModelParams& params,
                   const LossWeights& weights, const W2Config& cfg) {
    if (items.empty()) throw std::invalid_argument("data_loss: empty batch");

    std::vector<std::vector<double>> inputs(items.size());
    std::vector<Modality> modalities(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        inputs[i] = items[i].input;
        modalities[i] = items[i].modality;
    }
    const std::vector<ForwardTrace> traces = forward_batch(inputs, modalities, params);

    std::size_t n_nir = 0, n_vis = 0;
    for (const auto& it : items) (it.modality == Modality::NIR ? n_nir : n_vis) += 1;

    DataLoss out;
    const std::size_t half = params.projection.shared.rows / 2;
    std::vector<std::vector<double>> grad_logits(items.size());
    std::vector<std::vector<double>> grad_embed(items.size(),
                                                std::vector<double>(half, 0.0));

    double ce_nir = 0.0, ce_vis = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto [ce, gl] = softmax_cross_entropy(traces[i].logits, items[i].class_index);
        const std::size_t n_mod = items[i].modality == Modality::NIR ? n_nir : n_vis;
        (items[i].modality == Modality::NIR ? ce_nir : ce_vis) += ce;
        const double scale = weights.cls_weight / static_cast<double>(n_mod);
        for (double& g : gl) g *= scale;
        grad_logits[i] = std::move(gl);
    }
    out.cls = (n_nir ? ce_nir / static_cast<double>(n_nir) : 0.0) +
              (n_vis ? ce_vis / static_cast<double>(n_vis) : 0.0);

    // group shared embeddings by subject class, split by modality
    std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto& g = groups[items[i].class_index];
        (items[i].modality == Modality::NIR ? g.first : g.second).push_back(i);
    }
    std::size_t used = 0;
    for (const auto& [cls, g] : groups)
        if (!g.first.empty() && !g.second.empty()) ++used;
    out.dist_subjects = used;

    double dist_sum = 0.0;
    for (const auto& [cls, g] : groups) {
        if (g.first.empty() || g.second.empty()) {
            ++out.dist_skipped;
            continue;
        }
        Matrix nir_embeds(g.first.size(), half), vis_embeds(g.second.size(), half);
        for (std::size_t r = 0; r < g.first.size(); ++r)
            std::copy(traces[g.first[r]].shared_embed.begin(),
                      traces[g.first[r]].shared_embed.end(), nir_embeds.row_ptr(r));
        for (std::size_t r = 0; r < g.second.size(); ++r)
            std::copy(traces[g.second[r]].shared_embed.begin(),
                      traces[g.second[r]].shared_embed.end(), vis_embeds.row_ptr(r));
        const WassersteinLoss wl = wasserstein_loss(nir_embeds, vis_embeds, cfg);
        dist_sum += wl.value;
        const double scale = weights.dist_weight / static_cast<double>(used);
        for (std::size_t r = 0; r < g.first.size(); ++r)
            for (std::size_t j = 0; j < half; ++j)
                grad_embed[g.first[r]][j] += scale * wl.grad_nir(r, j);
        for (std::size_t r = 0; r < g.second.size(); ++r)
            for (std::size_t j = 0; j < half; ++j)
                grad_embed[g.second[r]][j] += scale * wl.grad_vis(r, j);
    }
    out.dist = used ? dist_sum / static_cast<double>(used) : 0.0;

    out.grads = backward(traces, grad_logits, grad_embed, params);
    return out;
}

ConstraintTerms constraint_terms(const ModelParams& params, const LossWeights& weights,
                                 bool skip_lowrank_when_unweighted) {
    ConstraintTerms out;
    if (weights.ortho_nir != 0.0) {
        out.ortho_grads_nir =
            ortho_penalty(params.projection.shared, params.projection.unique_nir,
                          weights.ortho_nir);
        out.ortho_value += out.ortho_grads_nir->value;
    }
    if (weights.ortho_vis != 0.0) {
        out.ortho_grads_vis =
            ortho_penalty(params.projection.shared, params.projection.unique_vis,
                          weights.ortho_vis);
        out.ortho_value += out.ortho_grads_vis->value;
    }
    if (weights.lowrank_weight != 0.0 || !skip_lowrank_when_unweighted) {
        auto [value, subgrad] = nuclear_norm_and_subgradient(stack_classifiers(params.classifier));
        out.lowrank_value = value;
        out.lowrank_computed = true;
        const std::size_t c = params.classifier.nir.rows, q = params.classifier.nir.cols;
        out.lowrank_grad_nir = Matrix(c, q);
        out.lowrank_grad_vis = Matrix(c, q);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < q; ++j) {
                out.lowrank_grad_nir(i, j) = weights.lowrank_weight * subgrad(i, j);
                out.lowrank_grad_vis(i, j) = weights.lowrank_weight * subgrad(c + i, j);
            }
    }
    return out;
}

TotalLoss total_loss(const std::vector<BatchItem>& items, const ModelParams& params,
                     const LossWeights& weights, const W2Config& cfg) {
    DataLoss dl = data_loss(items, params, weights, cfg);
    const ConstraintTerms ct = constraint_terms(params, weights, /*skip_lowrank=*/false);

    TotalLoss out;
    out.breakdown.cls = dl.cls;
    out.breakdown.dist = dl.dist;
    out.breakdown.low_rank = ct.lowrank_value;
    out.breakdown.ortho = ct.ortho_value;
    out.breakdown.total = weights.cls_weight * dl.cls + weights.dist_weight * dl.dist +
                          weights.lowrank_weight * ct.lowrank_value + ct.ortho_value;
    out.dist_subjects = dl.dist_subjects;
    out.dist_skipped = dl.dist_skipped;

    out.grads = std::move(dl.grads);
    if (ct.ortho_grads_nir) {
        add_into(out.grads.projection.shared, ct.ortho_grads_nir->grad_w);
        add_into(out.grads.projection.unique_nir, ct.ortho_grads_nir->grad_p);
    }
    if (ct.ortho_grads_vis) {
        add_into(out.grads.projection.shared, ct.ortho_grads_vis->grad_w);
        add_into(out.grads.projection.unique_vis, ct.ortho_grads_vis->grad_p);
    }
    if (ct.lowrank_computed) {
        add_into(out.grads.classifier.nir, ct.lowrank_grad_nir);
        add_into(out.grads.classifier.vis, ct.lowrank_grad_vis);
    }
    return out;
}

}  // namespace xmodal
