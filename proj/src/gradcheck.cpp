#include "xmodal/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "xmodal/svd.hpp"

namespace xmodal {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kAbsFloor = 1e-8;

struct ErrTracker {
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;

    void compare(double analytic, double fd) {
        ++checked;
        const double scale = std::max(std::abs(analytic), std::abs(fd));
        if (scale <= kAbsFloor) {
            ++skipped;
            return;
        }
        worst = std::max(worst, std::abs(analytic - fd) / scale);
    }
};

double w2_of_batches(const Matrix& a, const Matrix& b) {
    return w2_simplified(batch_stats(a), batch_stats(b));
}

// Batch whose per-dimension std stays at or above the floor; columns failing
// the floor are redrawn.
Matrix draw_batch(Rng& rng, std::size_t n, std::size_t d, double std_floor) {
    Matrix m(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) m(i, j) = rng.next_symmetric(1.0);
            double mean = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += m(i, j);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double c = m(i, j) - mean;
                sq += c * c;
            }
            if (std::sqrt(sq / static_cast<double>(n)) >= std_floor) break;
        }
    }
    return m;
}

}  // namespace

Mutation parse_mutation(const std::string& name) {
    if (name.empty() || name == "none") return Mutation::none;
    if (name == "w2-sign-flip") return Mutation::w2_sign_flip;
    throw std::invalid_argument("unknown mutation '" + name + "' (try w2-sign-flip)");
}

SuiteResult check_w2_gradients(std::uint64_t seed, std::size_t trials, Mutation mutation) {
    Rng rng(seed);
    W2Config cfg;  // epsilon 1e-6; the std floor keeps sigma > 10*sqrt(epsilon)
    const double std_floor = 0.15;
    ErrTracker err;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t na = 2 + rng.next_below(15);
        const std::size_t nb = 2 + rng.next_below(15);
        const std::size_t d = 2 + rng.next_below(15);
        Matrix a = draw_batch(rng, na, d, std_floor);
        Matrix b = draw_batch(rng, nb, d, std_floor);
        // separate the means so the distance is not accidentally tiny
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t j = 0; j < d; ++j) b(i, j) += 0.5;

        auto [ga, gb] = w2_gradients(a, b, cfg);
        if (mutation == Mutation::w2_sign_flip)
            for (double& v : gb.data) v = -v;

        for (Matrix* side : {&a, &b}) {
            Matrix& grad = side == &a ? ga : gb;
            for (std::size_t i = 0; i < side->rows; ++i)
                for (std::size_t j = 0; j < side->cols; ++j) {
                    double& cell = (*side)(i, j);
                    const double saved = cell;
                    cell = saved + kFdStep;
                    const double up = w2_of_batches(a, b);
                    cell = saved - kFdStep;
                    const double down = w2_of_batches(a, b);
                    cell = saved;
                    err.compare(grad(i, j), (up - down) / (2.0 * kFdStep));
                }
        }
    }
    return {"wasserstein-gradients", err.worst, 1e-4, err.checked, err.skipped,
            err.worst <= 1e-4};
}

SuiteResult check_nuclear_subgradient(std::uint64_t seed, std::size_t trials) {
    Rng rng(seed);
    ErrTracker err;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t rows = 3 + rng.next_below(6);
        const std::size_t cols = 3 + rng.next_below(6);
        Matrix m(0, 0);
        for (int attempt = 0; attempt < 1000; ++attempt) {
            m = uniform_fill(rng, rows, cols, 1.0);
            const SvdResult svd = svd_thin(m);
            bool gaps_ok = svd.s.back() > 1e-3;
            for (std::size_t i = 0; i + 1 < svd.s.size(); ++i)
                if (svd.s[i] - svd.s[i + 1] <= 1e-3) gaps_ok = false;
            if (gaps_ok) break;
        }
        const auto [value, subgrad] = nuclear_norm_and_subgradient(m);
        (void)value;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                const double saved = m(i, j);
                m(i, j) = saved + kFdStep;
                const double up = nuclear_norm_and_subgradient(m).first;
                m(i, j) = saved - kFdStep;
                const double down = nuclear_norm_and_subgradient(m).first;
                m(i, j) = saved;
                err.compare(subgrad(i, j), (up - down) / (2.0 * kFdStep));
            }
    }
    return {"nuclear-subgradient", err.worst, 1e-4, err.checked, err.skipped,
            err.worst <= 1e-4};
}

SuiteResult check_ortho_gradients(std::uint64_t seed, std::size_t trials) {
    Rng rng(seed);
    ErrTracker err;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t d = 3 + rng.next_below(8);
        const std::size_t p = 3 + rng.next_below(8);
        Matrix w = uniform_fill(rng, d, p, 1.0);
        Matrix pm = uniform_fill(rng, d, p, 1.0);
        const double lambda = 0.3 + rng.next_unit();
        const OrthoPenalty pen = ortho_penalty(w, pm, lambda);
        auto value_at = [&]() { return ortho_penalty(w, pm, lambda).value; };
        // returned gradients are half the analytic gradient of the value
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                double& cell = w(i, j);
                const double saved = cell;
                cell = saved + kFdStep;
                const double up = value_at();
                cell = saved - kFdStep;
                const double down = value_at();
                cell = saved;
                err.compare(pen.grad_w(i, j), 0.5 * (up - down) / (2.0 * kFdStep));
            }
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                double& cell = pm(i, j);
                const double saved = cell;
                cell = saved + kFdStep;
                const double up = value_at();
                cell = saved - kFdStep;
                const double down = value_at();
                cell = saved;
                err.compare(pen.grad_p(i, j), 0.5 * (up - down) / (2.0 * kFdStep));
            }
    }
    return {"ortho-gradients", err.worst, 1e-5, err.checked, err.skipped, err.worst <= 1e-5};
}

SuiteResult check_softmax_gradient(std::uint64_t seed, std::size_t trials) {
    Rng rng(seed);
    ErrTracker err;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t c = 2 + rng.next_below(9);
        std::vector<double> logits(c);
        for (double& v : logits) v = rng.next_symmetric(3.0);
        const std::size_t label = rng.next_below(c);
        const auto [loss, grad] = softmax_cross_entropy(logits, label);
        (void)loss;
        for (std::size_t i = 0; i < c; ++i) {
            const double saved = logits[i];
            logits[i] = saved + kFdStep;
            const double up = softmax_cross_entropy(logits, label).first;
            logits[i] = saved - kFdStep;
            const double down = softmax_cross_entropy(logits, label).first;
            logits[i] = saved;
            err.compare(grad[i], (up - down) / (2.0 * kFdStep));
        }
    }
    return {"softmax-gradient", err.worst, 1e-6, err.checked, err.skipped, err.worst <= 1e-6};
}

SuiteResult check_maxout_routing(std::uint64_t seed, std::size_t trials) {
    Rng rng(seed);
    ErrTracker err;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t in = 2 + rng.next_below(7);
        const std::size_t out = 2 + rng.next_below(7);
        MaxoutLayer layer;
        std::vector<double> x(in);
        bool tie_free = false;
        std::vector<std::uint8_t> sel;
        for (int attempt = 0; attempt < 100 && !tie_free; ++attempt) {
            layer.slice_a = uniform_fill(rng, out, in, 1.0);
            layer.slice_b = uniform_fill(rng, out, in, 1.0);
            layer.bias_a.resize(out);
            layer.bias_b.resize(out);
            for (double& v : layer.bias_a) v = rng.next_symmetric(0.5);
            for (double& v : layer.bias_b) v = rng.next_symmetric(0.5);
            for (double& v : x) v = rng.next_symmetric(1.0);
            const auto va = matvec(layer.slice_a, x);
            const auto vb = matvec(layer.slice_b, x);
            tie_free = true;
            for (std::size_t j = 0; j < out; ++j)
                if (std::abs((va[j] + layer.bias_a[j]) - (vb[j] + layer.bias_b[j])) < 1e-6)
                    tie_free = false;
        }
        sel = maxout_affine_forward(x, layer).second;

        auto sum_y = [&]() {
            const auto y = maxout_affine_forward(x, layer).first;
            double s = 0.0;
            for (double v : y) s += v;
            return s;
        };
        // analytic gradient of sum(y): winning slice row sees x, its bias sees 1
        auto fd_check = [&](double& cell, double analytic) {
            const double saved = cell;
            cell = saved + kFdStep;
            const double up = sum_y();
            cell = saved - kFdStep;
            const double down = sum_y();
            cell = saved;
            err.compare(analytic, (up - down) / (2.0 * kFdStep));
        };
        for (std::size_t j = 0; j < out; ++j)
            for (std::size_t i = 0; i < in; ++i) {
                fd_check(layer.slice_a(j, i), sel[j] ? 0.0 : x[i]);
                fd_check(layer.slice_b(j, i), sel[j] ? x[i] : 0.0);
            }
        for (std::size_t j = 0; j < out; ++j) {
            fd_check(layer.bias_a[j], sel[j] ? 0.0 : 1.0);
            fd_check(layer.bias_b[j], sel[j] ? 1.0 : 0.0);
        }
    }
    return {"maxout-routing", err.worst, 1e-5, err.checked, err.skipped, err.worst <= 1e-5};
}

namespace {

// Every trainable scalar, in a fixed order shared with the gradient layout.
std::vector<double*> param_refs(ModelParams& p) {
    std::vector<double*> refs;
    for (auto& layer : p.feature_net.layers) {
        for (double& v : layer.slice_a.data) refs.push_back(&v);
        for (double& v : layer.bias_a) refs.push_back(&v);
        for (double& v : layer.slice_b.data) refs.push_back(&v);
        for (double& v : layer.bias_b) refs.push_back(&v);
    }
    for (double& v : p.projection.shared.data) refs.push_back(&v);
    for (double& v : p.projection.unique_nir.data) refs.push_back(&v);
    for (double& v : p.projection.unique_vis.data) refs.push_back(&v);
    for (double& v : p.classifier.nir.data) refs.push_back(&v);
    for (double& v : p.classifier.vis.data) refs.push_back(&v);
    return refs;
}

// The scalar the sweep differentiates. The subspace penalty enters at half
// weight because ortho_penalty returns half-gradients (lambda absorbs the
// analytic factor 2); everything else is the plain weighted objective.
double sweep_objective(const std::vector<BatchItem>& items, const ModelParams& params,
                       const LossWeights& weights, const W2Config& cfg) {
    const TotalLoss tl = total_loss(items, params, weights, cfg);
    return weights.cls_weight * tl.breakdown.cls + weights.dist_weight * tl.breakdown.dist +
           weights.lowrank_weight * tl.breakdown.low_rank + 0.5 * tl.breakdown.ortho;
}

std::vector<std::vector<std::uint8_t>> all_selectors(const std::vector<BatchItem>& items,
                                                     const ModelParams& params) {
    std::vector<std::vector<std::uint8_t>> out;
    for (const auto& item : items) {
        const ForwardTrace tr = forward(item.input, params, item.modality);
        std::vector<std::uint8_t> flat;
        for (const auto& sel : tr.selectors) flat.insert(flat.end(), sel.begin(), sel.end());
        flat.insert(flat.end(), tr.shared_selector.begin(), tr.shared_selector.end());
        out.push_back(std::move(flat));
    }
    return out;
}

}  // namespace

ModelSweepResult check_model_gradients(std::uint64_t seed, std::size_t models) {
    ModelSweepResult result;
    result.tolerance = 1e-4;
    Rng rng(seed);
    for (std::size_t m = 0; m < models; ++m) {
        ModelConfig cfg;
        cfg.input_dim = 8;
        cfg.hidden = {8};
        cfg.feature_dim = 8;
        cfg.proj_dim = 8;
        cfg.num_classes = 4;
        ModelParams params = init_params(cfg, rng);

        LossWeights weights;
        weights.cls_weight = 1.0;
        weights.dist_weight = 0.5 + rng.next_unit();
        weights.lowrank_weight = 0.1 + 0.2 * rng.next_unit();
        weights.ortho_nir = 0.1 + 0.2 * rng.next_unit();
        weights.ortho_vis = 0.1 + 0.2 * rng.next_unit();
        W2Config w2;
        w2.epsilon = 1e-12;  // keep the stabilizer far below the batch stds

        // two subjects, two samples per modality each: batch of 8
        std::vector<BatchItem> items;
        for (std::size_t subject = 0; subject < 2; ++subject)
            for (int rep = 0; rep < 2; ++rep) {
                for (Modality mod : {Modality::NIR, Modality::VIS}) {
                    BatchItem item;
                    item.class_index = subject;
                    item.modality = mod;
                    item.input.resize(cfg.input_dim);
                    for (double& v : item.input) v = rng.next_symmetric(1.0);
                    items.push_back(std::move(item));
                }
            }

        const TotalLoss tl = total_loss(items, params, weights, w2);
        ModelParams grads = tl.grads;
        const std::vector<double*> refs = param_refs(params);
        ModelParams grads_copy = grads;
        const std::vector<double*> grad_refs = param_refs(grads_copy);

        for (std::size_t k = 0; k < refs.size(); ++k) {
            double& cell = *refs[k];
            const double saved = cell;
            cell = saved + kFdStep;
            const double up = sweep_objective(items, params, weights, w2);
            cell = saved - kFdStep;
            const double down = sweep_objective(items, params, weights, w2);
            cell = saved;
            const double fd = (up - down) / (2.0 * kFdStep);
            const double analytic = *grad_refs[k];
            ++result.params_checked;
            const double scale = std::max(std::abs(analytic), std::abs(fd));
            const double abs_err = std::abs(analytic - fd);
            if (abs_err <= kAbsFloor) continue;
            const double rel = abs_err / scale;
            if (rel <= result.tolerance) {
                result.worst_rel_err = std::max(result.worst_rel_err, rel);
                continue;
            }
            ++result.failures;
            // excusable only if the perturbation crosses a maxout tie
            cell = saved + kFdStep;
            const auto sel_up = all_selectors(items, params);
            cell = saved - kFdStep;
            const auto sel_down = all_selectors(items, params);
            cell = saved;
            if (sel_up == sel_down) ++result.unexcused_failures;
        }
    }
    result.pass = result.unexcused_failures == 0 &&
                  static_cast<double>(result.failures) <=
                      0.01 * static_cast<double>(result.params_checked);
    return result;
}

std::vector<SuiteResult> run_all_checks(std::uint64_t seed, Mutation mutation) {
    std::vector<SuiteResult> results;
    results.push_back(check_w2_gradients(seed, 100, mutation));
    results.push_back(check_softmax_gradient(seed + 1, 100));
    results.push_back(check_maxout_routing(seed + 2, 100));
    results.push_back(check_ortho_gradients(seed + 3, 50));
    results.push_back(check_nuclear_subgradient(seed + 4, 50));
    const ModelSweepResult sweep = check_model_gradients(seed + 5, 20);
    SuiteResult sr;
    sr.name = "model-backprop";
    sr.worst_rel_err = sweep.worst_rel_err;
    sr.tolerance = sweep.tolerance;
    sr.checked = sweep.params_checked;
    sr.skipped = sweep.failures;  // tie-crossing entries excluded from the worst error
    sr.pass = sweep.pass;
    results.push_back(sr);
    return results;
}

}  // namespace xmodal
