#include "xmodal/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xmodal {

namespace {

void add_scaled_vec(std::vector<double>& dst, const std::vector<double>& src, double scale) {
    if (dst.size() != src.size())
        throw std::invalid_argument("add_scaled: vector length mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

// rank-1 update m += g (outer) x
void add_outer(Matrix& m, const std::vector<double>& g, const std::vector<double>& x) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += gi * x[j];
    }
}

}  // namespace

ModelParams ModelParams::zeros_like(const ModelParams& p) {
    ModelParams z;
    z.feature_net.layers.reserve(p.feature_net.layers.size());
    for (const auto& l : p.feature_net.layers) {
        MaxoutLayer zl;
        zl.slice_a = Matrix(l.slice_a.rows, l.slice_a.cols);
        zl.slice_b = Matrix(l.slice_b.rows, l.slice_b.cols);
        zl.bias_a.assign(l.bias_a.size(), 0.0);
        zl.bias_b.assign(l.bias_b.size(), 0.0);
        z.feature_net.layers.push_back(std::move(zl));
    }
    z.projection.shared = Matrix(p.projection.shared.rows, p.projection.shared.cols);
    z.projection.unique_nir = Matrix(p.projection.unique_nir.rows, p.projection.unique_nir.cols);
    z.projection.unique_vis = Matrix(p.projection.unique_vis.rows, p.projection.unique_vis.cols);
    z.classifier.nir = Matrix(p.classifier.nir.rows, p.classifier.nir.cols);
    z.classifier.vis = Matrix(p.classifier.vis.rows, p.classifier.vis.cols);
    return z;
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
    if (feature_net.layers.size() != other.feature_net.layers.size())
        throw std::invalid_argument("add_scaled: layer count mismatch");
    for (std::size_t l = 0; l < feature_net.layers.size(); ++l) {
        xmodal::add_scaled(feature_net.layers[l].slice_a, other.feature_net.layers[l].slice_a, scale);
        xmodal::add_scaled(feature_net.layers[l].slice_b, other.feature_net.layers[l].slice_b, scale);
        add_scaled_vec(feature_net.layers[l].bias_a, other.feature_net.layers[l].bias_a, scale);
        add_scaled_vec(feature_net.layers[l].bias_b, other.feature_net.layers[l].bias_b, scale);
    }
    xmodal::add_scaled(projection.shared, other.projection.shared, scale);
    xmodal::add_scaled(projection.unique_nir, other.projection.unique_nir, scale);
    xmodal::add_scaled(projection.unique_vis, other.projection.unique_vis, scale);
    xmodal::add_scaled(classifier.nir, other.classifier.nir, scale);
    xmodal::add_scaled(classifier.vis, other.classifier.vis, scale);
}

bool ModelParams::all_finite() const {
    for (const auto& l : feature_net.layers) {
        if (!l.slice_a.all_finite() || !l.slice_b.all_finite()) return false;
        for (double v : l.bias_a)
            if (!std::isfinite(v)) return false;
        for (double v : l.bias_b)
            if (!std::isfinite(v)) return false;
    }
    return projection.shared.all_finite() && projection.unique_nir.all_finite() &&
           projection.unique_vis.all_finite() && classifier.nir.all_finite() &&
           classifier.vis.all_finite();
}

std::pair<std::vector<double>, std::vector<std::uint8_t>> maxout_affine_forward(
    const std::vector<double>& x, const MaxoutLayer& layer) {
    if (x.size() != layer.slice_a.cols || layer.slice_a.cols != layer.slice_b.cols ||
        layer.slice_a.rows != layer.slice_b.rows)
        throw std::invalid_argument("maxout_affine_forward: input length " +
                                    std::to_string(x.size()) + " does not match layer " +
                                    std::to_string(layer.slice_a.rows) + "x" +
                                    std::to_string(layer.slice_a.cols));
    const std::size_t k = layer.slice_a.rows;
    std::vector<double> y(k);
    std::vector<std::uint8_t> sel(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double* ra = layer.slice_a.row_ptr(j);
        const double* rb = layer.slice_b.row_ptr(j);
        double va = layer.bias_a[j], vb = layer.bias_b[j];
        for (std::size_t i = 0; i < x.size(); ++i) {
            va += ra[i] * x[i];
            vb += rb[i] * x[i];
        }
        sel[j] = vb > va ? 1 : 0;
        y[j] = sel[j] ? vb : va;
    }
    return {std::move(y), std::move(sel)};
}

std::vector<double> extract_features(const std::vector<double>& input,
                                     const FeatureNetParams& net, ForwardTrace& trace) {
    trace.layer_inputs.clear();
    trace.selectors.clear();
    std::vector<double> x = input;
    for (const auto& layer : net.layers) {
        trace.layer_inputs.push_back(x);
        auto [y, sel] = maxout_affine_forward(x, layer);
        trace.selectors.push_back(std::move(sel));
        x = std::move(y);
    }
    trace.features = x;
    return x;
}

void project_features(const std::vector<double>& x, const ProjectionParams& projection,
                      Modality modality, ForwardTrace& trace) {
    trace.shared_pre = matvec(projection.shared, x);
    const std::size_t d = trace.shared_pre.size();
    trace.shared_embed.resize(d / 2);
    trace.shared_selector.resize(d / 2);
    for (std::size_t j = 0; j < d / 2; ++j) {
        const double even = trace.shared_pre[2 * j];
        const double odd = trace.shared_pre[2 * j + 1];
        trace.shared_selector[j] = odd > even ? 1 : 0;
        trace.shared_embed[j] = trace.shared_selector[j] ? odd : even;
    }
    const Matrix& unique_map =
        modality == Modality::NIR ? projection.unique_nir : projection.unique_vis;
    trace.unique = matvec(unique_map, x);
    trace.modality = modality;
}

std::vector<double> classify(const std::vector<double>& shared_embed,
                             const std::vector<double>& unique,
                             const ClassifierParams& classifier, Modality modality) {
    const Matrix& f = modality == Modality::NIR ? classifier.nir : classifier.vis;
    if (shared_embed.size() + unique.size() != f.cols)
        throw std::invalid_argument("classify: classifier expects " + std::to_string(f.cols) +
                                    " inputs, got " +
                                    std::to_string(shared_embed.size() + unique.size()));
    std::vector<double> concat;
    concat.reserve(f.cols);
    concat.insert(concat.end(), shared_embed.begin(), shared_embed.end());
    concat.insert(concat.end(), unique.begin(), unique.end());
    return matvec(f, concat);
}

ForwardTrace forward(const std::vector<double>& input, const ModelParams& params,
                     Modality modality) {
    ForwardTrace trace;
    const std::vector<double> x = extract_features(input, params.feature_net, trace);
    project_features(x, params.projection, modality, trace);
    trace.logits = classify(trace.shared_embed, trace.unique, params.classifier, modality);
    return trace;
}

std::vector<ForwardTrace> forward_batch(const std::vector<std::vector<double>>& inputs,
                                        const std::vector<Modality>& modalities,
                                        const ModelParams& params) {
    if (inputs.size() != modalities.size())
        throw std::invalid_argument("forward_batch: inputs and modalities differ in length");
    const std::size_t in_dim = params.feature_net.layers.empty()
                                   ? params.projection.shared.cols
                                   : params.feature_net.layers.front().slice_a.cols;
    for (const auto& in : inputs)
        if (in.size() != in_dim)
            throw std::invalid_argument("forward_batch: input length " +
                                        std::to_string(in.size()) + ", expected " +
                                        std::to_string(in_dim));
    std::vector<ForwardTrace> traces(inputs.size());
    const std::int64_t n = static_cast<std::int64_t>(inputs.size());
#pragma omp parallel for schedule(static) if (n >= 8)
    for (std::int64_t i = 0; i < n; ++i)
        traces[i] = forward(inputs[i], params, modalities[i]);
    return traces;
}

ParamGrads backward(const std::vector<ForwardTrace>& traces,
                    const std::vector<std::vector<double>>& grad_logits,
                    const std::vector<std::vector<double>>& grad_shared_embed,
                    const ModelParams& params) {
    if (traces.size() != grad_logits.size() || traces.size() != grad_shared_embed.size())
        throw std::invalid_argument("backward: trace and gradient counts differ");
    const std::size_t num_layers = params.feature_net.layers.size();
    const std::size_t d = params.projection.shared.rows;
    const std::size_t half = d / 2;

    ParamGrads grads = ModelParams::zeros_like(params);
    std::vector<double> concat, g_concat, g_pre(d), g_unique, g_x, g_layer;

    for (std::size_t t = 0; t < traces.size(); ++t) {
        const ForwardTrace& tr = traces[t];
        if (tr.layer_inputs.size() != num_layers || tr.shared_embed.size() != half ||
            tr.unique.size() != d)
            throw std::invalid_argument("backward: trace does not match parameter shapes");
        const std::vector<double>& gl = grad_logits[t];
        const std::vector<double>& ge = grad_shared_embed[t];
        const Matrix& f =
            tr.modality == Modality::NIR ? params.classifier.nir : params.classifier.vis;
        Matrix& gf = tr.modality == Modality::NIR ? grads.classifier.nir : grads.classifier.vis;
        if (gl.size() != f.rows || ge.size() != half)
            throw std::invalid_argument("backward: upstream gradient lengths do not match model");

        concat.assign(tr.shared_embed.begin(), tr.shared_embed.end());
        concat.insert(concat.end(), tr.unique.begin(), tr.unique.end());
        add_outer(gf, gl, concat);
        g_concat = matvec_transposed(f, gl);

        // shared head: classifier part plus the external (distribution) part,
        // routed through the pairwise maxout
        std::fill(g_pre.begin(), g_pre.end(), 0.0);
        for (std::size_t j = 0; j < half; ++j)
            g_pre[2 * j + tr.shared_selector[j]] = g_concat[j] + ge[j];
        g_unique.assign(g_concat.begin() + static_cast<std::ptrdiff_t>(half), g_concat.end());

        add_outer(grads.projection.shared, g_pre, tr.features);
        g_x = matvec_transposed(params.projection.shared, g_pre);
        const Matrix& unique_map = tr.modality == Modality::NIR ? params.projection.unique_nir
                                                                : params.projection.unique_vis;
        Matrix& g_unique_map = tr.modality == Modality::NIR ? grads.projection.unique_nir
                                                            : grads.projection.unique_vis;
        add_outer(g_unique_map, g_unique, tr.features);
        {
            const std::vector<double> from_unique = matvec_transposed(unique_map, g_unique);
            for (std::size_t j = 0; j < g_x.size(); ++j) g_x[j] += from_unique[j];
        }

        for (std::size_t l = num_layers; l-- > 0;) {
            const MaxoutLayer& layer = params.feature_net.layers[l];
            MaxoutLayer& glayer = grads.feature_net.layers[l];
            const std::vector<double>& x_in = tr.layer_inputs[l];
            const std::vector<std::uint8_t>& sel = tr.selectors[l];
            g_layer.assign(x_in.size(), 0.0);
            for (std::size_t j = 0; j < sel.size(); ++j) {
                const double gj = g_x[j];
                if (gj == 0.0) continue;
                const Matrix& w = sel[j] ? layer.slice_b : layer.slice_a;
                Matrix& gw = sel[j] ? glayer.slice_b : glayer.slice_a;
                std::vector<double>& gb = sel[j] ? glayer.bias_b : glayer.bias_a;
                gb[j] += gj;
                const double* wrow = w.row_ptr(j);
                double* gwrow = gw.row_ptr(j);
                for (std::size_t i = 0; i < x_in.size(); ++i) {
                    gwrow[i] += gj * x_in[i];
                    g_layer[i] += gj * wrow[i];
                }
            }
            g_x = g_layer;
        }
    }
    return grads;
}

void validate_config(const ModelConfig& config) {
    if (config.input_dim == 0 || config.feature_dim == 0 || config.proj_dim == 0)
        throw std::invalid_argument("model config: dimensions must be positive");
    if (config.proj_dim % 2 != 0)
        throw std::invalid_argument("model config: projection dimension " +
                                    std::to_string(config.proj_dim) +
                                    " must be even (the shared head halves it)");
    if (config.num_classes == 0)
        throw std::invalid_argument("model config: number of classes must be positive");
    for (std::size_t h : config.hidden)
        if (h == 0) throw std::invalid_argument("model config: hidden sizes must be positive");
}

ModelParams init_params(const ModelConfig& config, Rng& rng) {
    validate_config(config);
    ModelParams p;
    std::vector<std::size_t> dims;
    dims.push_back(config.input_dim);
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(config.feature_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = dims[l], out = dims[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        MaxoutLayer layer;
        layer.slice_a = uniform_fill(rng, out, fan_in, bound);
        layer.slice_b = uniform_fill(rng, out, fan_in, bound);
        layer.bias_a.assign(out, 0.0);
        layer.bias_b.assign(out, 0.0);
        p.feature_net.layers.push_back(std::move(layer));
    }
    const double proj_bound = 1.0 / std::sqrt(static_cast<double>(config.feature_dim));
    p.projection.shared = uniform_fill(rng, config.proj_dim, config.feature_dim, proj_bound);
    p.projection.unique_nir = uniform_fill(rng, config.proj_dim, config.feature_dim, proj_bound);
    p.projection.unique_vis = uniform_fill(rng, config.proj_dim, config.feature_dim, proj_bound);
    const std::size_t q = config.proj_dim / 2 + config.proj_dim;
    const double cls_bound = 1.0 / std::sqrt(static_cast<double>(q));
    p.classifier.nir = uniform_fill(rng, config.num_classes, q, cls_bound);
    p.classifier.vis = uniform_fill(rng, config.num_classes, q, cls_bound);
    return p;
}

}  // namespace xmodal
