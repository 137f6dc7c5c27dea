#include "xmodal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "xmodal/eval.hpp"
#include "xmodal/svd.hpp"

namespace xmodal {

std::size_t ClassMap::class_of(std::size_t subject_id) const {
    const auto it = std::lower_bound(subjects.begin(), subjects.end(), subject_id);
    if (it == subjects.end() || *it != subject_id)
        throw std::invalid_argument("class_of: subject " + std::to_string(subject_id) +
                                    " is not a training subject");
    return static_cast<std::size_t>(it - subjects.begin());
}

ClassMap make_class_map(const Dataset& train) {
    ClassMap m;
    for (const Sample& s : train.samples) m.subjects.push_back(s.subject_id);
    std::sort(m.subjects.begin(), m.subjects.end());
    m.subjects.erase(std::unique(m.subjects.begin(), m.subjects.end()), m.subjects.end());
    return m;
}

TrainBatch sample_batch(const Dataset& train, const ClassMap& classes, Rng& rng,
                        std::size_t subjects_per_batch, std::size_t samples_per_subject) {
    // per-subject sample indices, keyed by class index
    std::vector<std::vector<std::size_t>> nir(classes.subjects.size()),
        vis(classes.subjects.size());
    for (std::size_t i = 0; i < train.samples.size(); ++i) {
        const Sample& s = train.samples[i];
        const std::size_t c = classes.class_of(s.subject_id);
        (s.modality == Modality::NIR ? nir[c] : vis[c]).push_back(i);
    }
    std::vector<std::size_t> eligible;
    std::vector<std::size_t> deficient;
    for (std::size_t c = 0; c < classes.subjects.size(); ++c)
        (nir[c].empty() || vis[c].empty() ? deficient : eligible).push_back(c);
    if (eligible.size() < subjects_per_batch) {
        std::string msg = "sample_batch: need " + std::to_string(subjects_per_batch) +
                          " subjects with both modalities, have " +
                          std::to_string(eligible.size());
        if (!deficient.empty()) {
            msg += " (deficient subjects:";
            for (std::size_t c : deficient) msg += " " + std::to_string(classes.subjects[c]);
            msg += ")";
        }
        throw std::invalid_argument(msg);
    }

    // partial Fisher-Yates to pick S distinct subjects
    for (std::size_t i = 0; i < subjects_per_batch; ++i) {
        const std::size_t j = i + rng.next_below(eligible.size() - i);
        std::swap(eligible[i], eligible[j]);
    }

    TrainBatch batch;
    auto draw = [&](const std::vector<std::size_t>& pool, std::size_t cls) {
        std::vector<std::size_t> picked;
        if (pool.size() >= samples_per_subject) {
            std::vector<std::size_t> idx(pool.size());
            for (std::size_t i = 0; i < pool.size(); ++i) idx[i] = i;
            for (std::size_t i = 0; i < samples_per_subject; ++i) {
                const std::size_t j = i + rng.next_below(idx.size() - i);
                std::swap(idx[i], idx[j]);
                picked.push_back(pool[idx[i]]);
            }
        } else {
            for (std::size_t i = 0; i < samples_per_subject; ++i)
                picked.push_back(pool[rng.next_below(pool.size())]);
            batch.replacement_draws += samples_per_subject;
        }
        for (std::size_t i : picked) {
            const Sample& s = train.samples[i];
            batch.items.push_back({s.input, cls, s.modality});
        }
    };
    for (std::size_t i = 0; i < subjects_per_batch; ++i) {
        const std::size_t c = eligible[i];
        draw(nir[c], c);
        draw(vis[c], c);
    }
    return batch;
}

double lr_at(std::size_t t, const TrainConfig& cfg) {
    if (cfg.lr_initial == cfg.lr_final) return cfg.lr_initial;  // includes the frozen gamma = 0 case
    if (!(cfg.lr_initial >= cfg.lr_final) || !(cfg.lr_final > 0.0))
        throw std::invalid_argument("lr_at: need lr_initial >= lr_final > 0");
    if (cfg.iterations == 0) return cfg.lr_initial;
    const double frac = static_cast<double>(t) / static_cast<double>(cfg.iterations);
    return cfg.lr_initial * std::pow(cfg.lr_final / cfg.lr_initial, frac);
}

TrainLogRecord train_step(ModelParams& params, const TrainBatch& batch,
                          const TrainConfig& cfg, std::size_t t) {
    const double gamma = lr_at(t, cfg);

    // phase 1: backpropagation on the batch objective
    DataLoss dl = data_loss(batch.items, params, cfg.weights, cfg.w2);
    if (!std::isfinite(dl.cls) || !std::isfinite(dl.dist) || !dl.grads.all_finite())
        throw std::runtime_error("train_step: non-finite loss or gradient at iteration " +
                                 std::to_string(t));
    params.add_scaled(dl.grads, -gamma);

    // phase 2: penalty gradients at the updated parameters, feature net fixed
    const ConstraintTerms ct = constraint_terms(params, cfg.weights,
                                                /*skip_lowrank_when_unweighted=*/true);
    if (ct.ortho_grads_nir) {
        add_scaled(params.projection.shared, ct.ortho_grads_nir->grad_w, -gamma);
        add_scaled(params.projection.unique_nir, ct.ortho_grads_nir->grad_p, -gamma);
    }
    if (ct.ortho_grads_vis) {
        add_scaled(params.projection.shared, ct.ortho_grads_vis->grad_w, -gamma);
        add_scaled(params.projection.unique_vis, ct.ortho_grads_vis->grad_p, -gamma);
    }
    if (ct.lowrank_computed) {
        add_scaled(params.classifier.nir, ct.lowrank_grad_nir, -gamma);
        add_scaled(params.classifier.vis, ct.lowrank_grad_vis, -gamma);
    }
    if (!params.all_finite())
        throw std::runtime_error("train_step: non-finite parameters after iteration " +
                                 std::to_string(t));

    TrainLogRecord rec;
    rec.iteration = t;
    rec.breakdown.cls = dl.cls;
    rec.breakdown.dist = dl.dist;
    rec.breakdown.low_rank = ct.lowrank_value;
    rec.breakdown.ortho = ct.ortho_value;
    rec.breakdown.total = cfg.weights.cls_weight * dl.cls + cfg.weights.dist_weight * dl.dist +
                          cfg.weights.lowrank_weight * ct.lowrank_value + ct.ortho_value;
    rec.lr = gamma;
    rec.dist_skipped = dl.dist_skipped;
    rec.replacement_draws = batch.replacement_draws;
    {
        const Matrix gram_n =
            matmul(transpose(params.projection.unique_nir), params.projection.shared);
        const Matrix gram_v =
            matmul(transpose(params.projection.unique_vis), params.projection.shared);
        rec.ortho_fro_nir = std::sqrt(frobenius_norm_sq(gram_n));
        rec.ortho_fro_vis = std::sqrt(frobenius_norm_sq(gram_v));
    }
    return rec;
}

double heldout_subject_w2(const Dataset& dataset, const ProtocolSplit& sp,
                          const ModelParams& params) {
    const auto embeds = embed_gallery_probe(dataset, sp, params);
    std::map<std::size_t, std::vector<std::size_t>> probe_rows;
    for (std::size_t i = 0; i < embeds.probe_labels.size(); ++i)
        probe_rows[embeds.probe_labels[i]].push_back(i);

    double sum = 0.0;
    std::size_t used = 0;
    const std::size_t dim = embeds.gallery.cols;
    for (std::size_t g = 0; g < embeds.gallery_labels.size(); ++g) {
        const auto it = probe_rows.find(embeds.gallery_labels[g]);
        if (it == probe_rows.end()) continue;
        Matrix nir_side(it->second.size(), dim), vis_side(1, dim);
        for (std::size_t r = 0; r < it->second.size(); ++r)
            std::copy(embeds.probe.row_ptr(it->second[r]),
                      embeds.probe.row_ptr(it->second[r]) + dim, nir_side.row_ptr(r));
        std::copy(embeds.gallery.row_ptr(g), embeds.gallery.row_ptr(g) + dim,
                  vis_side.row_ptr(0));
        sum += w2_simplified(batch_stats(nir_side), batch_stats(vis_side));
        ++used;
    }
    return used ? sum / static_cast<double>(used) : 0.0;
}

std::string log_header() {
    return "# iter total cls dist low_rank ortho heldout_w2 ortho_fro_nir ortho_fro_vis "
           "nuclear_m lr dist_skipped replacement_draws";
}

std::string format_log_record(const TrainLogRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%zu %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %zu %zu",
                  r.iteration, r.breakdown.total, r.breakdown.cls, r.breakdown.dist,
                  r.breakdown.low_rank, r.breakdown.ortho, r.heldout_w2, r.ortho_fro_nir,
                  r.ortho_fro_vis, r.nuclear_m, r.lr, r.dist_skipped, r.replacement_draws);
    return buf;
}

TrainResult train(const Dataset& dataset, const ProtocolSplit& sp, const TrainConfig& cfg) {
    TrainResult result;
    const Dataset train_set = train_dataset(dataset, sp);
    result.classes = make_class_map(train_set);

    TrainConfig local = cfg;
    local.arch.num_classes = result.classes.subjects.size();

    Rng rng(local.seed);
    result.params = init_params(local.arch, rng);

    std::FILE* log_file = nullptr;
    if (!local.log_path.empty()) {
        log_file = std::fopen(local.log_path.c_str(), "wb");
        if (!log_file)
            throw std::runtime_error("train: cannot open log file " + local.log_path);
        std::fprintf(log_file, "%s\n", log_header().c_str());
    }

    for (std::size_t t = 0; t < local.iterations; ++t) {
        const TrainBatch batch = sample_batch(train_set, result.classes, rng,
                                              local.subjects_per_batch,
                                              local.samples_per_subject);
        TrainLogRecord rec;
        try {
            rec = train_step(result.params, batch, local, t);
        } catch (...) {
            if (log_file) std::fclose(log_file);
            throw;
        }
        const bool log_now = (local.log_interval != 0 && t % local.log_interval == 0) ||
                             t + 1 == local.iterations;
        if (log_now) {
            rec.heldout_w2 = heldout_subject_w2(dataset, sp, result.params);
            rec.nuclear_m =
                nuclear_norm_and_subgradient(stack_classifiers(result.params.classifier)).first;
            result.log.push_back(rec);
            if (log_file) std::fprintf(log_file, "%s\n", format_log_record(rec).c_str());
        }
    }
    if (log_file) std::fclose(log_file);
    return result;
}

}  // namespace xmodal
