#pragma once

#include <string>

#include "xmodal/datagen.hpp"
#include "xmodal/losses.hpp"

namespace xmodal {

struct TrainConfig {
    std::uint64_t seed = 1;
    std::size_t iterations = 5000;          // T
    std::size_t subjects_per_batch = 8;     // S
    std::size_t samples_per_subject = 4;    // K, per modality
    double lr_initial = 0.5;
    double lr_final = 0.05;
    LossWeights weights;
    W2Config w2;
    ModelConfig arch;  // num_classes filled from the training subjects
    std::size_t log_interval = 100;
    std::string log_path;  // empty = no log file
};

struct TrainLogRecord {
    std::size_t iteration = 0;
    LossBreakdown breakdown;
    double heldout_w2 = 0.0;   // mean per-subject W2, probe vs gallery embeddings
    double ortho_fro_nir = 0.0;  // |unique_nir^T shared|_F after the step
    double ortho_fro_vis = 0.0;
    double nuclear_m = 0.0;    // nuclear norm of the stacked classifier
    double lr = 0.0;
    std::size_t dist_skipped = 0;
    std::size_t replacement_draws = 0;
};

std::string format_log_record(const TrainLogRecord& rec);
std::string log_header();

/// Identity-balanced mini-batch: S distinct subjects, K NIR and K VIS
/// samples each. Draws are without replacement inside a subject whenever it
/// has enough samples, with replacement (counted) otherwise.
struct TrainBatch {
    std::vector<BatchItem> items;
    std::size_t replacement_draws = 0;
};

/// Maps the training subjects to dense class indices (ascending subject id).
struct ClassMap {
    std::vector<std::size_t> subjects;  // class index -> subject id
    std::size_t class_of(std::size_t subject_id) const;
};
ClassMap make_class_map(const Dataset& train);

TrainBatch sample_batch(const Dataset& train, const ClassMap& classes, Rng& rng,
                        std::size_t subjects_per_batch, std::size_t samples_per_subject);

/// Geometric interpolation from lr_initial (t=0) to lr_final (t=T).
double lr_at(std::size_t t, const TrainConfig& cfg);

/// One alternating-minimization step: a backpropagation update of all
/// parameters on the batch objective, then the penalty-gradient update of
/// the projection and classifier matrices with the feature net fixed.
/// Throws on non-finite loss or gradients.
TrainLogRecord train_step(ModelParams& params, const TrainBatch& batch,
                          const TrainConfig& cfg, std::size_t t);

struct TrainResult {
    ModelParams params;
    std::vector<TrainLogRecord> log;
    ClassMap classes;
};

/// Full run on a protocol split: init, T steps, log records every
/// log_interval steps (plus the first and last), streamed to log_path
/// when set. Deterministic for a fixed config.
TrainResult train(const Dataset& dataset, const ProtocolSplit& split, const TrainConfig& cfg);

/// Mean per-subject W2 between probe (NIR) and gallery (VIS) shared
/// embeddings; the held-out alignment diagnostic.
double heldout_subject_w2(const Dataset& dataset, const ProtocolSplit& split,
                          const ModelParams& params);

}  // namespace xmodal
