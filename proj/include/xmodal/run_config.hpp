#pragma once

#include <string>

#include "xmodal/trainer.hpp"

namespace xmodal {

/// Flat key = value configuration with one section per module. Every key
/// has a default; parse(emit(c)) reproduces c exactly.
struct RunConfig {
    // [run]
    std::uint64_t seed = 1;

    // [data]
    std::size_t num_subjects = 80;
    std::size_t nir_per_subject = 8;
    std::size_t vis_per_subject = 4;
    std::size_t latent_dim = 16;
    std::size_t input_dim = 32;
    double within_class_noise = 0.1;
    double modality_gap_strength = 1.0;
    bool shared_modality_map = false;
    double test_fraction = 0.5;

    // [model]
    std::vector<std::size_t> hidden = {64};
    std::size_t feature_dim = 64;
    std::size_t proj_dim = 64;

    // [train]
    std::size_t iterations = 5000;
    std::size_t subjects_per_batch = 8;
    std::size_t samples_per_subject = 4;
    double lr_initial = 0.5;
    double lr_final = 0.05;
    double cls_weight = 1.0;
    double dist_weight = 1.0;
    double lowrank_weight = 1e-3;
    double ortho_nir = 1e-3;
    double ortho_vis = 1e-3;
    double w2_epsilon = 1e-6;
    std::size_t log_interval = 100;

    // [paths]
    std::string out_dir = "out";
    std::string dataset_file = "dataset.csv";
    std::string split_file = "split.txt";
    std::string checkpoint_file = "checkpoint.txt";
    std::string log_file = "train.log";
    std::string report_file = "report.txt";
    std::string roc_file = "roc.csv";
    std::string corr_file = "corr.csv";

    bool operator==(const RunConfig&) const = default;

    GenConfig gen_config() const;
    TrainConfig train_config() const;
    std::string path(const std::string& file) const;  // out_dir + "/" + file
};

std::string emit_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

}  // namespace xmodal
