#pragma once

#include <string>

#include "xmodal/model.hpp"

namespace xmodal {

struct Sample {
    std::vector<double> input;
    std::size_t subject_id = 0;
    Modality modality = Modality::NIR;
};

struct GenConfig {
    std::size_t num_subjects = 80;
    std::size_t nir_per_subject = 8;
    std::size_t vis_per_subject = 4;
    std::size_t latent_dim = 16;
    std::size_t input_dim = 32;
    double within_class_noise = 0.1;
    double modality_gap_strength = 1.0;
    bool shared_modality_map = false;  // reuse the NIR map for VIS
    std::uint64_t seed = 1;
};

struct Dataset {
    std::vector<Sample> samples;
    GenConfig generator;  // provenance of synthetic data; empty-ish for loaded files
};

/// Synthetic paired-modality data: per subject a latent identity vector,
/// per modality a fixed affine map + tanh + constant offset, per sample
/// i.i.d. Gaussian noise. Deterministic per seed.
Dataset generate(const GenConfig& cfg);

/// Gallery-probe protocol split over disjoint subject sets. Indices refer
/// to dataset.samples.
struct ProtocolSplit {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> gallery_idx;  // VIS, exactly one per test subject
    std::vector<std::size_t> probe_idx;    // NIR, all of the test subjects'
};

ProtocolSplit split(const Dataset& dataset, double test_fraction, Rng& rng);

/// Throws if the split violates the protocol (subject leakage, gallery
/// multiplicity, modality roles, probe subject missing from gallery).
void check_split(const Dataset& dataset, const ProtocolSplit& split);

Dataset train_dataset(const Dataset& dataset, const ProtocolSplit& split);

/// CSV with header subject_id,modality,v0,...,v{D-1}; 17 significant digits.
void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

/// Three sections TRAIN/GALLERY/PROBE, one sample index per line.
void write_split(const ProtocolSplit& split, const std::string& path);
ProtocolSplit read_split(const std::string& path);

}  // namespace xmodal
