#include "xmodal/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xmodal {

namespace {

struct ModalityMap {
    Matrix affine;               // input_dim x latent_dim
    std::vector<double> bias;    // input_dim
    std::vector<double> offset;  // input_dim, scaled by the gap strength
};

ModalityMap draw_map(Rng& rng, const GenConfig& cfg) {
    ModalityMap m;
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
    m.affine = uniform_fill(rng, cfg.input_dim, cfg.latent_dim, scale);
    m.bias.resize(cfg.input_dim);
    m.offset.resize(cfg.input_dim);
    for (double& v : m.bias) v = rng.next_symmetric(0.5);
    for (double& v : m.offset) v = rng.next_symmetric(1.0);
    return m;
}

std::vector<double> render(const ModalityMap& map, const std::vector<double>& latent,
                           const GenConfig& cfg, Rng& rng) {
    std::vector<double> x = matvec(map.affine, latent);
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = std::tanh(x[j] + map.bias[j]) + cfg.modality_gap_strength * map.offset[j];
        x[j] += cfg.within_class_noise * rng.next_normal();
    }
    return x;
}

}  // namespace

Dataset generate(const GenConfig& cfg) {
    if (cfg.num_subjects == 0 || cfg.nir_per_subject == 0 || cfg.vis_per_subject == 0)
        throw std::invalid_argument("generate: subject and per-modality sample counts must be >= 1");
    if (cfg.latent_dim == 0 || cfg.input_dim == 0)
        throw std::invalid_argument("generate: dimensions must be >= 1");

    Rng rng(cfg.seed);
    const ModalityMap nir_map = draw_map(rng, cfg);
    const ModalityMap vis_map = cfg.shared_modality_map ? nir_map : draw_map(rng, cfg);

    Dataset ds;
    ds.generator = cfg;
    ds.samples.reserve(cfg.num_subjects * (cfg.nir_per_subject + cfg.vis_per_subject));
    std::vector<double> latent(cfg.latent_dim);
    for (std::size_t s = 0; s < cfg.num_subjects; ++s) {
        for (double& z : latent) z = rng.next_symmetric(1.0);
        for (std::size_t k = 0; k < cfg.nir_per_subject; ++k)
            ds.samples.push_back({render(nir_map, latent, cfg, rng), s, Modality::NIR});
        for (std::size_t k = 0; k < cfg.vis_per_subject; ++k)
            ds.samples.push_back({render(vis_map, latent, cfg, rng), s, Modality::VIS});
    }
    return ds;
}

ProtocolSplit split(const Dataset& dataset, double test_fraction, Rng& rng) {
    std::set<std::size_t> subject_set;
    for (const auto& s : dataset.samples) subject_set.insert(s.subject_id);
    std::vector<std::size_t> subjects(subject_set.begin(), subject_set.end());
    const std::size_t n = subjects.size();
    const std::size_t n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test >= n)
        throw std::invalid_argument("split: test fraction " + std::to_string(test_fraction) +
                                    " leaves an empty side with " + std::to_string(n) +
                                    " subjects");

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + rng.next_below(n - i);
        std::swap(subjects[i], subjects[j]);
    }
    const std::set<std::size_t> test_subjects(subjects.begin(),
                                              subjects.begin() + static_cast<std::ptrdiff_t>(n_test));

    ProtocolSplit out;
    std::map<std::size_t, std::vector<std::size_t>> test_vis;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const Sample& s = dataset.samples[i];
        if (!test_subjects.count(s.subject_id)) {
            out.train_idx.push_back(i);
        } else if (s.modality == Modality::NIR) {
            out.probe_idx.push_back(i);
        } else {
            test_vis[s.subject_id].push_back(i);
        }
    }
    for (std::size_t subj : test_subjects) {
        auto it = test_vis.find(subj);
        if (it == test_vis.end())
            throw std::invalid_argument("split: test subject " + std::to_string(subj) +
                                        " has no VIS sample for the gallery");
        const auto& candidates = it->second;
        out.gallery_idx.push_back(candidates[rng.next_below(candidates.size())]);
    }
    std::sort(out.gallery_idx.begin(), out.gallery_idx.end());
    return out;
}

void check_split(const Dataset& dataset, const ProtocolSplit& sp) {
    std::set<std::size_t> train_subjects, test_subjects, gallery_subjects;
    for (std::size_t i : sp.train_idx) train_subjects.insert(dataset.samples.at(i).subject_id);
    for (std::size_t i : sp.gallery_idx) {
        const Sample& s = dataset.samples.at(i);
        if (s.modality != Modality::VIS)
            throw std::runtime_error("split check: gallery sample " + std::to_string(i) +
                                     " is not VIS");
        if (!gallery_subjects.insert(s.subject_id).second)
            throw std::runtime_error("split check: subject " + std::to_string(s.subject_id) +
                                     " appears twice in the gallery");
        test_subjects.insert(s.subject_id);
    }
    for (std::size_t i : sp.probe_idx) {
        const Sample& s = dataset.samples.at(i);
        if (s.modality != Modality::NIR)
            throw std::runtime_error("split check: probe sample " + std::to_string(i) +
                                     " is not NIR");
        if (!gallery_subjects.count(s.subject_id))
            throw std::runtime_error("split check: probe subject " +
                                     std::to_string(s.subject_id) + " missing from gallery");
        test_subjects.insert(s.subject_id);
    }
    for (std::size_t subj : train_subjects)
        if (test_subjects.count(subj))
            throw std::runtime_error("split check: subject " + std::to_string(subj) +
                                     " leaks across train/test");
}

Dataset train_dataset(const Dataset& dataset, const ProtocolSplit& sp) {
    Dataset out;
    out.generator = dataset.generator;
    out.samples.reserve(sp.train_idx.size());
    for (std::size_t i : sp.train_idx) out.samples.push_back(dataset.samples.at(i));
    return out;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("write_dataset: cannot open " + path);
    const std::size_t dim = dataset.samples.empty() ? 0 : dataset.samples.front().input.size();
    std::fprintf(f, "subject_id,modality");
    for (std::size_t j = 0; j < dim; ++j) std::fprintf(f, ",v%zu", j);
    std::fprintf(f, "\n");
    for (const Sample& s : dataset.samples) {
        std::fprintf(f, "%zu,%c", s.subject_id, s.modality == Modality::NIR ? 'N' : 'V');
        for (double v : s.input) std::fprintf(f, ",%.17g", v);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("subject_id,modality", 0) != 0)
        throw std::runtime_error("read_dataset: bad header in " + path);
    Dataset ds;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        Sample s;
        if (!std::getline(ss, field, ',')) throw std::runtime_error("read_dataset: bad row");
        s.subject_id = std::stoull(field);
        if (!std::getline(ss, field, ',') || field.size() != 1 ||
            (field[0] != 'N' && field[0] != 'V'))
            throw std::runtime_error("read_dataset: bad modality in row of " + path);
        s.modality = field[0] == 'N' ? Modality::NIR : Modality::VIS;
        while (std::getline(ss, field, ',')) s.input.push_back(std::stod(field));
        if (dim == 0) dim = s.input.size();
        if (s.input.empty() || s.input.size() != dim)
            throw std::runtime_error("read_dataset: inconsistent row width in " + path);
        for (double v : s.input)
            if (!std::isfinite(v))
                throw std::runtime_error("read_dataset: non-finite value in " + path);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void write_split(const ProtocolSplit& sp, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("write_split: cannot open " + path);
    std::fprintf(f, "TRAIN\n");
    for (std::size_t i : sp.train_idx) std::fprintf(f, "%zu\n", i);
    std::fprintf(f, "GALLERY\n");
    for (std::size_t i : sp.gallery_idx) std::fprintf(f, "%zu\n", i);
    std::fprintf(f, "PROBE\n");
    for (std::size_t i : sp.probe_idx) std::fprintf(f, "%zu\n", i);
    std::fclose(f);
}

ProtocolSplit read_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_split: cannot open " + path);
    ProtocolSplit sp;
    std::vector<std::size_t>* section = nullptr;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "TRAIN") {
            section = &sp.train_idx;
        } else if (line == "GALLERY") {
            section = &sp.gallery_idx;
        } else if (line == "PROBE") {
            section = &sp.probe_idx;
        } else {
            if (!section)
                throw std::runtime_error("read_split: index before section header in " + path);
            section->push_back(std::stoull(line));
        }
    }
    return sp;
}

}  // namespace xmodal
