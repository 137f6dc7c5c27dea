#include "xmodal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xmodal {

namespace {

Matrix embed_set(const Dataset& dataset, const std::vector<std::size_t>& indices,
                 const ModelParams& params, std::vector<std::size_t>& labels) {
    std::vector<std::vector<double>> inputs;
    std::vector<Modality> modalities;
    inputs.reserve(indices.size());
    for (std::size_t i : indices) {
        const Sample& s = dataset.samples.at(i);
        inputs.push_back(s.input);
        modalities.push_back(s.modality);
        labels.push_back(s.subject_id);
    }
    const std::vector<ForwardTrace> traces = forward_batch(inputs, modalities, params);
    const std::size_t dim = params.projection.shared.rows / 2;
    Matrix out(indices.size(), dim);
    for (std::size_t r = 0; r < traces.size(); ++r)
        std::copy(traces[r].shared_embed.begin(), traces[r].shared_embed.end(), out.row_ptr(r));
    return out;
}

double cosine_entry(const double* a, const double* b, std::size_t dim, bool& zero_norm) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) {
        zero_norm = true;
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void check_similarity_inputs(const Matrix& gallery, const std::vector<std::size_t>& glabels,
                             const Matrix& probe, const std::vector<std::size_t>& plabels) {
    if (gallery.rows == 0 || probe.rows == 0)
        throw std::invalid_argument("cosine_similarity_matrix: empty gallery or probe");
    if (gallery.cols != probe.cols)
        throw std::invalid_argument("cosine_similarity_matrix: dimension mismatch, gallery " +
                                    std::to_string(gallery.cols) + " vs probe " +
                                    std::to_string(probe.cols));
    if (glabels.size() != gallery.rows || plabels.size() != probe.rows)
        throw std::invalid_argument("cosine_similarity_matrix: label counts do not match");
}

}  // namespace

Embeddings embed_gallery_probe(const Dataset& dataset, const ProtocolSplit& sp,
                               const ModelParams& params) {
    Embeddings e;
    e.gallery = embed_set(dataset, sp.gallery_idx, params, e.gallery_labels);
    e.probe = embed_set(dataset, sp.probe_idx, params, e.probe_labels);
    return e;
}

SimilarityMatrix cosine_similarity_matrix_serial(const Matrix& gallery,
                                                 const std::vector<std::size_t>& glabels,
                                                 const Matrix& probe,
                                                 const std::vector<std::size_t>& plabels) {
    check_similarity_inputs(gallery, glabels, probe, plabels);
    SimilarityMatrix sim;
    sim.values = Matrix(gallery.rows, probe.rows);
    sim.gallery_labels = glabels;
    sim.probe_labels = plabels;
    std::size_t zero_count = 0;
    for (std::size_t g = 0; g < gallery.rows; ++g) {
        for (std::size_t p = 0; p < probe.rows; ++p) {
            bool zero = false;
            sim.values(g, p) = cosine_entry(gallery.row_ptr(g), probe.row_ptr(p),
                                            gallery.cols, zero);
            if (zero) ++zero_count;
        }
    }
    sim.zero_norm_count = zero_count;
    return sim;
}

SimilarityMatrix cosine_similarity_matrix(const Matrix& gallery,
                                          const std::vector<std::size_t>& glabels,
                                          const Matrix& probe,
                                          const std::vector<std::size_t>& plabels) {
    check_similarity_inputs(gallery, glabels, probe, plabels);
    SimilarityMatrix sim;
    sim.values = Matrix(gallery.rows, probe.rows);
    sim.gallery_labels = glabels;
    sim.probe_labels = plabels;
    const std::int64_t rows = static_cast<std::int64_t>(gallery.rows);
    std::size_t zero_count = 0;
#pragma omp parallel for schedule(static) reduction(+ : zero_count) if (rows >= 4)
    for (std::int64_t g = 0; g < rows; ++g) {
        for (std::size_t p = 0; p < probe.rows; ++p) {
            bool zero = false;
            sim.values(static_cast<std::size_t>(g), p) =
                cosine_entry(gallery.row_ptr(static_cast<std::size_t>(g)), probe.row_ptr(p),
                             gallery.cols, zero);
            if (zero) ++zero_count;
        }
    }
    sim.zero_norm_count = zero_count;
    return sim;
}

double rank1_accuracy(const SimilarityMatrix& sim) {
    const std::set<std::size_t> gallery_subjects(sim.gallery_labels.begin(),
                                                 sim.gallery_labels.end());
    for (std::size_t p : sim.probe_labels)
        if (!gallery_subjects.count(p))
            throw std::invalid_argument("rank1_accuracy: probe subject " + std::to_string(p) +
                                        " absent from gallery");
    std::size_t hits = 0;
    for (std::size_t p = 0; p < sim.probe_labels.size(); ++p) {
        std::size_t best = 0;
        for (std::size_t g = 1; g < sim.gallery_labels.size(); ++g)
            if (sim.values(g, p) > sim.values(best, p)) best = g;
        if (sim.gallery_labels[best] == sim.probe_labels[p]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(sim.probe_labels.size());
}

std::pair<std::vector<RocPoint>, std::map<double, double>> roc_and_vr(
    const SimilarityMatrix& sim, const std::vector<double>& far_targets) {
    std::vector<double> genuine, impostor;
    for (std::size_t g = 0; g < sim.gallery_labels.size(); ++g)
        for (std::size_t p = 0; p < sim.probe_labels.size(); ++p)
            (sim.gallery_labels[g] == sim.probe_labels[p] ? genuine : impostor)
                .push_back(sim.values(g, p));
    if (genuine.empty() || impostor.empty())
        throw std::invalid_argument("roc_and_vr: need at least one genuine and one impostor pair");

    std::vector<double> thresholds;
    thresholds.reserve(genuine.size() + impostor.size());
    thresholds.insert(thresholds.end(), genuine.begin(), genuine.end());
    thresholds.insert(thresholds.end(), impostor.begin(), impostor.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::sort(genuine.begin(), genuine.end(), std::greater<>());
    std::sort(impostor.begin(), impostor.end(), std::greater<>());

    // accept when score >= threshold; descending thresholds make FAR ascending
    std::vector<RocPoint> roc;
    roc.reserve(thresholds.size());
    std::size_t gi = 0, ii = 0;
    for (double th : thresholds) {
        while (gi < genuine.size() && genuine[gi] >= th) ++gi;
        while (ii < impostor.size() && impostor[ii] >= th) ++ii;
        roc.push_back({static_cast<double>(ii) / static_cast<double>(impostor.size()),
                       static_cast<double>(gi) / static_cast<double>(genuine.size())});
    }

    std::map<double, double> vr_at_far;
    for (double target : far_targets) {
        double vr = 0.0;  // the above-all-scores threshold: FAR 0, VR 0
        for (const RocPoint& pt : roc) {
            if (pt.far > target) break;
            vr = pt.vr;
        }
        vr_at_far[target] = vr;
    }
    return {std::move(roc), std::move(vr_at_far)};
}

EvalReport evaluate(const SimilarityMatrix& sim, const std::vector<double>& far_targets) {
    EvalReport rep;
    rep.rank1 = rank1_accuracy(sim);
    auto [roc, vr] = roc_and_vr(sim, far_targets);
    rep.roc = std::move(roc);
    rep.vr_at_far = std::move(vr);
    rep.gallery_count = sim.gallery_labels.size();
    rep.probe_count = sim.probe_labels.size();
    for (std::size_t g = 0; g < sim.gallery_labels.size(); ++g)
        for (std::size_t p = 0; p < sim.probe_labels.size(); ++p)
            (sim.gallery_labels[g] == sim.probe_labels[p] ? rep.genuine_pairs
                                                          : rep.impostor_pairs) += 1;
    rep.zero_norm_count = sim.zero_norm_count;
    return rep;
}

Matrix correlation_diagnostic(const ClassifierParams& classifier) {
    const std::size_t c = classifier.nir.rows, q = classifier.nir.cols;
    Matrix m(2 * c, q);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < q; ++j) {
            m(i, j) = classifier.nir(i, j);
            m(c + i, j) = classifier.vis(i, j);
        }
    for (std::size_t i = 0; i < 2 * c; ++i) {
        double norm = 0.0;
        for (std::size_t j = 0; j < q; ++j) norm += m(i, j) * m(i, j);
        if (norm > 0.0) {
            const double inv = 1.0 / std::sqrt(norm);
            for (std::size_t j = 0; j < q; ++j) m(i, j) *= inv;
        }
    }
    return matmul(m, transpose(m));
}

double cross_block_diag_mean(const Matrix& corr) {
    const std::size_t c = corr.rows / 2;
    if (c == 0) throw std::invalid_argument("cross_block_diag_mean: empty correlation matrix");
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) sum += std::abs(corr(k, c + k));
    return sum / static_cast<double>(c);
}

std::string format_report(const EvalReport& rep) {
    std::ostringstream os;
    char buf[64];
    os << "gallery_count " << rep.gallery_count << "\n";
    os << "probe_count " << rep.probe_count << "\n";
    os << "genuine_pairs " << rep.genuine_pairs << "\n";
    os << "impostor_pairs " << rep.impostor_pairs << "\n";
    os << "zero_norm_embeddings " << rep.zero_norm_count << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", rep.rank1);
    os << "rank1 " << buf << "\n";
    for (const auto& [far, vr] : rep.vr_at_far) {
        std::snprintf(buf, sizeof(buf), "%g", far);
        os << "vr_at_far " << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", vr);
        os << " " << buf << "\n";
    }
    return os.str();
}

void write_report(const EvalReport& rep, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("write_report: cannot open " + path);
    const std::string text = format_report(rep);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
}

void write_roc_csv(const std::vector<RocPoint>& roc, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("write_roc_csv: cannot open " + path);
    std::fprintf(f, "far,vr\n");
    for (const RocPoint& pt : roc) std::fprintf(f, "%.17g,%.17g\n", pt.far, pt.vr);
    std::fclose(f);
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("write_matrix_csv: cannot open " + path);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j)
            std::fprintf(f, j ? ",%.17g" : "%.17g", m(i, j));
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

}  // namespace xmodal
