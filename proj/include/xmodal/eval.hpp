#pragma once

#include <map>

#include "xmodal/datagen.hpp"
#include "xmodal/model.hpp"

namespace xmodal {

struct Embeddings {
    Matrix gallery;  // one row per gallery sample, d/2 columns
    Matrix probe;
    std::vector<std::size_t> gallery_labels;
    std::vector<std::size_t> probe_labels;
};

/// Shared-subspace embeddings of the gallery and probe samples, each routed
/// through its own modality channel (the shared map is common to both).
Embeddings embed_gallery_probe(const Dataset& dataset, const ProtocolSplit& split,
                               const ModelParams& params);

struct SimilarityMatrix {
    Matrix values;  // gallery_count x probe_count, cosine
    std::vector<std::size_t> gallery_labels;
    std::vector<std::size_t> probe_labels;
    std::size_t zero_norm_count = 0;  // embeddings scored as 0 similarity
};

/// Cosine similarities, OpenMP over gallery rows; bit-identical to the
/// serial reference at any thread count.
SimilarityMatrix cosine_similarity_matrix(const Matrix& gallery,
                                          const std::vector<std::size_t>& gallery_labels,
                                          const Matrix& probe,
                                          const std::vector<std::size_t>& probe_labels);

/// Serial reference kept for tests and the kernel benchmark.
SimilarityMatrix cosine_similarity_matrix_serial(const Matrix& gallery,
                                                 const std::vector<std::size_t>& gallery_labels,
                                                 const Matrix& probe,
                                                 const std::vector<std::size_t>& probe_labels);

/// Fraction of probes whose best gallery match shares their subject.
/// Ties break toward the lowest gallery index.
double rank1_accuracy(const SimilarityMatrix& sim);

struct RocPoint {
    double far = 0.0;
    double vr = 0.0;
};

struct EvalReport {
    double rank1 = 0.0;
    std::vector<RocPoint> roc;  // swept over all distinct thresholds, FAR ascending
    std::map<double, double> vr_at_far;
    std::size_t gallery_count = 0;
    std::size_t probe_count = 0;
    std::size_t genuine_pairs = 0;
    std::size_t impostor_pairs = 0;
    std::size_t zero_norm_count = 0;
};

/// ROC sweep over every distinct score threshold. The verification rate at a
/// FAR target is taken at the smallest threshold whose FAR does not exceed
/// the target; no interpolation.
std::pair<std::vector<RocPoint>, std::map<double, double>> roc_and_vr(
    const SimilarityMatrix& sim, const std::vector<double>& far_targets);

EvalReport evaluate(const SimilarityMatrix& sim, const std::vector<double>& far_targets);

/// Row-normalized correlation of the stacked classifier: m_hat * m_hat^T,
/// 2c-by-2c. The top-right block compares per-class NIR rows with VIS rows.
Matrix correlation_diagnostic(const ClassifierParams& classifier);

/// Mean |diagonal| of the top-right c-by-c block of the correlation matrix.
double cross_block_diag_mean(const Matrix& corr);

std::string format_report(const EvalReport& report);
void write_report(const EvalReport& report, const std::string& path);
void write_roc_csv(const std::vector<RocPoint>& roc, const std::string& path);
void write_matrix_csv(const Matrix& m, const std::string& path);

}  // namespace xmodal
