// Times the OpenMP kernels against their serial references and checks the
// outputs stay bit-identical.

#include <chrono>
#include <cstdio>

#include "xmodal/eval.hpp"
#include "xmodal/matrix.hpp"
#include "xmodal/model.hpp"

using namespace xmodal;

namespace {

template <typename F>
double time_ms(F&& fn, int reps) {
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void bench_matmul(Rng& rng, std::size_t n, int reps) {
    const Matrix a = uniform_fill(rng, n, n, 1.0);
    const Matrix b = uniform_fill(rng, n, n, 1.0);
    const double serial = time_ms([&] { matmul_serial(a, b); }, reps);
    const double parallel = time_ms([&] { matmul(a, b); }, reps);
    const bool identical = matmul_serial(a, b) == matmul(a, b);
    std::printf("matmul %4zux%-4zu  serial %8.2f ms  parallel %8.2f ms  speedup %.2fx  %s\n",
                n, n, serial, parallel, serial / parallel,
                identical ? "bit-identical" : "MISMATCH");
}

void bench_similarity(Rng& rng, std::size_t gallery, std::size_t probe, std::size_t dim,
                      int reps) {
    const Matrix g = uniform_fill(rng, gallery, dim, 1.0);
    const Matrix p = uniform_fill(rng, probe, dim, 1.0);
    std::vector<std::size_t> glabels(gallery), plabels(probe);
    for (std::size_t i = 0; i < gallery; ++i) glabels[i] = i;
    for (std::size_t i = 0; i < probe; ++i) plabels[i] = i % gallery;
    const double serial =
        time_ms([&] { cosine_similarity_matrix_serial(g, glabels, p, plabels); }, reps);
    const double parallel =
        time_ms([&] { cosine_similarity_matrix(g, glabels, p, plabels); }, reps);
    const bool identical = cosine_similarity_matrix_serial(g, glabels, p, plabels).values ==
                           cosine_similarity_matrix(g, glabels, p, plabels).values;
    std::printf("similarity %4zux%-5zu d=%-3zu serial %8.2f ms  parallel %8.2f ms  "
                "speedup %.2fx  %s\n",
                gallery, probe, dim, serial, parallel, serial / parallel,
                identical ? "bit-identical" : "MISMATCH");
}

void bench_forward(Rng& rng, std::size_t batch, int reps) {
    ModelConfig cfg;
    cfg.input_dim = 32;
    cfg.hidden = {64};
    cfg.feature_dim = 64;
    cfg.proj_dim = 64;
    cfg.num_classes = 40;
    const ModelParams params = init_params(cfg, rng);
    std::vector<std::vector<double>> inputs(batch, std::vector<double>(cfg.input_dim));
    std::vector<Modality> modalities(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        for (double& v : inputs[i]) v = rng.next_symmetric(1.0);
        modalities[i] = i % 2 ? Modality::VIS : Modality::NIR;
    }
    const double serial = time_ms(
        [&] {
            for (std::size_t i = 0; i < batch; ++i) forward(inputs[i], params, modalities[i]);
        },
        reps);
    const double parallel = time_ms([&] { forward_batch(inputs, modalities, params); }, reps);
    std::printf("forward batch=%-5zu       serial %8.2f ms  parallel %8.2f ms  speedup %.2fx\n",
                batch, serial, parallel, serial / parallel);
}

}  // namespace

int main() {
    Rng rng(7);
    bench_matmul(rng, 128, 20);
    bench_matmul(rng, 256, 10);
    bench_matmul(rng, 512, 3);
    bench_similarity(rng, 400, 2000, 64, 5);
    bench_similarity(rng, 800, 4000, 32, 3);
    bench_forward(rng, 64, 50);
    bench_forward(rng, 1024, 5);
    return 0;
}
