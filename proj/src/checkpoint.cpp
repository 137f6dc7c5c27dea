#include "xmodal/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xmodal {

namespace {

constexpr const char* kMagic = "xmodal-checkpoint";

void write_matrix(std::FILE* f, const std::string& name, const Matrix& m) {
    std::fprintf(f, "matrix %s %zu %zu\n", name.c_str(), m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j)
            std::fprintf(f, j ? " %.17g" : "%.17g", m(i, j));
        std::fprintf(f, "\n");
    }
}

void write_vector(std::FILE* f, const std::string& name, const std::vector<double>& v) {
    std::fprintf(f, "vector %s %zu\n", name.c_str(), v.size());
    for (std::size_t j = 0; j < v.size(); ++j)
        std::fprintf(f, j ? " %.17g" : "%.17g", v[j]);
    std::fprintf(f, "\n");
}

Matrix read_matrix(std::istream& in, const std::string& expect_name) {
    std::string kind, name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> kind >> name >> rows >> cols) || kind != "matrix" || name != expect_name)
        throw std::runtime_error("checkpoint: expected matrix " + expect_name + ", found " +
                                 kind + " " + name);
    Matrix m(rows, cols);
    for (double& v : m.data)
        if (!(in >> v)) throw std::runtime_error("checkpoint: truncated matrix " + expect_name);
    if (!m.all_finite())
        throw std::runtime_error("checkpoint: non-finite entry in matrix " + expect_name);
    return m;
}

std::vector<double> read_vector(std::istream& in, const std::string& expect_name) {
    std::string kind, name;
    std::size_t len = 0;
    if (!(in >> kind >> name >> len) || kind != "vector" || name != expect_name)
        throw std::runtime_error("checkpoint: expected vector " + expect_name + ", found " +
                                 kind + " " + name);
    std::vector<double> v(len);
    for (double& x : v)
        if (!(in >> x)) throw std::runtime_error("checkpoint: truncated vector " + expect_name);
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    std::fprintf(f, "%s %d\n", kMagic, ck.version);
    std::fprintf(f, "iteration %zu\n", ck.iteration);
    const std::string cfg = emit_config(ck.config);
    std::fprintf(f, "config %zu\n", cfg.size());
    std::fwrite(cfg.data(), 1, cfg.size(), f);
    std::fprintf(f, "layers %zu\n", ck.params.feature_net.layers.size());
    for (std::size_t l = 0; l < ck.params.feature_net.layers.size(); ++l) {
        const MaxoutLayer& layer = ck.params.feature_net.layers[l];
        const std::string base = "feature." + std::to_string(l) + ".";
        write_matrix(f, base + "slice_a", layer.slice_a);
        write_vector(f, base + "bias_a", layer.bias_a);
        write_matrix(f, base + "slice_b", layer.slice_b);
        write_vector(f, base + "bias_b", layer.bias_b);
    }
    write_matrix(f, "projection.shared", ck.params.projection.shared);
    write_matrix(f, "projection.unique_nir", ck.params.projection.unique_nir);
    write_matrix(f, "projection.unique_vis", ck.params.projection.unique_vis);
    write_matrix(f, "classifier.nir", ck.params.classifier.nir);
    write_matrix(f, "classifier.vis", ck.params.classifier.vis);
    std::fprintf(f, "end\n");
    std::fclose(f);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    Checkpoint ck;
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic)
        throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint file");
    if (version != ck.version)
        throw std::runtime_error("load_checkpoint: unsupported version " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(ck.version));
    std::string key;
    if (!(in >> key >> ck.iteration) || key != "iteration")
        throw std::runtime_error("load_checkpoint: missing iteration field");
    std::size_t cfg_len = 0;
    if (!(in >> key >> cfg_len) || key != "config")
        throw std::runtime_error("load_checkpoint: missing config block");
    in.get();  // newline after the length
    std::string cfg_text(cfg_len, '\0');
    in.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len));
    if (in.gcount() != static_cast<std::streamsize>(cfg_len))
        throw std::runtime_error("load_checkpoint: truncated config block");
    ck.config = parse_config(cfg_text);

    std::size_t layers = 0;
    if (!(in >> key >> layers) || key != "layers")
        throw std::runtime_error("load_checkpoint: missing layers count");
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string base = "feature." + std::to_string(l) + ".";
        MaxoutLayer layer;
        layer.slice_a = read_matrix(in, base + "slice_a");
        layer.bias_a = read_vector(in, base + "bias_a");
        layer.slice_b = read_matrix(in, base + "slice_b");
        layer.bias_b = read_vector(in, base + "bias_b");
        ck.params.feature_net.layers.push_back(std::move(layer));
    }
    ck.params.projection.shared = read_matrix(in, "projection.shared");
    ck.params.projection.unique_nir = read_matrix(in, "projection.unique_nir");
    ck.params.projection.unique_vis = read_matrix(in, "projection.unique_vis");
    ck.params.classifier.nir = read_matrix(in, "classifier.nir");
    ck.params.classifier.vis = read_matrix(in, "classifier.vis");
    if (!(in >> key) || key != "end")
        throw std::runtime_error("load_checkpoint: missing end marker");
    return ck;
}

}  // namespace xmodal
