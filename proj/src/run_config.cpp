#include "xmodal/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace xmodal {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoull(item));
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// One table drives both emit and parse so the two cannot drift apart.
struct Field {
    std::string section, key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        auto add_u64 = [&](const std::string& sec, const std::string& key,
                           std::uint64_t RunConfig::* member) {
            f.push_back({sec, key,
                         [member](const RunConfig& c) { return std::to_string(c.*member); },
                         [member](RunConfig& c, const std::string& v) { c.*member = std::stoull(v); }});
        };
        auto add_size = [&](const std::string& sec, const std::string& key,
                            std::size_t RunConfig::* member) {
            f.push_back({sec, key,
                         [member](const RunConfig& c) { return std::to_string(c.*member); },
                         [member](RunConfig& c, const std::string& v) { c.*member = std::stoull(v); }});
        };
        auto add_double = [&](const std::string& sec, const std::string& key,
                              double RunConfig::* member) {
            f.push_back({sec, key,
                         [member](const RunConfig& c) { return fmt_double(c.*member); },
                         [member](RunConfig& c, const std::string& v) { c.*member = std::stod(v); }});
        };
        auto add_bool = [&](const std::string& sec, const std::string& key,
                            bool RunConfig::* member) {
            f.push_back({sec, key,
                         [member](const RunConfig& c) { return c.*member ? "true" : "false"; },
                         [member](RunConfig& c, const std::string& v) {
                             if (v == "true") {
                                 c.*member = true;
                             } else if (v == "false") {
                                 c.*member = false;
                             } else {
                                 throw std::invalid_argument("config: bad bool '" + v + "'");
                             }
                         }});
        };
        auto add_string = [&](const std::string& sec, const std::string& key,
                              std::string RunConfig::* member) {
            f.push_back({sec, key, [member](const RunConfig& c) { return c.*member; },
                         [member](RunConfig& c, const std::string& v) { c.*member = v; }});
        };

        add_u64("run", "seed", &RunConfig::seed);
        add_size("data", "num_subjects", &RunConfig::num_subjects);
        add_size("data", "nir_per_subject", &RunConfig::nir_per_subject);
        add_size("data", "vis_per_subject", &RunConfig::vis_per_subject);
        add_size("data", "latent_dim", &RunConfig::latent_dim);
        add_size("data", "input_dim", &RunConfig::input_dim);
        add_double("data", "within_class_noise", &RunConfig::within_class_noise);
        add_double("data", "modality_gap_strength", &RunConfig::modality_gap_strength);
        add_bool("data", "shared_modality_map", &RunConfig::shared_modality_map);
        add_double("data", "test_fraction", &RunConfig::test_fraction);
        f.push_back({"model", "hidden",
                     [](const RunConfig& c) { return fmt_sizes(c.hidden); },
                     [](RunConfig& c, const std::string& v) { c.hidden = parse_sizes(v); }});
        add_size("model", "feature_dim", &RunConfig::feature_dim);
        add_size("model", "proj_dim", &RunConfig::proj_dim);
        add_size("train", "iterations", &RunConfig::iterations);
        add_size("train", "subjects_per_batch", &RunConfig::subjects_per_batch);
        add_size("train", "samples_per_subject", &RunConfig::samples_per_subject);
        add_double("train", "lr_initial", &RunConfig::lr_initial);
        add_double("train", "lr_final", &RunConfig::lr_final);
        add_double("train", "cls_weight", &RunConfig::cls_weight);
        add_double("train", "dist_weight", &RunConfig::dist_weight);
        add_double("train", "lowrank_weight", &RunConfig::lowrank_weight);
        add_double("train", "ortho_nir", &RunConfig::ortho_nir);
        add_double("train", "ortho_vis", &RunConfig::ortho_vis);
        add_double("train", "w2_epsilon", &RunConfig::w2_epsilon);
        add_size("train", "log_interval", &RunConfig::log_interval);
        add_string("paths", "out_dir", &RunConfig::out_dir);
        add_string("paths", "dataset_file", &RunConfig::dataset_file);
        add_string("paths", "split_file", &RunConfig::split_file);
        add_string("paths", "checkpoint_file", &RunConfig::checkpoint_file);
        add_string("paths", "log_file", &RunConfig::log_file);
        add_string("paths", "report_file", &RunConfig::report_file);
        add_string("paths", "roc_file", &RunConfig::roc_file);
        add_string("paths", "corr_file", &RunConfig::corr_file);
        return f;
    }();
    return table;
}

}  // namespace

std::string emit_config(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const Field& f : fields()) {
        if (f.section != section) {
            if (!out.empty()) out += "\n";
            out += "[" + f.section + "]\n";
            section = f.section;
        }
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, const Field*> by_key;
    for (const Field& f : fields()) by_key[f.section + "." + f.key] = &f;

    std::stringstream ss(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value, got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto it = by_key.find(section + "." + key);
        if (it == by_key.end())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "' in section [" + section +
                                        "]");
        it->second->set(cfg, value);
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

GenConfig RunConfig::gen_config() const {
    GenConfig g;
    g.num_subjects = num_subjects;
    g.nir_per_subject = nir_per_subject;
    g.vis_per_subject = vis_per_subject;
    g.latent_dim = latent_dim;
    g.input_dim = input_dim;
    g.within_class_noise = within_class_noise;
    g.modality_gap_strength = modality_gap_strength;
    g.shared_modality_map = shared_modality_map;
    g.seed = seed;
    return g;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.seed = seed;
    t.iterations = iterations;
    t.subjects_per_batch = subjects_per_batch;
    t.samples_per_subject = samples_per_subject;
    t.lr_initial = lr_initial;
    t.lr_final = lr_final;
    t.weights.cls_weight = cls_weight;
    t.weights.dist_weight = dist_weight;
    t.weights.lowrank_weight = lowrank_weight;
    t.weights.ortho_nir = ortho_nir;
    t.weights.ortho_vis = ortho_vis;
    t.w2.epsilon = w2_epsilon;
    t.arch.input_dim = input_dim;
    t.arch.hidden = hidden;
    t.arch.feature_dim = feature_dim;
    t.arch.proj_dim = proj_dim;
    t.log_interval = log_interval;
    return t;
}

std::string RunConfig::path(const std::string& file) const {
    if (!file.empty() && file.front() == '/') return file;
    return out_dir + "/" + file;
}

}  // namespace xmodal
