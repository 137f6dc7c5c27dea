#include "xmodal/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <set>

#include "xmodal/checkpoint.hpp"
#include "xmodal/eval.hpp"
#include "xmodal/gradcheck.hpp"
#include "xmodal/trainer.hpp"

namespace xmodal {

namespace {

void ensure_out_dir(const RunConfig& cfg) {
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
}

}  // namespace

int cmd_gen_data(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const Dataset ds = generate(cfg.gen_config());
    // the split draws from its own stream so dataset bytes do not depend on it
    Rng split_rng(cfg.seed ^ 0x73706C6974ULL);
    ProtocolSplit sp = split(ds, cfg.test_fraction, split_rng);
    check_split(ds, sp);
    write_dataset(ds, cfg.path(cfg.dataset_file));
    write_split(sp, cfg.path(cfg.split_file));

    std::set<std::size_t> subjects;
    for (const Sample& s : ds.samples) subjects.insert(s.subject_id);
    std::printf("dataset: %zu subjects, %zu samples -> %s\n", subjects.size(),
                ds.samples.size(), cfg.path(cfg.dataset_file).c_str());
    std::printf("split: %zu train samples, %zu gallery, %zu probe -> %s\n",
                sp.train_idx.size(), sp.gallery_idx.size(), sp.probe_idx.size(),
                cfg.path(cfg.split_file).c_str());
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const Dataset ds = read_dataset(cfg.path(cfg.dataset_file));
    const ProtocolSplit sp = read_split(cfg.path(cfg.split_file));
    check_split(ds, sp);

    TrainConfig tc = cfg.train_config();
    tc.log_path = cfg.path(cfg.log_file);
    const TrainResult result = train(ds, sp, tc);

    Checkpoint ck;
    ck.iteration = tc.iterations;
    ck.config = cfg;
    ck.params = result.params;
    save_checkpoint(ck, cfg.path(cfg.checkpoint_file));

    std::printf("trained %zu iterations on %zu classes -> %s\n", tc.iterations,
                result.classes.subjects.size(), cfg.path(cfg.checkpoint_file).c_str());
    if (!result.log.empty()) {
        const TrainLogRecord& first = result.log.front();
        const TrainLogRecord& last = result.log.back();
        std::printf("total %.6g -> %.6g, heldout_w2 %.6g -> %.6g\n", first.breakdown.total,
                    last.breakdown.total, first.heldout_w2, last.heldout_w2);
    }
    return 0;
}

int cmd_eval(const RunConfig& cfg, bool want_corr) {
    ensure_out_dir(cfg);
    const Dataset ds = read_dataset(cfg.path(cfg.dataset_file));
    const ProtocolSplit sp = read_split(cfg.path(cfg.split_file));
    check_split(ds, sp);
    const Checkpoint ck = load_checkpoint(cfg.path(cfg.checkpoint_file));

    const Embeddings embeds = embed_gallery_probe(ds, sp, ck.params);
    const SimilarityMatrix sim = cosine_similarity_matrix(embeds.gallery, embeds.gallery_labels,
                                                          embeds.probe, embeds.probe_labels);
    const EvalReport report = evaluate(sim, {1e-2, 1e-3});
    write_report(report, cfg.path(cfg.report_file));
    write_roc_csv(report.roc, cfg.path(cfg.roc_file));
    if (want_corr)
        write_matrix_csv(correlation_diagnostic(ck.params.classifier), cfg.path(cfg.corr_file));

    std::fputs(format_report(report).c_str(), stdout);
    return 0;
}

int cmd_grad_check(const RunConfig& cfg, const std::string& mutation_name) {
    const Mutation mutation = parse_mutation(mutation_name);
    const std::vector<SuiteResult> results = run_all_checks(cfg.seed, mutation);
    bool all_pass = true;
    for (const SuiteResult& r : results) {
        std::printf("%-24s %s  worst_rel_err %.3e (tol %.0e, %zu checked, %zu skipped)\n",
                    r.name.c_str(), r.pass ? "PASS" : "FAIL", r.worst_rel_err, r.tolerance,
                    r.checked, r.skipped);
        all_pass = all_pass && r.pass;
    }
    if (!all_pass) {
        std::printf("grad-check: FAILED\n");
        return 2;
    }
    std::printf("grad-check: all suites passed\n");
    return 0;
}

int cmd_inspect_corr(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    const Checkpoint ck = load_checkpoint(cfg.path(cfg.checkpoint_file));
    const Matrix corr = correlation_diagnostic(ck.params.classifier);
    write_matrix_csv(corr, cfg.path(cfg.corr_file));
    std::printf("correlation matrix %zux%zu -> %s\n", corr.rows, corr.cols,
                cfg.path(cfg.corr_file).c_str());
    std::printf("cross_block_diag_mean %.17g\n", cross_block_diag_mean(corr));
    return 0;
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"cross-modal embedding trainer with distribution alignment"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false, out_set = false;
    app.add_option("--config", config_path, "configuration file (key = value sections)");
    auto* seed_opt = app.add_option("--seed", seed, "override the run seed");
    auto* out_opt = app.add_option("--out", out_dir, "override the output directory");

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset and split");
    gen->fallthrough();
    auto* train_cmd = app.add_subcommand("train", "train on an existing dataset and split");
    train_cmd->fallthrough();
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the gallery/probe split");
    eval_cmd->fallthrough();
    bool want_corr = false;
    eval_cmd->add_flag("--corr", want_corr, "also write the classifier correlation CSV");
    auto* grad = app.add_subcommand("grad-check", "run the finite-difference gradient suites");
    grad->fallthrough();
    std::string mutation;
    grad->add_option("--mutate", mutation, "inject a deliberate defect (w2-sign-flip)");
    auto* corr_cmd = app.add_subcommand("inspect-corr", "write the classifier correlation CSV");
    corr_cmd->fallthrough();

    std::vector<const char*> argv;
    argv.push_back("xmodal");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    seed_set = seed_opt->count() > 0;
    out_set = out_opt->count() > 0;

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (seed_set) cfg.seed = seed;
        if (out_set) cfg.out_dir = out_dir;

        if (gen->parsed()) return cmd_gen_data(cfg);
        if (train_cmd->parsed()) return cmd_train(cfg);
        if (eval_cmd->parsed()) return cmd_eval(cfg, want_corr);
        if (grad->parsed()) return cmd_grad_check(cfg, mutation);
        if (corr_cmd->parsed()) return cmd_inspect_corr(cfg);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace xmodal
