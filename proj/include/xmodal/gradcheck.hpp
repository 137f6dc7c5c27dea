#pragma once

#include <string>

#include "xmodal/losses.hpp"

namespace xmodal {

/// Deliberate defects for the mutation-test mode of grad-check: each one
/// must make its suite fail, proving the finite-difference net catches it.
enum class Mutation { none, w2_sign_flip };

Mutation parse_mutation(const std::string& name);

struct SuiteResult {
    std::string name;
    double worst_rel_err = 0.0;
    double tolerance = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // entries below the comparison floor
    bool pass = false;
};

/// Analytic batch gradients vs central finite differences of the simplified
/// Wasserstein distance. Batches are drawn with every per-dimension std
/// comfortably above the epsilon-stabilization scale.
SuiteResult check_w2_gradients(std::uint64_t seed, std::size_t trials,
                               Mutation mutation = Mutation::none);

/// u*vt vs finite differences of the singular-value sum, on full-rank
/// matrices with singular-value gaps above 1e-3.
SuiteResult check_nuclear_subgradient(std::uint64_t seed, std::size_t trials);

/// The penalty gradients follow the half-gradient convention (lambda
/// absorbs the analytic factor 2), so the suite checks grad == FD/2.
SuiteResult check_ortho_gradients(std::uint64_t seed, std::size_t trials);

SuiteResult check_softmax_gradient(std::uint64_t seed, std::size_t trials);

/// Selector-routed maxout gradient vs finite differences of sum(y);
/// layers with a unit within 1e-6 of a tie are redrawn.
SuiteResult check_maxout_routing(std::uint64_t seed, std::size_t trials);

/// Whole-model sweep: every assembled parameter gradient of the batch
/// objective vs central finite differences on random tiny models. The
/// differentiated scalar weights the subspace penalty by one half to match
/// the half-gradient convention of ortho_penalty.
struct ModelSweepResult {
    std::size_t params_checked = 0;
    std::size_t failures = 0;            // entries off by more than the tolerance
    std::size_t unexcused_failures = 0;  // failures with no maxout tie crossing nearby
    double worst_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;  // failures <= 1% and all of them tie-related
};
ModelSweepResult check_model_gradients(std::uint64_t seed, std::size_t models);

/// Every suite at its default trial count; the mutation, when set, is
/// injected into the suite it targets.
std::vector<SuiteResult> run_all_checks(std::uint64_t seed, Mutation mutation = Mutation::none);

}  // namespace xmodal
