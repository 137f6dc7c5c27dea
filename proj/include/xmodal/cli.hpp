#pragma once

#include <string>
#include <vector>

#include "xmodal/run_config.hpp"

namespace xmodal {

/// Exit codes: 0 success, 1 usage error, 2 runtime/numeric failure.
int cmd_gen_data(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg, bool want_corr);
int cmd_grad_check(const RunConfig& cfg, const std::string& mutation);
int cmd_inspect_corr(const RunConfig& cfg);

/// Full argument parsing and dispatch; what main() calls.
int run_cli(const std::vector<std::string>& args);

}  // namespace xmodal
