#pragma once

#include <string>

#include "xmodal/model.hpp"
#include "xmodal/run_config.hpp"

namespace xmodal {

/// Text checkpoint: version, iteration count, config snapshot, every
/// parameter tensor at 17 significant digits. save(load(p)) is
/// byte-identical; a version mismatch is rejected on load.
struct Checkpoint {
    int version = 1;
    std::size_t iteration = 0;
    RunConfig config;
    ModelParams params;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace xmodal
