#pragma once

#include "mktcube/config.hpp"

namespace mktcube::harness {

/// Exit codes: 0 success, 1 config error, 2 missing input, 3 numerical failure.
int cmd_synth(const Config& cfg);
int cmd_build_images(const Config& cfg);
int cmd_train(const Config& cfg);
int cmd_evaluate(const Config& cfg);
int cmd_embed(const Config& cfg);
int cmd_compare_pca(const Config& cfg);
int cmd_benchmark(const Config& cfg);

/// `mktcube <command> --config <path> [--set key=value ...]`
int run_cli(int argc, char** argv);

/// MKTCUBE_THREADS, default 1.
int worker_threads();

} // namespace mktcube::harness
