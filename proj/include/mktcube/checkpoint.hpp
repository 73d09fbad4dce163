#pragma once

#include "mktcube/optim.hpp"
#include "mktcube/params.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mktcube::ad {

/// Per-indicator min/max fitted on the training period, carried inside every
/// checkpoint so evaluation normalizes exactly as training did.
struct NormStatsBlob {
    std::vector<std::string> names;
    std::vector<double> mins;
    std::vector<double> maxs;
};

/// Everything needed to resume or evaluate a trained model: named parameters,
/// optimizer state, and normalization statistics.
struct Checkpoint {
    std::string model_kind;
    std::vector<std::pair<std::string, std::vector<Index>>> param_shapes;
    std::vector<Array> param_data;
    std::optional<OptimizerState> optimizer;
    std::optional<NormStatsBlob> norm_stats;

    static Checkpoint from(const std::string& model_kind, const ParamMap& params,
                           const OptimizerState* optimizer, const NormStatsBlob* stats);

    /// Copies stored values into an existing ParamMap (names and shapes must match).
    void restore_into(ParamMap& params) const;
};

/// Binary format: magic "MKTC", version u32, named parameter blobs
/// (length-prefixed name, shape, little-endian 64-bit floats), optimizer
/// state, normalization statistics. Round trips bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

} // namespace mktcube::ad
