#pragma once

#include "mktcube/params.hpp"
#include "mktcube/tensor.hpp"

#include <cstdint>
#include <vector>

namespace mktcube::ad {

/// Adam state: one first- and second-moment buffer per parameter, shape-matched,
/// plus the shared step counter and hyperparameters.
struct OptimizerState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<Array> m;
    std::vector<Array> v;

    static OptimizerState for_params(const std::vector<TensorPtr>& params, double lr = 0.001);
};

/// Global L2 norm over all parameter gradients; when it exceeds max_norm every
/// gradient is scaled by max_norm / norm. Returns the pre-clip norm.
double clip_global_norm(const std::vector<TensorPtr>& params, double max_norm = 5.0);

/// Bias-corrected Adam update reading each parameter's grad buffer. An empty
/// grad buffer counts as an all-zero gradient.
void adam_step(const std::vector<TensorPtr>& params, OptimizerState& state);

} // namespace mktcube::ad
