#pragma once

#include "mktcube/layers.hpp"
#include "mktcube/optim.hpp"
#include "mktcube/params.hpp"

#include <random>
#include <vector>

namespace mktcube::segnet {

/// Fully convolutional encoder-decoder over market images. The encoder pools
/// along the stock axis and stores the pooling indices; the decoder unpools
/// with those indices and densifies with trainable filter banks. Adaptive
/// average pooling onto a fixed grid before the bottleneck accepts images of
/// arbitrary stock counts while emitting fixed-size embeddings.
struct SegNetConfig {
    std::vector<int> channels = {16, 32, 64};
    int kernel_extent = 3;
    int pool_window = 2;
    int grid_rows = 32;
    int embedding_dim = 32;
};

struct Encoded {
    ad::TensorPtr embedding;
    std::vector<ad::PoolRecord> pool_records;  // one per encoder stage, in encoder order
    std::vector<ad::Index> pre_pool_rows;      // row count before each pool
    ad::Index input_rows = 0;
};

class SegNetModel {
public:
    SegNetModel(int n_indicators, const SegNetConfig& cfg, std::mt19937_64& init);

    /// Image must be (m, n) with m >= 2^stages.
    Encoded encode(const ad::TensorPtr& image);

    /// Reconstruction through the stored pooling indices; output shape equals
    /// the paired encode input's shape.
    ad::TensorPtr decode(const Encoded& enc);

    /// Decode with explicit parts, so tests can ablate the pool records.
    ad::TensorPtr decode(const ad::TensorPtr& embedding, const std::vector<ad::PoolRecord>& records,
                         const std::vector<ad::Index>& pre_pool_rows, ad::Index input_rows);

    ad::ParamMap& params() { return params_; }
    const SegNetConfig& config() const { return cfg_; }
    int indicators() const { return n_; }
    int stages() const { return static_cast<int>(cfg_.channels.size()); }

private:
    int n_;
    SegNetConfig cfg_;
    ad::ParamMap params_;
};

struct AutoencoderTrainConfig {
    int batch = 10;
    int epochs = 200;
    int patience = 20;
    double lr = 0.001;
    double clip = 5.0;
    std::uint64_t seed = 42;
};

struct AutoencoderOutcome {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;    // per epoch (train loss echoed when no val set)
    int best_epoch = -1;
    double best_val_loss = 0.0;
    ad::OptimizerState optimizer;
};

/// Minimizes mean per-pixel squared reconstruction error with Adam and
/// global-norm clipping; early-stops on the validation images when provided.
/// Best parameters are restored into the model.
AutoencoderOutcome train_autoencoder(SegNetModel& model, const std::vector<ad::TensorPtr>& train_images,
                                     const std::vector<ad::TensorPtr>& val_images,
                                     const AutoencoderTrainConfig& cfg);

/// Mean per-pixel squared reconstruction error over a set of images.
double reconstruction_mse(SegNetModel& model, const std::vector<ad::TensorPtr>& images);

} // namespace mktcube::segnet
