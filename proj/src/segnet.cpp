#include "mktcube/segnet.hpp"

#include "mktcube/errors.hpp"
#include "mktcube/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mktcube::segnet {

using namespace mktcube::ad;

namespace {
constexpr double kInitLo = -0.1;
constexpr double kInitHi = 0.1;
} // namespace

SegNetModel::SegNetModel(int n_indicators, const SegNetConfig& cfg, std::mt19937_64& init)
    : n_(n_indicators), cfg_(cfg) {
    if (cfg.channels.empty()) throw std::invalid_argument("SegNetModel: need at least one encoder stage");
    if (cfg.embedding_dim <= 0 || cfg.grid_rows <= 0) {
        throw std::invalid_argument("SegNetModel: embedding_dim and grid_rows must be positive");
    }
    int in_ch = n_;
    for (std::size_t s = 0; s < cfg.channels.size(); ++s) {
        int out_ch = cfg.channels[s];
        std::string tag = "enc" + std::to_string(s);
        params_.add(tag + ".kernels", uniform({out_ch, cfg.kernel_extent, in_ch}, kInitLo, kInitHi, init));
        params_.add(tag + ".bias", uniform({out_ch}, kInitLo, kInitHi, init));
        in_ch = out_ch;
    }
    const int c_last = cfg.channels.back();
    const Index flat = static_cast<Index>(cfg.grid_rows) * c_last;
    params_.add("bottleneck.w", uniform({cfg.embedding_dim, flat}, kInitLo, kInitHi, init));
    params_.add("bottleneck.b", uniform({cfg.embedding_dim}, kInitLo, kInitHi, init));
    params_.add("expand.w", uniform({flat, cfg.embedding_dim}, kInitLo, kInitHi, init));
    params_.add("expand.b", uniform({flat}, kInitLo, kInitHi, init));
    for (int s = static_cast<int>(cfg.channels.size()) - 1; s >= 0; --s) {
        int from_ch = cfg.channels[static_cast<std::size_t>(s)];
        int to_ch = s == 0 ? n_ : cfg.channels[static_cast<std::size_t>(s - 1)];
        std::string tag = "dec" + std::to_string(s);
        params_.add(tag + ".kernels", uniform({to_ch, cfg.kernel_extent, from_ch}, kInitLo, kInitHi, init));
        params_.add(tag + ".bias", uniform({to_ch}, kInitLo, kInitHi, init));
    }
}

Encoded SegNetModel::encode(const TensorPtr& image) {
    if (image->rank() != 2 || image->shape[1] != n_) {
        throw std::invalid_argument("SegNetModel::encode: image must be (m, " + std::to_string(n_) + "), got " +
                                    shape_str(image->shape));
    }
    const Index m = image->shape[0];
    Index min_rows = 1;
    for (std::size_t s = 0; s < cfg_.channels.size(); ++s) min_rows *= cfg_.pool_window;
    if (m < min_rows) {
        throw std::invalid_argument("SegNetModel::encode: " + std::to_string(m) + " stock rows cannot survive " +
                                    std::to_string(cfg_.channels.size()) + " pooling stages (need >= " +
                                    std::to_string(min_rows) + ")");
    }

    Encoded enc;
    enc.input_rows = m;
    TensorPtr x = image;
    for (std::size_t s = 0; s < cfg_.channels.size(); ++s) {
        std::string tag = "enc" + std::to_string(s);
        x = relu(conv1d_rows(x, params_.get(tag + ".kernels"), params_.get(tag + ".bias")));
        enc.pre_pool_rows.push_back(x->shape[0]);
        PoolRecord rec = maxpool_with_indices(x, cfg_.pool_window, 0);
        x = rec.output;
        enc.pool_records.push_back(std::move(rec));
    }
    x = adaptive_avg_rows(x, cfg_.grid_rows);
    x = reshape(x, {static_cast<Index>(cfg_.grid_rows) * cfg_.channels.back()});
    enc.embedding = add(matvec(params_.get("bottleneck.w"), x), params_.get("bottleneck.b"));
    return enc;
}

TensorPtr SegNetModel::decode(const Encoded& enc) {
    return decode(enc.embedding, enc.pool_records, enc.pre_pool_rows, enc.input_rows);
}

TensorPtr SegNetModel::decode(const TensorPtr& embedding, const std::vector<PoolRecord>& records,
                              const std::vector<Index>& pre_pool_rows, Index input_rows) {
    const int stages = static_cast<int>(cfg_.channels.size());
    if (static_cast<int>(records.size()) != stages || static_cast<int>(pre_pool_rows.size()) != stages) {
        throw std::invalid_argument("SegNetModel::decode: expected " + std::to_string(stages) +
                                    " pool records, got " + std::to_string(records.size()));
    }
    if (embedding->size() != cfg_.embedding_dim) {
        throw std::invalid_argument("SegNetModel::decode: embedding length mismatch");
    }
    TensorPtr x = relu(add(matvec(params_.get("expand.w"), embedding), params_.get("expand.b")));
    x = reshape(x, {static_cast<Index>(cfg_.grid_rows), cfg_.channels.back()});
    // Back to the last pooled row count, then unpool/conv through the stages.
    Index pooled_rows = records.back().output->shape[0];
    x = adaptive_expand_rows(x, pooled_rows);
    for (int s = stages - 1; s >= 0; --s) {
        const PoolRecord& rec = records[static_cast<std::size_t>(s)];
        if (x->shape != rec.output->shape) {
            throw std::invalid_argument("SegNetModel::decode: stage " + std::to_string(s) +
                                        " feature map does not match its pool record");
        }
        x = unpool_like(x, rec, pre_pool_rows[static_cast<std::size_t>(s)]);
        std::string tag = "dec" + std::to_string(s);
        x = conv1d_rows(x, params_.get(tag + ".kernels"), params_.get(tag + ".bias"));
        if (s != 0) x = relu(x);
        if (s > 0) {
            // Row count must match the next record's pooled output.
            Index want = records[static_cast<std::size_t>(s - 1)].output->shape[0];
            if (x->shape[0] != want) {
                throw std::invalid_argument("SegNetModel::decode: row count mismatch between stages");
            }
        }
    }
    if (x->shape[0] != input_rows) {
        throw std::invalid_argument("SegNetModel::decode: reconstruction rows diverged from the input");
    }
    return x;
}

AutoencoderOutcome train_autoencoder(SegNetModel& model, const std::vector<TensorPtr>& train_images,
                                     const std::vector<TensorPtr>& val_images, const AutoencoderTrainConfig& cfg) {
    if (train_images.empty()) throw std::invalid_argument("train_autoencoder: no training images");
    AutoencoderOutcome out;
    std::vector<TensorPtr> params = model.params().tensors();
    out.optimizer = OptimizerState::for_params(params, cfg.lr);
    out.best_val_loss = std::numeric_limits<double>::infinity();

    std::vector<Array> best;
    auto snapshot = [&]() {
        best.clear();
        for (const auto& p : params) best.push_back(p->data);
    };

    auto shuffle_rng = rng::stream(cfg.seed, "segnet:shuffle");
    std::vector<std::size_t> order(train_images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto image_loss = [&](const TensorPtr& img) {
        Encoded enc = model.encode(img);
        TensorPtr rec = model.decode(enc);
        TensorPtr diff = sub(rec, img);
        return mean(mul(diff, diff));
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double acc = 0.0;
        int batch_index = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch), ++batch_index) {
            std::size_t hi = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch));
            std::vector<TensorPtr> losses;
            losses.reserve(hi - pos);
            for (std::size_t k = pos; k < hi; ++k) losses.push_back(image_loss(train_images[order[k]]));
            TensorPtr loss = mean(concat(losses));
            if (!std::isfinite(loss->value())) {
                throw NumericalError("train_autoencoder: non-finite loss at epoch " + std::to_string(epoch) +
                                     " batch " + std::to_string(batch_index));
            }
            acc += loss->value() * static_cast<double>(hi - pos);
            zero_grads(params);
            backward(loss);
            clip_global_norm(params, cfg.clip);
            adam_step(params, out.optimizer);
        }
        double train_loss = acc / static_cast<double>(train_images.size());
        out.train_loss.push_back(train_loss);

        double val_loss = train_loss;
        if (!val_images.empty()) {
            val_loss = reconstruction_mse(model, val_images);
        }
        out.val_loss.push_back(val_loss);
        if (val_loss < out.best_val_loss) {
            out.best_val_loss = val_loss;
            out.best_epoch = epoch;
            snapshot();
        }
        if (epoch - out.best_epoch >= cfg.patience) break;
    }
    if (!best.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->data = best[i];
    }
    return out;
}

double reconstruction_mse(SegNetModel& model, const std::vector<TensorPtr>& images) {
    if (images.empty()) throw std::invalid_argument("reconstruction_mse: no images");
    double acc = 0.0;
    for (const auto& img : images) {
        Encoded enc = model.encode(img);
        TensorPtr rec = model.decode(enc);
        acc += (rec->data - img->data).square().mean();
    }
    return acc / static_cast<double>(images.size());
}

} // namespace mktcube::segnet
