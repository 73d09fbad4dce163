#include "mktcube/models.hpp"

#include <stdexcept>

namespace mktcube::models {

using namespace mktcube::ad;

namespace {

constexpr double kInitLo = -0.1;
constexpr double kInitHi = 0.1;  // uniform [-0.1, 0.1] initialization throughout

TensorPtr affine(const TensorPtr& w, const TensorPtr& x, const TensorPtr& b) {
    return add(matvec(w, x), b);
}

} // namespace

TensorPtr lstm_last_hidden(const TensorPtr& history, const TensorPtr& W, int cell) {
    if (history->rank() != 2) {
        throw std::invalid_argument("lstm_last_hidden: history must be (t, n), got " + shape_str(history->shape));
    }
    const Index t = history->shape[0];
    LstmState state{zeros({cell}), zeros({cell})};
    for (Index step = 0; step < t; ++step) {
        state = lstm_step(row(history, step), state.h, state.c, W);
    }
    return state.h;
}

// ---- MA ---------------------------------------------------------------------

MAModel::MAModel(int m_stocks, int n_indicators, const MAConfig& cfg, std::mt19937_64& init)
    : m_(m_stocks), n_(n_indicators), cfg_(cfg) {
    const int J = cfg.kernels, v = cfg.embed_dim, a = cfg.attention_dim, t = cfg.lookback;
    params_.add("conv.kernels", uniform({J, n_, m_}, kInitLo, kInitHi, init));
    params_.add("conv.bias", uniform({J}, kInitLo, kInitHi, init));
    params_.add("attn.w_sz", uniform({a, v}, kInitLo, kInitHi, init));
    params_.add("attn.w_cz", uniform({a, t}, kInitLo, kInitHi, init));
    params_.add("attn.v", uniform({a}, kInitLo, kInitHi, init));
    params_.add("embed.table", uniform({m_, v}, kInitLo, kInitHi, init));
    params_.add("head.w1", uniform({cfg.phi_dim, t}, kInitLo, kInitHi, init));
    params_.add("head.b1", uniform({cfg.phi_dim}, kInitLo, kInitHi, init));
    params_.add("head.w2", uniform({cfg.head_hidden, cfg.phi_dim}, kInitLo, kInitHi, init));
    params_.add("head.b2", uniform({cfg.head_hidden}, kInitLo, kInitHi, init));
    params_.add("head.w3", uniform({1, cfg.head_hidden}, kInitLo, kInitHi, init));
    params_.add("head.b3", uniform({1}, kInitLo, kInitHi, init));
}

void MAModel::check_cube(const TensorPtr& cube, int stock_idx) const {
    if (cube->rank() != 3 || cube->shape[0] != cfg_.lookback || cube->shape[1] != m_ || cube->shape[2] != n_) {
        throw std::invalid_argument("MAModel: cube " + shape_str(cube->shape) + " does not match model (t=" +
                                    std::to_string(cfg_.lookback) + ", m=" + std::to_string(m_) + ", n=" +
                                    std::to_string(n_) + ")");
    }
    if (stock_idx < 0 || stock_idx >= m_) {
        throw std::invalid_argument("MAModel: stock index " + std::to_string(stock_idx) + " out of range");
    }
}

AttentionResult MAModel::attention(const TensorPtr& cube, int stock_idx) {
    check_cube(cube, stock_idx);
    TensorPtr fmap = conv_day(cube, params_.get("conv.kernels"), params_.get("conv.bias"));
    AttentionParams attn{params_.get("attn.w_sz"), params_.get("attn.w_cz"), params_.get("attn.v")};
    TensorPtr emb = row(params_.get("embed.table"), stock_idx);
    return fused_attention(emb, fmap, attn);
}

MAForward MAModel::forward_detail(const TensorPtr& cube, int stock_idx) {
    AttentionResult att = attention(cube, stock_idx);
    TensorPtr phi1 = relu(affine(params_.get("head.w1"), att.pooled, params_.get("head.b1")));
    TensorPtr h = relu(affine(params_.get("head.w2"), phi1, params_.get("head.b2")));
    TensorPtr out = affine(params_.get("head.w3"), h, params_.get("head.b3"));
    return {att.weights, att.pooled, out};
}

// ---- MA-RNN -----------------------------------------------------------------

MARNNModel::MARNNModel(int m_stocks, int n_indicators, const MARNNConfig& cfg, std::mt19937_64& init)
    : m_(m_stocks), n_(n_indicators), cfg_(cfg) {
    const MAConfig& ma = cfg.ma;
    const int J = ma.kernels, v = ma.embed_dim, a = ma.attention_dim, t = ma.lookback;
    params_.add("conv.kernels", uniform({J, n_, m_}, kInitLo, kInitHi, init));
    params_.add("conv.bias", uniform({J}, kInitLo, kInitHi, init));
    params_.add("attn.w_sz", uniform({a, v}, kInitLo, kInitHi, init));
    params_.add("attn.w_cz", uniform({a, t}, kInitLo, kInitHi, init));
    params_.add("attn.v", uniform({a}, kInitLo, kInitHi, init));
    params_.add("embed.table", uniform({m_, v}, kInitLo, kInitHi, init));
    params_.add("lstm.w", uniform({4 * cfg.cell, cfg.cell + n_}, kInitLo, kInitHi, init));
    params_.add("fuse.phi1_w", uniform({ma.phi_dim, t}, kInitLo, kInitHi, init));
    params_.add("fuse.phi1_b", uniform({ma.phi_dim}, kInitLo, kInitHi, init));
    params_.add("fuse.phi2_w", uniform({cfg.phi2_dim, cfg.cell}, kInitLo, kInitHi, init));
    params_.add("fuse.phi2_b", uniform({cfg.phi2_dim}, kInitLo, kInitHi, init));
    params_.add("fuse.fc1_w", uniform({cfg.fc1, ma.phi_dim + cfg.phi2_dim}, kInitLo, kInitHi, init));
    params_.add("fuse.fc1_b", uniform({cfg.fc1}, kInitLo, kInitHi, init));
    params_.add("fuse.fc2_w", uniform({cfg.fc2, cfg.fc1}, kInitLo, kInitHi, init));
    params_.add("fuse.fc2_b", uniform({cfg.fc2}, kInitLo, kInitHi, init));
    params_.add("fuse.out_w", uniform({1, cfg.fc2}, kInitLo, kInitHi, init));
    params_.add("fuse.out_b", uniform({1}, kInitLo, kInitHi, init));
}

TensorPtr MARNNModel::forward_parts(const TensorPtr& cube, const TensorPtr& history, int stock_idx) {
    if (cube->rank() != 3 || cube->shape[0] != cfg_.ma.lookback || cube->shape[1] != m_ || cube->shape[2] != n_) {
        throw std::invalid_argument("MARNNModel: cube " + shape_str(cube->shape) + " does not match model");
    }
    if (stock_idx < 0 || stock_idx >= m_) {
        throw std::invalid_argument("MARNNModel: stock index out of range");
    }
    if (history->rank() != 2 || history->shape[0] != cfg_.ma.lookback || history->shape[1] != n_) {
        throw std::invalid_argument("MARNNModel: history " + shape_str(history->shape) + " must be (t=" +
                                    std::to_string(cfg_.ma.lookback) + ", n=" + std::to_string(n_) + ")");
    }

    TensorPtr fmap = conv_day(cube, params_.get("conv.kernels"), params_.get("conv.bias"));
    AttentionParams attn{params_.get("attn.w_sz"), params_.get("attn.w_cz"), params_.get("attn.v")};
    AttentionResult att = fused_attention(row(params_.get("embed.table"), stock_idx), fmap, attn);

    TensorPtr q = lstm_last_hidden(history, params_.get("lstm.w"), cfg_.cell);

    TensorPtr phi1 = relu(affine(params_.get("fuse.phi1_w"), att.pooled, params_.get("fuse.phi1_b")));
    TensorPtr phi2 = relu(affine(params_.get("fuse.phi2_w"), q, params_.get("fuse.phi2_b")));
    TensorPtr z = concat({phi1, phi2});
    TensorPtr h1 = relu(affine(params_.get("fuse.fc1_w"), z, params_.get("fuse.fc1_b")));
    TensorPtr h2 = relu(affine(params_.get("fuse.fc2_w"), h1, params_.get("fuse.fc2_b")));
    return affine(params_.get("fuse.out_w"), h2, params_.get("fuse.out_b"));
}

// ---- FFNN baseline ------------------------------------------------------------

FFNNModel::FFNNModel(int n_indicators, const FFNNConfig& cfg, std::mt19937_64& init)
    : input_dim_(cfg.lookback * n_indicators), cfg_(cfg) {
    params_.add("ffnn.w1", uniform({cfg.hidden, input_dim_}, kInitLo, kInitHi, init));
    params_.add("ffnn.b1", uniform({cfg.hidden}, kInitLo, kInitHi, init));
    params_.add("ffnn.w2", uniform({cfg.hidden, cfg.hidden}, kInitLo, kInitHi, init));
    params_.add("ffnn.b2", uniform({cfg.hidden}, kInitLo, kInitHi, init));
    params_.add("ffnn.w3", uniform({1, cfg.hidden}, kInitLo, kInitHi, init));
    params_.add("ffnn.b3", uniform({1}, kInitLo, kInitHi, init));
}

TensorPtr FFNNModel::forward(const SampleInput& in) {
    if (!in.flat || in.flat->size() != input_dim_) {
        throw std::invalid_argument("FFNNModel: expected flattened history of length " + std::to_string(input_dim_));
    }
    TensorPtr h1 = sigmoid(affine(params_.get("ffnn.w1"), in.flat, params_.get("ffnn.b1")));
    TensorPtr h2 = sigmoid(affine(params_.get("ffnn.w2"), h1, params_.get("ffnn.b2")));
    return affine(params_.get("ffnn.w3"), h2, params_.get("ffnn.b3"));
}

// ---- LSTM-RNN baseline ----------------------------------------------------------

LstmRnnModel::LstmRnnModel(int n_indicators, const LstmRnnConfig& cfg, std::mt19937_64& init)
    : n_(n_indicators), cfg_(cfg) {
    params_.add("lstm.w", uniform({4 * cfg.cell, cfg.cell + n_}, kInitLo, kInitHi, init));
    params_.add("head.w", uniform({1, cfg.cell}, kInitLo, kInitHi, init));
    params_.add("head.b", uniform({1}, kInitLo, kInitHi, init));
}

TensorPtr LstmRnnModel::forward(const SampleInput& in) {
    if (!in.history || in.history->rank() != 2 || in.history->shape[0] != cfg_.lookback ||
        in.history->shape[1] != n_) {
        throw std::invalid_argument("LstmRnnModel: history must be (t=" + std::to_string(cfg_.lookback) + ", n=" +
                                    std::to_string(n_) + ")");
    }
    TensorPtr h = lstm_last_hidden(in.history, params_.get("lstm.w"), cfg_.cell);
    return affine(params_.get("head.w"), h, params_.get("head.b"));
}

} // namespace mktcube::models
