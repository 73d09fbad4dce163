#pragma once

#include "mktcube/layers.hpp"
#include "mktcube/params.hpp"
#include "mktcube/tensor.hpp"

#include <memory>
#include <random>
#include <string>

namespace mktcube::models {

/// Inputs one supervised sample can offer; each model reads what it needs.
struct SampleInput {
    ad::TensorPtr cube;     // (t, m, n) normalized market cube window
    ad::TensorPtr history;  // (t, n) target stock's indicator rows
    ad::TensorPtr flat;     // (t*n,) flattened history
    int stock_idx = -1;
};

/// Gradient-trained scalar-return predictor.
class GradModel {
public:
    virtual ~GradModel() = default;
    virtual std::string kind() const = 0;
    virtual ad::TensorPtr forward(const SampleInput& in) = 0;
    virtual ad::ParamMap& params() = 0;
    virtual bool needs_cube() const { return false; }
    virtual bool needs_history() const { return false; }
    virtual bool needs_flat() const { return false; }
};

struct MAConfig {
    int kernels = 192;        // J
    int embed_dim = 100;      // v
    int attention_dim = 32;   // a
    int phi_dim = 40;         // market representation size
    int head_hidden = 50;
    int lookback = 10;        // t
};

struct MAForward {
    ad::TensorPtr weights;     // (J,) attention weights
    ad::TensorPtr pooled;      // (t,) conditioned market embedding p
    ad::TensorPtr prediction;  // scalar
};

/// Market Attention model: per-day full-extent convolution over the cube,
/// additive attention conditioned on the target stock's embedding, and a
/// small regression head over the pooled feature column.
class MAModel : public GradModel {
public:
    MAModel(int m_stocks, int n_indicators, const MAConfig& cfg, std::mt19937_64& init);

    MAForward forward_detail(const ad::TensorPtr& cube, int stock_idx);

    std::string kind() const override { return "ma"; }
    ad::TensorPtr forward(const SampleInput& in) override { return forward_detail(in.cube, in.stock_idx).prediction; }
    ad::ParamMap& params() override { return params_; }
    bool needs_cube() const override { return true; }

    const MAConfig& config() const { return cfg_; }
    int stocks() const { return m_; }
    int indicators() const { return n_; }

    /// Attention block shared with the MA-RNN; returns weights and pooled p.
    ad::AttentionResult attention(const ad::TensorPtr& cube, int stock_idx);

private:
    void check_cube(const ad::TensorPtr& cube, int stock_idx) const;

    int m_, n_;
    MAConfig cfg_;
    ad::ParamMap params_;
};

struct MARNNConfig {
    MAConfig ma;
    int cell = 32;      // LSTM cell size
    int phi2_dim = 40;  // transform of the stock performance embedding q
    int fc1 = 100;
    int fc2 = 50;
};

/// MA plus an LSTM over the target stock's own indicator sequence; the two
/// embeddings are transformed separately, concatenated, and regressed.
class MARNNModel : public GradModel {
public:
    MARNNModel(int m_stocks, int n_indicators, const MARNNConfig& cfg, std::mt19937_64& init);

    ad::TensorPtr forward_parts(const ad::TensorPtr& cube, const ad::TensorPtr& history, int stock_idx);

    std::string kind() const override { return "ma-rnn"; }
    ad::TensorPtr forward(const SampleInput& in) override { return forward_parts(in.cube, in.history, in.stock_idx); }
    ad::ParamMap& params() override { return params_; }
    bool needs_cube() const override { return true; }
    bool needs_history() const override { return true; }

    const MARNNConfig& config() const { return cfg_; }

private:
    int m_, n_;
    MARNNConfig cfg_;
    ad::ParamMap params_;
};

struct FFNNConfig {
    int hidden = 50;   // two hidden layers of this size, sigmoid
    int lookback = 10;
};

class FFNNModel : public GradModel {
public:
    FFNNModel(int n_indicators, const FFNNConfig& cfg, std::mt19937_64& init);
    std::string kind() const override { return "ffnn"; }
    ad::TensorPtr forward(const SampleInput& in) override;
    ad::ParamMap& params() override { return params_; }
    bool needs_flat() const override { return true; }

private:
    int input_dim_;
    FFNNConfig cfg_;
    ad::ParamMap params_;
};

struct LstmRnnConfig {
    int cell = 25;
    int lookback = 10;
};

class LstmRnnModel : public GradModel {
public:
    LstmRnnModel(int n_indicators, const LstmRnnConfig& cfg, std::mt19937_64& init);
    std::string kind() const override { return "lstm-rnn"; }
    ad::TensorPtr forward(const SampleInput& in) override;
    ad::ParamMap& params() override { return params_; }
    bool needs_history() const override { return true; }

private:
    int n_;
    LstmRnnConfig cfg_;
    ad::ParamMap params_;
};

/// Runs an LSTM over the rows of a (t, n) sequence and returns the last
/// hidden state. Shared by the MA-RNN and the LSTM-RNN baseline.
ad::TensorPtr lstm_last_hidden(const ad::TensorPtr& history, const ad::TensorPtr& W, int cell);

} // namespace mktcube::models
