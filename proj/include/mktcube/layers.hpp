#pragma once

#include "mktcube/tensor.hpp"

#include <cstdint>

namespace mktcube::ad {

/// Per-day full-extent convolution over a market cube.
///
/// cube:    (t, m, n) stacked day slices, rows = stocks, cols = indicators
/// kernels: (J, n, m) one full-window filter per output feature map
/// bias:    (J,)
/// result:  (t, J) with result[t,j] = ReLU(sum_{n,m} kernels[j,n,m] * cube[t,m,n] + bias[j]);
/// column j is the feature map c^j over the t days.
TensorPtr conv_day(const TensorPtr& cube, const TensorPtr& kernels, const TensorPtr& bias);

struct AttentionParams {
    TensorPtr w_sz;  // (a, v)
    TensorPtr w_cz;  // (a, t)
    TensorPtr v;     // (a,)
};

struct AttentionResult {
    TensorPtr weights;  // (J,) softmax weights, sum to 1
    TensorPtr pooled;   // (t,) weighted sum of the feature maps
};

/// Additive attention over feature maps conditioned on a stock embedding:
/// z_j = tanh(w_sz s + w_cz c^j), weights = softmax_j(v . z_j),
/// pooled = sum_j weights_j c^j.
AttentionResult additive_attention(const TensorPtr& stock_emb,
                                   const std::vector<TensorPtr>& features,
                                   const AttentionParams& params);

/// Same computation as one fused node over the (t, J) feature-map matrix.
/// `pooled` carries the whole backward pass; `weights` is a detached snapshot
/// of the softmax output (the training loss never reads it directly).
AttentionResult fused_attention(const TensorPtr& stock_emb, const TensorPtr& fmap,
                                const AttentionParams& params);

struct LstmState {
    TensorPtr h;
    TensorPtr c;
};

/// One LSTM recurrence. W maps concat(h_prev, x_t) to the stacked (i, f, o, j)
/// preactivations, each of cell size; i, f, o pass through sigmoid, j through
/// tanh; then c_t = f.c_prev + i.j and h_t = o.tanh(c_t). No bias term.
LstmState lstm_step(const TensorPtr& x_t, const TensorPtr& h_prev, const TensorPtr& c_prev,
                    const TensorPtr& W);

/// Max pooling with remembered argmax positions, the encoder half of the
/// pooling-index transfer scheme.
struct PoolRecord {
    TensorPtr output;                  // pooled tensor
    std::vector<std::int64_t> argmax;  // per output element: winning position along the axis
    int axis = 0;
    Index window = 0;
    Index input_len = 0;               // pre-pool length along the axis
};

/// Non-overlapping max pooling along `axis`. A trailing partial window acts as
/// if right-padded with -inf; ties resolve to the lowest index. Gathering the
/// input at the stored argmax positions reproduces the output exactly.
PoolRecord maxpool_with_indices(const TensorPtr& x, Index window, int axis);

/// Sparse upsampling: zeros everywhere except at the recorded argmax
/// positions, which receive the pooled values. Gradient flows back to the
/// pooled tensor by gathering at the same positions.
TensorPtr unpool(const PoolRecord& record, Index target_len);

/// Index-transfer upsampling: places `x` (same shape as record.output) at the
/// record's argmax positions. This is the decoder-side use of the stored
/// indices; unpool(record, len) equals unpool_like(record.output, record, len).
TensorPtr unpool_like(const TensorPtr& x, const PoolRecord& record, Index target_len);

/// 1-D convolution along the row axis of a (rows, in_ch) map with zero 'same'
/// padding. kernels: (out_ch, extent, in_ch), bias: (out_ch,), extent odd.
/// Output: (rows, out_ch). No activation applied.
TensorPtr conv1d_rows(const TensorPtr& x, const TensorPtr& kernels, const TensorPtr& bias);

/// Adaptive average pooling of the row axis onto a fixed grid, so images with
/// varying stock counts produce fixed-size embeddings downstream.
TensorPtr adaptive_avg_rows(const TensorPtr& x, Index out_rows);

/// Inverse-direction resampling used by the decoder: each of the target rows
/// copies its source bin's row.
TensorPtr adaptive_expand_rows(const TensorPtr& x, Index out_rows);

/// The J columns of a (t, J) feature-map matrix as length-t vectors.
std::vector<TensorPtr> columns_of(const TensorPtr& mat);

} // namespace mktcube::ad
