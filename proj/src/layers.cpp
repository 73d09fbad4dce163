#include "mktcube/layers.hpp"

#include <stdexcept>
#include <string>

namespace mktcube::ad {

namespace {

using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

TensorPtr make_node(Array data, Shape shape, std::vector<TensorPtr> parents,
                    std::function<void(Tensor&)> backward_fn) {
    auto out = std::make_shared<Tensor>();
    out->data = std::move(data);
    out->shape = std::move(shape);
    for (const auto& p : parents) {
        if (p->requires_grad) {
            out->requires_grad = true;
            break;
        }
    }
    if (out->requires_grad) {
        out->parents = std::move(parents);
        out->backward_fn = std::move(backward_fn);
    }
    return out;
}

} // namespace

TensorPtr conv_day(const TensorPtr& cube, const TensorPtr& kernels, const TensorPtr& bias) {
    if (cube->rank() != 3) throw std::invalid_argument("conv_day: cube must be (t,m,n), got " + shape_str(cube->shape));
    if (kernels->rank() != 3) throw std::invalid_argument("conv_day: kernels must be (J,n,m), got " + shape_str(kernels->shape));
    Index t = cube->shape[0], m = cube->shape[1], n = cube->shape[2];
    Index J = kernels->shape[0];
    if (kernels->shape[1] != n || kernels->shape[2] != m) {
        throw std::invalid_argument("conv_day: kernel extent " + shape_str(kernels->shape) +
                                    " does not match cube day slice (m=" + std::to_string(m) +
                                    ",n=" + std::to_string(n) + ")");
    }
    if (bias->rank() != 1 || bias->shape[0] != J) {
        throw std::invalid_argument("conv_day: bias must be (J,), got " + shape_str(bias->shape));
    }

    // Day slice t is a contiguous (m,n) block; align the kernels with it by
    // flattening each (n,m) kernel transposed into a (J, m*n) matrix.
    Array kt(J * m * n);
    for (Index j = 0; j < J; ++j) {
        CMap k(kernels->data.data() + j * n * m, n, m);
        MMap(kt.data() + j * m * n, m, n) = k.transpose();
    }
    Array pre(t * J);
    {
        CMap days(cube->data.data(), t, m * n);
        CMap kmat(kt.data(), J, m * n);
        MMap out(pre.data(), t, J);
        out.noalias() = days * kmat.transpose();
        out.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias->data.data(), J);
    }
    Array activated = pre.max(0.0);

    Tensor* pcube = cube.get();
    Tensor* pker = kernels.get();
    Tensor* pbias = bias.get();
    return make_node(std::move(activated), {t, J}, {cube, kernels, bias},
                     [pcube, pker, pbias, kt = std::move(kt), t, m, n, J](Tensor& self) {
        Array dpre = self.grad * (self.data > 0.0).cast<double>();
        CMap dpre_m(dpre.data(), t, J);
        if (pbias->requires_grad) {
            pbias->ensure_grad().matrix() += dpre_m.colwise().sum().transpose();
        }
        if (pcube->requires_grad) {
            MMap(pcube->ensure_grad().data(), t, m * n).noalias() += dpre_m * CMap(kt.data(), J, m * n);
        }
        if (pker->requires_grad) {
            Array dkt(J * m * n);
            MMap(dkt.data(), J, m * n).noalias() = dpre_m.transpose() * CMap(pcube->data.data(), t, m * n);
            Array& g = pker->ensure_grad();
            for (Index j = 0; j < J; ++j) {
                MMap(g.data() + j * n * m, n, m) += CMap(dkt.data() + j * m * n, m, n).transpose();
            }
        }
    });
}

AttentionResult additive_attention(const TensorPtr& stock_emb, const std::vector<TensorPtr>& features,
                                   const AttentionParams& params) {
    if (features.empty()) throw std::invalid_argument("additive_attention: need at least one feature map");
    TensorPtr projected = matvec(params.w_sz, stock_emb);
    std::vector<TensorPtr> energies;
    energies.reserve(features.size());
    for (const auto& c : features) {
        TensorPtr z = tanh(add(projected, matvec(params.w_cz, c)));
        energies.push_back(dot(params.v, z));
    }
    TensorPtr weights = softmax(concat(energies));
    TensorPtr pooled;
    for (std::size_t j = 0; j < features.size(); ++j) {
        TensorPtr term = mul(features[j], slice(weights, static_cast<Index>(j), 1));
        pooled = pooled ? add(pooled, term) : term;
    }
    return {weights, pooled};
}

AttentionResult fused_attention(const TensorPtr& stock_emb, const TensorPtr& fmap,
                                const AttentionParams& params) {
    if (fmap->rank() != 2) throw std::invalid_argument("fused_attention: feature maps must be (t, J)");
    const Index t = fmap->shape[0], J = fmap->shape[1];
    const Index a = params.v->shape[0], v_dim = stock_emb->shape[0];
    if (params.w_sz->rank() != 2 || params.w_sz->shape[0] != a || params.w_sz->shape[1] != v_dim ||
        params.w_cz->rank() != 2 || params.w_cz->shape[0] != a || params.w_cz->shape[1] != t) {
        throw std::invalid_argument("fused_attention: parameter shapes do not match");
    }

    CMap c(fmap->data.data(), t, J);
    CMap wsz(params.w_sz->data.data(), a, v_dim);
    CMap wcz(params.w_cz->data.data(), a, t);

    Eigen::VectorXd proj = wsz * stock_emb->data.matrix();
    RowMat z = ((wcz * c).colwise() + proj).array().tanh().matrix();  // (a, J)
    Eigen::VectorXd energy = z.transpose() * params.v->data.matrix();
    Eigen::ArrayXd w = (energy.array() - energy.maxCoeff()).exp();
    w /= w.sum();
    Array pooled(t);
    pooled.matrix() = c * w.matrix();

    auto weights_out = std::make_shared<Tensor>();
    weights_out->data = w;
    weights_out->shape = {J};

    Tensor* pf = fmap.get();
    Tensor* pe = stock_emb.get();
    Tensor* psz = params.w_sz.get();
    Tensor* pcz = params.w_cz.get();
    Tensor* pv = params.v.get();
    TensorPtr pooled_out = make_node(
        std::move(pooled), {t}, {fmap, stock_emb, params.w_sz, params.w_cz, params.v},
        [pf, pe, psz, pcz, pv, z = std::move(z), w, t, J, a](Tensor& self) {
            CMap c(pf->data.data(), t, J);
            Eigen::Map<const Eigen::VectorXd> dp(self.grad.data(), t);

            // pooled = C w: split the gradient between the maps and the weights
            Eigen::VectorXd dw = c.transpose() * dp;
            double dot = (dw.array() * w).sum();
            Eigen::VectorXd de = (w * (dw.array() - dot)).matrix();

            RowMat dz = pv->data.matrix() * de.transpose();                   // (a, J)
            RowMat dpre = (dz.array() * (1.0 - z.array().square())).matrix();  // through tanh
            Eigen::VectorXd dproj = dpre.rowwise().sum();

            if (pv->requires_grad) pv->ensure_grad().matrix() += z * de;
            if (pcz->requires_grad) {
                MMap(pcz->ensure_grad().data(), a, t).noalias() += dpre * c.transpose();
            }
            if (psz->requires_grad) {
                MMap(psz->ensure_grad().data(), a, pe->size()).noalias() +=
                    dproj * pe->data.matrix().transpose();
            }
            if (pe->requires_grad) {
                CMap wsz(psz->data.data(), a, pe->size());
                pe->ensure_grad().matrix().noalias() += wsz.transpose() * dproj;
            }
            if (pf->requires_grad) {
                MMap dc(pf->ensure_grad().data(), t, J);
                dc.noalias() += dp * w.matrix().transpose();
                CMap wcz(pcz->data.data(), a, t);
                dc.noalias() += wcz.transpose() * dpre;
            }
        });
    return {weights_out, pooled_out};
}

LstmState lstm_step(const TensorPtr& x_t, const TensorPtr& h_prev, const TensorPtr& c_prev,
                    const TensorPtr& W) {
    Index cell = h_prev->size();
    if (c_prev->size() != cell) throw std::invalid_argument("lstm_step: h_prev/c_prev size mismatch");
    if (W->rank() != 2 || W->shape[0] != 4 * cell || W->shape[1] != cell + x_t->size()) {
        throw std::invalid_argument("lstm_step: W must be (4*cell, cell+input), got " + shape_str(W->shape));
    }
    TensorPtr pre = matvec(W, concat({h_prev, x_t}));
    TensorPtr i = sigmoid(slice(pre, 0, cell));
    TensorPtr f = sigmoid(slice(pre, cell, cell));
    TensorPtr o = sigmoid(slice(pre, 2 * cell, cell));
    TensorPtr j = tanh(slice(pre, 3 * cell, cell));
    TensorPtr c_t = add(mul(f, c_prev), mul(i, j));
    TensorPtr h_t = mul(o, tanh(c_t));
    return {h_t, c_t};
}

// ---- pooling -----------------------------------------------------------------

namespace {

struct AxisView {
    Index outer;
    Index len;
    Index inner;
};

AxisView axis_view(const Shape& shape, int axis) {
    if (axis < 0 || axis >= static_cast<int>(shape.size())) {
        throw std::invalid_argument("pool: axis " + std::to_string(axis) + " out of range for " + shape_str(shape));
    }
    AxisView v{1, shape[axis], 1};
    for (int i = 0; i < axis; ++i) v.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
    return v;
}

} // namespace

PoolRecord maxpool_with_indices(const TensorPtr& x, Index window, int axis) {
    if (window <= 0) throw std::invalid_argument("maxpool: window must be positive");
    AxisView v = axis_view(x->shape, axis);
    Index out_len = (v.len + window - 1) / window;  // trailing partial window allowed

    Array out(v.outer * out_len * v.inner);
    std::vector<std::int64_t> argmax(static_cast<std::size_t>(out.size()));
    for (Index o = 0; o < v.outer; ++o) {
        for (Index w = 0; w < out_len; ++w) {
            Index lo = w * window;
            Index hi = std::min(lo + window, v.len);
            for (Index in = 0; in < v.inner; ++in) {
                Index best = lo;
                double best_v = x->data[(o * v.len + lo) * v.inner + in];
                for (Index l = lo + 1; l < hi; ++l) {
                    double cand = x->data[(o * v.len + l) * v.inner + in];
                    if (cand > best_v) {
                        best_v = cand;
                        best = l;
                    }
                }
                Index oi = (o * out_len + w) * v.inner + in;
                out[oi] = best_v;
                argmax[static_cast<std::size_t>(oi)] = best;
            }
        }
    }

    Shape out_shape = x->shape;
    out_shape[axis] = out_len;
    Tensor* px = x.get();
    auto arg_copy = argmax;  // the backward closure keeps its own copy
    TensorPtr out_t = make_node(std::move(out), std::move(out_shape), {x},
                                [px, v, out_len, arg = std::move(arg_copy)](Tensor& self) {
        if (!px->requires_grad) return;
        Array& g = px->ensure_grad();
        for (Index o = 0; o < v.outer; ++o) {
            for (Index w = 0; w < out_len; ++w) {
                for (Index in = 0; in < v.inner; ++in) {
                    Index oi = (o * out_len + w) * v.inner + in;
                    Index l = static_cast<Index>(arg[static_cast<std::size_t>(oi)]);
                    g[(o * v.len + l) * v.inner + in] += self.grad[oi];
                }
            }
        }
    });

    PoolRecord rec;
    rec.output = out_t;
    rec.argmax = std::move(argmax);
    rec.axis = axis;
    rec.window = window;
    rec.input_len = v.len;
    return rec;
}

TensorPtr unpool(const PoolRecord& record, Index target_len) {
    return unpool_like(record.output, record, target_len);
}

TensorPtr unpool_like(const TensorPtr& x, const PoolRecord& record, Index target_len) {
    if (x->shape != record.output->shape) {
        throw std::invalid_argument("unpool_like: input " + shape_str(x->shape) +
                                    " does not match the record's pooled shape " +
                                    shape_str(record.output->shape));
    }
    AxisView v = axis_view(x->shape, record.axis);
    for (std::int64_t idx : record.argmax) {
        if (idx < 0 || idx >= target_len) {
            throw std::invalid_argument("unpool: stored index " + std::to_string(idx) +
                                        " out of range for target length " + std::to_string(target_len));
        }
    }
    Shape out_shape = x->shape;
    out_shape[record.axis] = target_len;
    Array out = Array::Zero(v.outer * target_len * v.inner);
    for (Index o = 0; o < v.outer; ++o) {
        for (Index w = 0; w < v.len; ++w) {
            for (Index in = 0; in < v.inner; ++in) {
                Index oi = (o * v.len + w) * v.inner + in;
                Index l = static_cast<Index>(record.argmax[static_cast<std::size_t>(oi)]);
                out[(o * target_len + l) * v.inner + in] = x->data[oi];
            }
        }
    }
    Tensor* px = x.get();
    return make_node(std::move(out), std::move(out_shape), {x},
                     [px, v, target_len, arg = record.argmax](Tensor& self) {
        if (!px->requires_grad) return;
        Array& g = px->ensure_grad();
        for (Index o = 0; o < v.outer; ++o) {
            for (Index w = 0; w < v.len; ++w) {
                for (Index in = 0; in < v.inner; ++in) {
                    Index oi = (o * v.len + w) * v.inner + in;
                    Index l = static_cast<Index>(arg[static_cast<std::size_t>(oi)]);
                    g[oi] += self.grad[(o * target_len + l) * v.inner + in];
                }
            }
        }
    });
}

// ---- segnet convolution and adaptive resampling --------------------------------

TensorPtr conv1d_rows(const TensorPtr& x, const TensorPtr& kernels, const TensorPtr& bias) {
    if (x->rank() != 2) throw std::invalid_argument("conv1d_rows: input must be (rows, in_ch)");
    if (kernels->rank() != 3) throw std::invalid_argument("conv1d_rows: kernels must be (out_ch, extent, in_ch)");
    Index rows = x->shape[0], in_ch = x->shape[1];
    Index out_ch = kernels->shape[0], extent = kernels->shape[1];
    if (kernels->shape[2] != in_ch) {
        throw std::invalid_argument("conv1d_rows: kernel channels " + shape_str(kernels->shape) +
                                    " do not match input " + shape_str(x->shape));
    }
    if (extent % 2 == 0) throw std::invalid_argument("conv1d_rows: extent must be odd");
    if (bias->rank() != 1 || bias->shape[0] != out_ch) {
        throw std::invalid_argument("conv1d_rows: bias must be (out_ch,)");
    }
    Index pad = extent / 2;
    Index k = extent * in_ch;

    // im2col with zero padding: patch row r = input rows [r-pad .. r+pad]
    Array patches = Array::Zero(rows * k);
    for (Index r = 0; r < rows; ++r) {
        for (Index e = 0; e < extent; ++e) {
            Index src = r - pad + e;
            if (src < 0 || src >= rows) continue;
            patches.segment(r * k + e * in_ch, in_ch) = x->data.segment(src * in_ch, in_ch);
        }
    }
    Array out(rows * out_ch);
    {
        CMap p(patches.data(), rows, k);
        CMap km(kernels->data.data(), out_ch, k);
        MMap om(out.data(), rows, out_ch);
        om.noalias() = p * km.transpose();
        om.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias->data.data(), out_ch);
    }

    Tensor* px = x.get();
    Tensor* pker = kernels.get();
    Tensor* pbias = bias.get();
    return make_node(std::move(out), {rows, out_ch}, {x, kernels, bias},
                     [px, pker, pbias, patches = std::move(patches), rows, in_ch, out_ch, extent, pad,
                      k](Tensor& self) {
        CMap g(self.grad.data(), rows, out_ch);
        if (pbias->requires_grad) {
            pbias->ensure_grad().matrix() += g.colwise().sum().transpose();
        }
        if (pker->requires_grad) {
            MMap(pker->ensure_grad().data(), out_ch, k).noalias() += g.transpose() * CMap(patches.data(), rows, k);
        }
        if (px->requires_grad) {
            Array dpatch(rows * k);
            MMap(dpatch.data(), rows, k).noalias() = g * CMap(pker->data.data(), out_ch, k);
            Array& gx = px->ensure_grad();
            for (Index r = 0; r < rows; ++r) {
                for (Index e = 0; e < extent; ++e) {
                    Index src = r - pad + e;
                    if (src < 0 || src >= rows) continue;
                    gx.segment(src * in_ch, in_ch) += dpatch.segment(r * k + e * in_ch, in_ch);
                }
            }
        }
    });
}

namespace {

// Bin [start, end) of source rows feeding output row g; always non-empty.
inline void bin_bounds(Index g, Index in_rows, Index out_rows, Index& start, Index& end) {
    start = (g * in_rows) / out_rows;
    end = ((g + 1) * in_rows + out_rows - 1) / out_rows;
    if (end <= start) end = start + 1;
}

} // namespace

TensorPtr adaptive_avg_rows(const TensorPtr& x, Index out_rows) {
    if (x->rank() != 2) throw std::invalid_argument("adaptive_avg_rows: input must be rank 2");
    if (out_rows <= 0) throw std::invalid_argument("adaptive_avg_rows: out_rows must be positive");
    Index rows = x->shape[0], cols = x->shape[1];
    Array out = Array::Zero(out_rows * cols);
    for (Index g = 0; g < out_rows; ++g) {
        Index lo, hi;
        bin_bounds(g, rows, out_rows, lo, hi);
        for (Index r = lo; r < hi; ++r) out.segment(g * cols, cols) += x->data.segment(r * cols, cols);
        out.segment(g * cols, cols) /= static_cast<double>(hi - lo);
    }
    Tensor* px = x.get();
    return make_node(std::move(out), {out_rows, cols}, {x}, [px, rows, cols, out_rows](Tensor& self) {
        if (!px->requires_grad) return;
        Array& gx = px->ensure_grad();
        for (Index g = 0; g < out_rows; ++g) {
            Index lo, hi;
            bin_bounds(g, rows, out_rows, lo, hi);
            double inv = 1.0 / static_cast<double>(hi - lo);
            for (Index r = lo; r < hi; ++r) gx.segment(r * cols, cols) += inv * self.grad.segment(g * cols, cols);
        }
    });
}

TensorPtr adaptive_expand_rows(const TensorPtr& x, Index out_rows) {
    if (x->rank() != 2) throw std::invalid_argument("adaptive_expand_rows: input must be rank 2");
    if (out_rows <= 0) throw std::invalid_argument("adaptive_expand_rows: out_rows must be positive");
    Index rows = x->shape[0], cols = x->shape[1];
    Array out(out_rows * cols);
    for (Index r = 0; r < out_rows; ++r) {
        Index src = (r * rows) / out_rows;
        out.segment(r * cols, cols) = x->data.segment(src * cols, cols);
    }
    Tensor* px = x.get();
    return make_node(std::move(out), {out_rows, cols}, {x}, [px, rows, cols, out_rows](Tensor& self) {
        if (!px->requires_grad) return;
        Array& gx = px->ensure_grad();
        for (Index r = 0; r < out_rows; ++r) {
            Index src = (r * rows) / out_rows;
            gx.segment(src * cols, cols) += self.grad.segment(r * cols, cols);
        }
    });
}

std::vector<TensorPtr> columns_of(const TensorPtr& mat) {
    if (mat->rank() != 2) throw std::invalid_argument("columns_of: input must be rank 2");
    std::vector<TensorPtr> cols;
    cols.reserve(static_cast<std::size_t>(mat->shape[1]));
    for (Index j = 0; j < mat->shape[1]; ++j) cols.push_back(col(mat, j));
    return cols;
}

} // namespace mktcube::ad
