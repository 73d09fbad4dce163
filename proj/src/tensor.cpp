#include "mktcube/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace mktcube::ad {

Index numel(const Shape& shape) {
    Index n = 1;
    for (Index d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

bool same_shape(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape;
}

static void check_shape(const Shape& shape, Index n) {
    for (Index d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension in " + shape_str(shape));
    }
    if (numel(shape) != n) {
        throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match buffer size " +
                                    std::to_string(n));
    }
}

TensorPtr constant(double v) {
    auto t = std::make_shared<Tensor>();
    t->data = Array::Constant(1, v);
    t->shape = {1};
    return t;
}

TensorPtr tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape, static_cast<Index>(values.size()));
    auto t = std::make_shared<Tensor>();
    t->data = Eigen::Map<const Array>(values.data(), static_cast<Index>(values.size()));
    t->shape = std::move(shape);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr from_array(Shape shape, const Array& values, bool requires_grad) {
    check_shape(shape, values.size());
    auto t = std::make_shared<Tensor>();
    t->data = values;
    t->shape = std::move(shape);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

TensorPtr full(Shape shape, double v, bool requires_grad) {
    Index n = numel(shape);
    check_shape(shape, n);
    auto t = std::make_shared<Tensor>();
    t->data = Array::Constant(n, v);
    t->shape = std::move(shape);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr uniform(Shape shape, double lo, double hi, std::mt19937_64& rng, bool requires_grad) {
    Index n = numel(shape);
    check_shape(shape, n);
    auto t = std::make_shared<Tensor>();
    t->data.resize(n);
    std::uniform_real_distribution<double> d(lo, hi);
    for (Index i = 0; i < n; ++i) t->data[i] = d(rng);
    t->shape = std::move(shape);
    t->requires_grad = requires_grad;
    return t;
}

// ---- graph -----------------------------------------------------------------

void backward(const TensorPtr& loss) {
    if (!loss) throw std::invalid_argument("backward: null loss");
    if (loss->size() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(loss->shape));
    }
    // Iterative post-order DFS; children end up after all their parents.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> seen;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Tensor* p = node->parents[next++].get();
            if (seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // Interior nodes get a fresh gradient each pass; leaves accumulate across
    // repeated calls until explicitly zeroed.
    for (Tensor* node : order) {
        if (node->backward_fn) node->zero_grad();
    }
    loss->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn && node->requires_grad) node->backward_fn(*node);
    }
}

void zero_grads(const std::vector<TensorPtr>& params) {
    for (const auto& p : params) p->zero_grad();
}

// ---- op helpers ------------------------------------------------------------

namespace {

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

void require_same_or_scalar(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (!same_shape(*a, *b) && !a->is_scalar() && !b->is_scalar()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a->shape) + " vs " +
                                    shape_str(b->shape));
    }
}

// Accumulates an elementwise gradient into a parent, reducing when the parent
// is a broadcast scalar.
void accumulate(Tensor* p, const Array& g) {
    if (!p->requires_grad) return;
    if (p->size() == g.size()) {
        p->ensure_grad() += g;
    } else {
        p->ensure_grad()[0] += g.sum();
    }
}

} // namespace

// ---- elementwise -----------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_or_scalar(a, b, "add");
    Array out = same_shape(*a, *b) ? Array(a->data + b->data)
               : a->is_scalar()    ? Array(a->data[0] + b->data)
                                   : Array(a->data + b->data[0]);
    Shape shape = a->is_scalar() ? b->shape : a->shape;
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return make_node(std::move(out), std::move(shape), {a, b}, [pa, pb](Tensor& self) {
        accumulate(pa, self.grad);
        accumulate(pb, self.grad);
    });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_or_scalar(a, b, "sub");
    Array out = same_shape(*a, *b) ? Array(a->data - b->data)
               : a->is_scalar()    ? Array(a->data[0] - b->data)
                                   : Array(a->data - b->data[0]);
    Shape shape = a->is_scalar() ? b->shape : a->shape;
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return make_node(std::move(out), std::move(shape), {a, b}, [pa, pb](Tensor& self) {
        accumulate(pa, self.grad);
        accumulate(pb, Array(-self.grad));
    });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_or_scalar(a, b, "mul");
    Array out = same_shape(*a, *b) ? Array(a->data * b->data)
               : a->is_scalar()    ? Array(a->data[0] * b->data)
                                   : Array(a->data * b->data[0]);
    Shape shape = a->is_scalar() ? b->shape : a->shape;
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return make_node(std::move(out), std::move(shape), {a, b}, [pa, pb](Tensor& self) {
        if (pa->requires_grad) {
            Array g = pb->size() == self.grad.size() ? Array(self.grad * pb->data)
                                                     : Array(self.grad * pb->data[0]);
            accumulate(pa, g);
        }
        if (pb->requires_grad) {
            Array g = pa->size() == self.grad.size() ? Array(self.grad * pa->data)
                                                     : Array(self.grad * pa->data[0]);
            accumulate(pb, g);
        }
    });
}

TensorPtr neg(const TensorPtr& a) {
    Tensor* pa = a.get();
    return make_node(Array(-a->data), a->shape, {a},
                     [pa](Tensor& self) { accumulate(pa, Array(-self.grad)); });
}

TensorPtr relu(const TensorPtr& a) {
    Tensor* pa = a.get();
    return make_node(a->data.max(0.0), a->shape, {a}, [pa](Tensor& self) {
        if (!pa->requires_grad) return;
        accumulate(pa, Array(self.grad * (pa->data > 0.0).cast<double>()));
    });
}

TensorPtr tanh(const TensorPtr& a) {
    Array y = a->data.tanh();
    Tensor* pa = a.get();
    return make_node(y, a->shape, {a}, [pa](Tensor& self) {
        if (!pa->requires_grad) return;
        accumulate(pa, Array(self.grad * (1.0 - self.data.square())));
    });
}

TensorPtr sigmoid(const TensorPtr& a) {
    Array y = 1.0 / (1.0 + (-a->data).exp());
    Tensor* pa = a.get();
    return make_node(y, a->shape, {a}, [pa](Tensor& self) {
        if (!pa->requires_grad) return;
        accumulate(pa, Array(self.grad * self.data * (1.0 - self.data)));
    });
}

TensorPtr exp(const TensorPtr& a) {
    Tensor* pa = a.get();
    return make_node(a->data.exp(), a->shape, {a}, [pa](Tensor& self) {
        if (!pa->requires_grad) return;
        accumulate(pa, Array(self.grad * self.data));
    });
}

// ---- linear algebra ----------------------------------------------------------

namespace {

void require_rank(const TensorPtr& t, Index r, const char* op) {
    if (t->rank() != r) {
        throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(r) + ", got " +
                                    shape_str(t->shape));
    }
}

using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

} // namespace

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    Index p = a->shape[0], q = a->shape[1], r = b->shape[1];
    if (b->shape[0] != q) {
        throw std::invalid_argument("matmul: inner dimensions differ, " + shape_str(a->shape) + " x " +
                                    shape_str(b->shape));
    }
    Array out(p * r);
    MMap(out.data(), p, r) = CMap(a->data.data(), p, q) * CMap(b->data.data(), q, r);
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return make_node(std::move(out), {p, r}, {a, b}, [pa, pb, p, q, r](Tensor& self) {
        CMap g(self.grad.data(), p, r);
        if (pa->requires_grad) {
            MMap(pa->ensure_grad().data(), p, q).noalias() += g * CMap(pb->data.data(), q, r).transpose();
        }
        if (pb->requires_grad) {
            MMap(pb->ensure_grad().data(), q, r).noalias() += CMap(pa->data.data(), p, q).transpose() * g;
        }
    });
}

TensorPtr matvec(const TensorPtr& a, const TensorPtr& x) {
    require_rank(a, 2, "matvec");
    require_rank(x, 1, "matvec");
    Index p = a->shape[0], q = a->shape[1];
    if (x->shape[0] != q) {
        throw std::invalid_argument("matvec: dimensions differ, " + shape_str(a->shape) + " x " +
                                    shape_str(x->shape));
    }
    Array out(p);
    out.matrix() = CMap(a->data.data(), p, q) * x->data.matrix();
    Tensor* pa = a.get();
    Tensor* px = x.get();
    return make_node(std::move(out), {p}, {a, x}, [pa, px, p, q](Tensor& self) {
        if (pa->requires_grad) {
            MMap(pa->ensure_grad().data(), p, q).noalias() +=
                self.grad.matrix() * px->data.matrix().transpose();
        }
        if (px->requires_grad) {
            px->ensure_grad().matrix().noalias() +=
                CMap(pa->data.data(), p, q).transpose() * self.grad.matrix();
        }
    });
}

TensorPtr dot(const TensorPtr& a, const TensorPtr& b) {
    require_rank(a, 1, "dot");
    require_rank(b, 1, "dot");
    if (a->shape[0] != b->shape[0]) {
        throw std::invalid_argument("dot: length mismatch " + shape_str(a->shape) + " vs " + shape_str(b->shape));
    }
    Array out = Array::Constant(1, (a->data * b->data).sum());
    Tensor* pa = a.get();
    Tensor* pb = b.get();
    return make_node(std::move(out), {1}, {a, b}, [pa, pb](Tensor& self) {
        double g = self.grad[0];
        if (pa->requires_grad) pa->ensure_grad() += g * pb->data;
        if (pb->requires_grad) pb->ensure_grad() += g * pa->data;
    });
}

// ---- structural --------------------------------------------------------------

TensorPtr concat(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    Index total = 0;
    for (const auto& p : parts) {
        require_rank(p, 1, "concat");
        total += p->size();
    }
    Array out(total);
    Index off = 0;
    for (const auto& p : parts) {
        out.segment(off, p->size()) = p->data;
        off += p->size();
    }
    std::vector<Tensor*> raw;
    raw.reserve(parts.size());
    for (const auto& p : parts) raw.push_back(p.get());
    return make_node(std::move(out), {total}, parts, [raw](Tensor& self) {
        Index off = 0;
        for (Tensor* p : raw) {
            if (p->requires_grad) p->ensure_grad() += self.grad.segment(off, p->size());
            off += p->size();
        }
    });
}

TensorPtr slice(const TensorPtr& a, Index start, Index len) {
    require_rank(a, 1, "slice");
    if (start < 0 || len <= 0 || start + len > a->size()) {
        throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                    std::to_string(start + len) + ") out of bounds for " + shape_str(a->shape));
    }
    Tensor* pa = a.get();
    return make_node(a->data.segment(start, len), {len}, {a}, [pa, start, len](Tensor& self) {
        if (pa->requires_grad) pa->ensure_grad().segment(start, len) += self.grad;
    });
}

TensorPtr reshape(const TensorPtr& a, Shape shape) {
    if (numel(shape) != a->size()) {
        throw std::invalid_argument("reshape: " + shape_str(a->shape) + " incompatible with " + shape_str(shape));
    }
    Tensor* pa = a.get();
    return make_node(a->data, std::move(shape), {a},
                     [pa](Tensor& self) { accumulate(pa, self.grad); });
}

TensorPtr row(const TensorPtr& a, Index i) {
    require_rank(a, 2, "row");
    Index rows = a->shape[0], cols = a->shape[1];
    if (i < 0 || i >= rows) throw std::invalid_argument("row: index out of range");
    Tensor* pa = a.get();
    return make_node(a->data.segment(i * cols, cols), {cols}, {a}, [pa, i, cols](Tensor& self) {
        if (pa->requires_grad) pa->ensure_grad().segment(i * cols, cols) += self.grad;
    });
}

TensorPtr col(const TensorPtr& a, Index j) {
    require_rank(a, 2, "col");
    Index rows = a->shape[0], cols = a->shape[1];
    if (j < 0 || j >= cols) throw std::invalid_argument("col: index out of range");
    Array out(rows);
    for (Index i = 0; i < rows; ++i) out[i] = a->data[i * cols + j];
    Tensor* pa = a.get();
    return make_node(std::move(out), {rows}, {a}, [pa, j, rows, cols](Tensor& self) {
        if (!pa->requires_grad) return;
        Array& g = pa->ensure_grad();
        for (Index i = 0; i < rows; ++i) g[i * cols + j] += self.grad[i];
    });
}

// ---- reductions ----------------------------------------------------------------

TensorPtr sum(const TensorPtr& a) {
    Tensor* pa = a.get();
    return make_node(Array::Constant(1, a->data.sum()), {1}, {a}, [pa](Tensor& self) {
        if (pa->requires_grad) pa->ensure_grad() += self.grad[0];
    });
}

TensorPtr mean(const TensorPtr& a) {
    Tensor* pa = a.get();
    double inv = 1.0 / static_cast<double>(a->size());
    return make_node(Array::Constant(1, a->data.mean()), {1}, {a}, [pa, inv](Tensor& self) {
        if (pa->requires_grad) pa->ensure_grad() += self.grad[0] * inv;
    });
}

TensorPtr softmax(const TensorPtr& a) {
    require_rank(a, 1, "softmax");
    Array shifted = a->data - a->data.maxCoeff();
    Array e = shifted.exp();
    Array w = e / e.sum();
    Tensor* pa = a.get();
    return make_node(std::move(w), a->shape, {a}, [pa](Tensor& self) {
        if (!pa->requires_grad) return;
        double dotgw = (self.grad * self.data).sum();
        pa->ensure_grad() += self.data * (self.grad - dotgw);
    });
}

} // namespace mktcube::ad
