#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace mktcube::ad {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using Array = Eigen::ArrayXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense 64-bit float tensor participating in a define-by-run reverse-mode
/// differentiation graph. Data is flat row-major; `grad` stays empty until a
/// backward pass touches the node. Values are treated as immutable once a
/// node has consumers; the graph itself is single-writer.
class Tensor {
public:
    Array data;
    Array grad;   // empty until touched; same size as data afterwards
    Shape shape;
    bool requires_grad = false;

    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backward_fn;

    Index size() const { return data.size(); }
    Index rank() const { return static_cast<Index>(shape.size()); }
    Index dim(std::size_t i) const { return shape[i]; }
    bool is_scalar() const { return data.size() == 1; }

    /// Scalar payload; only valid when size() == 1.
    double value() const { return data[0]; }

    Array& ensure_grad() {
        if (grad.size() != data.size()) grad = Array::Zero(data.size());
        return grad;
    }
    void zero_grad() {
        if (grad.size() > 0) grad.setZero();
    }
};

Index numel(const Shape& shape);
std::string shape_str(const Shape& shape);
bool same_shape(const Tensor& a, const Tensor& b);

// ---- factories -------------------------------------------------------------

TensorPtr constant(double v);
TensorPtr tensor(Shape shape, std::vector<double> values, bool requires_grad = false);
TensorPtr from_array(Shape shape, const Array& values, bool requires_grad = false);
TensorPtr zeros(Shape shape, bool requires_grad = false);
TensorPtr full(Shape shape, double v, bool requires_grad = false);
TensorPtr uniform(Shape shape, double lo, double hi, std::mt19937_64& rng,
                  bool requires_grad = false);

// ---- graph -----------------------------------------------------------------

/// Reverse pass from a scalar loss. Populates `grad` on every reachable node
/// with requires_grad set; repeated calls without zeroing accumulate.
void backward(const TensorPtr& loss);

void zero_grads(const std::vector<TensorPtr>& params);

// ---- elementwise and structural ops ----------------------------------------
// Binary ops accept equal shapes, or a 1-element tensor on either side which
// broadcasts against the other operand.

TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr neg(const TensorPtr& a);

TensorPtr relu(const TensorPtr& a);
TensorPtr tanh(const TensorPtr& a);
TensorPtr sigmoid(const TensorPtr& a);
TensorPtr exp(const TensorPtr& a);

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);   // (p,q)x(q,r) -> (p,r)
TensorPtr matvec(const TensorPtr& a, const TensorPtr& x);   // (p,q)x(q,)  -> (p,)
TensorPtr dot(const TensorPtr& a, const TensorPtr& b);      // (n,)x(n,)   -> (1,)

TensorPtr concat(const std::vector<TensorPtr>& parts);      // rank-1 concat
TensorPtr slice(const TensorPtr& a, Index start, Index len); // rank-1 slice
TensorPtr reshape(const TensorPtr& a, Shape shape);
TensorPtr row(const TensorPtr& a, Index i);                 // rank-2 -> rank-1
TensorPtr col(const TensorPtr& a, Index j);                 // rank-2 -> rank-1

TensorPtr sum(const TensorPtr& a);                          // -> (1,)
TensorPtr mean(const TensorPtr& a);                         // -> (1,)
TensorPtr softmax(const TensorPtr& a);                      // rank-1, stable

} // namespace mktcube::ad
