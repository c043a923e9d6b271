#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cdsrnp::ad {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major tensor of 64-bit floats in a define-by-run autodiff
// graph. Op results keep shared ownership of their parents plus a closure
// that routes the node's gradient into them; backward() walks the graph
// once in reverse topological order. Graphs are rebuilt per forward pass
// and never reused.
//
// Gradient buffers exist only on requires_grad tensors. Leaf gradients
// accumulate across backward() calls; non-leaf gradients are scratch and
// reset at the start of every backward pass.
//
// A graph and its tensors are confined to one thread between forward and
// backward; tensors may move between threads only while no graph
// references them.
class Tensor {
 public:
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // same length as data iff requires_grad
  bool requires_grad = false;

  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backprop;  // empty for leaves

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool is_scalar() const { return size() == 1; }
  bool is_leaf() const { return !backprop; }

  /// Value of a single-element tensor.
  double scalar() const;

  void zero_grad();

  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
};

std::string shape_str(std::span<const std::size_t> shape);
std::size_t numel(std::span<const std::size_t> shape);

TensorPtr make_tensor(std::vector<std::size_t> shape, bool requires_grad = false);
TensorPtr make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr make_tensor(std::vector<std::size_t> shape, std::initializer_list<double> values,
                      bool requires_grad = false);
TensorPtr make_scalar(double value, bool requires_grad = false);

// Matrix product. a may be rank 1 (treated as a row vector, result rank 1)
// or rank 2; b must be rank 2.
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& a);

// Elementwise ops over equal shapes.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr relu(const TensorPtr& a);
TensorPtr sigmoid(const TensorPtr& a);
TensorPtr exp(const TensorPtr& a);
TensorPtr log(const TensorPtr& a);
TensorPtr sqrt(const TensorPtr& a);

TensorPtr scale(const TensorPtr& a, double c);
TensorPtr add_const(const TensorPtr& a, double c);

/// mat[m x n] + vec[n], broadcast over rows.
TensorPtr bias_add(const TensorPtr& mat, const TensorPtr& vec);

TensorPtr concat(const std::vector<TensorPtr>& parts, std::size_t axis);
TensorPtr slice(const TensorPtr& a, std::size_t axis, std::size_t start, std::size_t len);

// Row-wise softmax over the entries whose mask byte is nonzero. Masked
// entries are exactly 0 in the output; rows with no attendable entry come
// back all-zero. Rank 1 input is treated as a single row. Row maxima and
// sums touch only attendable entries, so a row's output is bit-identical
// under any change to its masked-out columns.
TensorPtr masked_softmax(const TensorPtr& scores, const std::vector<std::uint8_t>& mask);

TensorPtr mean(const TensorPtr& a, std::size_t axis);
TensorPtr sum_all(const TensorPtr& a);

/// Gather rows of a rank-2 table; backward scatter-adds into the table.
TensorPtr rows(const TensorPtr& table, std::span<const std::size_t> indices);

TensorPtr reshape(const TensorPtr& a, std::vector<std::size_t> new_shape);

/// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate;
/// calling twice without zeroing doubles them.
void backward(const TensorPtr& loss);

/// Zero the gradient of every requires_grad tensor reachable from root.
void zero_all_grads(const TensorPtr& root);

}  // namespace cdsrnp::ad
